#pragma once

// Rigid-body math shared by every layer of the stack: locations and
// displacements in some frame, unit-quaternion rotations, and the sensed
// surface frame (normal + principal curvature directions).
//
// Conventions:
//   * Rotations are unit quaternions canonicalized to w >= 0, so a rotation
//     and its double-cover twin compare equal.
//   * compose(a, b) applies b first, then a.
//   * A LocalFrame is right-handed with dir1 x dir2 == normal; the rotation
//     it maps to has matrix columns (dir1, dir2, normal).

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sensorium/kdtree.hpp"

namespace sensorium {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
};

// A Location is a point expressed in some frame; a Displacement is the
// difference of two Locations in that frame.  Same representation, distinct
// roles at call sites.
using Location = Vec3;
using Displacement = Vec3;

inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm2(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(norm2(v)); }

inline Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  if (n < 1e-12) throw std::invalid_argument("normalized: near-zero vector");
  return v / n;
}

// Some unit vector orthogonal to v (|v| assumed ~1).
inline Vec3 any_orthogonal(const Vec3& v) {
  const Vec3 ref = std::abs(v.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  return normalized(cross(v, ref));
}

class FrameDegeneracyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unit quaternion, canonical form w >= 0 (ties broken by first nonzero
// component positive) so q and -q are the same value.
struct Rotation {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Rotation from_quat(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (n < 1e-12) throw std::invalid_argument("Rotation: zero quaternion");
    Rotation r{w / n, x / n, y / n, z / n};
    r.canonicalize();
    return r;
  }

  static Rotation from_axis_angle(const Vec3& axis, double radians) {
    const Vec3 u = normalized(axis);
    const double h = 0.5 * radians;
    const double s = std::sin(h);
    return from_quat(std::cos(h), u.x * s, u.y * s, u.z * s);
  }

  void canonicalize() {
    bool flip = w < 0.0;
    if (w == 0.0) {
      if (x != 0.0)
        flip = x < 0.0;
      else if (y != 0.0)
        flip = y < 0.0;
      else
        flip = z < 0.0;
    }
    if (flip) {
      w = -w;
      x = -x;
      y = -y;
      z = -z;
    }
  }

  double angle() const { return 2.0 * std::acos(std::min(1.0, std::abs(w))); }
};

inline Rotation inverse(const Rotation& r) {
  return Rotation::from_quat(r.w, -r.x, -r.y, -r.z);
}

// Apply b first, then a (Hamilton product a*b).
inline Rotation compose(const Rotation& a, const Rotation& b) {
  return Rotation::from_quat(
      a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
      a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
      a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
      a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w);
}

inline Vec3 rotate(const Rotation& q, const Vec3& v) {
  // v' = v + 2 u x (u x v + w v), u = (x, y, z)
  const Vec3 u{q.x, q.y, q.z};
  const Vec3 t = cross(u, v) * 2.0;
  return v + t * q.w + cross(u, t);
}

// Angle of the relative rotation between a and b, in [0, pi].  Because both
// are canonicalized the |dot| handles the double cover.
inline double geodesic_distance(const Rotation& a, const Rotation& b) {
  const double d =
      std::abs(a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z);
  return 2.0 * std::acos(std::min(1.0, d));
}

// Shortest-arc rotation taking unit vector `from` onto unit vector `to`.
inline Rotation rotation_between(const Vec3& from, const Vec3& to) {
  const Vec3 f = normalized(from);
  const Vec3 t = normalized(to);
  const double c = dot(f, t);
  if (c < -1.0 + 1e-12) {
    return Rotation::from_axis_angle(any_orthogonal(f), M_PI);
  }
  const Vec3 a = cross(f, t);
  return Rotation::from_quat(1.0 + c, a.x, a.y, a.z);
}

// Sensed surface frame: outward normal plus the two principal curvature
// directions, dir1 for the larger curvature.  Right-handed:
// dir1 x dir2 == normal.
struct LocalFrame {
  Vec3 normal{0, 0, 1};
  Vec3 dir1{1, 0, 0};
  Vec3 dir2{0, 1, 0};

  static LocalFrame from_normal_dir1(const Vec3& n, const Vec3& d1) {
    const Vec3 nu = normalized(n);
    Vec3 d = d1 - nu * dot(d1, nu);
    if (norm(d) < 1e-9) d = any_orthogonal(nu);
    const Vec3 du = normalized(d);
    return {nu, du, cross(nu, du)};
  }
};

namespace detail {

struct Mat3 {
  // Column-major: c[i] is column i.
  Vec3 c0, c1, c2;
};

inline Rotation matrix_to_rotation(const Mat3& m) {
  // Shepperd's method, branching on the largest diagonal term.
  const double t = m.c0.x + m.c1.y + m.c2.z;
  double w, x, y, z;
  if (t > 0.0) {
    const double s = std::sqrt(t + 1.0) * 2.0;
    w = 0.25 * s;
    x = (m.c1.z - m.c2.y) / s;
    y = (m.c2.x - m.c0.z) / s;
    z = (m.c0.y - m.c1.x) / s;
  } else if (m.c0.x > m.c1.y && m.c0.x > m.c2.z) {
    const double s = std::sqrt(1.0 + m.c0.x - m.c1.y - m.c2.z) * 2.0;
    w = (m.c1.z - m.c2.y) / s;
    x = 0.25 * s;
    y = (m.c1.x + m.c0.y) / s;
    z = (m.c2.x + m.c0.z) / s;
  } else if (m.c1.y > m.c2.z) {
    const double s = std::sqrt(1.0 + m.c1.y - m.c0.x - m.c2.z) * 2.0;
    w = (m.c2.x - m.c0.z) / s;
    x = (m.c1.x + m.c0.y) / s;
    y = 0.25 * s;
    z = (m.c2.y + m.c1.z) / s;
  } else {
    const double s = std::sqrt(1.0 + m.c2.z - m.c0.x - m.c1.y) * 2.0;
    w = (m.c0.y - m.c1.x) / s;
    x = (m.c2.x + m.c0.z) / s;
    y = (m.c2.y + m.c1.z) / s;
    z = 0.25 * s;
  }
  return Rotation::from_quat(w, x, y, z);
}

}  // namespace detail

// Rotation whose matrix columns are (dir1, dir2, normal).  A frame within
// 1e-3 of orthonormal right-handed is repaired by Gram-Schmidt; anything
// worse throws FrameDegeneracyError.
inline Rotation frame_to_rotation(const LocalFrame& f) {
  const double dev = std::max(
      {std::abs(norm(f.dir1) - 1.0), std::abs(norm(f.dir2) - 1.0),
       std::abs(norm(f.normal) - 1.0), std::abs(dot(f.dir1, f.dir2)),
       std::abs(dot(f.dir1, f.normal)), std::abs(dot(f.dir2, f.normal))});
  if (!(dev < 1e-3)) {
    throw FrameDegeneracyError("frame_to_rotation: frame not orthonormal");
  }
  const Vec3 u1 = normalized(f.dir1);
  const Vec3 u2 = normalized(f.dir2 - u1 * dot(f.dir2, u1));
  const Vec3 u3 = cross(u1, u2);
  if (dot(u3, f.normal) < 0.0) {
    throw FrameDegeneracyError("frame_to_rotation: left-handed frame");
  }
  return detail::matrix_to_rotation({u1, u2, u3});
}

inline LocalFrame rotation_to_frame(const Rotation& r) {
  return {rotate(r, {0, 0, 1}), rotate(r, {1, 0, 0}), rotate(r, {0, 1, 0})};
}

// Symmetric Chamfer distance between two point sets: mean of the two
// directed mean-nearest-neighbor distances.  Throws on an empty set.
inline double chamfer_distance(const std::vector<Vec3>& a,
                               const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("chamfer_distance: empty point set");
  }
  auto directed = [](const std::vector<Vec3>& from, const KdTree& to_index) {
    double sum = 0.0;
    for (const Vec3& p : from) {
      sum += std::sqrt(to_index.nearest(p.x, p.y, p.z).dist2);
    }
    return sum / static_cast<double>(from.size());
  };
  KdTree ia, ib;
  for (const Vec3& p : a) ia.add(p.x, p.y, p.z);
  for (const Vec3& p : b) ib.add(p.x, p.y, p.z);
  ia.build();
  ib.build();
  return 0.5 * (directed(a, ib) + directed(b, ia));
}

// Uniform rotation from three independent uniforms in [0, 1)
// (subgroup-algorithm construction).
inline Rotation uniform_rotation(double u1, double u2, double u3) {
  const double s1 = std::sqrt(1.0 - u1);
  const double s2 = std::sqrt(u1);
  const double a = 2.0 * M_PI * u2;
  const double b = 2.0 * M_PI * u3;
  return Rotation::from_quat(s2 * std::cos(b), s1 * std::sin(a),
                             s1 * std::cos(a), s2 * std::sin(b));
}

inline double deg_to_rad(double d) { return d * M_PI / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / M_PI; }

}  // namespace sensorium

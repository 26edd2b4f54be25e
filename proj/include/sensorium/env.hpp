#pragma once

// Synthetic desk-scale 3D environment.  Objects are unions (and cut-outs) of
// analytic primitives -- sphere, box, cylinder, capsule, torus -- so surface
// normals, principal curvature directions, and curvature magnitudes come from
// closed forms rather than mesh estimates.  Objects sit at the origin of the
// body frame; an episode poses them with a single rotation.
//
// Agents:
//   * distant: a camera at a standoff point; its view ray is sphere-traced
//     against the object's SDF.
//   * surface: a probe that must be within a small contact radius of the
//     surface; the patch is taken at the nearest surface point.

#include <array>
#include <cmath>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensorium/cmp.hpp"
#include "sensorium/geom.hpp"

namespace sensorium {

// --- color ---------------------------------------------------------------

// Hue painted onto a primitive's surface, evaluated in primitive-local
// coordinates.  Patterns are used to give objects distinct colored regions
// without extra geometry.
struct ColorSpec {
  enum class Kind { solid, axial_bands, quadrants, face_sectors };
  Kind kind = Kind::solid;
  int bands = 1;                    // axial_bands only
  std::array<double, 6> hue{};      // usage depends on kind
  double sat = 1.0;
  double val = 1.0;

  static ColorSpec solid(double h, double s, double v) {
    ColorSpec c;
    c.kind = Kind::solid;
    c.hue[0] = h;
    c.sat = s;
    c.val = v;
    return c;
  }
  static ColorSpec axial_bands(int n, double h0, double h1, double s,
                               double v) {
    ColorSpec c;
    c.kind = Kind::axial_bands;
    c.bands = n;
    c.hue[0] = h0;
    c.hue[1] = h1;
    c.sat = s;
    c.val = v;
    return c;
  }
  static ColorSpec quadrants(double h0, double h1, double h2, double h3,
                             double s, double v) {
    ColorSpec c;
    c.kind = Kind::quadrants;
    c.hue = {h0, h1, h2, h3, 0, 0};
    c.sat = s;
    c.val = v;
    return c;
  }
  static ColorSpec face_sectors(std::array<double, 6> h, double s, double v) {
    ColorSpec c;
    c.kind = Kind::face_sectors;
    c.hue = h;
    c.sat = s;
    c.val = v;
    return c;
  }
};

// --- primitives ----------------------------------------------------------

// Dimension slots by kind:
//   sphere:  a = radius
//   box:     a, b, c = half-extents
//   cylinder:a = radius, b = half-height
//   capsule: a = radius, b = segment half-length
//   torus:   a = ring radius, b = tube radius (ring lies in the local xy
//            plane, axis along local z)
struct Primitive {
  enum class Kind { sphere, box, cylinder, capsule, torus };
  Kind kind = Kind::sphere;
  Vec3 center;
  Rotation orient;
  double a = 0, b = 0, c = 0;
  ColorSpec color;
};

// Surface geometry at a point, in object-frame coordinates.  dir1 is the
// direction of k1 (the larger signed principal curvature); dir2 completes a
// right-handed frame with the outward normal.
struct SurfaceInfo {
  Vec3 normal;
  Vec3 dir1;
  double k1 = 0, k2 = 0;
  bool umbilic = false;  // principal directions degenerate (k1 == k2)
  double hue = 0, sat = 0, val = 0;
};

namespace detail {

// Deterministic tangent for umbilic points, chosen from the primitive-local
// axes so that it is a function of the surface alone, not of the viewing
// pose.
inline Vec3 umbilic_tangent(const Vec3& n) {
  const Vec3 ref = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  return normalized(ref - n * dot(ref, n));
}

struct LocalSurface {
  Vec3 normal;
  Vec3 dir1;
  double k1 = 0, k2 = 0;
  bool umbilic = false;
};

inline double primitive_sdf(const Primitive& p, const Vec3& q) {
  switch (p.kind) {
    case Primitive::Kind::sphere:
      return norm(q) - p.a;
    case Primitive::Kind::box: {
      const Vec3 d{std::abs(q.x) - p.a, std::abs(q.y) - p.b,
                   std::abs(q.z) - p.c};
      const Vec3 outside{std::max(d.x, 0.0), std::max(d.y, 0.0),
                         std::max(d.z, 0.0)};
      return norm(outside) + std::min(std::max({d.x, d.y, d.z}), 0.0);
    }
    case Primitive::Kind::cylinder: {
      const double dr = std::hypot(q.x, q.y) - p.a;
      const double dz = std::abs(q.z) - p.b;
      const double ox = std::max(dr, 0.0), oz = std::max(dz, 0.0);
      return std::min(std::max(dr, dz), 0.0) + std::hypot(ox, oz);
    }
    case Primitive::Kind::capsule: {
      const double z = std::clamp(q.z, -p.b, p.b);
      return norm(q - Vec3{0, 0, z}) - p.a;
    }
    case Primitive::Kind::torus: {
      const double dr = std::hypot(q.x, q.y) - p.a;
      return std::hypot(dr, q.z) - p.b;
    }
  }
  return 0.0;
}

// Surface geometry of a single primitive at a point assumed on (or very
// near) its surface, in primitive-local coordinates.
inline LocalSurface primitive_surface(const Primitive& p, const Vec3& q) {
  LocalSurface s;
  switch (p.kind) {
    case Primitive::Kind::sphere: {
      s.normal = normalized(q);
      s.k1 = s.k2 = 1.0 / p.a;
      s.umbilic = true;
      s.dir1 = umbilic_tangent(s.normal);
      break;
    }
    case Primitive::Kind::box: {
      const Vec3 d{std::abs(q.x) - p.a, std::abs(q.y) - p.b,
                   std::abs(q.z) - p.c};
      int axis = 0;
      if (d.y > (axis == 0 ? d.x : d.z)) axis = 1;
      if (d.z > (axis == 1 ? d.y : d.x)) axis = 2;
      const double comp = axis == 0 ? q.x : (axis == 1 ? q.y : q.z);
      Vec3 n{0, 0, 0};
      (axis == 0 ? n.x : axis == 1 ? n.y : n.z) = comp >= 0 ? 1.0 : -1.0;
      s.normal = n;
      s.k1 = s.k2 = 0.0;
      s.umbilic = true;
      s.dir1 = umbilic_tangent(n);
      break;
    }
    case Primitive::Kind::cylinder: {
      const double rho = std::hypot(q.x, q.y);
      const double dr = rho - p.a;
      const double dz = std::abs(q.z) - p.b;
      if (dr > dz && rho > 1e-9) {  // side wall
        s.normal = Vec3{q.x / rho, q.y / rho, 0};
        s.k1 = 1.0 / p.a;
        s.k2 = 0.0;
        s.dir1 = normalized(cross(Vec3{0, 0, 1}, s.normal));
        s.umbilic = false;
      } else {  // flat cap
        s.normal = Vec3{0, 0, q.z >= 0 ? 1.0 : -1.0};
        s.k1 = s.k2 = 0.0;
        s.umbilic = true;
        s.dir1 = umbilic_tangent(s.normal);
      }
      break;
    }
    case Primitive::Kind::capsule: {
      if (std::abs(q.z) < p.b) {  // cylindrical wall
        const double rho = std::hypot(q.x, q.y);
        s.normal = Vec3{q.x / rho, q.y / rho, 0};
        s.k1 = 1.0 / p.a;
        s.k2 = 0.0;
        s.dir1 = normalized(cross(Vec3{0, 0, 1}, s.normal));
        s.umbilic = false;
      } else {  // spherical end cap
        const Vec3 e{0, 0, q.z >= 0 ? p.b : -p.b};
        s.normal = normalized(q - e);
        s.k1 = s.k2 = 1.0 / p.a;
        s.umbilic = true;
        s.dir1 = umbilic_tangent(s.normal);
      }
      break;
    }
    case Primitive::Kind::torus: {
      const double rho = std::hypot(q.x, q.y);
      const Vec3 u_rad{q.x / rho, q.y / rho, 0};
      const double cos_t = (rho - p.a) / p.b;
      const double sin_t = q.z / p.b;
      s.normal = u_rad * cos_t + Vec3{0, 0, 1} * sin_t;
      // Tube circle bends at 1/r everywhere; the ring direction bends at
      // cos(t) / rho, negative on the inner (saddle) half.
      const double k_tube = 1.0 / p.b;
      const double k_ring = cos_t / rho;
      const Vec3 d_tube = u_rad * (-sin_t) + Vec3{0, 0, 1} * cos_t;
      s.k1 = k_tube;
      s.k2 = k_ring;
      s.dir1 = d_tube;
      s.umbilic = false;
      break;
    }
  }
  return s;
}

inline double color_hue(const ColorSpec& c, const Primitive& p, const Vec3& q,
                        const Vec3& normal) {
  switch (c.kind) {
    case ColorSpec::Kind::solid:
      return c.hue[0];
    case ColorSpec::Kind::axial_bands: {
      double zmax = 0;
      switch (p.kind) {
        case Primitive::Kind::sphere: zmax = p.a; break;
        case Primitive::Kind::box: zmax = p.c; break;
        case Primitive::Kind::cylinder: zmax = p.b; break;
        case Primitive::Kind::capsule: zmax = p.b + p.a; break;
        case Primitive::Kind::torus: zmax = p.b; break;
      }
      const int n = std::max(1, c.bands);
      const double t = std::clamp((q.z + zmax) / (2 * zmax), 0.0, 1.0);
      const int band = std::min(n - 1, static_cast<int>(t * n));
      const double f = n > 1 ? static_cast<double>(band) / (n - 1) : 0.0;
      return c.hue[0] + (c.hue[1] - c.hue[0]) * f;
    }
    case ColorSpec::Kind::quadrants: {
      const double phi = std::atan2(q.y, q.x);
      const int sector =
          std::min(3, static_cast<int>((phi + M_PI) / (M_PI / 2)));
      return c.hue[sector];
    }
    case ColorSpec::Kind::face_sectors: {
      int axis = 0;
      double best = std::abs(normal.x);
      if (std::abs(normal.y) > best) {
        axis = 1;
        best = std::abs(normal.y);
      }
      if (std::abs(normal.z) > best) axis = 2;
      const double comp =
          axis == 0 ? normal.x : (axis == 1 ? normal.y : normal.z);
      return c.hue[axis * 2 + (comp >= 0 ? 0 : 1)];
    }
  }
  return 0.0;
}

}  // namespace detail

// --- objects -------------------------------------------------------------

class SyntheticObject {
 public:
  std::string id;
  std::vector<Primitive> solids;
  std::vector<Primitive> cuts;

  // Signed distance in object-frame coordinates: union of solids with the
  // cut volumes carved out.
  double sdf(const Vec3& p) const {
    double d = INFINITY;
    for (const Primitive& s : solids) {
      d = std::min(d, detail::primitive_sdf(s, to_local(s, p)));
    }
    for (const Primitive& c : cuts) {
      d = std::max(d, -detail::primitive_sdf(c, to_local(c, p)));
    }
    return d;
  }

  // Surface geometry and color at a point on (or very near) the surface.
  // The governing primitive is whichever branch of the union/cut attains
  // the combined SDF; cut surfaces are reported with inverted orientation
  // and negated curvatures.
  SurfaceInfo surface_info(const Vec3& p) const {
    double best_solid = INFINITY;
    const Primitive* solid = nullptr;
    for (const Primitive& s : solids) {
      const double d = detail::primitive_sdf(s, to_local(s, p));
      if (d < best_solid) {
        best_solid = d;
        solid = &s;
      }
    }
    double best_cut = -INFINITY;
    const Primitive* cut = nullptr;
    for (const Primitive& c : cuts) {
      const double d = -detail::primitive_sdf(c, to_local(c, p));
      if (d > best_cut) {
        best_cut = d;
        cut = &c;
      }
    }

    SurfaceInfo out;
    if (cut != nullptr && best_cut > best_solid) {
      const Vec3 q = to_local(*cut, p);
      detail::LocalSurface ls = detail::primitive_surface(*cut, q);
      const double hue = detail::color_hue(cut->color, *cut, q, ls.normal);
      // Inverted surface: normal flips, curvatures negate, and the larger
      // of the negated pair is the previous k2's direction.
      out.normal = rotate(cut->orient, -ls.normal);
      out.k1 = -ls.k2;
      out.k2 = -ls.k1;
      out.dir1 = rotate(cut->orient,
                        ls.umbilic ? ls.dir1 : cross(ls.normal, ls.dir1));
      out.umbilic = ls.umbilic;
      out.hue = hue;
      out.sat = cut->color.sat;
      out.val = cut->color.val;
    } else {
      if (solid == nullptr) {
        throw std::logic_error("surface_info: object has no solids");
      }
      const Vec3 q = to_local(*solid, p);
      detail::LocalSurface ls = detail::primitive_surface(*solid, q);
      out.normal = rotate(solid->orient, ls.normal);
      out.k1 = ls.k1;
      out.k2 = ls.k2;
      out.dir1 = rotate(solid->orient, ls.dir1);
      out.umbilic = ls.umbilic;
      out.hue = detail::color_hue(solid->color, *solid, q, ls.normal);
      out.sat = solid->color.sat;
      out.val = solid->color.val;
    }
    return out;
  }

  // Radius of a bounding sphere around the object, used to size view cones
  // and march limits.
  double bound_radius() const {
    double r = 0;
    for (const Primitive& s : solids) r = std::max(r, reach(s));
    return r;
  }

 private:
  static Vec3 to_local(const Primitive& prim, const Vec3& p) {
    return rotate(inverse(prim.orient), p - prim.center);
  }

  static double reach(const Primitive& s) {
    double ext = 0;
    switch (s.kind) {
      case Primitive::Kind::sphere: ext = s.a; break;
      case Primitive::Kind::box: ext = norm(Vec3{s.a, s.b, s.c}); break;
      case Primitive::Kind::cylinder: ext = std::hypot(s.a, s.b); break;
      case Primitive::Kind::capsule: ext = s.a + s.b; break;
      case Primitive::Kind::torus: ext = s.a + s.b; break;
    }
    return norm(s.center) + ext;
  }
};

// --- episode pose and agents ---------------------------------------------

// How the object is presented for one episode.  Translation is kept at the
// origin at desk scale; the rotation is the quantity to infer.
struct EpisodePose {
  Rotation rotation;
  Vec3 translation;  // always {0,0,0} for now
};

enum class AgentKind { distant, surface };

struct AgentState {
  AgentKind kind = AgentKind::distant;
  Vec3 position;
  Rotation orientation;  // view/approach axis is orientation applied to -z
};

inline Vec3 agent_forward(const AgentState& a) {
  return rotate(a.orientation, {0, 0, -1});
}

// Raw sensed patch before conversion into a protocol message: surface point
// and frame in the body frame, plus exact curvatures and color.
struct RawPatch {
  bool on_object = false;
  Location location;
  LocalFrame frame;
  double k1 = 0, k2 = 0;
  double hue = 0, sat = 0, val = 0;
};

// A motor command; executed by apply_action with no hidden state.
struct Action {
  enum class Kind { pivot, translate, orient_to, jump };
  Kind kind = Kind::pivot;
  Vec3 axis{0, 0, 1};  // pivot, in the agent's own frame
  double angle = 0;
  Displacement delta;         // translate, body frame
  Location target_location;   // jump
  Rotation target_orientation;  // orient_to, jump

  static Action pivot(const Vec3& axis, double angle) {
    Action a;
    a.kind = Kind::pivot;
    a.axis = axis;
    a.angle = angle;
    return a;
  }
  static Action translate(const Displacement& d) {
    Action a;
    a.kind = Kind::translate;
    a.delta = d;
    return a;
  }
  static Action orient_to(const Rotation& r) {
    Action a;
    a.kind = Kind::orient_to;
    a.target_orientation = r;
    return a;
  }
  static Action jump(const Location& p, const Rotation& r) {
    Action a;
    a.kind = Kind::jump;
    a.target_location = p;
    a.target_orientation = r;
    return a;
  }
};

inline AgentState apply_action(AgentState agent, const Action& act) {
  switch (act.kind) {
    case Action::Kind::pivot:
      agent.orientation = compose(
          agent.orientation, Rotation::from_axis_angle(act.axis, act.angle));
      break;
    case Action::Kind::translate:
      agent.position += act.delta;
      break;
    case Action::Kind::orient_to:
      agent.orientation = act.target_orientation;
      break;
    case Action::Kind::jump:
      agent.position = act.target_location;
      agent.orientation = act.target_orientation;
      break;
  }
  return agent;
}

namespace detail {

inline double body_sdf(const SyntheticObject& obj, const EpisodePose& pose,
                       const Vec3& p) {
  return obj.sdf(rotate(inverse(pose.rotation), p - pose.translation));
}

// Newton-polish a point near the surface until |SDF| < 1e-9 (or give up).
inline std::optional<Vec3> refine_to_surface(const SyntheticObject& obj,
                                             const EpisodePose& pose,
                                             Vec3 p) {
  for (int i = 0; i < 8; ++i) {
    const double d = body_sdf(obj, pose, p);
    if (std::abs(d) < 1e-9) return p;
    const Vec3 local = rotate(inverse(pose.rotation), p - pose.translation);
    const Vec3 n = rotate(pose.rotation, obj.surface_info(local).normal);
    p = p - n * d;
  }
  if (std::abs(body_sdf(obj, pose, p)) < 1e-6) return p;
  return std::nullopt;
}

}  // namespace detail

constexpr double kSurfaceContactRadius = 0.005;  // 5 mm probe reach

// Sense a patch.  Distant agents ray-march along their view axis; surface
// agents read the nearest surface point within the contact radius.  A miss
// is a value (on_object = false), not an error.
inline RawPatch sample_patch(const SyntheticObject& obj,
                             const EpisodePose& pose,
                             const AgentState& agent) {
  RawPatch patch;
  std::optional<Vec3> hit;
  if (agent.kind == AgentKind::distant) {
    const Vec3 dir = agent_forward(agent);
    const double limit = norm(agent.position) + obj.bound_radius() + 0.1;
    double t = 0.0;
    for (int i = 0; i < 512 && t < limit; ++i) {
      const Vec3 p = agent.position + dir * t;
      const double d = detail::body_sdf(obj, pose, p);
      if (d < 1e-7) {
        hit = detail::refine_to_surface(obj, pose, p);
        break;
      }
      t += d;
    }
  } else {
    const double d = detail::body_sdf(obj, pose, agent.position);
    if (std::abs(d) <= kSurfaceContactRadius) {
      hit = detail::refine_to_surface(obj, pose, agent.position);
    }
  }
  if (!hit) return patch;

  const Vec3 local = rotate(inverse(pose.rotation), *hit - pose.translation);
  const SurfaceInfo si = obj.surface_info(local);
  patch.on_object = true;
  patch.location = *hit;
  patch.frame = LocalFrame::from_normal_dir1(rotate(pose.rotation, si.normal),
                                             rotate(pose.rotation, si.dir1));
  patch.k1 = si.k1;
  patch.k2 = si.k2;
  patch.hue = si.hue;
  patch.sat = si.sat;
  patch.val = si.val;
  return patch;
}

// Deterministic scanning trajectory for a distant agent: a sunflower spiral
// of absolute orientations fanning out from the current view axis until the
// whole visible face has been swept.
inline std::vector<Action> learning_trajectory(const SyntheticObject& obj,
                                               const AgentState& start,
                                               int n_steps) {
  constexpr double kGoldenAngle = 2.399963229728653;
  const double standoff = norm(start.position);
  const double alpha_max =
      std::atan2(0.95 * obj.bound_radius(), standoff);
  std::vector<Action> seq;
  seq.reserve(n_steps);
  for (int i = 0; i < n_steps; ++i) {
    const double alpha =
        alpha_max * std::sqrt(static_cast<double>(i) / n_steps);
    const double phi = i * kGoldenAngle;
    const Vec3 axis{std::cos(phi), std::sin(phi), 0};  // agent-local
    seq.push_back(Action::orient_to(compose(
        start.orientation, Rotation::from_axis_angle(axis, alpha))));
  }
  return seq;
}

// --- builtin library -----------------------------------------------------

namespace detail {

inline Primitive prim(Primitive::Kind kind, const Vec3& center,
                      const Rotation& orient, double a, double b, double c,
                      const ColorSpec& color) {
  Primitive p;
  p.kind = kind;
  p.center = center;
  p.orient = orient;
  p.a = a;
  p.b = b;
  p.c = c;
  p.color = color;
  return p;
}

}  // namespace detail

// Ten desk objects.  Deliberate confusion structure: two boxes share a shape
// and differ only in face colors; mug and cup share wall and floor geometry
// and colors, differing only by the handle; fork and spoon share a handle.
inline std::vector<SyntheticObject> builtin_library() {
  using K = Primitive::Kind;
  const Rotation id{};
  // Handle ring stands vertical: torus axis rotated from z onto y.
  const Rotation vertical_ring = Rotation::from_axis_angle({1, 0, 0}, M_PI / 2);

  std::vector<SyntheticObject> lib;

  SyntheticObject sphere;
  sphere.id = "sphere";
  sphere.solids = {detail::prim(K::sphere, {0, 0, 0}, id, 0.05, 0, 0,
                                ColorSpec::axial_bands(3, 0.05, 0.65, 1, 1))};
  lib.push_back(sphere);

  const std::array<double, 6> warm{0.00, 0.05, 0.10, 0.08, 0.03, 0.12};
  const std::array<double, 6> cool{0.55, 0.60, 0.65, 0.63, 0.58, 0.67};
  SyntheticObject box_red;
  box_red.id = "box_red";
  box_red.solids = {detail::prim(K::box, {0, 0, 0}, id, 0.10, 0.06, 0.03,
                                 ColorSpec::face_sectors(warm, 1, 1))};
  lib.push_back(box_red);

  SyntheticObject box_blue = box_red;
  box_blue.id = "box_blue";
  box_blue.solids[0].color = ColorSpec::face_sectors(cool, 1, 1);
  lib.push_back(box_blue);

  SyntheticObject cylinder;
  cylinder.id = "cylinder";
  cylinder.solids = {detail::prim(K::cylinder, {0, 0, 0}, id, 0.04, 0.08, 0,
                                  ColorSpec::axial_bands(4, 0.15, 0.45, 1, 1))};
  lib.push_back(cylinder);

  SyntheticObject capped;
  capped.id = "capped_cylinder";
  capped.solids = {detail::prim(K::capsule, {0, 0, 0}, id, 0.03, 0.05, 0,
                                ColorSpec::axial_bands(3, 0.70, 0.90, 1, 1))};
  lib.push_back(capped);

  const ColorSpec mug_wall = ColorSpec::quadrants(0.00, 0.08, 0.16, 0.24,
                                                  0.9, 0.9);
  const ColorSpec mug_inner = ColorSpec::solid(0.50, 0.9, 0.9);
  SyntheticObject mug;
  mug.id = "mug";
  mug.solids = {
      detail::prim(K::cylinder, {0, 0, 0}, id, 0.045, 0.06, 0, mug_wall),
      detail::prim(K::torus, {0.060, 0, 0}, vertical_ring, 0.028, 0.009, 0,
                   ColorSpec::solid(0.33, 0.9, 0.9))};
  mug.cuts = {detail::prim(K::cylinder, {0, 0, 0.012}, id, 0.037, 0.06, 0,
                           mug_inner)};
  lib.push_back(mug);

  SyntheticObject cup;
  cup.id = "cup";
  cup.solids = {
      detail::prim(K::cylinder, {0, 0, 0}, id, 0.045, 0.06, 0, mug_wall)};
  cup.cuts = {detail::prim(K::cylinder, {0, 0, 0.012}, id, 0.037, 0.06, 0,
                           mug_inner)};
  lib.push_back(cup);

  const Primitive shared_handle =
      detail::prim(K::capsule, {0, 0, -0.055}, id, 0.008, 0.05, 0,
                   ColorSpec::solid(0.08, 0.8, 0.8));
  SyntheticObject fork;
  fork.id = "fork";
  fork.solids = {shared_handle,
                 detail::prim(K::box, {0, 0, 0}, id, 0.018, 0.007, 0.015,
                              ColorSpec::solid(0.55, 0.8, 0.8))};
  for (double x : {-0.012, 0.0, 0.012}) {
    fork.solids.push_back(detail::prim(K::capsule, {x, 0, 0.040}, id, 0.005,
                                       0.030, 0,
                                       ColorSpec::solid(0.83, 0.8, 0.8)));
  }
  lib.push_back(fork);

  SyntheticObject spoon;
  spoon.id = "spoon";
  spoon.solids = {shared_handle,
                  detail::prim(K::box, {0, 0, 0.004}, id, 0.006, 0.005, 0.012,
                               ColorSpec::solid(0.55, 0.8, 0.8)),
                  detail::prim(K::sphere, {0, 0, 0.035}, id, 0.022, 0, 0,
                               ColorSpec::solid(0.90, 0.8, 0.8))};
  spoon.cuts = {detail::prim(K::sphere, {0, 0, 0.049}, id, 0.020, 0, 0,
                             ColorSpec::solid(0.45, 0.8, 0.8))};
  lib.push_back(spoon);

  SyntheticObject torus;
  torus.id = "torus";
  torus.solids = {detail::prim(K::torus, {0, 0, 0}, id, 0.05, 0.018, 0,
                               ColorSpec::axial_bands(3, 0.28, 0.72, 1, 1))};
  lib.push_back(torus);

  return lib;
}

// --- scene description files ---------------------------------------------
//
// Plain-text grammar, one primitive per line inside an object block:
//
//   # comment (or blank line)
//   object <id>
//   <role> <kind> cx cy cz qw qx qy qz <dims...> <colorspec>
//   end
//
//   role:  solid | cut
//   kind:  sphere r | box hx hy hz | cylinder r hh | capsule r hh |
//          torus R r
//   colorspec:  solid h s v
//             | bands n h0 h1 s v
//             | quadrants h0 h1 h2 h3 s v
//             | faces h0 h1 h2 h3 h4 h5 s v
//
// Floats are read with full precision; save_scene writes %.17g so a
// save/load cycle is exact.

namespace detail {

inline std::string color_text(const ColorSpec& c) {
  std::string s;
  switch (c.kind) {
    case ColorSpec::Kind::solid:
      s = "solid ";
      append_g17(s, c.hue[0]);
      break;
    case ColorSpec::Kind::axial_bands:
      s = "bands " + std::to_string(c.bands) + " ";
      append_g17(s, c.hue[0]);
      s += ' ';
      append_g17(s, c.hue[1]);
      break;
    case ColorSpec::Kind::quadrants:
      s = "quadrants";
      for (int i = 0; i < 4; ++i) {
        s += ' ';
        append_g17(s, c.hue[i]);
      }
      break;
    case ColorSpec::Kind::face_sectors:
      s = "faces";
      for (int i = 0; i < 6; ++i) {
        s += ' ';
        append_g17(s, c.hue[i]);
      }
      break;
  }
  s += ' ';
  append_g17(s, c.sat);
  s += ' ';
  append_g17(s, c.val);
  return s;
}

}  // namespace detail

inline std::string save_scene(const std::vector<SyntheticObject>& objects) {
  std::string out;
  for (const SyntheticObject& obj : objects) {
    out += "object " + obj.id + "\n";
    auto emit = [&out](const char* role, const Primitive& p) {
      out += role;
      switch (p.kind) {
        case Primitive::Kind::sphere: out += " sphere"; break;
        case Primitive::Kind::box: out += " box"; break;
        case Primitive::Kind::cylinder: out += " cylinder"; break;
        case Primitive::Kind::capsule: out += " capsule"; break;
        case Primitive::Kind::torus: out += " torus"; break;
      }
      for (double v : {p.center.x, p.center.y, p.center.z, p.orient.w,
                       p.orient.x, p.orient.y, p.orient.z}) {
        out += ' ';
        detail::append_g17(out, v);
      }
      int ndims = p.kind == Primitive::Kind::sphere ? 1
                  : p.kind == Primitive::Kind::box ? 3
                                                   : 2;
      const double dims[3] = {p.a, p.b, p.c};
      for (int i = 0; i < ndims; ++i) {
        out += ' ';
        detail::append_g17(out, dims[i]);
      }
      out += ' ';
      out += detail::color_text(p.color);
      out += '\n';
    };
    for (const Primitive& p : obj.solids) emit("solid", p);
    for (const Primitive& p : obj.cuts) emit("cut", p);
    out += "end\n";
  }
  return out;
}

class SceneParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<SyntheticObject> load_scene(std::istream& in) {
  std::vector<SyntheticObject> objects;
  SyntheticObject current;
  bool open = false;
  std::string line;
  int lineno = 0;

  auto fail = [&lineno](const std::string& msg) {
    throw SceneParseError("scene line " + std::to_string(lineno) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok[0] == '#') continue;

    if (tok == "object") {
      if (open) fail("nested object block");
      if (!(ls >> current.id)) fail("object needs an id");
      current.solids.clear();
      current.cuts.clear();
      open = true;
      continue;
    }
    if (tok == "end") {
      if (!open) fail("end without object");
      if (current.solids.empty()) fail("object has no solids");
      objects.push_back(current);
      open = false;
      continue;
    }
    if (tok != "solid" && tok != "cut") fail("unknown role '" + tok + "'");
    if (!open) fail("primitive outside object block");

    const bool is_cut = tok == "cut";
    std::string kind_tok;
    if (!(ls >> kind_tok)) fail("missing primitive kind");
    Primitive p;
    int ndims = 0;
    if (kind_tok == "sphere") {
      p.kind = Primitive::Kind::sphere;
      ndims = 1;
    } else if (kind_tok == "box") {
      p.kind = Primitive::Kind::box;
      ndims = 3;
    } else if (kind_tok == "cylinder") {
      p.kind = Primitive::Kind::cylinder;
      ndims = 2;
    } else if (kind_tok == "capsule") {
      p.kind = Primitive::Kind::capsule;
      ndims = 2;
    } else if (kind_tok == "torus") {
      p.kind = Primitive::Kind::torus;
      ndims = 2;
    } else {
      fail("unknown primitive kind '" + kind_tok + "'");
    }

    double qw, qx, qy, qz;
    if (!(ls >> p.center.x >> p.center.y >> p.center.z >> qw >> qx >> qy >>
          qz)) {
      fail("expected center and orientation quaternion");
    }
    p.orient = Rotation::from_quat(qw, qx, qy, qz);
    double dims[3] = {0, 0, 0};
    for (int i = 0; i < ndims; ++i) {
      if (!(ls >> dims[i])) fail("missing dimension");
      if (dims[i] <= 0) fail("dimensions must be positive");
    }
    p.a = dims[0];
    p.b = dims[1];
    p.c = dims[2];

    std::string ckind;
    if (!(ls >> ckind)) fail("missing color spec");
    ColorSpec c;
    if (ckind == "solid") {
      c.kind = ColorSpec::Kind::solid;
      if (!(ls >> c.hue[0] >> c.sat >> c.val)) fail("bad solid color");
    } else if (ckind == "bands") {
      c.kind = ColorSpec::Kind::axial_bands;
      if (!(ls >> c.bands >> c.hue[0] >> c.hue[1] >> c.sat >> c.val)) {
        fail("bad bands color");
      }
      if (c.bands < 1) fail("bands count must be >= 1");
    } else if (ckind == "quadrants") {
      c.kind = ColorSpec::Kind::quadrants;
      if (!(ls >> c.hue[0] >> c.hue[1] >> c.hue[2] >> c.hue[3] >> c.sat >>
            c.val)) {
        fail("bad quadrants color");
      }
    } else if (ckind == "faces") {
      c.kind = ColorSpec::Kind::face_sectors;
      if (!(ls >> c.hue[0] >> c.hue[1] >> c.hue[2] >> c.hue[3] >> c.hue[4] >>
            c.hue[5] >> c.sat >> c.val)) {
        fail("bad faces color");
      }
    } else {
      fail("unknown color spec '" + ckind + "'");
    }
    p.color = c;

    if (ls >> tok) fail("trailing tokens");
    (is_cut ? current.cuts : current.solids).push_back(p);
  }
  if (open) fail("unterminated object block");
  return objects;
}

inline std::vector<SyntheticObject> load_scene_text(const std::string& text) {
  std::istringstream in(text);
  return load_scene(in);
}

}  // namespace sensorium

#pragma once

// The message vocabulary exchanged between modules: sensed features in a
// local reference frame (CMPMessage), pose votes between learning modules
// (Vote), and motor goals (GoalState).  Every inter-module boundary speaks
// these three types plus raw actions; nothing else crosses.

#include <algorithm>
#include <cstdio>
#include <string>

#include "sensorium/geom.hpp"

namespace sensorium {

// Pose-independent surface features observed at a patch.
struct FeatureVector {
  double hue = 0.0;  // [0, 1), circular
  double sat = 0.0;  // [0, 1]
  double val = 0.0;  // [0, 1]
  double k1 = 0.0;   // principal curvatures in 1/m, k1 >= k2
  double k2 = 0.0;
  bool pose_fully_defined = true;  // false when k1 ~ k2 leaves dir1 arbitrary

  static FeatureVector make(double hue, double sat, double val, double k1,
                            double k2, bool pose_fully_defined) {
    FeatureVector f;
    f.hue = hue - std::floor(hue);
    f.sat = std::clamp(sat, 0.0, 1.0);
    f.val = std::clamp(val, 0.0, 1.0);
    f.k1 = std::max(k1, k2);
    f.k2 = std::min(k1, k2);
    f.pose_fully_defined = pose_fully_defined;
    return f;
  }
};

// One sensed observation: where the patch sits and how its surface frame is
// oriented, both in the sensor's body frame, plus the features.
struct CMPMessage {
  Location location;
  Rotation local_rotation;
  FeatureVector features;
  int step_index = 0;
};

// A motor target proposed by a learning module's goal generator.
struct GoalState {
  Location target_location;
  Rotation target_orientation;
  double confidence = 0.0;  // >= 0
  int issuing_lm = 0;
};

// One pose hypothesis shared between learning modules.  `location` is
// already translated into the receiver's reference point; `evidence` is
// normalized to [-1, 1] by the sender.
struct Vote {
  std::string object_id;
  Rotation rotation;
  Location location;
  double evidence = 0.0;
};

// Per-channel feature distances, all >= 0.  Hue is circular; curvature is
// compared in base-10 log space with magnitudes floored at 1e-3/m.
struct FeatureDistance {
  double hue = 0.0;
  double sat = 0.0;
  double val = 0.0;
  double log_k1 = 0.0;
  double log_k2 = 0.0;
};

inline double hue_distance(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 1.0 - d);
}

inline double curvature_log(double k) {
  return std::log10(std::max(std::abs(k), 1e-3));
}

inline FeatureDistance feature_distance(const FeatureVector& a,
                                        const FeatureVector& b) {
  FeatureDistance d;
  d.hue = hue_distance(a.hue, b.hue);
  d.sat = std::abs(a.sat - b.sat);
  d.val = std::abs(a.val - b.val);
  d.log_k1 = std::abs(curvature_log(a.k1) - curvature_log(b.k1));
  d.log_k2 = std::abs(curvature_log(a.k2) - curvature_log(b.k2));
  return d;
}

// --- trace serialization -------------------------------------------------
// One record per line, fixed field order, floats at 9 significant digits.

namespace detail {

inline void append_g17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

inline void append_g9(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  out += buf;
}

inline void append_vec(std::string& out, const Vec3& v) {
  append_g9(out, v.x);
  out += ' ';
  append_g9(out, v.y);
  out += ' ';
  append_g9(out, v.z);
}

inline void append_rot(std::string& out, const Rotation& r) {
  append_g9(out, r.w);
  out += ' ';
  append_g9(out, r.x);
  out += ' ';
  append_g9(out, r.y);
  out += ' ';
  append_g9(out, r.z);
}

}  // namespace detail

inline std::string trace_line(const CMPMessage& m) {
  std::string s = "CMP step=" + std::to_string(m.step_index) + " loc=";
  detail::append_vec(s, m.location);
  s += " rot=";
  detail::append_rot(s, m.local_rotation);
  s += " hue=";
  detail::append_g9(s, m.features.hue);
  s += " sat=";
  detail::append_g9(s, m.features.sat);
  s += " val=";
  detail::append_g9(s, m.features.val);
  s += " k1=";
  detail::append_g9(s, m.features.k1);
  s += " k2=";
  detail::append_g9(s, m.features.k2);
  s += " pfd=";
  s += m.features.pose_fully_defined ? '1' : '0';
  return s;
}

inline std::string trace_line(const Vote& v) {
  std::string s = "VOTE obj=" + v.object_id + " rot=";
  detail::append_rot(s, v.rotation);
  s += " loc=";
  detail::append_vec(s, v.location);
  s += " ev=";
  detail::append_g9(s, v.evidence);
  return s;
}

inline std::string trace_line(const GoalState& g) {
  std::string s = "GOAL loc=";
  detail::append_vec(s, g.target_location);
  s += " rot=";
  detail::append_rot(s, g.target_orientation);
  s += " conf=";
  detail::append_g9(s, g.confidence);
  s += " lm=" + std::to_string(g.issuing_lm);
  return s;
}

}  // namespace sensorium

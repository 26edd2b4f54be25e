#pragma once

// Sensor module: turns raw surface patches into protocol messages.  Three
// stages, each usable on its own:
//
//   to_cmp        exact geometry -> message (pose-defined flag derived here)
//   inject_noise  evaluation-time corruption, reproducible from the Rng
//   gate          drop messages that barely differ from the last one sent
//
// Noise model:
//   location_noise      Gaussian per axis, meters
//   pose_vector_noise   random tilt of the local frame, degrees
//   hue_noise           Gaussian on hue, wrapped onto the color circle
//   curvature_log_noise Gaussian in log10 of curvature magnitude
//   non_unique_pose     probability of flipping the pose-defined flag
//   new_color           replace the sensed color with a fixed override

#include <cmath>
#include <cstdint>
#include <optional>

#include "sensorium/cmp.hpp"
#include "sensorium/env.hpp"
#include "sensorium/geom.hpp"
#include "sensorium/rng.hpp"

namespace sensorium {

// Curvature gap (1/m) below which the two principal directions are too
// alike to pin down a full orientation.
constexpr double kPoseDefinedCurvatureGap = 0.5;

struct NoiseConfig {
  double location_noise = 0.0;
  double pose_vector_noise = 0.0;  // degrees
  double hue_noise = 0.0;
  double curvature_log_noise = 0.0;
  double non_unique_pose = 0.0;
  bool new_color = false;

  bool any() const {
    return location_noise > 0 || pose_vector_noise > 0 || hue_noise > 0 ||
           curvature_log_noise > 0 || non_unique_pose > 0 || new_color;
  }
};

// Hue the new_color transform paints over everything.
constexpr double kOverrideHue = 0.667;
constexpr double kOverrideSat = 1.0;
constexpr double kOverrideVal = 1.0;

struct GateConfig {
  double min_location = 0.001;       // meters
  double min_rotation_deg = 2.0;     // geodesic, degrees
  double min_hue = 0.02;             // circular hue distance
  double min_curvature_log = 0.05;   // log10 magnitude shift
};

inline CMPMessage to_cmp(const RawPatch& patch, int step_index) {
  CMPMessage msg;
  msg.location = patch.location;
  msg.local_rotation = frame_to_rotation(patch.frame);
  const bool defined =
      std::abs(patch.k1 - patch.k2) > kPoseDefinedCurvatureGap;
  msg.features = FeatureVector::make(patch.hue, patch.sat, patch.val,
                                     patch.k1, patch.k2, defined);
  msg.step_index = step_index;
  return msg;
}

// Corrupt a message.  Draw order is fixed (location, frame tilt, hue,
// curvatures, flag flip), so a given Rng state always yields the same
// output; stages whose amplitude is zero draw nothing.
inline CMPMessage inject_noise(CMPMessage msg, const NoiseConfig& cfg,
                               Rng& rng) {
  if (cfg.location_noise > 0) {
    msg.location.x += rng.gaussian(cfg.location_noise);
    msg.location.y += rng.gaussian(cfg.location_noise);
    msg.location.z += rng.gaussian(cfg.location_noise);
  }
  double hue = msg.features.hue;
  double k1 = msg.features.k1, k2 = msg.features.k2;
  bool defined = msg.features.pose_fully_defined;
  if (cfg.pose_vector_noise > 0) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2 * M_PI);
    const double s = std::sqrt(std::max(0.0, 1 - z * z));
    const Vec3 axis{s * std::cos(phi), s * std::sin(phi), z};
    const double angle = rng.gaussian(deg_to_rad(cfg.pose_vector_noise));
    msg.local_rotation =
        compose(Rotation::from_axis_angle(axis, angle), msg.local_rotation);
  }
  if (cfg.hue_noise > 0) hue += rng.gaussian(cfg.hue_noise);
  if (cfg.curvature_log_noise > 0) {
    k1 *= std::pow(10.0, rng.gaussian(cfg.curvature_log_noise));
    k2 *= std::pow(10.0, rng.gaussian(cfg.curvature_log_noise));
  }
  if (cfg.non_unique_pose > 0 && rng.bernoulli(cfg.non_unique_pose)) {
    defined = !defined;
  }
  double sat = msg.features.sat, val = msg.features.val;
  if (cfg.new_color) {
    hue = kOverrideHue;
    sat = kOverrideSat;
    val = kOverrideVal;
  }
  msg.features = FeatureVector::make(hue, sat, val, k1, k2, defined);
  return msg;
}

// Stateful novelty gate plus the full patch -> message pipeline.
class SensorModule {
 public:
  NoiseConfig noise;
  GateConfig gate_cfg;

  void reset() { last_.reset(); }

  // True if the message is novel enough to forward; updates gate state.
  bool gate(const CMPMessage& msg) {
    if (last_) {
      const CMPMessage& p = *last_;
      const bool pass =
          norm(msg.location - p.location) >= gate_cfg.min_location ||
          geodesic_distance(msg.local_rotation, p.local_rotation) >=
              deg_to_rad(gate_cfg.min_rotation_deg) ||
          hue_distance(msg.features.hue, p.features.hue) >=
              gate_cfg.min_hue ||
          std::abs(curvature_log(msg.features.k1) -
                   curvature_log(p.features.k1)) >=
              gate_cfg.min_curvature_log ||
          std::abs(curvature_log(msg.features.k2) -
                   curvature_log(p.features.k2)) >=
              gate_cfg.min_curvature_log ||
          msg.features.pose_fully_defined != p.features.pose_fully_defined;
      if (!pass) return false;
    }
    last_ = msg;
    return true;
  }

  // Miss -> nothing; gated-out -> nothing; otherwise the (noisy) message.
  std::optional<CMPMessage> process(const RawPatch& patch, int step_index,
                                    Rng& rng) {
    if (!patch.on_object) return std::nullopt;
    CMPMessage msg = to_cmp(patch, step_index);
    if (noise.any()) msg = inject_noise(msg, noise, rng);
    if (!gate(msg)) return std::nullopt;
    return msg;
  }

 private:
  std::optional<CMPMessage> last_;
};

}  // namespace sensorium

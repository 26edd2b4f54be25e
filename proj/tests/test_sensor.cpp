#include "sensorium/sensor.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "sensorium/cmp.hpp"
#include "sensorium/env.hpp"
#include "sensorium/geom.hpp"
#include "sensorium/rng.hpp"

namespace sensorium {
namespace {

// Mean of |N(0, sigma)|.
double half_normal_mean(double sigma) {
  return sigma * std::sqrt(2.0 / M_PI);
}

RawPatch flat_patch() {
  RawPatch p;
  p.on_object = true;
  p.location = {0.01, 0.02, 0.03};
  p.frame.normal = {0, 0, 1};
  p.frame.dir1 = {1, 0, 0};
  p.frame.dir2 = {0, 1, 0};
  p.k1 = 0;
  p.k2 = 0;
  p.hue = 0.25;
  p.sat = 0.8;
  p.val = 0.9;
  return p;
}

RawPatch curved_patch() {
  RawPatch p = flat_patch();
  p.k1 = 20.0;
  p.k2 = 0.0;
  return p;
}

TEST(SensorMessage, pose_defined_needs_a_clear_curvature_gap) {
  RawPatch p = flat_patch();
  EXPECT_FALSE(to_cmp(p, 0).features.pose_fully_defined);

  p.k1 = 0.5;  // exactly at the threshold: still ambiguous
  EXPECT_FALSE(to_cmp(p, 0).features.pose_fully_defined);

  p.k1 = 0.51;
  EXPECT_TRUE(to_cmp(p, 0).features.pose_fully_defined);

  EXPECT_TRUE(to_cmp(curved_patch(), 3).features.pose_fully_defined);
  EXPECT_EQ(to_cmp(curved_patch(), 3).step_index, 3);
}

TEST(SensorMessage, local_rotation_carries_the_patch_frame) {
  const CMPMessage msg = to_cmp(curved_patch(), 0);
  const LocalFrame f = rotation_to_frame(msg.local_rotation);
  EXPECT_NEAR(norm(f.normal - Vec3{0, 0, 1}), 0.0, 1e-12);
  EXPECT_NEAR(norm(f.dir1 - Vec3{1, 0, 0}), 0.0, 1e-12);
}

TEST(SensorNoise, zero_config_is_a_bitwise_passthrough) {
  const CMPMessage msg = to_cmp(curved_patch(), 0);
  Rng rng(derive_seed(1, 0, 0));
  const CMPMessage out = inject_noise(msg, NoiseConfig{}, rng);
  EXPECT_EQ(out.location.x, msg.location.x);
  EXPECT_EQ(out.local_rotation.w, msg.local_rotation.w);
  EXPECT_EQ(out.features.hue, msg.features.hue);
  EXPECT_EQ(out.features.k1, msg.features.k1);
  EXPECT_EQ(out.features.pose_fully_defined,
            msg.features.pose_fully_defined);
}

TEST(SensorNoise, location_shift_has_half_normal_magnitude) {
  NoiseConfig cfg;
  cfg.location_noise = 0.002;
  const CMPMessage msg = to_cmp(curved_patch(), 0);
  Rng rng(derive_seed(1, 1, 0));
  double mean_abs = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const CMPMessage out = inject_noise(msg, cfg, rng);
    mean_abs += std::abs(out.location.x - msg.location.x);
  }
  mean_abs /= n;
  EXPECT_NEAR(mean_abs, half_normal_mean(0.002), 0.03 * half_normal_mean(0.002));
}

TEST(SensorNoise, frame_tilt_has_half_normal_angle) {
  NoiseConfig cfg;
  cfg.pose_vector_noise = 2.0;  // degrees
  const CMPMessage msg = to_cmp(curved_patch(), 0);
  Rng rng(derive_seed(1, 2, 0));
  double mean_angle = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const CMPMessage out = inject_noise(msg, cfg, rng);
    mean_angle += geodesic_distance(out.local_rotation, msg.local_rotation);
  }
  mean_angle /= n;
  EXPECT_NEAR(mean_angle, half_normal_mean(deg_to_rad(2.0)),
              0.03 * half_normal_mean(deg_to_rad(2.0)));
}

TEST(SensorNoise, hue_jitter_wraps_and_keeps_its_spread) {
  NoiseConfig cfg;
  cfg.hue_noise = 0.1;
  RawPatch p = curved_patch();
  p.hue = 0.97;  // hugs the wrap point
  const CMPMessage msg = to_cmp(p, 0);
  Rng rng(derive_seed(1, 3, 0));
  double mean_dist = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const CMPMessage out = inject_noise(msg, cfg, rng);
    ASSERT_GE(out.features.hue, 0.0);
    ASSERT_LT(out.features.hue, 1.0);
    mean_dist += hue_distance(out.features.hue, msg.features.hue);
  }
  mean_dist /= n;
  EXPECT_NEAR(mean_dist, half_normal_mean(0.1), 0.05 * half_normal_mean(0.1));
}

TEST(SensorNoise, curvature_jitter_is_multiplicative_in_log_space) {
  NoiseConfig cfg;
  cfg.curvature_log_noise = 0.1;
  const CMPMessage msg = to_cmp(curved_patch(), 0);
  Rng rng(derive_seed(1, 4, 0));
  double mean_shift = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const CMPMessage out = inject_noise(msg, cfg, rng);
    ASSERT_GT(out.features.k1, 0.0);  // sign preserved
    ASSERT_EQ(out.features.k2, 0.0);  // zero curvature stays zero
    mean_shift += std::abs(std::log10(out.features.k1 / msg.features.k1));
  }
  mean_shift /= n;
  EXPECT_NEAR(mean_shift, half_normal_mean(0.1), 0.03 * half_normal_mean(0.1));
}

TEST(SensorNoise, pose_flag_flips_at_the_configured_rate) {
  NoiseConfig cfg;
  cfg.non_unique_pose = 0.01;
  const CMPMessage msg = to_cmp(curved_patch(), 0);
  Rng rng(derive_seed(1, 5, 0));
  int flips = 0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const CMPMessage out = inject_noise(msg, cfg, rng);
    if (out.features.pose_fully_defined != msg.features.pose_fully_defined) {
      ++flips;
    }
  }
  const double rate = static_cast<double>(flips) / n;
  EXPECT_GT(rate, 0.007);
  EXPECT_LT(rate, 0.013);
}

TEST(SensorNoise, color_override_beats_every_other_stage) {
  NoiseConfig cfg;
  cfg.hue_noise = 0.1;
  cfg.new_color = true;
  const CMPMessage msg = to_cmp(curved_patch(), 0);
  Rng rng(derive_seed(1, 6, 0));
  for (int i = 0; i < 100; ++i) {
    const CMPMessage out = inject_noise(msg, cfg, rng);
    EXPECT_EQ(out.features.hue, kOverrideHue);
    EXPECT_EQ(out.features.sat, kOverrideSat);
    EXPECT_EQ(out.features.val, kOverrideVal);
  }
}

TEST(SensorNoise, same_seed_gives_identical_messages) {
  NoiseConfig cfg;
  cfg.location_noise = 0.002;
  cfg.pose_vector_noise = 2.0;
  cfg.hue_noise = 0.1;
  cfg.curvature_log_noise = 0.1;
  cfg.non_unique_pose = 0.01;
  const CMPMessage msg = to_cmp(curved_patch(), 0);
  Rng a(derive_seed(9, 0, 0)), b(derive_seed(9, 0, 0));
  for (int i = 0; i < 200; ++i) {
    const CMPMessage ma = inject_noise(msg, cfg, a);
    const CMPMessage mb = inject_noise(msg, cfg, b);
    EXPECT_EQ(ma.location.x, mb.location.x);
    EXPECT_EQ(ma.local_rotation.w, mb.local_rotation.w);
    EXPECT_EQ(ma.local_rotation.z, mb.local_rotation.z);
    EXPECT_EQ(ma.features.hue, mb.features.hue);
    EXPECT_EQ(ma.features.k1, mb.features.k1);
    EXPECT_EQ(ma.features.pose_fully_defined, mb.features.pose_fully_defined);
  }
}

TEST(SensorGate, first_message_always_passes) {
  SensorModule sm;
  EXPECT_TRUE(sm.gate(to_cmp(curved_patch(), 0)));
}

TEST(SensorGate, identical_repeat_is_dropped) {
  SensorModule sm;
  const CMPMessage msg = to_cmp(curved_patch(), 0);
  EXPECT_TRUE(sm.gate(msg));
  EXPECT_FALSE(sm.gate(msg));
  EXPECT_FALSE(sm.gate(msg));
}

TEST(SensorGate, each_channel_can_reopen_the_gate) {
  SensorModule sm;
  const RawPatch base = curved_patch();
  ASSERT_TRUE(sm.gate(to_cmp(base, 0)));

  RawPatch moved = base;
  moved.location.x += 0.002;  // 2 mm > 1 mm
  EXPECT_TRUE(sm.gate(to_cmp(moved, 1)));

  RawPatch turned = moved;
  const Rotation tilt = Rotation::from_axis_angle({0, 1, 0}, deg_to_rad(3));
  turned.frame.normal = rotate(tilt, moved.frame.normal);
  turned.frame.dir1 = rotate(tilt, moved.frame.dir1);
  turned.frame.dir2 = rotate(tilt, moved.frame.dir2);
  EXPECT_TRUE(sm.gate(to_cmp(turned, 2)));

  RawPatch recolored = turned;
  recolored.hue += 0.05;
  EXPECT_TRUE(sm.gate(to_cmp(recolored, 3)));

  RawPatch sharpened = recolored;
  sharpened.k1 *= 2.0;  // log10 shift 0.30 > 0.05
  EXPECT_TRUE(sm.gate(to_cmp(sharpened, 4)));

  RawPatch redefined = sharpened;
  redefined.k1 = redefined.k2;  // collapses the curvature gap
  EXPECT_TRUE(sm.gate(to_cmp(redefined, 5)));
}

TEST(SensorGate, sub_threshold_drift_stays_closed) {
  SensorModule sm;
  const RawPatch base = curved_patch();
  ASSERT_TRUE(sm.gate(to_cmp(base, 0)));

  RawPatch drift = base;
  drift.location.x += 0.0004;
  drift.hue += 0.01;
  EXPECT_FALSE(sm.gate(to_cmp(drift, 1)));
}

TEST(SensorGate, blocked_messages_do_not_move_the_reference) {
  SensorModule sm;
  RawPatch p = curved_patch();
  ASSERT_TRUE(sm.gate(to_cmp(p, 0)));
  // Creep in 0.4 mm hops; each compares against the last PASSED message,
  // so the fourth hop accumulates past the threshold and reopens.
  for (int i = 1; i <= 2; ++i) {
    p.location.x += 0.0004;
    EXPECT_FALSE(sm.gate(to_cmp(p, i)));
  }
  p.location.x += 0.0004;
  EXPECT_TRUE(sm.gate(to_cmp(p, 3)));
}

TEST(SensorPipeline, miss_produces_no_message) {
  SensorModule sm;
  Rng rng(derive_seed(2, 0, 0));
  RawPatch miss;
  miss.on_object = false;
  EXPECT_FALSE(sm.process(miss, 0, rng).has_value());
}

TEST(SensorPipeline, reset_reopens_the_gate) {
  SensorModule sm;
  Rng rng(derive_seed(2, 1, 0));
  const RawPatch p = curved_patch();
  EXPECT_TRUE(sm.process(p, 0, rng).has_value());
  EXPECT_FALSE(sm.process(p, 1, rng).has_value());
  sm.reset();
  EXPECT_TRUE(sm.process(p, 2, rng).has_value());
}

}  // namespace
}  // namespace sensorium

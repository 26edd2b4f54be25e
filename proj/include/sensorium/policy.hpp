#pragma once

// Motor policies.  Two model-free exploration policies (a pivoting walk
// for the distant agent, a curvature-following walk for the surface
// agent) plus the model-based goal generator that proposes a jump to the
// stored point best separating the two leading hypotheses.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sensorium/cmp.hpp"
#include "sensorium/env.hpp"
#include "sensorium/geom.hpp"
#include "sensorium/lm.hpp"
#include "sensorium/model.hpp"
#include "sensorium/rng.hpp"

namespace sensorium {

struct PolicyConfig {
  double max_pivot_deg = 5.0;      // distant walk step bound
  double surface_step = 0.004;     // surface walk stride, meters
  double prominence = 5.0;         // |k1| above this steers the heading
  double realign_deg = 15.0;       // normal misalignment forcing a re-orient
  double jitter_deg = 10.0;        // heading jitter on featureless ground
  int ht_min_steps = 10;           // observations before goals may fire
  double ht_evidence_ratio = 0.8;  // fraction of best-possible evidence
  int ht_rearm_steps = 10;         // cooldown between jumps
  double jump_standoff = 0.4;      // distant agent viewing distance
  bool hypothesis_testing = true;
};

// Random pivoting for the distant agent.  Steps are small pivots about a
// random axis in the camera plane; a step that slid off the object is
// undone exactly before trying a new direction.
class DistantWalkPolicy {
 public:
  PolicyConfig cfg;

  Action next(bool last_on_object, Rng& rng) {
    if (!last_on_object && has_last_) {
      const Action reversal = Action::pivot(last_axis_, -last_angle_);
      has_last_ = false;  // do not re-reverse if the reversal also misses
      return reversal;
    }
    const double phi = rng.uniform(0, 2 * M_PI);
    last_axis_ = Vec3{std::cos(phi), std::sin(phi), 0};
    last_angle_ = rng.uniform(0, deg_to_rad(cfg.max_pivot_deg));
    has_last_ = true;
    return Action::pivot(last_axis_, last_angle_);
  }

  void reset() { has_last_ = false; }

 private:
  bool has_last_ = false;
  Vec3 last_axis_{0, 0, 1};
  double last_angle_ = 0;
};

// Surface-following walk.  Keeps the sensor hovering at the contact
// radius, realigns with the surface normal when the agent tilts too far,
// and otherwise strides along the tangent plane.  Strongly curved ground
// steers the stride onto the principal direction; flat ground keeps the
// previous heading with a little jitter.
class SurfaceWalkPolicy {
 public:
  PolicyConfig cfg;

  Action next(const RawPatch& patch, const AgentState& agent, Rng& rng) {
    if (!patch.on_object) {
      // Walked off the edge: go back to the last sensed position.
      return Action::translate(last_good_ - agent.position);
    }
    last_good_ = agent.position;
    const Vec3 n = patch.frame.normal;
    const Vec3 fwd = agent_forward(agent);
    const double tilt = std::acos(std::clamp(dot(fwd, -n), -1.0, 1.0));
    if (tilt > deg_to_rad(cfg.realign_deg)) {
      return Action::orient_to(
          compose(rotation_between(fwd, -n), agent.orientation));
    }

    Vec3 heading = heading_;
    if (std::abs(patch.k1) > cfg.prominence) {
      // Follow the prominent feature, whichever sign turns us less.
      heading = dot(patch.frame.dir1, heading_) >= 0
                    ? patch.frame.dir1
                    : -patch.frame.dir1;
    } else {
      const double a = rng.uniform(-deg_to_rad(cfg.jitter_deg),
                                   deg_to_rad(cfg.jitter_deg));
      heading = rotate(Rotation::from_axis_angle(n, a), heading);
    }
    // Stay tangent, and correct any hover drift.  Hovering at half the
    // contact radius leaves margin, so a full stride cannot carry the
    // sensor past the sensing tolerance on curved ground.
    heading -= n * dot(heading, n);
    const double len = norm(heading);
    heading = len > 1e-12 ? heading / len : patch.frame.dir1;
    heading_ = heading;
    const Vec3 hover = patch.location + n * (0.5 * kSurfaceContactRadius);
    return Action::translate(heading * cfg.surface_step +
                             (hover - agent.position));
  }

  void reset(const Vec3& initial_heading = {1, 0, 0}) {
    heading_ = initial_heading;
    last_good_ = {0, 0, 0};
  }

 private:
  Vec3 heading_{1, 0, 0};
  Vec3 last_good_{0, 0, 0};
};

// Picks the stored point of the leading object that is farthest from
// everything in the runner-up's cloud once both are placed under their
// hypothesized poses.  Observing that point is maximally informative:
// the leader predicts something there and the runner-up does not.
struct DiscriminationTarget {
  int point_index = 0;
  double separation = 0;
};

inline DiscriminationTarget most_discriminating_point(
    const ObjectModel& lead, const Rotation& lead_rot,
    const Location& lead_loc, const ObjectModel& other,
    const Rotation& other_rot, const Location& other_loc) {
  std::vector<Vec3> other_cloud;
  other_cloud.reserve(other.size());
  for (int j = 0; j < other.size(); ++j) {
    other_cloud.push_back(
        rotate(other_rot, other.point(j).location - other_loc));
  }
  DiscriminationTarget best;
  best.separation = -1;
  for (int i = 0; i < lead.size(); ++i) {
    const Vec3 p = rotate(lead_rot, lead.point(i).location - lead_loc);
    double nearest = INFINITY;
    for (const Vec3& q : other_cloud) {
      nearest = std::min(nearest, norm(p - q));
    }
    if (nearest > best.separation) {
      best = DiscriminationTarget{i, nearest};
    }
  }
  return best;
}

// Builds a goal from a learning module's two leading hypotheses, or
// nothing when the module is not confident enough yet.  `body_location`
// is the sensor's current body-frame position (the anchor tying model
// coordinates to the world).
inline std::optional<GoalState> hypothesis_test_goal(
    const LearningModule& lm, const Location& body_location,
    const PolicyConfig& cfg, double standoff) {
  if (lm.steps() < cfg.ht_min_steps) return std::nullopt;

  // Locate the best hypothesis and the best hypothesis of every other
  // object in one sweep.
  int best_obj = -1, best_hyp = -1;
  double best_e = -INFINITY;
  for (int oi = 0; oi < static_cast<int>(lm.objects.size()); ++oi) {
    const auto& hyps = lm.objects[oi].hyps;
    for (int hi = 0; hi < static_cast<int>(hyps.size()); ++hi) {
      if (hyps[hi].evidence > best_e) {
        best_e = hyps[hi].evidence;
        best_obj = oi;
        best_hyp = hi;
      }
    }
  }
  if (best_obj < 0) return std::nullopt;
  const double ceiling = lm.cfg.w_feature +
                         (lm.steps() - 1) * (lm.cfg.w_rotation +
                                             lm.cfg.w_feature);
  if (best_e < cfg.ht_evidence_ratio * ceiling) return std::nullopt;

  const ObjectHypotheses& lead = lm.objects[best_obj];
  const Hypothesis& mlh = lead.hyps[best_hyp];

  // Runner-up: another object when one is competitive, else the best
  // clearly-different pose of the leading object.
  int rival_obj = -1, rival_hyp = -1;
  double rival_e = -INFINITY;
  for (int oi = 0; oi < static_cast<int>(lm.objects.size()); ++oi) {
    if (oi == best_obj) continue;
    const auto& hyps = lm.objects[oi].hyps;
    for (int hi = 0; hi < static_cast<int>(hyps.size()); ++hi) {
      if (hyps[hi].evidence > rival_e) {
        rival_e = hyps[hi].evidence;
        rival_obj = oi;
        rival_hyp = hi;
      }
    }
  }
  if (rival_obj < 0 || rival_e < best_e - lm.cfg.theta_converge) {
    rival_obj = best_obj;
    rival_hyp = -1;
    rival_e = -INFINITY;
    const double width = deg_to_rad(lm.cfg.cluster_deg);
    for (int hi = 0; hi < static_cast<int>(lead.hyps.size()); ++hi) {
      if (hi == best_hyp) continue;
      if (geodesic_distance(lead.hyps[hi].rotation, mlh.rotation) <= width) {
        continue;
      }
      if (lead.hyps[hi].evidence > rival_e) {
        rival_e = lead.hyps[hi].evidence;
        rival_hyp = hi;
      }
    }
    if (rival_hyp < 0) return std::nullopt;
  }
  const ObjectHypotheses& rival = lm.objects[rival_obj];
  const Hypothesis& second = rival.hyps[rival_hyp];

  const DiscriminationTarget target = most_discriminating_point(
      *lead.model, mlh.rotation, mlh.location, *rival.model, second.rotation,
      second.location);
  const ModelPoint& p = lead.model->point(target.point_index);

  // Place the sensor on the hypothesized outward normal over that point.
  const Vec3 body_point =
      body_location + rotate(mlh.rotation, p.location - mlh.location);
  const Vec3 body_normal = rotate(compose(mlh.rotation, p.rotation), {0, 0, 1});
  GoalState g;
  g.target_location = body_point + body_normal * standoff;
  g.target_orientation = rotation_between({0, 0, -1}, -body_normal);
  g.confidence = best_e / lm.steps();
  g.issuing_lm = lm.lm_id;
  return g;
}

inline std::optional<GoalState> select_goal(
    const std::vector<GoalState>& goals) {
  std::optional<GoalState> best;
  for (const GoalState& g : goals) {
    if (!best || g.confidence > best->confidence ||
        (g.confidence == best->confidence && g.issuing_lm < best->issuing_lm)) {
      best = g;
    }
  }
  return best;
}

// Cooldown bookkeeping for jump goals: armed after ht_min_steps, then
// re-armed ht_rearm_steps after each jump.
class GoalScheduler {
 public:
  PolicyConfig cfg;

  bool armed(int lm_steps) const {
    if (!cfg.hypothesis_testing) return false;
    return lm_steps - last_jump_ >= cfg.ht_rearm_steps;
  }

  void fired(int lm_steps) { last_jump_ = lm_steps; }
  void reset() { last_jump_ = 0; }

 private:
  int last_jump_ = 0;
};

}  // namespace sensorium

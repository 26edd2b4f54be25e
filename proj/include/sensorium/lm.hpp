#pragma once

// Learning module: recognizes which object is being sensed and in which
// rotation, by keeping a population of (object, rotation, location)
// hypotheses and scoring them against each incoming message.
//
// A hypothesis claims: "the sensor is at `location` in the model frame of
// `object`, and the model frame maps into the body frame by `rotation`".
// Each message then does two things per live hypothesis:
//
//   move    the sensor's body-frame displacement, rotated into the model
//           frame, advances the claimed location (dead reckoning)
//   score   the nearest stored point within epsilon either supports the
//           claim (pose agreement + feature agreement) or a miss penalizes
//
// Termination: the modal set (hypotheses within theta_converge of the
// leader) must collapse onto a single object.  One rotation cluster means
// a unique pose; several clusters that stay put for theta_sym steps mean
// the object is symmetric and the clusters are its pose family.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sensorium/cmp.hpp"
#include "sensorium/geom.hpp"
#include "sensorium/model.hpp"
#include "sensorium/ops.hpp"

namespace sensorium {

struct LMConfig {
  double epsilon = 0.0075;        // neighbor search radius, meters
  double theta_converge = 5.0;    // evidence gap defining the modal set
  double theta_update = 10.0;     // gap beyond which hypotheses freeze
  int theta_sym = 5;              // stable steps before declaring symmetry
  int min_symmetry_steps = 60;    // earliest step symmetry may be declared
  int max_steps = 500;            // inference budget per episode
  double w_rotation = 1.0;        // pose agreement weight
  double w_feature = 0.5;         // feature agreement weight
  double w_miss = 1.0;            // penalty when no stored point is near
  int n_spin = 8;                 // about-normal samples for ambiguous poses
  double cluster_deg = 5.0;       // rotation clustering width
};

struct Hypothesis {
  Rotation rotation;   // model frame -> body frame
  Location location;   // sensor position, model frame
  double evidence = 0;
};

struct ObjectHypotheses {
  std::string object_id;
  const ObjectModel* model = nullptr;
  std::vector<Hypothesis> hyps;
};

enum class LMStatus { no_hypotheses, exploring, converged, symmetric, timed_out };

inline const char* to_string(LMStatus s) {
  switch (s) {
    case LMStatus::no_hypotheses: return "no_hypotheses";
    case LMStatus::exploring: return "exploring";
    case LMStatus::converged: return "converged";
    case LMStatus::symmetric: return "symmetric";
    case LMStatus::timed_out: return "timed_out";
  }
  return "?";
}

struct PoseEstimate {
  std::string object_id;
  Rotation rotation;
  Location location;
  double evidence = 0;
};

struct LMOutput {
  LMStatus status = LMStatus::no_hypotheses;
  PoseEstimate mlh;                  // most likely hypothesis
  int symmetry_order = 1;            // rotation clusters in the modal set
  std::vector<Rotation> pose_family; // cluster representatives
};

// Feature disagreement in [0, 1]: hue on the color circle, curvatures in
// log magnitude, each saturating at its scale.
constexpr double kHueScale = 0.2;
constexpr double kCurvatureScale = 0.75;
constexpr double kInitFeaturePrune = 0.75;  // skip init at hopeless points

inline double combined_feature_distance(const FeatureVector& a,
                                        const FeatureVector& b) {
  const double dh = std::min(1.0, hue_distance(a.hue, b.hue) / kHueScale);
  const double d1 = std::min(
      1.0, std::abs(curvature_log(a.k1) - curvature_log(b.k1)) /
               kCurvatureScale);
  const double d2 = std::min(
      1.0, std::abs(curvature_log(a.k2) - curvature_log(b.k2)) /
               kCurvatureScale);
  return 0.5 * dh + 0.25 * d1 + 0.25 * d2;
}

inline double rotation_error(const Rotation& truth, const Rotation& estimate) {
  return geodesic_distance(truth, estimate);
}

inline double family_rotation_error(const Rotation& truth,
                                    const std::vector<Rotation>& family) {
  double best = M_PI;
  for (const Rotation& r : family) {
    best = std::min(best, geodesic_distance(truth, r));
  }
  return best;
}

class LearningModule {
 public:
  LMConfig cfg;
  int lm_id = 0;
  std::vector<ObjectHypotheses> objects;

  // Models must outlive the module.
  void attach(const ModelStore& store) {
    objects.clear();
    for (const std::string& id : store.ids()) {
      objects.push_back(ObjectHypotheses{id, store.find(id), {}});
    }
    reset();
  }

  void reset() {
    for (ObjectHypotheses& o : objects) o.hyps.clear();
    last_location_.reset();
    steps_ = 0;
    status_ = LMStatus::no_hypotheses;
    prev_reps_.clear();
    stable_steps_ = 0;
  }

  int steps() const { return steps_; }
  int stable_steps() const { return stable_steps_; }
  LMStatus status() const { return status_; }
  const std::optional<Location>& last_seen_location() const {
    return last_location_;
  }
  bool terminal() const {
    return status_ == LMStatus::converged || status_ == LMStatus::symmetric ||
           status_ == LMStatus::timed_out;
  }

  void observe(const CMPMessage& msg, OpCounter* ops = nullptr) {
    ++steps_;
    if (!last_location_) {
      init_hypotheses(msg);
      last_location_ = msg.location;
      update_status();
      return;
    }
    const Displacement v = msg.location - *last_location_;
    last_location_ = msg.location;

    double e_max = -INFINITY;
    for (const ObjectHypotheses& o : objects) {
      for (const Hypothesis& h : o.hyps) e_max = std::max(e_max, h.evidence);
    }
    for (ObjectHypotheses& o : objects) {
      for (Hypothesis& h : o.hyps) {
        // Dead reckoning runs for every hypothesis so frozen ones stay
        // consistent if the race reopens; scoring is gated.
        h.location += rotate(inverse(h.rotation), v);
        if (h.evidence >= e_max - cfg.theta_update) {
          score(o, h, msg, ops);
        }
      }
    }
    update_status();
  }

  LMOutput output() const {
    LMOutput out;
    out.status = status_;
    const Best best = find_best();
    if (!best.valid) return out;
    const ObjectHypotheses& o = objects[best.obj];
    out.mlh = PoseEstimate{o.object_id, o.hyps[best.hyp].rotation,
                           o.hyps[best.hyp].location,
                           o.hyps[best.hyp].evidence};
    const std::vector<std::pair<int, int>> modal = modal_set(best);
    bool single_object = true;
    for (const auto& [oi, hi] : modal) {
      if (oi != best.obj) single_object = false;
    }
    if (single_object) {
      out.pose_family = cluster_rotations(modal);
      out.symmetry_order = static_cast<int>(out.pose_family.size());
    }
    return out;
  }

  std::vector<double> evidence_vector(const std::string& object_id) const {
    for (const ObjectHypotheses& o : objects) {
      if (o.object_id != object_id) continue;
      std::vector<double> out;
      out.reserve(o.hyps.size());
      for (const Hypothesis& h : o.hyps) out.push_back(h.evidence);
      return out;
    }
    return {};
  }

 private:
  struct Best {
    bool valid = false;
    int obj = 0;
    int hyp = 0;
    double evidence = -INFINITY;
  };

  std::optional<Location> last_location_;
  int steps_ = 0;
  LMStatus status_ = LMStatus::no_hypotheses;
  std::vector<Rotation> prev_reps_;
  int stable_steps_ = 0;

  void init_hypotheses(const CMPMessage& msg) {
    for (ObjectHypotheses& o : objects) {
      o.hyps.clear();
      if (o.model == nullptr || o.model->size() == 0) continue;
      for (int i = 0; i < o.model->size(); ++i) {
        const ModelPoint& p = o.model->point(i);
        const double d = combined_feature_distance(msg.features, p.features);
        if (!(d < kInitFeaturePrune)) continue;
        const double e0 = cfg.w_feature * (1.0 - d);
        const bool both_defined = msg.features.pose_fully_defined &&
                                  p.features.pose_fully_defined;
        const Rotation inv_stored = inverse(p.rotation);
        const int spins = both_defined ? 2 : cfg.n_spin;
        for (int k = 0; k < spins; ++k) {
          const double angle =
              both_defined ? k * M_PI : k * (2 * M_PI / cfg.n_spin);
          const Rotation spin = Rotation::from_axis_angle({0, 0, 1}, angle);
          const Rotation r =
              compose(msg.local_rotation, compose(spin, inv_stored));
          o.hyps.push_back(Hypothesis{r, p.location, e0});
        }
      }
    }
  }

  void score(const ObjectHypotheses& o, Hypothesis& h, const CMPMessage& msg,
             OpCounter* ops) {
    if (ops != nullptr) {
      ++ops->neighbor_queries;
      ++ops->evidence_updates;
    }
    const std::optional<int> ni = o.model->nearest(h.location);
    if (!ni ||
        norm(o.model->point(*ni).location - h.location) > cfg.epsilon) {
      h.evidence -= cfg.w_miss;
      return;
    }
    const ModelPoint& p = o.model->point(*ni);
    const Rotation predicted = compose(h.rotation, p.rotation);
    if (ops != nullptr) ++ops->rotation_compositions;
    const bool both_defined =
        msg.features.pose_fully_defined && p.features.pose_fully_defined;
    double dist;
    if (both_defined) {
      dist = geodesic_distance(predicted, msg.local_rotation);
    } else {
      // Ambiguous spin: compare surface normals only.
      const Vec3 n_pred = rotate(predicted, {0, 0, 1});
      const Vec3 n_obs = rotate(msg.local_rotation, {0, 0, 1});
      dist = std::acos(std::clamp(dot(n_pred, n_obs), -1.0, 1.0));
    }
    h.evidence += cfg.w_rotation * (1.0 - 2.0 * dist / M_PI);
    h.evidence += cfg.w_feature *
                  (1.0 - combined_feature_distance(msg.features, p.features));
  }

  Best find_best() const {
    Best best;
    for (int oi = 0; oi < static_cast<int>(objects.size()); ++oi) {
      const std::vector<Hypothesis>& hyps = objects[oi].hyps;
      for (int hi = 0; hi < static_cast<int>(hyps.size()); ++hi) {
        if (hyps[hi].evidence > best.evidence) {
          best = Best{true, oi, hi, hyps[hi].evidence};
        }
      }
    }
    return best;
  }

  std::vector<std::pair<int, int>> modal_set(const Best& best) const {
    std::vector<std::pair<int, int>> modal;
    const double floor = best.evidence - cfg.theta_converge;
    for (int oi = 0; oi < static_cast<int>(objects.size()); ++oi) {
      const std::vector<Hypothesis>& hyps = objects[oi].hyps;
      for (int hi = 0; hi < static_cast<int>(hyps.size()); ++hi) {
        if (hyps[hi].evidence > floor) modal.emplace_back(oi, hi);
      }
    }
    return modal;
  }

  // Greedy clustering of modal rotations, strongest evidence first.
  std::vector<Rotation> cluster_rotations(
      const std::vector<std::pair<int, int>>& modal) const {
    std::vector<std::pair<int, int>> order = modal;
    std::sort(order.begin(), order.end(),
              [this](const auto& a, const auto& b) {
                return objects[a.first].hyps[a.second].evidence >
                       objects[b.first].hyps[b.second].evidence;
              });
    std::vector<Rotation> reps;
    const double width = deg_to_rad(cfg.cluster_deg);
    for (const auto& [oi, hi] : order) {
      const Rotation& r = objects[oi].hyps[hi].rotation;
      bool fresh = true;
      for (const Rotation& rep : reps) {
        if (geodesic_distance(r, rep) <= width) {
          fresh = false;
          break;
        }
      }
      if (fresh) reps.push_back(r);
    }
    return reps;
  }

  void update_status() {
    if (terminal()) return;
    const Best best = find_best();
    if (!best.valid) {
      status_ = LMStatus::no_hypotheses;
      return;
    }
    status_ = LMStatus::exploring;
    const std::vector<std::pair<int, int>> modal = modal_set(best);
    bool single_object = true;
    for (const auto& [oi, hi] : modal) {
      if (oi != best.obj) single_object = false;
    }
    if (single_object) {
      const std::vector<Rotation> reps = cluster_rotations(modal);
      if (reps.size() == 1) {
        status_ = LMStatus::converged;
      } else {
        // Several surviving rotations of one object.  Declare symmetry
        // only once the family has stopped moving (every representative
        // stays near one from the previous step) and enough viewpoints
        // have had a chance to disprove it.
        const double slack = 1.5 * deg_to_rad(cfg.cluster_deg);
        bool settled = !prev_reps_.empty();
        for (const Rotation& r : reps) {
          bool near = false;
          for (const Rotation& p : prev_reps_) {
            if (geodesic_distance(r, p) <= slack) {
              near = true;
              break;
            }
          }
          if (!near) {
            settled = false;
            break;
          }
        }
        stable_steps_ = settled ? stable_steps_ + 1 : 0;
        if (stable_steps_ >= cfg.theta_sym &&
            steps_ >= cfg.min_symmetry_steps) {
          status_ = LMStatus::symmetric;
        }
      }
      prev_reps_ = reps;
    } else {
      stable_steps_ = 0;
      prev_reps_.clear();
    }
    if (status_ == LMStatus::exploring && steps_ >= cfg.max_steps) {
      status_ = LMStatus::timed_out;
    }
  }
};

}  // namespace sensorium

#pragma once

// Experiment configuration: a JSON file selects objects, training depth,
// evaluation condition, noise, agent and policy, module topology, and
// seeds.  Every field has a default, so {} is a valid config.  Unknown
// keys are rejected to catch typos early.
//
// Schema (all fields optional):
//
//   {
//     "objects": ["mug", "cup"],          // empty or absent = full library
//     "learning": {
//       "rotations": 14,                  // prefix of the 14-view scheme
//       "steps_per_rotation": 200
//     },
//     "eval": {
//       "condition": "learned",           // learned | novel | random
//       "novel_count": 5,
//       "random_count": 5,
//       "max_rotations": 0                // 0 = all, else even subsample
//     },
//     "noise": { "location_noise": 0.002, "pose_vector_noise": 2.0,
//                "hue_noise": 0.1, "curvature_log_noise": 0.1,
//                "non_unique_pose": 0.01, "new_color": false },
//     "gate":  { "min_location": 0.001, "min_rotation_deg": 2.0,
//                "min_hue": 0.02, "min_curvature_log": 0.05 },
//     "lm":    { ... any LMConfig field ... },
//     "voting": { "r_vote": 0.015, "w_vote": 1.0, "send_fraction": 0.2 },
//     "policy": { ... any PolicyConfig field ... },
//     "agent": { "kind": "surface",       // surface | distant
//                "hypothesis_testing": true },
//     "modules": { "count": 1, "quorum": 1 },
//     "seed": 0,
//     "workers": 0,                       // 0 = all hardware threads
//     "models_path": "",                  // pre-trained store for eval
//     "rapid_counts": [1, 2, 4, 8, 14],
//     "continual_eval_rotations": 4,
//     "camera_distance": 0.4
//   }

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sensorium/env.hpp"
#include "sensorium/geom.hpp"
#include "sensorium/lm.hpp"
#include "sensorium/policy.hpp"
#include "sensorium/rng.hpp"
#include "sensorium/sensor.hpp"
#include "sensorium/voting.hpp"

namespace sensorium {

enum class EvalCondition { learned, novel, random };

inline const char* to_string(EvalCondition c) {
  switch (c) {
    case EvalCondition::learned: return "learned";
    case EvalCondition::novel: return "novel";
    case EvalCondition::random: return "random";
  }
  return "?";
}

struct ExperimentConfig {
  std::vector<std::string> objects;  // empty = full builtin library
  int learning_rotations = 14;
  int steps_per_rotation = 200;
  EvalCondition condition = EvalCondition::learned;
  int novel_count = 5;
  int random_count = 5;
  int max_eval_rotations = 0;
  NoiseConfig noise;
  GateConfig gate;
  LMConfig lm;
  VotingConfig voting;
  PolicyConfig policy;
  AgentKind agent = AgentKind::surface;
  int lm_count = 1;
  int quorum = 1;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string models_path;
  std::vector<int> rapid_counts{1, 2, 4, 8, 14};
  int continual_eval_rotations = 4;
  double camera_distance = 0.4;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j,
                           const std::vector<std::string>& known,
                           const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const std::string& k : known) ok = ok || k == it.key();
    if (!ok) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using nlohmann::json;
  ExperimentConfig cfg;
  detail::reject_unknown(
      j,
      {"objects", "learning", "eval", "noise", "gate", "lm", "voting",
       "policy", "agent", "modules", "seed", "workers", "models_path",
       "rapid_counts", "continual_eval_rotations", "camera_distance"},
      "config");

  if (j.contains("objects")) {
    cfg.objects = j.at("objects").get<std::vector<std::string>>();
  }
  if (j.contains("learning")) {
    const json& n = j.at("learning");
    detail::reject_unknown(n, {"rotations", "steps_per_rotation"}, "learning");
    cfg.learning_rotations = n.value("rotations", cfg.learning_rotations);
    cfg.steps_per_rotation =
        n.value("steps_per_rotation", cfg.steps_per_rotation);
  }
  if (j.contains("eval")) {
    const json& n = j.at("eval");
    detail::reject_unknown(
        n, {"condition", "novel_count", "random_count", "max_rotations"},
        "eval");
    const std::string c = n.value("condition", "learned");
    if (c == "learned") {
      cfg.condition = EvalCondition::learned;
    } else if (c == "novel") {
      cfg.condition = EvalCondition::novel;
    } else if (c == "random") {
      cfg.condition = EvalCondition::random;
    } else {
      throw ConfigError("eval.condition must be learned|novel|random");
    }
    cfg.novel_count = n.value("novel_count", cfg.novel_count);
    cfg.random_count = n.value("random_count", cfg.random_count);
    cfg.max_eval_rotations = n.value("max_rotations", cfg.max_eval_rotations);
  }
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    detail::reject_unknown(n,
                           {"location_noise", "pose_vector_noise", "hue_noise",
                            "curvature_log_noise", "non_unique_pose",
                            "new_color"},
                           "noise");
    cfg.noise.location_noise = n.value("location_noise", 0.0);
    cfg.noise.pose_vector_noise = n.value("pose_vector_noise", 0.0);
    cfg.noise.hue_noise = n.value("hue_noise", 0.0);
    cfg.noise.curvature_log_noise = n.value("curvature_log_noise", 0.0);
    cfg.noise.non_unique_pose = n.value("non_unique_pose", 0.0);
    cfg.noise.new_color = n.value("new_color", false);
  }
  if (j.contains("gate")) {
    const json& n = j.at("gate");
    detail::reject_unknown(
        n, {"min_location", "min_rotation_deg", "min_hue", "min_curvature_log"},
        "gate");
    cfg.gate.min_location = n.value("min_location", cfg.gate.min_location);
    cfg.gate.min_rotation_deg =
        n.value("min_rotation_deg", cfg.gate.min_rotation_deg);
    cfg.gate.min_hue = n.value("min_hue", cfg.gate.min_hue);
    cfg.gate.min_curvature_log =
        n.value("min_curvature_log", cfg.gate.min_curvature_log);
  }
  if (j.contains("lm")) {
    const json& n = j.at("lm");
    detail::reject_unknown(n,
                           {"epsilon", "theta_converge", "theta_update",
                            "theta_sym", "min_symmetry_steps", "max_steps",
                            "w_rotation", "w_feature", "w_miss", "n_spin",
                            "cluster_deg"},
                           "lm");
    cfg.lm.epsilon = n.value("epsilon", cfg.lm.epsilon);
    cfg.lm.theta_converge = n.value("theta_converge", cfg.lm.theta_converge);
    cfg.lm.theta_update = n.value("theta_update", cfg.lm.theta_update);
    cfg.lm.theta_sym = n.value("theta_sym", cfg.lm.theta_sym);
    cfg.lm.min_symmetry_steps =
        n.value("min_symmetry_steps", cfg.lm.min_symmetry_steps);
    cfg.lm.max_steps = n.value("max_steps", cfg.lm.max_steps);
    cfg.lm.w_rotation = n.value("w_rotation", cfg.lm.w_rotation);
    cfg.lm.w_feature = n.value("w_feature", cfg.lm.w_feature);
    cfg.lm.w_miss = n.value("w_miss", cfg.lm.w_miss);
    cfg.lm.n_spin = n.value("n_spin", cfg.lm.n_spin);
    cfg.lm.cluster_deg = n.value("cluster_deg", cfg.lm.cluster_deg);
  }
  if (j.contains("voting")) {
    const json& n = j.at("voting");
    detail::reject_unknown(n, {"r_vote", "w_vote", "send_fraction"}, "voting");
    cfg.voting.r_vote = n.value("r_vote", cfg.voting.r_vote);
    cfg.voting.w_vote = n.value("w_vote", cfg.voting.w_vote);
    cfg.voting.send_fraction =
        n.value("send_fraction", cfg.voting.send_fraction);
  }
  if (j.contains("policy")) {
    const json& n = j.at("policy");
    detail::reject_unknown(n,
                           {"max_pivot_deg", "surface_step", "prominence",
                            "realign_deg", "jitter_deg", "ht_min_steps",
                            "ht_evidence_ratio", "ht_rearm_steps",
                            "jump_standoff"},
                           "policy");
    cfg.policy.max_pivot_deg =
        n.value("max_pivot_deg", cfg.policy.max_pivot_deg);
    cfg.policy.surface_step = n.value("surface_step", cfg.policy.surface_step);
    cfg.policy.prominence = n.value("prominence", cfg.policy.prominence);
    cfg.policy.realign_deg = n.value("realign_deg", cfg.policy.realign_deg);
    cfg.policy.jitter_deg = n.value("jitter_deg", cfg.policy.jitter_deg);
    cfg.policy.ht_min_steps = n.value("ht_min_steps", cfg.policy.ht_min_steps);
    cfg.policy.ht_evidence_ratio =
        n.value("ht_evidence_ratio", cfg.policy.ht_evidence_ratio);
    cfg.policy.ht_rearm_steps =
        n.value("ht_rearm_steps", cfg.policy.ht_rearm_steps);
    cfg.policy.jump_standoff =
        n.value("jump_standoff", cfg.policy.jump_standoff);
  }
  if (j.contains("agent")) {
    const json& n = j.at("agent");
    detail::reject_unknown(n, {"kind", "hypothesis_testing"}, "agent");
    const std::string k = n.value("kind", "surface");
    if (k == "surface") {
      cfg.agent = AgentKind::surface;
    } else if (k == "distant") {
      cfg.agent = AgentKind::distant;
    } else {
      throw ConfigError("agent.kind must be surface|distant");
    }
    cfg.policy.hypothesis_testing =
        n.value("hypothesis_testing", cfg.policy.hypothesis_testing);
  }
  if (j.contains("modules")) {
    const json& n = j.at("modules");
    detail::reject_unknown(n, {"count", "quorum"}, "modules");
    cfg.lm_count = n.value("count", cfg.lm_count);
    cfg.quorum = n.value("quorum", cfg.quorum);
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.workers = j.value("workers", cfg.workers);
  cfg.models_path = j.value("models_path", cfg.models_path);
  if (j.contains("rapid_counts")) {
    cfg.rapid_counts = j.at("rapid_counts").get<std::vector<int>>();
  }
  cfg.continual_eval_rotations =
      j.value("continual_eval_rotations", cfg.continual_eval_rotations);
  cfg.camera_distance = j.value("camera_distance", cfg.camera_distance);

  if (cfg.learning_rotations < 1 || cfg.learning_rotations > 14) {
    throw ConfigError("learning.rotations must be in [1, 14]");
  }
  if (cfg.steps_per_rotation < 1) {
    throw ConfigError("learning.steps_per_rotation must be positive");
  }
  if (cfg.lm_count < 1) throw ConfigError("modules.count must be positive");
  if (cfg.quorum < 1 || cfg.quorum > cfg.lm_count) {
    throw ConfigError("modules.quorum must be in [1, modules.count]");
  }
  if (cfg.lm_count > 1 && cfg.agent != AgentKind::distant) {
    throw ConfigError("modules.count > 1 requires agent.kind = distant");
  }
  if (cfg.camera_distance <= 0.1) {
    throw ConfigError("camera_distance must exceed the object scale");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse failure in " + path + ": " + e.what());
  }
  return parse_config(j);
}

// --- rotation schemes -----------------------------------------------------

// Training views: each of the 6 face directions and 8 corner directions of
// a cube is turned to face the camera (+z).  Index 0 is the identity view.
inline std::vector<Rotation> learning_rotations() {
  std::vector<Vec3> dirs{{0, 0, 1},  {0, 0, -1}, {1, 0, 0},
                         {-1, 0, 0}, {0, 1, 0},  {0, -1, 0}};
  for (double sx : {1.0, -1.0}) {
    for (double sy : {1.0, -1.0}) {
      for (double sz : {1.0, -1.0}) dirs.push_back(Vec3{sx, sy, sz});
    }
  }
  std::vector<Rotation> out;
  out.reserve(dirs.size());
  for (const Vec3& d : dirs) out.push_back(rotation_between(d, {0, 0, 1}));
  return out;
}

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

// Pool seed for the novel-view sets; a fixed constant, so the evaluation
// condition is a property of the object, not of the experiment seed.
constexpr std::uint64_t kNovelPoolSeed = 20260821;

// Held-out evaluation views: greedy farthest-point picks from a per-object
// pool, maximizing the minimum geodesic distance to the training views and
// to each other.
inline std::vector<Rotation> novel_rotations(const std::string& object_id,
                                             int count) {
  constexpr int kPool = 256;
  Rng rng(derive_seed(kNovelPoolSeed, detail::fnv1a(object_id), 0));
  std::vector<Rotation> pool;
  pool.reserve(kPool);
  for (int i = 0; i < kPool; ++i) {
    pool.push_back(
        uniform_rotation(rng.uniform(), rng.uniform(), rng.uniform()));
  }
  std::vector<Rotation> anchors = learning_rotations();
  std::vector<Rotation> out;
  for (int k = 0; k < count; ++k) {
    double best_sep = -1;
    int best_i = 0;
    for (int i = 0; i < kPool; ++i) {
      double sep = M_PI;
      for (const Rotation& a : anchors) {
        sep = std::min(sep, geodesic_distance(pool[i], a));
      }
      if (sep > best_sep) {
        best_sep = sep;
        best_i = i;
      }
    }
    anchors.push_back(pool[best_i]);
    out.push_back(pool[best_i]);
  }
  return out;
}

}  // namespace sensorium

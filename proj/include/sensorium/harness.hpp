#pragma once

// Experiment driver: training and evaluation protocols, the per-episode
// sense-infer-act loop, continual and rapid-learning schedules, evidence
// similarity, and result serialization.
//
// Determinism contract: every run is a pure function of (config, seed).
// Episodes draw from seeds derived per episode index, results land in
// pre-assigned slots, and result files carry no timestamps, so re-running
// the same config and seed reproduces every output byte for byte.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "sensorium/cmp.hpp"
#include "sensorium/config.hpp"
#include "sensorium/env.hpp"
#include "sensorium/geom.hpp"
#include "sensorium/lm.hpp"
#include "sensorium/model.hpp"
#include "sensorium/ops.hpp"
#include "sensorium/policy.hpp"
#include "sensorium/rng.hpp"
#include "sensorium/sensor.hpp"
#include "sensorium/voting.hpp"

namespace sensorium {

// --- worker pool ----------------------------------------------------------

// Runs fn(0..n-1) across a thread pool.  Callers write results into
// index-addressed slots, so scheduling order never shows in the output.
inline void parallel_for(int n, int workers,
                         const std::function<void(int)>& fn) {
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
  }
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto body = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (std::thread& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// --- episode types --------------------------------------------------------

struct EpisodeSpec {
  const SyntheticObject* object = nullptr;
  EpisodePose pose;
  std::uint64_t seed = 0;
};

struct EpisodeResult {
  int episode = 0;
  std::string gt_object;
  Rotation gt_rotation;
  std::uint64_t seed = 0;
  std::string predicted;
  LMStatus status = LMStatus::timed_out;
  bool correct = false;
  int env_steps = 0;
  int lm_steps = 0;
  int symmetry_order = 1;
  std::optional<double> rotation_error;  // radians; only when correct
  std::optional<double> chamfer;         // meters; only when correct
  std::vector<double> object_max_evidence;  // store ids, sorted
  OpCounter ops;
};

struct EvalSummary {
  int episodes = 0;
  int correct = 0;
  double accuracy = 0;
  std::optional<double> median_rotation_error_deg;
  std::optional<double> mean_rotation_error_deg;
  double median_env_steps = 0;
  double pct_converged = 0;
  double pct_symmetric = 0;
  double pct_timed_out = 0;
  OpCounter ops;
};

inline std::optional<double> median_of(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return v[m];
  return 0.5 * (v[m - 1] + v[m]);
}

// --- object selection -----------------------------------------------------

inline std::vector<SyntheticObject> select_objects(
    const ExperimentConfig& cfg) {
  const std::vector<SyntheticObject> lib = builtin_library();
  if (cfg.objects.empty()) return lib;
  std::vector<SyntheticObject> out;
  for (const std::string& id : cfg.objects) {
    bool found = false;
    for (const SyntheticObject& obj : lib) {
      if (obj.id == id) {
        out.push_back(obj);
        found = true;
      }
    }
    if (!found) throw ConfigError("unknown object id: " + id);
  }
  return out;
}

// --- the episode loop -----------------------------------------------------

namespace detail {

inline AgentState camera_agent(double distance) {
  AgentState a;
  a.kind = AgentKind::distant;
  a.position = {0, 0, distance};
  return a;
}

// Surface episodes start on the object: probe rays fan out from the camera
// until one lands, then the agent hovers over that contact point facing it.
inline std::optional<AgentState> surface_start(const SyntheticObject& obj,
                                               const EpisodePose& pose,
                                               double camera_distance) {
  AgentState probe = camera_agent(camera_distance);
  RawPatch first = sample_patch(obj, pose, probe);
  if (!first.on_object) {
    for (const Action& a : learning_trajectory(obj, probe, 64)) {
      probe = apply_action(probe, a);
      first = sample_patch(obj, pose, probe);
      if (first.on_object) break;
    }
  }
  if (!first.on_object) return std::nullopt;
  AgentState agent;
  agent.kind = AgentKind::surface;
  agent.position =
      first.location + first.frame.normal * (0.5 * kSurfaceContactRadius);
  agent.orientation = rotation_between({0, 0, -1}, -first.frame.normal);
  return agent;
}

// Fixed fan of view offsets for the sensor rig: sensor 0 looks straight
// ahead, the rest tilt by a constant angle at evenly spaced azimuths.
inline std::vector<Rotation> sensor_offsets(int count) {
  std::vector<Rotation> out{Rotation{}};
  for (int i = 1; i < count; ++i) {
    const double phi = 2 * M_PI * (i - 1) / std::max(1, count - 1);
    out.push_back(Rotation::from_axis_angle(
        {std::cos(phi), std::sin(phi), 0}, deg_to_rad(3.0)));
  }
  return out;
}

inline void trace_step(std::string& trace, const LearningModule& lm,
                       const std::vector<std::string>& ids, int env_step) {
  double e_max = -INFINITY;
  for (const std::string& id : ids) {
    for (double e : lm.evidence_vector(id)) e_max = std::max(e_max, e);
  }
  int alive = 0;
  if (std::isfinite(e_max)) {
    for (const std::string& id : ids) {
      for (double e : lm.evidence_vector(id)) {
        if (e >= e_max - lm.cfg.theta_update) ++alive;
      }
    }
  }
  const LMOutput out = lm.output();
  double runner = -INFINITY;
  for (const std::string& id : ids) {
    if (id == out.mlh.object_id) continue;
    for (double e : lm.evidence_vector(id)) runner = std::max(runner, e);
  }
  trace += "step=" + std::to_string(env_step);
  trace += " alive=" + std::to_string(alive);
  trace += " mlh=" + (out.mlh.object_id.empty() ? "-" : out.mlh.object_id);
  trace += " e=" + std::to_string(out.mlh.evidence);
  trace += " runner=";
  trace += std::isfinite(runner) ? std::to_string(runner) : "-inf";
  trace += " sym=" + std::to_string(lm.stable_steps());
  trace += "\n";
}

}  // namespace detail

inline EpisodeResult run_episode(const EpisodeSpec& spec,
                                 const ModelStore& store,
                                 const ExperimentConfig& cfg,
                                 std::string* trace = nullptr) {
  EpisodeResult res;
  res.gt_object = spec.object->id;
  res.gt_rotation = spec.pose.rotation;
  res.seed = spec.seed;

  const int n_lm = cfg.lm_count;
  const std::vector<std::string> ids = store.ids();
  std::vector<LearningModule> lms(n_lm);
  std::vector<SensorModule> sms(n_lm);
  std::vector<Rng> sensor_rngs;
  for (int i = 0; i < n_lm; ++i) {
    lms[i].lm_id = i;
    lms[i].cfg = cfg.lm;
    lms[i].attach(store);
    sms[i].noise = cfg.noise;
    sms[i].gate_cfg = cfg.gate;
    sensor_rngs.emplace_back(derive_seed(spec.seed, 1, i));
  }
  const std::vector<Rotation> offsets = detail::sensor_offsets(n_lm);
  Rng policy_rng(derive_seed(spec.seed, 0, 0));

  AgentState agent;
  if (cfg.agent == AgentKind::distant) {
    agent = detail::camera_agent(cfg.camera_distance);
  } else {
    const std::optional<AgentState> start =
        detail::surface_start(*spec.object, spec.pose, cfg.camera_distance);
    if (!start) {
      res.status = LMStatus::no_hypotheses;
      return res;
    }
    agent = *start;
  }

  DistantWalkPolicy distant_walk;
  SurfaceWalkPolicy surface_walk;
  distant_walk.cfg = cfg.policy;
  surface_walk.cfg = cfg.policy;
  GoalScheduler scheduler;
  scheduler.cfg = cfg.policy;
  const double standoff = cfg.agent == AgentKind::distant
                              ? cfg.policy.jump_standoff
                              : 0.5 * kSurfaceContactRadius;

  std::vector<LMOutput> outputs(n_lm);
  SystemDecision decision;
  RawPatch patch0;
  for (int t = 0; t < cfg.lm.max_steps; ++t) {
    for (int i = 0; i < n_lm; ++i) {
      AgentState eye = agent;
      if (i > 0) eye.orientation = compose(agent.orientation, offsets[i]);
      const RawPatch patch = sample_patch(*spec.object, spec.pose, eye);
      if (i == 0) patch0 = patch;
      if (const auto msg = sms[i].process(patch, t, sensor_rngs[i])) {
        lms[i].observe(*msg, &res.ops);
      }
    }
    ++res.env_steps;

    if (n_lm > 1) {
      // One synchronous round: all bundles are prepared from this step's
      // state before any module integrates.
      std::vector<std::vector<VoteBundle>> inbox(n_lm);
      for (int s = 0; s < n_lm; ++s) {
        if (!lms[s].last_seen_location()) continue;
        for (int r = 0; r < n_lm; ++r) {
          if (r == s || !lms[r].last_seen_location()) continue;
          inbox[r].push_back(prepare_votes(lms[s],
                                           *lms[s].last_seen_location(),
                                           *lms[r].last_seen_location(),
                                           cfg.voting));
        }
      }
      for (int r = 0; r < n_lm; ++r) {
        if (!inbox[r].empty()) {
          integrate_votes(lms[r], inbox[r], cfg.voting, &res.ops);
        }
      }
    }

    if (trace) detail::trace_step(*trace, lms[0], ids, t);

    for (int i = 0; i < n_lm; ++i) outputs[i] = lms[i].output();
    decision = system_terminal(outputs, cfg.quorum);
    if (decision.terminal) break;

    Action act;
    bool jumped = false;
    if (cfg.policy.hypothesis_testing && scheduler.armed(lms[0].steps())) {
      std::vector<GoalState> goals;
      for (int i = 0; i < n_lm; ++i) {
        if (!lms[i].last_seen_location()) continue;
        if (const auto g = hypothesis_test_goal(
                lms[i], *lms[i].last_seen_location(), cfg.policy, standoff)) {
          goals.push_back(*g);
        }
      }
      if (const auto g = select_goal(goals)) {
        act = Action::jump(g->target_location, g->target_orientation);
        scheduler.fired(lms[0].steps());
        // The surface walk keeps its last contact point: a jump that lands
        // off the object (the rival was wrong) walks back there.  The
        // distant walk only forgets its pending reversal.
        distant_walk.reset();
        jumped = true;
      }
    }
    if (!jumped) {
      act = cfg.agent == AgentKind::distant
                ? distant_walk.next(patch0.on_object, policy_rng)
                : surface_walk.next(patch0, agent, policy_rng);
    }
    agent = apply_action(agent, act);
  }

  // The deciding module: on a terminal decision, the terminal module
  // backing the decided object with the most evidence; otherwise the
  // best-effort module with the highest evidence overall.
  int decider = -1;
  if (decision.terminal) {
    for (int i = 0; i < n_lm; ++i) {
      if (outputs[i].status != LMStatus::converged &&
          outputs[i].status != LMStatus::symmetric) {
        continue;
      }
      if (outputs[i].mlh.object_id != decision.object_id) continue;
      if (decider < 0 ||
          outputs[i].mlh.evidence > outputs[decider].mlh.evidence) {
        decider = i;
      }
    }
  }
  if (decider < 0) {
    for (int i = 0; i < n_lm; ++i) {
      if (decider < 0 ||
          outputs[i].mlh.evidence > outputs[decider].mlh.evidence) {
        decider = i;
      }
    }
  }
  const LMOutput& out = outputs[decider];
  res.predicted = out.mlh.object_id;
  res.status = decision.terminal ? out.status : LMStatus::timed_out;
  res.lm_steps = lms[decider].steps();
  res.symmetry_order = out.symmetry_order;
  res.correct = !res.predicted.empty() && res.predicted == res.gt_object;
  if (res.correct) {
    res.rotation_error =
        family_rotation_error(res.gt_rotation, out.pose_family);
    const ObjectModel* model = store.find(res.predicted);
    if (model && model->size() > 0) {
      std::vector<Vec3> at_predicted, at_truth;
      at_predicted.reserve(model->size());
      at_truth.reserve(model->size());
      for (const ModelPoint& p : model->points()) {
        at_predicted.push_back(rotate(out.mlh.rotation, p.location));
        at_truth.push_back(rotate(res.gt_rotation, p.location));
      }
      res.chamfer = chamfer_distance(at_predicted, at_truth);
    }
  }
  res.object_max_evidence.reserve(ids.size());
  for (const std::string& id : ids) {
    const std::vector<double> ev = lms[0].evidence_vector(id);
    double m = -static_cast<double>(lms[0].steps()) * cfg.lm.w_miss;
    for (double e : ev) m = std::max(m, e);
    res.object_max_evidence.push_back(m);
  }
  return res;
}

// --- training -------------------------------------------------------------

namespace detail {

inline void train_object(ModelStore& store, const SyntheticObject& obj,
                         const ExperimentConfig& cfg) {
  const std::vector<Rotation> rots = learning_rotations();
  ObjectModel& model = store.get_or_create(obj.id);
  for (int ri = 0; ri < cfg.learning_rotations; ++ri) {
    EpisodePose pose;
    pose.rotation = rots[ri];
    AgentState agent = camera_agent(cfg.camera_distance);
    SensorModule sm;  // learning is noiseless; the gate still applies
    sm.gate_cfg = cfg.gate;
    Rng rng(derive_seed(cfg.seed, 9, ri));
    int t = 0;
    for (const Action& a :
         learning_trajectory(obj, agent, cfg.steps_per_rotation)) {
      agent = apply_action(agent, a);
      const RawPatch patch = sample_patch(obj, pose, agent);
      if (const auto msg = sm.process(patch, t++, rng)) {
        model.learn(*msg, pose.rotation);
      }
    }
    model.finish_episode();
  }
}

}  // namespace detail

inline ModelStore run_training(const ExperimentConfig& cfg) {
  const std::vector<SyntheticObject> lib = select_objects(cfg);
  if (lib.empty()) throw ConfigError("no objects selected");
  ModelStore store;
  for (const SyntheticObject& obj : lib) {
    detail::train_object(store, obj, cfg);
  }
  return store;
}

// --- evaluation -----------------------------------------------------------

namespace detail {

inline std::vector<Rotation> subsample(std::vector<Rotation> rots, int keep) {
  if (keep <= 0 || keep >= static_cast<int>(rots.size())) return rots;
  std::vector<Rotation> out;
  out.reserve(keep);
  const int n = static_cast<int>(rots.size());
  for (int i = 0; i < keep; ++i) out.push_back(rots[i * n / keep]);
  return out;
}

inline std::vector<Rotation> eval_rotations(const ExperimentConfig& cfg,
                                            const std::string& object_id) {
  switch (cfg.condition) {
    case EvalCondition::learned: {
      std::vector<Rotation> rots = learning_rotations();
      rots.resize(cfg.learning_rotations);
      return subsample(std::move(rots), cfg.max_eval_rotations);
    }
    case EvalCondition::novel:
      return novel_rotations(object_id, cfg.novel_count);
    case EvalCondition::random: {
      Rng rng(derive_seed(cfg.seed, 3, fnv1a(object_id)));
      std::vector<Rotation> rots;
      rots.reserve(cfg.random_count);
      for (int i = 0; i < cfg.random_count; ++i) {
        rots.push_back(
            uniform_rotation(rng.uniform(), rng.uniform(), rng.uniform()));
      }
      return rots;
    }
  }
  return {};
}

}  // namespace detail

struct EvalRun {
  std::vector<EpisodeResult> episodes;
  EvalSummary summary;
  std::vector<std::string> traces;  // one per episode when requested
};

inline EvalSummary summarize(const std::vector<EpisodeResult>& episodes) {
  EvalSummary s;
  s.episodes = static_cast<int>(episodes.size());
  std::vector<double> errors, steps;
  int converged = 0, symmetric = 0, timed_out = 0;
  for (const EpisodeResult& r : episodes) {
    if (r.correct) ++s.correct;
    if (r.rotation_error) errors.push_back(rad_to_deg(*r.rotation_error));
    steps.push_back(r.env_steps);
    if (r.status == LMStatus::converged) ++converged;
    if (r.status == LMStatus::symmetric) ++symmetric;
    if (r.status == LMStatus::timed_out) ++timed_out;
    s.ops.evidence_updates += r.ops.evidence_updates;
    s.ops.neighbor_queries += r.ops.neighbor_queries;
    s.ops.rotation_compositions += r.ops.rotation_compositions;
    s.ops.vote_integrations += r.ops.vote_integrations;
  }
  if (s.episodes > 0) {
    s.accuracy = static_cast<double>(s.correct) / s.episodes;
    s.pct_converged = 100.0 * converged / s.episodes;
    s.pct_symmetric = 100.0 * symmetric / s.episodes;
    s.pct_timed_out = 100.0 * timed_out / s.episodes;
  }
  s.median_rotation_error_deg = median_of(errors);
  if (!errors.empty()) {
    double sum = 0;
    for (double e : errors) sum += e;
    s.mean_rotation_error_deg = sum / errors.size();
  }
  if (const auto m = median_of(steps)) s.median_env_steps = *m;
  return s;
}

inline EvalRun run_eval(const ExperimentConfig& cfg, const ModelStore& store,
                        bool want_traces = false) {
  const std::vector<SyntheticObject> lib = select_objects(cfg);
  std::vector<EpisodeSpec> specs;
  for (const SyntheticObject& obj : lib) {
    for (const Rotation& r : detail::eval_rotations(cfg, obj.id)) {
      EpisodeSpec spec;
      spec.object = &obj;
      spec.pose.rotation = r;
      spec.seed = derive_seed(cfg.seed, 2, specs.size());
      specs.push_back(spec);
    }
  }
  EvalRun run;
  run.episodes.resize(specs.size());
  if (want_traces) run.traces.resize(specs.size());
  parallel_for(static_cast<int>(specs.size()), cfg.workers, [&](int i) {
    run.episodes[i] = run_episode(specs[i], store, cfg,
                                  want_traces ? &run.traces[i] : nullptr);
    run.episodes[i].episode = i;
  });
  run.summary = summarize(run.episodes);
  return run;
}

// --- continual learning ---------------------------------------------------

// Serialization of a single object's model, used for the task-locality
// byte comparison: learning object n must leave files 1..n-1 unchanged.
inline std::string serialize_object(const ModelStore& store,
                                    const std::string& id) {
  const ObjectModel* m = store.find(id);
  if (!m) throw std::invalid_argument("serialize_object: unknown id " + id);
  ModelStore one;
  ObjectModel& copy = one.get_or_create(id);
  copy.thresholds = m->thresholds;
  copy.restore(m->anchor(), m->anchored(), m->points());
  return one.serialize();
}

struct ContinualResult {
  std::vector<std::string> objects;                 // task order
  std::vector<std::vector<double>> accuracy;        // row t: objects 0..t
  std::vector<std::vector<std::string>> snapshots;  // row t: models 0..t
  ModelStore store;
};

inline ContinualResult run_continual(const ExperimentConfig& cfg) {
  const std::vector<SyntheticObject> lib = select_objects(cfg);
  if (lib.empty()) throw ConfigError("no objects selected");
  ContinualResult out;
  const std::vector<Rotation> probes = detail::subsample(
      [&] {
        std::vector<Rotation> r = learning_rotations();
        r.resize(cfg.learning_rotations);
        return r;
      }(),
      cfg.continual_eval_rotations);
  const int n_probe = static_cast<int>(probes.size());

  for (std::size_t task = 0; task < lib.size(); ++task) {
    detail::train_object(out.store, lib[task], cfg);
    out.objects.push_back(lib[task].id);

    std::vector<std::string> row_bytes;
    for (std::size_t j = 0; j <= task; ++j) {
      row_bytes.push_back(serialize_object(out.store, lib[j].id));
    }
    out.snapshots.push_back(std::move(row_bytes));

    // Episode seeds depend on the object and probe alone, never the task,
    // so a later store with identical bytes replays identical episodes.
    std::vector<EpisodeSpec> specs;
    for (std::size_t j = 0; j <= task; ++j) {
      for (int r = 0; r < n_probe; ++r) {
        EpisodeSpec spec;
        spec.object = &lib[j];
        spec.pose.rotation = probes[r];
        spec.seed = derive_seed(cfg.seed, 4,
                                static_cast<std::uint64_t>(j) * 1000 + r);
        specs.push_back(spec);
      }
    }
    std::vector<EpisodeResult> results(specs.size());
    parallel_for(static_cast<int>(specs.size()), cfg.workers, [&](int i) {
      results[i] = run_episode(specs[i], out.store, cfg);
    });
    std::vector<double> row_acc;
    for (std::size_t j = 0; j <= task; ++j) {
      int hit = 0;
      for (int r = 0; r < n_probe; ++r) {
        if (results[j * n_probe + r].correct) ++hit;
      }
      row_acc.push_back(static_cast<double>(hit) / n_probe);
    }
    out.accuracy.push_back(std::move(row_acc));
  }
  return out;
}

// --- rapid learning -------------------------------------------------------

struct RapidPoint {
  int rotations = 0;
  double accuracy = 0;
  std::optional<double> median_rotation_error_deg;
  double median_env_steps = 0;
};

inline std::vector<RapidPoint> run_rapid_learning(
    const ExperimentConfig& cfg) {
  if (cfg.rapid_counts.empty()) {
    throw std::invalid_argument("rapid: no rotation counts given");
  }
  for (int c : cfg.rapid_counts) {
    if (c < 1) {
      throw std::invalid_argument(
          "rapid: training needs at least one rotation");
    }
    if (c > 14) throw std::invalid_argument("rapid: at most 14 rotations");
  }
  std::vector<RapidPoint> curve;
  for (int count : cfg.rapid_counts) {
    ExperimentConfig c = cfg;
    c.learning_rotations = count;
    c.condition = EvalCondition::novel;
    const ModelStore store = run_training(c);
    const EvalRun run = run_eval(c, store);
    RapidPoint p;
    p.rotations = count;
    p.accuracy = run.summary.accuracy;
    p.median_rotation_error_deg = run.summary.median_rotation_error_deg;
    p.median_env_steps = run.summary.median_env_steps;
    curve.push_back(p);
  }
  return curve;
}

// --- evidence similarity --------------------------------------------------

struct SimilarityResult {
  std::vector<std::string> objects;
  std::vector<std::vector<double>> matrix;  // Pearson correlation
};

namespace detail {

inline double correlation(const std::vector<double>& a,
                          const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va <= 0 || vb <= 0) return &a == &b ? 1.0 : 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace detail

// Signature of an object = its episodes' per-object maximum evidence,
// averaged; the matrix correlates signatures pairwise.
inline SimilarityResult similarity_matrix(const ExperimentConfig& cfg,
                                          const ModelStore& store) {
  ExperimentConfig c = cfg;
  c.condition = EvalCondition::learned;
  if (c.max_eval_rotations == 0) c.max_eval_rotations = 4;
  const EvalRun run = run_eval(c, store);

  const std::vector<SyntheticObject> lib = select_objects(cfg);
  SimilarityResult out;
  const std::size_t dim = store.ids().size();
  std::vector<std::vector<double>> signatures;
  for (const SyntheticObject& obj : lib) {
    out.objects.push_back(obj.id);
    std::vector<double> sig(dim, 0.0);
    int count = 0;
    for (const EpisodeResult& r : run.episodes) {
      if (r.gt_object != obj.id) continue;
      if (r.object_max_evidence.size() != dim) continue;
      for (std::size_t k = 0; k < dim; ++k) sig[k] += r.object_max_evidence[k];
      ++count;
    }
    if (count > 0) {
      for (double& v : sig) v /= count;
    }
    signatures.push_back(std::move(sig));
  }
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < signatures.size(); ++j) {
      row.push_back(i == j ? 1.0
                           : detail::correlation(signatures[i],
                                                 signatures[j]));
    }
    out.matrix.push_back(std::move(row));
  }
  return out;
}

// --- result files ---------------------------------------------------------

// Result files are versioned, carry no timestamps, and order their keys
// deterministically (alphabetically), so identical runs write identical
// bytes.

inline nlohmann::json ops_json(const OpCounter& ops) {
  return {{"evidence_updates", ops.evidence_updates},
          {"neighbor_queries", ops.neighbor_queries},
          {"rotation_compositions", ops.rotation_compositions},
          {"vote_integrations", ops.vote_integrations}};
}

inline nlohmann::json episode_json(const EpisodeResult& r) {
  nlohmann::json j{
      {"schema", "sensorium-episode-v1"},
      {"episode", r.episode},
      {"gt_object", r.gt_object},
      {"gt_rotation", {r.gt_rotation.w, r.gt_rotation.x, r.gt_rotation.y,
                       r.gt_rotation.z}},
      {"seed", r.seed},
      {"predicted", r.predicted},
      {"status", to_string(r.status)},
      {"correct", r.correct},
      {"env_steps", r.env_steps},
      {"lm_steps", r.lm_steps},
      {"symmetry_order", r.symmetry_order},
      {"ops", ops_json(r.ops)}};
  j["rotation_error_deg"] =
      r.rotation_error ? nlohmann::json(rad_to_deg(*r.rotation_error))
                       : nlohmann::json(nullptr);
  j["chamfer"] = r.chamfer ? nlohmann::json(*r.chamfer)
                           : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json summary_json(const EvalSummary& s,
                                   const ExperimentConfig& cfg) {
  nlohmann::json j{{"schema", "sensorium-summary-v1"},
                   {"condition", to_string(cfg.condition)},
                   {"seed", cfg.seed},
                   {"episodes", s.episodes},
                   {"correct", s.correct},
                   {"accuracy", s.accuracy},
                   {"median_env_steps", s.median_env_steps},
                   {"pct_converged", s.pct_converged},
                   {"pct_symmetric", s.pct_symmetric},
                   {"pct_timed_out", s.pct_timed_out},
                   {"ops", ops_json(s.ops)}};
  j["median_rotation_error_deg"] =
      s.median_rotation_error_deg
          ? nlohmann::json(*s.median_rotation_error_deg)
          : nlohmann::json(nullptr);
  j["mean_rotation_error_deg"] =
      s.mean_rotation_error_deg ? nlohmann::json(*s.mean_rotation_error_deg)
                                : nlohmann::json(nullptr);
  return j;
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string results_jsonl(const std::vector<EpisodeResult>& episodes) {
  std::string out;
  for (const EpisodeResult& r : episodes) {
    out += episode_json(r).dump();
    out += '\n';
  }
  return out;
}

inline std::string matrix_csv(const std::vector<std::string>& objects,
                              const std::vector<std::vector<double>>& rows) {
  std::string out = "object";
  for (const std::string& id : objects) out += "," + id;
  out += "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += objects[i];
    for (double v : rows[i]) {
      out += ",";
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace sensorium

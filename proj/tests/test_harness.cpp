#include "sensorium/harness.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "sensorium/config.hpp"
#include "sensorium/env.hpp"
#include "sensorium/geom.hpp"

namespace sensorium {
namespace {

ExperimentConfig pair_cfg() {
  ExperimentConfig cfg;
  cfg.objects = {"mug", "cup"};
  cfg.steps_per_rotation = 150;
  cfg.max_eval_rotations = 3;
  cfg.seed = 11;
  return cfg;
}

const ModelStore& pair_store() {
  static const ModelStore store = run_training(pair_cfg());
  return store;
}

TEST(Config, empty_json_yields_defaults) {
  const ExperimentConfig cfg = parse_config(nlohmann::json::object());
  EXPECT_TRUE(cfg.objects.empty());
  EXPECT_EQ(cfg.learning_rotations, 14);
  EXPECT_EQ(cfg.steps_per_rotation, 200);
  EXPECT_EQ(cfg.condition, EvalCondition::learned);
  EXPECT_EQ(cfg.agent, AgentKind::surface);
  EXPECT_TRUE(cfg.policy.hypothesis_testing);
  EXPECT_EQ(cfg.lm_count, 1);
  EXPECT_EQ(cfg.quorum, 1);
  EXPECT_EQ(cfg.seed, 0u);
  EXPECT_FALSE(cfg.noise.any());
}

TEST(Config, rejects_unknown_and_invalid) {
  EXPECT_THROW(parse_config({{"objcts", nlohmann::json::array()}}),
               ConfigError);
  EXPECT_THROW(parse_config({{"eval", {{"condition", "sideways"}}}}),
               ConfigError);
  EXPECT_THROW(parse_config({{"modules", {{"count", 2}, {"quorum", 3}}}}),
               ConfigError);
  EXPECT_THROW(parse_config({{"learning", {{"rotations", 0}}}}), ConfigError);
  // Multiple modules need the distant sensor rig.
  EXPECT_THROW(parse_config({{"modules", {{"count", 2}, {"quorum", 2}}}}),
               ConfigError);
  EXPECT_NO_THROW(parse_config({{"modules", {{"count", 2}, {"quorum", 2}}},
                                {"agent", {{"kind", "distant"}}}}));
}

TEST(Config, noise_block_fills_every_field) {
  const ExperimentConfig cfg = parse_config(
      {{"noise",
        {{"location_noise", 0.002},
         {"pose_vector_noise", 2.0},
         {"hue_noise", 0.1},
         {"curvature_log_noise", 0.1},
         {"non_unique_pose", 0.01}}}});
  EXPECT_EQ(cfg.noise.location_noise, 0.002);
  EXPECT_EQ(cfg.noise.pose_vector_noise, 2.0);
  EXPECT_EQ(cfg.noise.hue_noise, 0.1);
  EXPECT_EQ(cfg.noise.curvature_log_noise, 0.1);
  EXPECT_EQ(cfg.noise.non_unique_pose, 0.01);
  EXPECT_FALSE(cfg.noise.new_color);
  EXPECT_TRUE(cfg.noise.any());
}

TEST(Rotations, fourteen_views_face_the_camera) {
  const std::vector<Rotation> rots = learning_rotations();
  ASSERT_EQ(rots.size(), 14u);
  std::vector<Vec3> dirs{{0, 0, 1},  {0, 0, -1}, {1, 0, 0},
                         {-1, 0, 0}, {0, 1, 0},  {0, -1, 0}};
  for (double sx : {1.0, -1.0}) {
    for (double sy : {1.0, -1.0}) {
      for (double sz : {1.0, -1.0}) dirs.push_back(Vec3{sx, sy, sz});
    }
  }
  for (std::size_t i = 0; i < rots.size(); ++i) {
    const Vec3 faced = rotate(rots[i], normalized(dirs[i]));
    EXPECT_NEAR(faced.x, 0, 1e-12);
    EXPECT_NEAR(faced.y, 0, 1e-12);
    EXPECT_NEAR(faced.z, 1, 1e-12);
  }
  EXPECT_NEAR(geodesic_distance(rots[0], Rotation{}), 0, 1e-12);
  for (std::size_t i = 0; i < rots.size(); ++i) {
    for (std::size_t j = i + 1; j < rots.size(); ++j) {
      EXPECT_GT(geodesic_distance(rots[i], rots[j]), 1e-6);
    }
  }
}

TEST(Rotations, novel_views_avoid_the_training_set) {
  const std::vector<Rotation> novel = novel_rotations("mug", 5);
  ASSERT_EQ(novel.size(), 5u);
  const std::vector<Rotation> again = novel_rotations("mug", 5);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(novel[i].w, again[i].w);
    EXPECT_EQ(novel[i].x, again[i].x);
  }
  const std::vector<Rotation> train = learning_rotations();
  for (const Rotation& r : novel) {
    double sep = M_PI;
    for (const Rotation& t : train) {
      sep = std::min(sep, geodesic_distance(r, t));
    }
    EXPECT_GT(sep, deg_to_rad(20));
  }
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) {
      EXPECT_GT(geodesic_distance(novel[i], novel[j]), deg_to_rad(10));
    }
  }
}

TEST(Training, single_step_stores_a_point) {
  ExperimentConfig cfg;
  cfg.objects = {"sphere"};
  cfg.learning_rotations = 1;
  cfg.steps_per_rotation = 1;
  const ModelStore store = run_training(cfg);
  ASSERT_EQ(store.size(), 1);
  const ObjectModel* m = store.find("sphere");
  ASSERT_NE(m, nullptr);
  EXPECT_GE(m->size(), 1);
}

TEST(Training, same_seed_is_bit_identical) {
  ExperimentConfig cfg;
  cfg.objects = {"cup", "box_red"};
  cfg.learning_rotations = 3;
  cfg.steps_per_rotation = 60;
  cfg.seed = 5;
  const std::string a = run_training(cfg).serialize();
  const std::string b = run_training(cfg).serialize();
  EXPECT_EQ(a, b);
}

TEST(Eval, learned_views_recognized_with_tight_pose) {
  const ExperimentConfig cfg = pair_cfg();
  const EvalRun run = run_eval(cfg, pair_store());
  ASSERT_EQ(run.episodes.size(), 6u);  // 2 objects x 3 subsampled views
  for (const EpisodeResult& r : run.episodes) {
    EXPECT_TRUE(r.correct) << r.gt_object << " -> " << r.predicted;
  }
  EXPECT_EQ(run.summary.accuracy, 1.0);
  ASSERT_TRUE(run.summary.median_rotation_error_deg.has_value());
  EXPECT_LT(*run.summary.median_rotation_error_deg, 2.0);
  EXPECT_EQ(run.summary.pct_timed_out, 0.0);
}

TEST(Eval, identical_runs_write_identical_bytes) {
  const ExperimentConfig cfg = pair_cfg();
  const EvalRun a = run_eval(cfg, pair_store());
  const EvalRun b = run_eval(cfg, pair_store());
  EXPECT_EQ(results_jsonl(a.episodes), results_jsonl(b.episodes));
  EXPECT_EQ(summary_json(a.summary, cfg).dump(2),
            summary_json(b.summary, cfg).dump(2));
}

TEST(Eval, rotation_error_only_recorded_when_correct) {
  // Episodes on an object the store has never learned cannot be credited,
  // so no pose error may be recorded for them.
  ExperimentConfig cfg = pair_cfg();
  cfg.objects = {"torus"};
  cfg.max_eval_rotations = 2;
  const EvalRun run = run_eval(cfg, pair_store());
  ASSERT_EQ(run.episodes.size(), 2u);
  for (const EpisodeResult& r : run.episodes) {
    EXPECT_FALSE(r.correct);
    EXPECT_FALSE(r.rotation_error.has_value());
    EXPECT_FALSE(r.chamfer.has_value());
  }
  EXPECT_EQ(run.summary.accuracy, 0.0);
  EXPECT_FALSE(run.summary.median_rotation_error_deg.has_value());
}

TEST(Episode, bitwise_deterministic_and_traced) {
  const ExperimentConfig cfg = pair_cfg();
  const std::vector<SyntheticObject> lib = select_objects(cfg);
  EpisodeSpec spec;
  spec.object = &lib[0];
  spec.pose.rotation = learning_rotations()[2];
  spec.seed = derive_seed(cfg.seed, 2, 0);
  std::string trace_a, trace_b;
  const EpisodeResult a = run_episode(spec, pair_store(), cfg, &trace_a);
  const EpisodeResult b = run_episode(spec, pair_store(), cfg, &trace_b);
  EXPECT_EQ(a.predicted, b.predicted);
  EXPECT_EQ(a.env_steps, b.env_steps);
  EXPECT_EQ(a.lm_steps, b.lm_steps);
  EXPECT_EQ(a.ops.evidence_updates, b.ops.evidence_updates);
  EXPECT_EQ(a.ops.neighbor_queries, b.ops.neighbor_queries);
  ASSERT_EQ(a.object_max_evidence.size(), b.object_max_evidence.size());
  for (std::size_t i = 0; i < a.object_max_evidence.size(); ++i) {
    EXPECT_EQ(a.object_max_evidence[i], b.object_max_evidence[i]);
  }
  EXPECT_EQ(trace_a, trace_b);
  EXPECT_NE(trace_a.find("step=0 "), std::string::npos);
  EXPECT_EQ(std::count(trace_a.begin(), trace_a.end(), '\n'), a.env_steps);
}

TEST(Episode, paired_modules_vote_and_agree) {
  ExperimentConfig cfg;
  cfg.objects = {"box_red", "sphere"};
  cfg.learning_rotations = 6;
  cfg.steps_per_rotation = 100;
  cfg.agent = AgentKind::distant;
  cfg.lm_count = 2;
  cfg.quorum = 2;
  cfg.seed = 3;
  const ModelStore store = run_training(cfg);
  const std::vector<SyntheticObject> lib = select_objects(cfg);
  EpisodeSpec spec;
  spec.object = &lib[0];
  spec.pose.rotation = learning_rotations()[0];
  spec.seed = derive_seed(cfg.seed, 2, 0);
  const EpisodeResult r = run_episode(spec, store, cfg);
  EXPECT_EQ(r.predicted, "box_red");
  EXPECT_TRUE(r.correct);
  EXPECT_GT(r.ops.vote_integrations, 0);
  EXPECT_NE(r.status, LMStatus::timed_out);
}

TEST(Continual, single_task_is_perfectly_recognized) {
  ExperimentConfig cfg;
  cfg.objects = {"mug"};
  cfg.learning_rotations = 6;
  cfg.steps_per_rotation = 150;
  cfg.continual_eval_rotations = 2;
  cfg.seed = 17;
  const ContinualResult r = run_continual(cfg);
  ASSERT_EQ(r.accuracy.size(), 1u);
  ASSERT_EQ(r.accuracy[0].size(), 1u);
  EXPECT_EQ(r.accuracy[0][0], 1.0);
  EXPECT_EQ(r.objects, std::vector<std::string>{"mug"});
}

TEST(Continual, later_tasks_leave_earlier_models_untouched) {
  ExperimentConfig cfg;
  cfg.objects = {"mug", "cup", "box_red"};
  cfg.learning_rotations = 4;
  cfg.steps_per_rotation = 80;
  cfg.continual_eval_rotations = 2;
  cfg.seed = 23;
  const ContinualResult r = run_continual(cfg);
  ASSERT_EQ(r.snapshots.size(), 3u);
  for (std::size_t task = 0; task < r.snapshots.size(); ++task) {
    ASSERT_EQ(r.snapshots[task].size(), task + 1);
    for (std::size_t j = 0; j < task; ++j) {
      EXPECT_EQ(r.snapshots[task][j], r.snapshots[j][j])
          << "task " << task << " modified model " << j;
    }
  }
}

TEST(Rapid, rejects_untrainable_counts) {
  ExperimentConfig cfg;
  cfg.objects = {"sphere"};
  cfg.rapid_counts = {0};
  EXPECT_THROW(run_rapid_learning(cfg), std::invalid_argument);
  cfg.rapid_counts = {};
  EXPECT_THROW(run_rapid_learning(cfg), std::invalid_argument);
  cfg.rapid_counts = {15};
  EXPECT_THROW(run_rapid_learning(cfg), std::invalid_argument);
}

TEST(Similarity, diagonal_unity_and_symmetric) {
  ExperimentConfig cfg;
  cfg.objects = {"mug", "cup", "box_red"};
  cfg.learning_rotations = 4;
  cfg.steps_per_rotation = 80;
  cfg.max_eval_rotations = 2;
  cfg.seed = 29;
  const ModelStore store = run_training(cfg);
  const SimilarityResult sim = similarity_matrix(cfg, store);
  ASSERT_EQ(sim.objects.size(), 3u);
  ASSERT_EQ(sim.matrix.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(sim.matrix[i][i], 1.0);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(sim.matrix[i][j], sim.matrix[j][i], 1e-12);
      EXPECT_LE(std::abs(sim.matrix[i][j]), 1.0 + 1e-12);
    }
  }
}

TEST(ResultFiles, jsonl_has_one_line_per_episode_with_nulls) {
  EpisodeResult r;
  r.episode = 0;
  r.gt_object = "mug";
  r.predicted = "cup";
  r.status = LMStatus::converged;
  EpisodeResult ok = r;
  ok.episode = 1;
  ok.predicted = "mug";
  ok.correct = true;
  ok.rotation_error = deg_to_rad(1.5);
  ok.chamfer = 0.001;
  const std::string text = results_jsonl({r, ok});
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  EXPECT_TRUE(first.at("rotation_error_deg").is_null());
  EXPECT_TRUE(first.at("chamfer").is_null());
  const auto second =
      nlohmann::json::parse(text.substr(text.find('\n') + 1));
  EXPECT_NEAR(second.at("rotation_error_deg").get<double>(), 1.5, 1e-12);
}

TEST(ResultFiles, matrix_csv_layout) {
  const std::string csv =
      matrix_csv({"a", "b"}, {{1.0}, {0.5, 1.0}});
  EXPECT_EQ(csv, "object,a,b\na,1\nb,0.5,1\n");
}

TEST(Workers, parallel_for_visits_every_index_once) {
  std::vector<std::atomic<int>> hits(257);
  for (auto& h : hits) h = 0;
  parallel_for(257, 0, [&](int i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(
      parallel_for(64, 4,
                   [&](int i) {
                     if (i == 31) throw std::runtime_error("boom");
                   }),
      std::runtime_error);
}

}  // namespace
}  // namespace sensorium

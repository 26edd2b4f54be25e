#include "sensorium/voting.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "sensorium/cmp.hpp"
#include "sensorium/geom.hpp"
#include "sensorium/lm.hpp"
#include "sensorium/model.hpp"

namespace sensorium {
namespace {

// A module with hand-planted hypotheses; the store only needs ids.
LearningModule module_with(
    ModelStore& store, int lm_id,
    const std::vector<std::pair<std::string, Hypothesis>>& hyps) {
  LearningModule lm;
  lm.lm_id = lm_id;
  lm.attach(store);
  for (auto& [id, h] : hyps) {
    for (ObjectHypotheses& o : lm.objects) {
      if (o.object_id == id) o.hyps.push_back(h);
    }
  }
  return lm;
}

ModelStore two_object_store() {
  ModelStore store;
  std::vector<ModelPoint> pts(1);
  pts[0].location = {0, 0, 0};
  store.get_or_create("a").restore({0, 0, 0}, true, pts);
  store.get_or_create("b").restore({0, 0, 0}, true, pts);
  return store;
}

TEST(PrepareVotes, zero_displacement_identity_votes_in_place) {
  ModelStore store = two_object_store();
  Hypothesis h;
  h.rotation = Rotation{};
  h.location = {0.02, -0.01, 0.05};
  h.evidence = 3.0;
  LearningModule lm = module_with(store, 0, {{"a", h}});
  const VoteBundle b =
      prepare_votes(lm, {0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}, VotingConfig{});
  ASSERT_EQ(b.votes.size(), 1u);
  EXPECT_EQ(b.votes[0].location.x, h.location.x);
  EXPECT_EQ(b.votes[0].location.y, h.location.y);
  EXPECT_EQ(b.votes[0].location.z, h.location.z);
}

TEST(PrepareVotes, displacement_is_mapped_through_the_inverse_rotation) {
  ModelStore store = two_object_store();
  Hypothesis h;
  h.rotation = Rotation::from_axis_angle({0, 0, 1}, deg_to_rad(90));
  h.location = {0, 0, 0};
  h.evidence = 1.0;
  LearningModule lm = module_with(store, 0, {{"a", h}});
  const VoteBundle b =
      prepare_votes(lm, {0, 0, 0}, {0.1, 0, 0}, VotingConfig{});
  ASSERT_EQ(b.votes.size(), 1u);
  EXPECT_NEAR(b.votes[0].location.x, 0.0, 1e-12);
  EXPECT_NEAR(b.votes[0].location.y, -0.1, 1e-12);
  EXPECT_NEAR(b.votes[0].location.z, 0.0, 1e-12);
}

TEST(PrepareVotes, flat_evidence_normalizes_to_zero_and_still_sends) {
  ModelStore store = two_object_store();
  Hypothesis h;
  h.evidence = 2.5;
  LearningModule lm = module_with(store, 0, {{"a", h}, {"a", h}, {"b", h}});
  const VoteBundle b = prepare_votes(lm, {0, 0, 0}, {0, 0, 0}, VotingConfig{});
  ASSERT_EQ(b.votes.size(), 3u);
  for (const Vote& v : b.votes) EXPECT_EQ(v.evidence, 0.0);
}

TEST(PrepareVotes, send_slice_and_normalization_are_exact) {
  ModelStore store = two_object_store();
  Hypothesis a0, a1, a2, b0, b1;
  a0.evidence = 0.0;
  a1.evidence = 5.0;
  a2.evidence = 10.0;
  b0.evidence = 4.0;
  b1.evidence = 6.0;
  a0.location = {1, 0, 0};
  a1.location = {2, 0, 0};
  a2.location = {3, 0, 0};
  LearningModule lm = module_with(
      store, 0, {{"a", a0}, {"a", a1}, {"a", a2}, {"b", b0}, {"b", b1}});
  const VoteBundle b = prepare_votes(lm, {0, 0, 0}, {0, 0, 0}, VotingConfig{});
  // Object a: range [0,10], slice cut at 8 keeps only the 10.  Object b:
  // range [4,6], cut at 5.6 keeps only the 6.  Normalization is over the
  // sender's global range [0,10].
  ASSERT_EQ(b.votes.size(), 2u);
  EXPECT_EQ(b.votes[0].object_id, "a");
  EXPECT_EQ(b.votes[0].evidence, 1.0);
  EXPECT_EQ(b.votes[0].location.x, 3.0);
  EXPECT_EQ(b.votes[1].object_id, "b");
  EXPECT_NEAR(b.votes[1].evidence, 0.2, 1e-12);
  for (const Vote& v : b.votes) {
    EXPECT_GE(v.evidence, -1.0);
    EXPECT_LE(v.evidence, 1.0);
  }
}

TEST(PrepareVotes, correct_hypothesis_votes_the_receivers_true_location) {
  // Two sensors on one object: if the sender's pose hypothesis is right,
  // its vote must land exactly where the receiver really is in the model.
  ModelStore store = two_object_store();
  const Rotation pose = Rotation::from_axis_angle({0.3, -0.5, 0.8}, 1.1);
  const Location xs{0.01, 0.02, 0.03};
  const Location xr{-0.02, 0.05, 0.00};
  const Location body_s{0.3, -0.1, 0.2};
  const Location body_r = body_s + rotate(pose, xr - xs);
  Hypothesis h;
  h.rotation = pose;
  h.location = xs;
  h.evidence = 1.0;
  LearningModule lm = module_with(store, 0, {{"a", h}});
  const VoteBundle b = prepare_votes(lm, body_s, body_r, VotingConfig{});
  ASSERT_EQ(b.votes.size(), 1u);
  EXPECT_NEAR(norm(b.votes[0].location - xr), 0.0, 1e-9);
}

VoteBundle bundle_of(int sender, const std::string& id, const Location& at,
                     double evidence) {
  VoteBundle b;
  b.sender_lm = sender;
  Vote v;
  v.object_id = id;
  v.location = at;
  v.evidence = evidence;
  b.votes.push_back(v);
  return b;
}

TEST(IntegrateVotes, kernel_peak_support_and_sign) {
  ModelStore store = two_object_store();
  Hypothesis h;
  h.location = {0.05, 0, 0};
  h.evidence = 2.0;
  VotingConfig cfg;

  LearningModule lm = module_with(store, 1, {{"a", h}});
  integrate_votes(lm, {bundle_of(0, "a", {0.05, 0, 0}, 1.0)}, cfg);
  EXPECT_NEAR(lm.objects[0].hyps[0].evidence, 2.0 + cfg.w_vote, 1e-12);

  lm = module_with(store, 1, {{"a", h}});
  integrate_votes(
      lm, {bundle_of(0, "a", {0.05 + 0.5 * cfg.r_vote, 0, 0}, 1.0)}, cfg);
  EXPECT_NEAR(lm.objects[0].hyps[0].evidence, 2.0 + 0.5 * cfg.w_vote, 1e-9);

  lm = module_with(store, 1, {{"a", h}});
  integrate_votes(lm, {bundle_of(0, "a", {0.05 + cfg.r_vote, 0, 0}, 1.0)},
                  cfg);
  EXPECT_EQ(lm.objects[0].hyps[0].evidence, 2.0);

  // Negative vote evidence subtracts inside the kernel.
  lm = module_with(store, 1, {{"a", h}});
  integrate_votes(lm, {bundle_of(0, "a", {0.05, 0, 0}, -1.0)}, cfg);
  EXPECT_NEAR(lm.objects[0].hyps[0].evidence, 2.0 - cfg.w_vote, 1e-12);
}

TEST(IntegrateVotes, object_ids_must_match) {
  ModelStore store = two_object_store();
  Hypothesis h;
  h.location = {0, 0, 0};
  h.evidence = 1.0;
  LearningModule lm = module_with(store, 1, {{"a", h}});
  integrate_votes(lm, {bundle_of(0, "b", {0, 0, 0}, 1.0)}, VotingConfig{});
  EXPECT_EQ(lm.objects[0].hyps[0].evidence, 1.0);
}

TEST(IntegrateVotes, own_bundle_is_ignored) {
  ModelStore store = two_object_store();
  Hypothesis h;
  h.location = {0, 0, 0};
  h.evidence = 1.0;
  LearningModule lm = module_with(store, 1, {{"a", h}});
  integrate_votes(lm, {bundle_of(1, "a", {0, 0, 0}, 1.0)}, VotingConfig{});
  EXPECT_EQ(lm.objects[0].hyps[0].evidence, 1.0);
}

TEST(IntegrateVotes, only_evidence_changes) {
  ModelStore store = two_object_store();
  Hypothesis h1, h2;
  h1.rotation = Rotation::from_axis_angle({0, 1, 0}, 0.7);
  h1.location = {0.01, 0.02, 0.03};
  h2.rotation = Rotation::from_axis_angle({1, 0, 0}, -0.4);
  h2.location = {-0.01, 0.0, 0.02};
  LearningModule lm = module_with(store, 1, {{"a", h1}, {"b", h2}});
  integrate_votes(lm,
                  {bundle_of(0, "a", {0.01, 0.02, 0.03}, 0.5),
                   bundle_of(2, "b", {-0.01, 0.0, 0.02}, -0.25)},
                  VotingConfig{});
  ASSERT_EQ(lm.objects[0].hyps.size(), 1u);
  ASSERT_EQ(lm.objects[1].hyps.size(), 1u);
  EXPECT_EQ(lm.objects[0].hyps[0].location.x, h1.location.x);
  EXPECT_EQ(lm.objects[0].hyps[0].rotation.x, h1.rotation.x);
  EXPECT_EQ(lm.objects[1].hyps[0].rotation.x, h2.rotation.x);
  EXPECT_NE(lm.objects[0].hyps[0].evidence, h1.evidence);
  EXPECT_NE(lm.objects[1].hyps[0].evidence, h2.evidence);
}

TEST(IntegrateVotes, agreement_beats_disagreement_across_modules) {
  // The sender strongly favors object a and barely entertains b, both at
  // locations matching the receiver's hypotheses.  After one round the
  // receiver's a hypothesis is reinforced and its b hypothesis suppressed.
  ModelStore store = two_object_store();
  Hypothesis sa, sb, ra, rb;
  sa.location = {0.02, 0, 0};
  sa.evidence = 9.0;
  sb.location = {0.02, 0, 0};
  sb.evidence = 1.0;
  ra.location = {0.02, 0, 0};
  ra.evidence = 4.0;
  rb.location = {0.02, 0, 0};
  rb.evidence = 4.0;
  LearningModule sender = module_with(store, 0, {{"a", sa}, {"b", sb}});
  LearningModule receiver = module_with(store, 1, {{"a", ra}, {"b", rb}});
  const VotingConfig cfg;
  const VoteBundle b = prepare_votes(sender, {0, 0, 0}, {0, 0, 0}, cfg);
  integrate_votes(receiver, {b}, cfg);
  const double gain_a = receiver.objects[0].hyps[0].evidence - ra.evidence;
  const double gain_b = receiver.objects[1].hyps[0].evidence - rb.evidence;
  EXPECT_GT(gain_a, gain_b);
  EXPECT_NEAR(gain_a, cfg.w_vote, 1e-12);
  EXPECT_NEAR(gain_b, -cfg.w_vote, 1e-12);
}

TEST(IntegrateVotes, counter_tallies_each_applied_vote) {
  ModelStore store = two_object_store();
  Hypothesis h;
  h.location = {0, 0, 0};
  LearningModule lm = module_with(store, 1, {{"a", h}, {"a", h}});
  OpCounter ops;
  integrate_votes(lm, {bundle_of(0, "a", {0, 0, 0}, 1.0)}, VotingConfig{},
                  &ops);
  EXPECT_EQ(ops.vote_integrations, 2);
}

LMOutput out_of(LMStatus s, const std::string& id, double evidence) {
  LMOutput o;
  o.status = s;
  o.mlh.object_id = id;
  o.mlh.evidence = evidence;
  return o;
}

TEST(SystemTermination, quorum_rules) {
  const LMOutput conv = out_of(LMStatus::converged, "mug", 20);
  const LMOutput expl = out_of(LMStatus::exploring, "cup", 5);
  EXPECT_TRUE(system_terminal({conv}, 1).terminal);
  EXPECT_FALSE(system_terminal({conv, expl}, 2).terminal);
  EXPECT_FALSE(system_terminal({expl, expl}, 1).terminal);

  const SystemDecision d = system_terminal(
      {conv, out_of(LMStatus::converged, "mug", 18),
       out_of(LMStatus::converged, "cup", 30), expl},
      2);
  EXPECT_TRUE(d.terminal);
  EXPECT_EQ(d.terminal_count, 3);
  EXPECT_EQ(d.object_id, "mug");
}

TEST(SystemTermination, symmetric_counts_timeout_does_not) {
  const LMOutput sym = out_of(LMStatus::symmetric, "cylinder", 12);
  const LMOutput timed = out_of(LMStatus::timed_out, "box_red", 50);
  const SystemDecision d = system_terminal({sym, timed}, 1);
  EXPECT_TRUE(d.terminal);
  EXPECT_EQ(d.terminal_count, 1);
  EXPECT_EQ(d.object_id, "cylinder");
}

TEST(SystemTermination, ties_break_by_summed_evidence) {
  const SystemDecision d = system_terminal(
      {out_of(LMStatus::converged, "fork", 10),
       out_of(LMStatus::converged, "spoon", 11),
       out_of(LMStatus::converged, "fork", 2),
       out_of(LMStatus::converged, "spoon", 3)},
      2);
  EXPECT_TRUE(d.terminal);
  EXPECT_EQ(d.object_id, "spoon");  // 14 beats 12 on the 2-2 count tie
}

}  // namespace
}  // namespace sensorium

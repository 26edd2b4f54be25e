#pragma once

// Lateral voting between learning modules.  Each sender shares its
// strongest hypotheses, translated into the receiver's position on the
// object by the instantaneous sensor separation; receivers add evidence
// to their own hypotheses in proportion to how close an incoming vote
// lands.  Votes only ever adjust evidence, never create or delete
// hypotheses.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "sensorium/cmp.hpp"
#include "sensorium/geom.hpp"
#include "sensorium/kdtree.hpp"
#include "sensorium/lm.hpp"
#include "sensorium/ops.hpp"

namespace sensorium {

struct VotingConfig {
  double r_vote = 0.015;       // kernel support radius, meters
  double w_vote = 1.0;         // weight of a perfectly placed vote
  double send_fraction = 0.2;  // top slice of the evidence range shared
};

struct VoteBundle {
  int sender_lm = 0;
  Location sender_location;  // body frame, for bookkeeping and traces
  std::vector<Vote> votes;
};

// Builds the votes one sender contributes toward one receiver.  d_t is
// the current body-frame separation of the two sensors; each hypothesis
// maps it into its own model frame to predict where the receiver sits on
// the object if this hypothesis is right.
inline VoteBundle prepare_votes(const LearningModule& sender,
                                const Location& sender_location,
                                const Location& receiver_location,
                                const VotingConfig& cfg) {
  VoteBundle bundle;
  bundle.sender_lm = sender.lm_id;
  bundle.sender_location = sender_location;
  const Displacement d_t = receiver_location - sender_location;

  // Affine normalization of evidence onto [-1, 1] over the sender's full
  // range; a flat range carries no information and maps to 0.
  double e_min = INFINITY, e_max = -INFINITY;
  for (const ObjectHypotheses& o : sender.objects) {
    for (const Hypothesis& h : o.hyps) {
      e_min = std::min(e_min, h.evidence);
      e_max = std::max(e_max, h.evidence);
    }
  }
  if (!(e_min <= e_max)) return bundle;
  const double span = e_max - e_min;

  for (const ObjectHypotheses& o : sender.objects) {
    if (o.hyps.empty()) continue;
    double obj_max = -INFINITY, obj_min = INFINITY;
    for (const Hypothesis& h : o.hyps) {
      obj_max = std::max(obj_max, h.evidence);
      obj_min = std::min(obj_min, h.evidence);
    }
    const double threshold =
        obj_max - cfg.send_fraction * (obj_max - obj_min);
    for (const Hypothesis& h : o.hyps) {
      if (h.evidence < threshold) continue;
      Vote v;
      v.object_id = o.object_id;
      v.rotation = h.rotation;
      v.location = h.location + rotate(inverse(h.rotation), d_t);
      v.evidence = span > 0 ? 2.0 * (h.evidence - e_min) / span - 1.0 : 0.0;
      bundle.votes.push_back(v);
    }
  }
  return bundle;
}

// Adds incoming votes into the receiver's hypotheses: triangular kernel
// over distance, matching object ids only, never negative kernel weight.
// Purely additive, so application order across bundles cannot matter.
inline void integrate_votes(LearningModule& receiver,
                            const std::vector<VoteBundle>& bundles,
                            const VotingConfig& cfg,
                            OpCounter* ops = nullptr) {
  for (const VoteBundle& bundle : bundles) {
    if (bundle.sender_lm == receiver.lm_id) continue;
    // Group this bundle's votes per object and index their locations so
    // each hypothesis only examines votes within kernel range.
    std::map<std::string, std::vector<std::size_t>> by_object;
    for (std::size_t i = 0; i < bundle.votes.size(); ++i) {
      by_object[bundle.votes[i].object_id].push_back(i);
    }
    for (ObjectHypotheses& o : receiver.objects) {
      const auto it = by_object.find(o.object_id);
      if (it == by_object.end() || o.hyps.empty()) continue;
      KdTree tree;
      for (std::size_t vi : it->second) {
        const Location& l = bundle.votes[vi].location;
        tree.add(l.x, l.y, l.z);
      }
      tree.build();
      for (Hypothesis& h : o.hyps) {
        for (std::size_t local :
             tree.radius(h.location.x, h.location.y, h.location.z,
                         cfg.r_vote)) {
          const Vote& v = bundle.votes[it->second[local]];
          const double dist = norm(v.location - h.location);
          const double kernel = std::max(0.0, 1.0 - dist / cfg.r_vote);
          h.evidence += cfg.w_vote * kernel * v.evidence;
          if (ops != nullptr) ++ops->vote_integrations;
        }
      }
    }
  }
}

struct SystemDecision {
  bool terminal = false;
  std::string object_id;  // modal id among terminal modules
  int terminal_count = 0;
};

// The system answers once a quorum of modules has individually finished
// (converged or symmetric).  The answer is the modal object id among the
// finished modules; ties go to the id with the larger summed evidence.
inline SystemDecision system_terminal(const std::vector<LMOutput>& outputs,
                                      int quorum) {
  SystemDecision d;
  std::map<std::string, int> count;
  std::map<std::string, double> weight;
  for (const LMOutput& out : outputs) {
    if (out.status != LMStatus::converged &&
        out.status != LMStatus::symmetric) {
      continue;
    }
    ++d.terminal_count;
    ++count[out.mlh.object_id];
    weight[out.mlh.object_id] += out.mlh.evidence;
  }
  if (d.terminal_count < quorum) return d;
  d.terminal = true;
  for (const auto& [id, n] : count) {
    if (d.object_id.empty()) {
      d.object_id = id;
      continue;
    }
    const int best_n = count[d.object_id];
    if (n > best_n || (n == best_n && weight[id] > weight[d.object_id])) {
      d.object_id = id;
    }
  }
  return d;
}

}  // namespace sensorium

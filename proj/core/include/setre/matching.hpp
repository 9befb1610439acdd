#pragma once

#include <string>
#include <vector>

#include "setre/assignment.hpp"
#include "setre/model.hpp"
#include "setre/tensor.hpp"

namespace setre {

/// One ground-truth triple: a relation index and the start/end token
/// positions of the subject and object. The reserved last relation index
/// marks a no-triple pad, whose span fields are ignored (stored as 0).
struct GoldTriple {
  int relation = 0;
  int s_start = 0, s_end = 0;
  int o_start = 0, o_end = 0;
};

/// Exactly m gold entries: the real triples first, then no-triple pads.
struct GoldTripleSet {
  std::vector<GoldTriple> triples;
  int real_count = 0;
  int no_relation = 0;  // relation index of the no-triple class (t - 1)

  int size() const { return static_cast<int>(triples.size()); }
  bool is_real(int i) const { return triples[static_cast<std::size_t>(i)].relation != no_relation; }
};

/// Pairwise matching cost: 0 for a no-triple gold, otherwise minus the sum of
/// the predicted probabilities of the gold relation and the four gold span
/// indices. Always in [-5, 0].
double match_cost(const GoldTriple& gold, const TripleDistribution& pred, int no_relation);

/// m x m matrix with entry (i, j) = match_cost(golds[i], preds[j]). The
/// probabilities are read out of the prediction tensors as plain values, so
/// the matching step is invisible to the gradient tape.
CostMatrix build_cost_matrix(const GoldTripleSet& golds, const PredictionSet& preds);

/// The optimal gold -> prediction assignment for the pair.
Assignment match_predictions(const GoldTripleSet& golds, const PredictionSet& preds);

/// Bipartite matching loss: finds the optimal assignment, then sums the
/// negative log probabilities of the gold relation (always) and the four gold
/// span indices (real triples only) over the matched pairs. Natural log;
/// probabilities are floored at 1e-12 before the log. Gradient flows through
/// the probabilities but not through the assignment.
Tensor set_loss(const GoldTripleSet& golds, const PredictionSet& preds);

/// The loss under a caller-supplied assignment; used to hold the matching
/// fixed while probing the loss surface (finite differences).
Tensor set_loss_with_assignment(const GoldTripleSet& golds, const PredictionSet& preds,
                                const std::vector<int>& permutation);

}  // namespace setre

#include "setre/matching.hpp"

#include <algorithm>

#include "setre/ops.hpp"

namespace setre {

namespace {

constexpr double kLogFloor = 1e-12;

void check_span(int index, std::size_t limit, const char* what) {
  if (index < 0 || static_cast<std::size_t>(index) >= limit) {
    throw ValidationError(std::string("gold ") + what + " index " + std::to_string(index) +
                          " out of range [0, " + std::to_string(limit) + ")");
  }
}

void check_gold(const GoldTriple& gold, const TripleDistribution& pred, int no_relation) {
  if (gold.relation < 0 || static_cast<std::size_t>(gold.relation) >= pred.relation.size()) {
    throw ValidationError("gold relation index " + std::to_string(gold.relation) +
                          " out of range [0, " + std::to_string(pred.relation.size()) + ")");
  }
  if (gold.relation == no_relation) return;
  check_span(gold.s_start, pred.s_start.size(), "subject start");
  check_span(gold.s_end, pred.s_end.size(), "subject end");
  check_span(gold.o_start, pred.o_start.size(), "object start");
  check_span(gold.o_end, pred.o_end.size(), "object end");
  if (gold.s_start > gold.s_end || gold.o_start > gold.o_end) {
    throw ValidationError("gold span has start > end");
  }
}

void check_sizes(const GoldTripleSet& golds, const PredictionSet& preds) {
  if (golds.size() != preds.size()) {
    throw ValidationError("gold set size " + std::to_string(golds.size()) +
                          " does not match prediction set size " + std::to_string(preds.size()));
  }
  if (golds.no_relation != preds.relation_count() - 1) {
    throw ValidationError("gold no-triple index " + std::to_string(golds.no_relation) +
                          " does not match prediction relation count " +
                          std::to_string(preds.relation_count()));
  }
}

}  // namespace

double match_cost(const GoldTriple& gold, const TripleDistribution& pred, int no_relation) {
  check_gold(gold, pred, no_relation);
  if (gold.relation == no_relation) return 0.0;
  return -(pred.relation[static_cast<std::size_t>(gold.relation)] +
           pred.s_start[static_cast<std::size_t>(gold.s_start)] +
           pred.s_end[static_cast<std::size_t>(gold.s_end)] +
           pred.o_start[static_cast<std::size_t>(gold.o_start)] +
           pred.o_end[static_cast<std::size_t>(gold.o_end)]);
}

CostMatrix build_cost_matrix(const GoldTripleSet& golds, const PredictionSet& preds) {
  check_sizes(golds, preds);
  const int m = golds.size();
  CostMatrix costs;
  costs.size = m;
  costs.entries.assign(static_cast<std::size_t>(m) * m, 0.0);
  for (int j = 0; j < m; ++j) {
    const TripleDistribution pred = preds.triple(j);
    for (int i = 0; i < m; ++i) {
      costs.at(i, j) = match_cost(golds.triples[static_cast<std::size_t>(i)], pred,
                                  golds.no_relation);
    }
  }
  return costs;
}

Assignment match_predictions(const GoldTripleSet& golds, const PredictionSet& preds) {
  return hungarian(build_cost_matrix(golds, preds));
}

Tensor set_loss(const GoldTripleSet& golds, const PredictionSet& preds) {
  return set_loss_with_assignment(golds, preds, match_predictions(golds, preds).permutation);
}

Tensor set_loss_with_assignment(const GoldTripleSet& golds, const PredictionSet& preds,
                                const std::vector<int>& permutation) {
  namespace o = ops;
  check_sizes(golds, preds);
  const int m = golds.size();
  if (static_cast<int>(permutation.size()) != m) {
    throw ValidationError("assignment size does not match set size");
  }
  std::vector<char> seen(static_cast<std::size_t>(m), 0);
  for (int j : permutation) {
    if (j < 0 || j >= m || seen[static_cast<std::size_t>(j)]) {
      throw ValidationError("assignment is not a permutation of the prediction indices");
    }
    seen[static_cast<std::size_t>(j)] = 1;
  }

  std::vector<std::pair<int, int>> relation_picks;
  std::vector<std::pair<int, int>> s_start_picks, s_end_picks, o_start_picks, o_end_picks;
  relation_picks.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const GoldTriple& gold = golds.triples[static_cast<std::size_t>(i)];
    const int j = permutation[static_cast<std::size_t>(i)];
    relation_picks.emplace_back(j, gold.relation);
    if (gold.relation != golds.no_relation) {
      s_start_picks.emplace_back(j, gold.s_start);
      s_end_picks.emplace_back(j, gold.s_end);
      o_start_picks.emplace_back(j, gold.o_start);
      o_end_picks.emplace_back(j, gold.o_end);
    }
  }

  auto log_sum = [](const Tensor& probs, const std::vector<std::pair<int, int>>& picks) {
    return o::sum(o::log(o::clamp_min(o::gather_entries(probs, picks), kLogFloor)));
  };

  Tensor total = log_sum(preds.relation, relation_picks);
  if (!s_start_picks.empty()) {
    total = o::add(total, log_sum(preds.s_start, s_start_picks));
    total = o::add(total, log_sum(preds.s_end, s_end_picks));
    total = o::add(total, log_sum(preds.o_start, o_start_picks));
    total = o::add(total, log_sum(preds.o_end, o_end_picks));
  }
  return o::scale(total, -1.0);
}

}  // namespace setre

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "setre/data.hpp"
#include "setre/decoding.hpp"

namespace setre {

struct Score {
  long predicted = 0;
  long gold = 0;
  long correct = 0;

  double precision() const { return predicted > 0 ? static_cast<double>(correct) / predicted : 0.0; }
  double recall() const { return gold > 0 ? static_cast<double>(correct) / gold : 0.0; }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
  }

  Score& operator+=(const Score& other) {
    predicted += other.predicted;
    gold += other.gold;
    correct += other.correct;
    return *this;
  }
};

/// Micro precision/recall/F1 over the corpus, plus the element-level scores
/// (entity pair ignoring relation; relation ignoring spans) and breakdowns by
/// gold triple count and by overlap pattern. Buckets with no sentences are
/// absent rather than zero.
struct EvalReport {
  MatchingMode mode = MatchingMode::kExact;
  Score overall;
  Score entity_pair;    // (subject span, object span) agreement, relation ignored
  Score relation_only;  // relation agreement, spans ignored
  std::vector<std::pair<std::string, Score>> by_triple_count;  // "1".."4", ">=5"
  std::vector<std::pair<std::string, Score>> by_overlap;       // "normal", "epo", "seo"

  std::string to_json() const;
  std::string to_table() const;
};

/// Scores per-sentence predicted triples against the corpus gold triples.
/// Prediction spans must be in the same (raw token) coordinates as the
/// corpus. A predicted triple counts as correct if it agrees with a
/// still-unmatched gold triple of the same sentence on relation and both
/// spans; Partial mode truncates every span to its head (last) token before
/// comparing. Element-level scores use their own one-to-one matching.
EvalReport score(const std::vector<std::vector<ExtractedTriple>>& predictions,
                 const Corpus& corpus, MatchingMode mode);

}  // namespace setre

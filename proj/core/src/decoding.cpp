#include "setre/decoding.hpp"

#include <string>

namespace setre {

namespace {

struct SpanPick {
  int start = 0, end = 0;
  double prob = 0.0;
};

// Constrained joint argmax over valid (start, end) pairs; start <= end and
// both within [first, last]. Ties resolve to the earliest start, then end.
SpanPick best_span(const std::vector<double>& start_probs, const std::vector<double>& end_probs,
                   int first, int last) {
  SpanPick best{first, first, -1.0};
  for (int s = first; s <= last; ++s) {
    for (int e = s; e <= last; ++e) {
      const double p = start_probs[static_cast<std::size_t>(s)] * end_probs[static_cast<std::size_t>(e)];
      if (p > best.prob) best = {s, e, p};
    }
  }
  return best;
}

int argmax(const std::vector<double>& values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

}  // namespace

std::vector<ExtractedTriple> extract_triples(const PredictionSet& preds, int sentence_length,
                                             double min_confidence) {
  if (sentence_length < 2 || sentence_length > preds.length()) {
    throw ValidationError("sentence length " + std::to_string(sentence_length) +
                          " invalid for prediction distributions of length " +
                          std::to_string(preds.length()));
  }
  const int no_relation = preds.relation_count() - 1;
  const int first = 1;                    // position 0 is the start marker
  const int last = sentence_length - 2;   // final position is the end marker
  std::vector<ExtractedTriple> out;
  if (first > last) return out;  // marker-only sentence: nothing to point at

  for (int i = 0; i < preds.size(); ++i) {
    const TripleDistribution dist = preds.triple(i);
    const int relation = argmax(dist.relation);
    if (relation == no_relation) continue;

    const SpanPick subj = best_span(dist.s_start, dist.s_end, first, last);
    const SpanPick obj = best_span(dist.o_start, dist.o_end, first, last);
    ExtractedTriple triple;
    triple.relation = relation;
    triple.s_start = subj.start;
    triple.s_end = subj.end;
    triple.o_start = obj.start;
    triple.o_end = obj.end;
    triple.confidence = dist.relation[static_cast<std::size_t>(relation)] * subj.prob * obj.prob;
    if (min_confidence > 0.0 && triple.confidence < min_confidence) continue;

    bool merged = false;
    for (ExtractedTriple& existing : out) {
      if (existing.same_triple(triple)) {
        existing.confidence = std::max(existing.confidence, triple.confidence);
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(triple);
  }
  return out;
}

}  // namespace setre

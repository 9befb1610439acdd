#pragma once

#include <vector>

#include "setre/model.hpp"

namespace setre {

/// A discrete triple read off one prediction slot. Spans index the same
/// positions as the prediction distributions (marker-inclusive when the
/// predictions came from the model).
struct ExtractedTriple {
  int relation = 0;
  int s_start = 0, s_end = 0;
  int o_start = 0, o_end = 0;
  double confidence = 0.0;  // product of the five selected probabilities

  bool same_triple(const ExtractedTriple& other) const {
    return relation == other.relation && s_start == other.s_start && s_end == other.s_end &&
           o_start == other.o_start && o_end == other.o_end;
  }
};

/// Discretizes a prediction set. For each of the m slots: take the argmax
/// relation and drop the slot if it is the no-triple class; otherwise pick
/// each span as the (start, end) pair maximizing p_start(start)*p_end(end)
/// subject to start <= end, with both ends restricted to real token
/// positions (the first and last position, the boundary markers, are never
/// candidates). Duplicate triples merge, keeping the highest confidence.
/// `min_confidence` > 0 additionally drops low-confidence triples.
std::vector<ExtractedTriple> extract_triples(const PredictionSet& preds, int sentence_length,
                                             double min_confidence = 0.0);

}  // namespace setre

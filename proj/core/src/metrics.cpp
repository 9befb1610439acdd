#include "setre/metrics.hpp"

#include <array>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"

namespace setre {

namespace {

using TripleKey = std::array<int, 5>;  // relation, s_start, s_end, o_start, o_end

TripleKey normalize(int relation, int ss, int se, int os, int oe, MatchingMode mode) {
  if (mode == MatchingMode::kPartial) {
    // Head-word comparison: the last token stands in for the whole entity.
    return {relation, se, se, oe, oe};
  }
  return {relation, ss, se, os, oe};
}

// One-to-one agreement between two multisets of keys: each gold matches at
// most one prediction and vice versa.
template <typename Key>
long one_to_one_correct(const std::vector<Key>& predicted, const std::vector<Key>& gold) {
  std::map<Key, long> available;
  for (const Key& k : gold) ++available[k];
  long correct = 0;
  for (const Key& k : predicted) {
    auto it = available.find(k);
    if (it != available.end() && it->second > 0) {
      --it->second;
      ++correct;
    }
  }
  return correct;
}

struct SentenceCounts {
  Score overall, entity_pair, relation_only;
};

SentenceCounts count_sentence(const std::vector<ExtractedTriple>& preds,
                              const std::vector<SentenceTriple>& golds, MatchingMode mode) {
  std::vector<TripleKey> pred_keys, gold_keys;
  std::vector<std::array<int, 4>> pred_pairs, gold_pairs;
  std::vector<int> pred_rels, gold_rels;
  for (const ExtractedTriple& p : preds) {
    const TripleKey k = normalize(p.relation, p.s_start, p.s_end, p.o_start, p.o_end, mode);
    pred_keys.push_back(k);
    pred_pairs.push_back({k[1], k[2], k[3], k[4]});
    pred_rels.push_back(k[0]);
  }
  for (const SentenceTriple& g : golds) {
    const TripleKey k = normalize(g.relation, g.s_start, g.s_end, g.o_start, g.o_end, mode);
    gold_keys.push_back(k);
    gold_pairs.push_back({k[1], k[2], k[3], k[4]});
    gold_rels.push_back(k[0]);
  }

  SentenceCounts counts;
  counts.overall = {static_cast<long>(pred_keys.size()), static_cast<long>(gold_keys.size()),
                    one_to_one_correct(pred_keys, gold_keys)};
  counts.entity_pair = {static_cast<long>(pred_pairs.size()), static_cast<long>(gold_pairs.size()),
                        one_to_one_correct(pred_pairs, gold_pairs)};
  counts.relation_only = {static_cast<long>(pred_rels.size()), static_cast<long>(gold_rels.size()),
                          one_to_one_correct(pred_rels, gold_rels)};
  return counts;
}

void add_to_bucket(std::vector<std::pair<std::string, Score>>& buckets, const std::string& key,
                   const Score& counts) {
  for (auto& [name, score] : buckets) {
    if (name == key) {
      score += counts;
      return;
    }
  }
  buckets.emplace_back(key, counts);
}

nlohmann::json score_json(const Score& s) {
  return {{"precision", s.precision()}, {"recall", s.recall()},     {"f1", s.f1()},
          {"predicted", s.predicted},   {"gold", s.gold},           {"correct", s.correct}};
}

}  // namespace

EvalReport score(const std::vector<std::vector<ExtractedTriple>>& predictions,
                 const Corpus& corpus, MatchingMode mode) {
  if (predictions.size() != corpus.sentences.size()) {
    throw ValidationError("prediction list has " + std::to_string(predictions.size()) +
                          " sentences but the corpus has " +
                          std::to_string(corpus.sentences.size()));
  }

  EvalReport report;
  report.mode = mode;
  const std::vector<std::string> count_order = {"1", "2", "3", "4", ">=5"};

  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Sentence& sentence = corpus.sentences[i];
    const SentenceCounts counts = count_sentence(predictions[i], sentence.triples, mode);
    report.overall += counts.overall;
    report.entity_pair += counts.entity_pair;
    report.relation_only += counts.relation_only;

    const int n = static_cast<int>(sentence.triples.size());
    if (n >= 1) {
      const std::string key = n >= 5 ? ">=5" : std::to_string(n);
      add_to_bucket(report.by_triple_count, key, counts.overall);
    }
    if (sentence.overlap.normal) add_to_bucket(report.by_overlap, "normal", counts.overall);
    if (sentence.overlap.entity_pair) add_to_bucket(report.by_overlap, "epo", counts.overall);
    if (sentence.overlap.single_entity) add_to_bucket(report.by_overlap, "seo", counts.overall);
  }

  // Stable presentation order for the count buckets.
  std::vector<std::pair<std::string, Score>> ordered;
  for (const std::string& key : count_order) {
    for (auto& [name, s] : report.by_triple_count) {
      if (name == key) ordered.emplace_back(name, s);
    }
  }
  report.by_triple_count = std::move(ordered);
  return report;
}

std::string EvalReport::to_json() const {
  nlohmann::json doc;
  doc["mode"] = setre::to_string(mode);
  doc["overall"] = score_json(overall);
  doc["entity_pair"] = score_json(entity_pair);
  doc["relation"] = score_json(relation_only);
  doc["by_triple_count"] = nlohmann::json::object();
  for (const auto& [key, s] : by_triple_count) doc["by_triple_count"][key] = score_json(s);
  doc["by_overlap"] = nlohmann::json::object();
  for (const auto& [key, s] : by_overlap) doc["by_overlap"][key] = score_json(s);
  return doc.dump(2);
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  auto row = [&out](const std::string& label, const Score& s) {
    out << "  " << std::left << std::setw(12) << label << std::right << std::fixed
        << std::setprecision(4) << "  P=" << s.precision() << "  R=" << s.recall()
        << "  F1=" << s.f1() << "  (pred=" << s.predicted << " gold=" << s.gold
        << " correct=" << s.correct << ")\n";
  };
  out << "matching mode: " << setre::to_string(mode) << "\n";
  row("overall", overall);
  row("entity pair", entity_pair);
  row("relation", relation_only);
  if (!by_triple_count.empty()) {
    out << "by triple count:\n";
    for (const auto& [key, s] : by_triple_count) row("  n=" + key, s);
  }
  if (!by_overlap.empty()) {
    out << "by overlap pattern:\n";
    for (const auto& [key, s] : by_overlap) row("  " + key, s);
  }
  return out.str();
}

}  // namespace setre

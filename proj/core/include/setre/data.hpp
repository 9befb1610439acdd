#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "setre/matching.hpp"

namespace setre {

/// How entity correctness is judged, both at evaluation time and when
/// preparing the training spans: Partial keeps only the head (last) word of
/// each entity, Exact keeps the full span.
enum class MatchingMode { kPartial, kExact };

MatchingMode parse_matching_mode(std::string_view text);
std::string to_string(MatchingMode mode);

enum class CorpusFormat { kCopyreJson, kNativeJsonl };

CorpusFormat parse_corpus_format(std::string_view text);
std::string to_string(CorpusFormat format);

/// One annotated triple in raw token coordinates (no boundary markers).
struct SentenceTriple {
  int relation = 0;  // index into the corpus relation inventory
  int s_start = 0, s_end = 0;
  int o_start = 0, o_end = 0;
};

struct OverlapLabels {
  bool normal = false;
  bool entity_pair = false;   // EPO: two triples share the ordered (subject, object) pair
  bool single_entity = false; // SEO: two triples share an entity but not the full pair
};

struct Sentence {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<int> token_ids;  // filled once the corpus vocabulary exists
  std::vector<SentenceTriple> triples;
  OverlapLabels overlap;
};

class Vocabulary {
 public:
  Vocabulary();

  static Vocabulary build(const std::vector<Sentence>& sentences);
  // Restores a vocabulary from the full id -> token list (sidecar files).
  static Vocabulary from_tokens(std::vector<std::string> id_to_token);

  int id(const std::string& token) const;  // unknown id for unseen tokens
  int size() const { return static_cast<int>(id_to_token_.size()); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

inline constexpr const char* kNoRelationName = "<no-relation>";

/// Dense relation name -> index map with the reserved no-triple class last.
class RelationInventory {
 public:
  RelationInventory() = default;

  // `real_names` excludes the no-triple class, which is appended last.
  static RelationInventory build(std::vector<std::string> real_names);
  // Restores from the full list (no-triple last), as written to sidecars.
  static RelationInventory from_names(std::vector<std::string> names);

  int index(const std::string& name) const;  // throws on unknown names
  const std::string& name(int index) const;
  int size() const { return static_cast<int>(names_.size()); }
  int no_relation() const { return size() - 1; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> name_to_index_;
};

struct Corpus {
  std::vector<Sentence> sentences;
  Vocabulary vocab;
  RelationInventory relations;
  MatchingMode mode = MatchingMode::kExact;
  std::string split;
  int dropped_unlocatable = 0;  // sentences discarded because an entity string was not found
};

/// Reads a corpus, building a fresh vocabulary and relation inventory from
/// its contents. Native JSON Lines carries explicit spans; the copyre format
/// carries entity mention strings that are located in the whitespace token
/// list (first occurrence), dropping sentences whose entities cannot be
/// found. Under Partial mode every span is truncated to its last token.
Corpus load_corpus(const std::string& path, CorpusFormat format, MatchingMode mode);

/// Same, but resolves tokens and relation names against an existing
/// vocabulary/inventory (evaluation corpora must share the training ones).
Corpus load_corpus_with(const std::string& path, CorpusFormat format, MatchingMode mode,
                        const Vocabulary& vocab, const RelationInventory& relations);

void save_corpus_jsonl(const Corpus& corpus, const std::string& path);

/// Overlap taxonomy of a sentence's triples: Normal when no two triples
/// share an entity span; EPO when some pair of triples shares the ordered
/// (subject, object) span pair; SEO when some pair shares an entity span but
/// not the full pair. EPO and SEO can co-occur; Normal excludes both.
OverlapLabels classify_overlap(const Sentence& sentence);

/// Pads the real triples with no-triple entries up to exactly m.
/// `context` names the sentence in the error when there are more than m.
GoldTripleSet pad_gold_set(const std::vector<GoldTriple>& real_triples, int m, int no_relation,
                           std::string_view context);

/// The gold set of a sentence in model coordinates: spans shifted by one for
/// the start marker, padded to m.
GoldTripleSet gold_set_for(const Sentence& sentence, int m, int no_relation);

enum class OverlapPattern { kNormal, kEntityPair, kSingleEntity };

struct SyntheticSpec {
  OverlapPattern pattern = OverlapPattern::kNormal;
  int triple_count = 1;
};

/// Deterministic template-based corpus for desk-scale experiments. Sentences
/// cycle through triple counts 1..max_triples and through the three overlap
/// patterns (patterns needing two triples fall back to Normal when the count
/// is 1). Token sequences are unique within the corpus.
Corpus generate_synthetic(std::uint64_t seed, int n_sentences, int relation_count,
                          int max_triples);

/// One sentence per spec, same machinery.
Corpus generate_synthetic(std::uint64_t seed, const std::vector<SyntheticSpec>& specs,
                          int relation_count);

struct ModelFilterStats {
  int dropped_too_long = 0;
  int dropped_too_many_triples = 0;
};

/// Removes sentences the model cannot represent (longer than l_max with
/// markers, or more than m triples). Returns how many were removed.
ModelFilterStats filter_for_model(Corpus& corpus, int l_max, int m);

}  // namespace setre

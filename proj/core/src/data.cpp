#include "setre/data.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "setre/vocab_ids.hpp"

namespace setre {

using nlohmann::json;

MatchingMode parse_matching_mode(std::string_view text) {
  if (text == "partial") return MatchingMode::kPartial;
  if (text == "exact") return MatchingMode::kExact;
  throw ValidationError("unknown matching mode '" + std::string(text) + "' (use partial or exact)");
}

std::string to_string(MatchingMode mode) {
  return mode == MatchingMode::kPartial ? "partial" : "exact";
}

CorpusFormat parse_corpus_format(std::string_view text) {
  if (text == "copyre-json") return CorpusFormat::kCopyreJson;
  if (text == "native-jsonl") return CorpusFormat::kNativeJsonl;
  throw ValidationError("unknown corpus format '" + std::string(text) +
                        "' (use copyre-json or native-jsonl)");
}

std::string to_string(CorpusFormat format) {
  return format == CorpusFormat::kCopyreJson ? "copyre-json" : "native-jsonl";
}

Vocabulary::Vocabulary() {
  id_to_token_ = {"<pad>", "<unk>", "<s>", "</s>"};
  for (int i = 0; i < static_cast<int>(id_to_token_.size()); ++i) {
    token_to_id_.emplace(id_to_token_[static_cast<std::size_t>(i)], i);
  }
}

Vocabulary Vocabulary::build(const std::vector<Sentence>& sentences) {
  std::set<std::string> unique;
  for (const Sentence& s : sentences) unique.insert(s.tokens.begin(), s.tokens.end());
  Vocabulary vocab;
  for (const std::string& token : unique) {
    if (vocab.token_to_id_.count(token)) continue;
    vocab.token_to_id_.emplace(token, vocab.size());
    vocab.id_to_token_.push_back(token);
  }
  return vocab;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> id_to_token) {
  if (static_cast<int>(id_to_token.size()) < vocab_ids::kReservedCount) {
    throw ValidationError("vocabulary list is missing the reserved ids");
  }
  Vocabulary vocab;
  vocab.id_to_token_ = std::move(id_to_token);
  vocab.token_to_id_.clear();
  for (int i = 0; i < vocab.size(); ++i) {
    vocab.token_to_id_.emplace(vocab.id_to_token_[static_cast<std::size_t>(i)], i);
  }
  return vocab;
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? vocab_ids::kUnknown : it->second;
}

RelationInventory RelationInventory::build(std::vector<std::string> real_names) {
  for (const std::string& name : real_names) {
    if (name == kNoRelationName) {
      throw ValidationError("relation inventory may not contain the reserved name " +
                            std::string(kNoRelationName));
    }
  }
  real_names.push_back(kNoRelationName);
  return from_names(std::move(real_names));
}

RelationInventory RelationInventory::from_names(std::vector<std::string> names) {
  if (names.empty() || names.back() != kNoRelationName) {
    throw ValidationError("relation inventory must end with the reserved no-triple entry");
  }
  RelationInventory inv;
  inv.names_ = std::move(names);
  for (int i = 0; i < inv.size(); ++i) {
    if (!inv.name_to_index_.emplace(inv.names_[static_cast<std::size_t>(i)], i).second) {
      throw ValidationError("duplicate relation name: " + inv.names_[static_cast<std::size_t>(i)]);
    }
  }
  return inv;
}

int RelationInventory::index(const std::string& name) const {
  auto it = name_to_index_.find(name);
  if (it == name_to_index_.end()) throw ValidationError("unknown relation name: " + name);
  return it->second;
}

const std::string& RelationInventory::name(int index) const {
  if (index < 0 || index >= size()) {
    throw ValidationError("relation index " + std::to_string(index) + " out of range [0, " +
                          std::to_string(size()) + ")");
  }
  return names_[static_cast<std::size_t>(index)];
}

namespace {

std::vector<std::string> split_whitespace(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string token;
  while (in >> token) tokens.push_back(token);
  return tokens;
}

struct RawTriple {
  std::string relation;
  int s_start = 0, s_end = 0;
  int o_start = 0, o_end = 0;
};

struct RawSentence {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<RawTriple> triples;
};

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
  throw IoError(path + ":" + std::to_string(line) + ": " + what);
}

std::pair<int, int> read_span(const json& value, const std::string& path, int line,
                              const char* field) {
  if (!value.is_array() || value.size() != 2 || !value[0].is_number_integer() ||
      !value[1].is_number_integer()) {
    parse_fail(path, line, std::string(field) + " must be a [start, end] pair of integers");
  }
  return {value[0].get<int>(), value[1].get<int>()};
}

std::vector<RawSentence> parse_native_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  std::vector<RawSentence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      parse_fail(path, line_no, e.what());
    }
    RawSentence sentence;
    if (record.contains("text")) sentence.text = record["text"].get<std::string>();
    if (record.contains("tokens")) {
      for (const auto& tok : record["tokens"]) sentence.tokens.push_back(tok.get<std::string>());
    } else {
      sentence.tokens = split_whitespace(sentence.text);
    }
    if (sentence.tokens.empty()) parse_fail(path, line_no, "sentence has no tokens");
    if (sentence.text.empty()) {
      std::ostringstream text;
      for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
        if (i) text << ' ';
        text << sentence.tokens[i];
      }
      sentence.text = text.str();
    }
    for (const auto& triple : record.value("triples", json::array())) {
      if (!triple.contains("relation")) parse_fail(path, line_no, "triple missing relation");
      RawTriple raw;
      raw.relation = triple["relation"].get<std::string>();
      std::tie(raw.s_start, raw.s_end) = read_span(triple.at("subj"), path, line_no, "subj");
      std::tie(raw.o_start, raw.o_end) = read_span(triple.at("obj"), path, line_no, "obj");
      sentence.triples.push_back(raw);
    }
    out.push_back(std::move(sentence));
  }
  return out;
}

// Searches for the first occurrence of `needle` as a subsequence of
// consecutive tokens; returns {-1, -1} when absent. Exact, case-sensitive.
std::pair<int, int> locate_tokens(const std::vector<std::string>& tokens,
                                  const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > tokens.size()) return {-1, -1};
  for (std::size_t start = 0; start + needle.size() <= tokens.size(); ++start) {
    bool match = true;
    for (std::size_t k = 0; k < needle.size(); ++k) {
      if (tokens[start + k] != needle[k]) {
        match = false;
        break;
      }
    }
    if (match) return {static_cast<int>(start), static_cast<int>(start + needle.size() - 1)};
  }
  return {-1, -1};
}

std::vector<RawSentence> parse_copyre_json(const std::string& path, int* dropped) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  // The public preprocessing ships both as one JSON array and as JSON lines.
  std::vector<json> records;
  const std::size_t first = content.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && content[first] == '[') {
    json array;
    try {
      array = json::parse(content);
    } catch (const json::exception& e) {
      parse_fail(path, 1, e.what());
    }
    for (auto& record : array) records.push_back(std::move(record));
  } else {
    std::istringstream lines(content);
    std::string line;
    int line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        records.push_back(json::parse(line));
      } catch (const json::exception& e) {
        parse_fail(path, line_no, e.what());
      }
    }
  }

  std::vector<RawSentence> out;
  for (const json& record : records) {
    if (!record.contains("sentText")) {
      throw IoError(path + ": copyre record missing sentText");
    }
    RawSentence sentence;
    sentence.text = record["sentText"].get<std::string>();
    sentence.tokens = split_whitespace(sentence.text);
    bool locatable = true;
    for (const auto& mention : record.value("relationMentions", json::array())) {
      RawTriple raw;
      raw.relation = mention.at("label").get<std::string>();
      const auto subj = locate_tokens(sentence.tokens,
                                      split_whitespace(mention.at("em1Text").get<std::string>()));
      const auto obj = locate_tokens(sentence.tokens,
                                     split_whitespace(mention.at("em2Text").get<std::string>()));
      if (subj.first < 0 || obj.first < 0) {
        locatable = false;
        break;
      }
      raw.s_start = subj.first;
      raw.s_end = subj.second;
      raw.o_start = obj.first;
      raw.o_end = obj.second;
      sentence.triples.push_back(raw);
    }
    if (!locatable) {
      ++*dropped;
      continue;
    }
    out.push_back(std::move(sentence));
  }
  return out;
}

Corpus assemble_corpus(std::vector<RawSentence> raw, MatchingMode mode, const Vocabulary* vocab,
                       const RelationInventory* relations, int dropped) {
  Corpus corpus;
  corpus.mode = mode;
  corpus.dropped_unlocatable = dropped;

  if (relations) {
    corpus.relations = *relations;
  } else {
    std::set<std::string> names;
    for (const RawSentence& s : raw)
      for (const RawTriple& t : s.triples) names.insert(t.relation);
    corpus.relations = RelationInventory::build({names.begin(), names.end()});
  }

  for (RawSentence& rs : raw) {
    Sentence sentence;
    sentence.text = std::move(rs.text);
    sentence.tokens = std::move(rs.tokens);
    const int n_tokens = static_cast<int>(sentence.tokens.size());
    for (const RawTriple& rt : rs.triples) {
      SentenceTriple triple;
      triple.relation = corpus.relations.index(rt.relation);
      triple.s_start = rt.s_start;
      triple.s_end = rt.s_end;
      triple.o_start = rt.o_start;
      triple.o_end = rt.o_end;
      if (triple.s_start < 0 || triple.s_start > triple.s_end || triple.s_end >= n_tokens ||
          triple.o_start < 0 || triple.o_start > triple.o_end || triple.o_end >= n_tokens) {
        throw ValidationError("triple span out of range in sentence: " + sentence.text);
      }
      if (mode == MatchingMode::kPartial) {
        // Only the head (last) word of each entity is annotated.
        triple.s_start = triple.s_end;
        triple.o_start = triple.o_end;
      }
      sentence.triples.push_back(triple);
    }
    sentence.overlap = classify_overlap(sentence);
    corpus.sentences.push_back(std::move(sentence));
  }

  corpus.vocab = vocab ? *vocab : Vocabulary::build(corpus.sentences);
  for (Sentence& s : corpus.sentences) {
    s.token_ids.clear();
    s.token_ids.reserve(s.tokens.size());
    for (const std::string& token : s.tokens) s.token_ids.push_back(corpus.vocab.id(token));
  }
  return corpus;
}

std::vector<RawSentence> parse_any(const std::string& path, CorpusFormat format, int* dropped) {
  return format == CorpusFormat::kNativeJsonl ? parse_native_jsonl(path)
                                              : parse_copyre_json(path, dropped);
}

}  // namespace

Corpus load_corpus(const std::string& path, CorpusFormat format, MatchingMode mode) {
  int dropped = 0;
  return assemble_corpus(parse_any(path, format, &dropped), mode, nullptr, nullptr, dropped);
}

Corpus load_corpus_with(const std::string& path, CorpusFormat format, MatchingMode mode,
                        const Vocabulary& vocab, const RelationInventory& relations) {
  int dropped = 0;
  return assemble_corpus(parse_any(path, format, &dropped), mode, &vocab, &relations, dropped);
}

void save_corpus_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open corpus file for writing: " + path);
  for (const Sentence& s : corpus.sentences) {
    json record;
    record["text"] = s.text;
    record["tokens"] = s.tokens;
    json triples = json::array();
    for (const SentenceTriple& t : s.triples) {
      triples.push_back({{"relation", corpus.relations.name(t.relation)},
                         {"subj", {t.s_start, t.s_end}},
                         {"obj", {t.o_start, t.o_end}}});
    }
    record["triples"] = std::move(triples);
    out << record.dump() << "\n";
  }
  if (!out) throw IoError("write failure on corpus file: " + path);
}

OverlapLabels classify_overlap(const Sentence& sentence) {
  OverlapLabels labels;
  const auto& triples = sentence.triples;
  auto subj = [](const SentenceTriple& t) { return std::pair(t.s_start, t.s_end); };
  auto obj = [](const SentenceTriple& t) { return std::pair(t.o_start, t.o_end); };

  for (std::size_t i = 0; i < triples.size(); ++i) {
    for (std::size_t j = i + 1; j < triples.size(); ++j) {
      const bool pair_equal =
          subj(triples[i]) == subj(triples[j]) && obj(triples[i]) == obj(triples[j]);
      const bool share_entity =
          subj(triples[i]) == subj(triples[j]) || subj(triples[i]) == obj(triples[j]) ||
          obj(triples[i]) == subj(triples[j]) || obj(triples[i]) == obj(triples[j]);
      if (pair_equal) {
        labels.entity_pair = true;
      } else if (share_entity) {
        labels.single_entity = true;
      }
    }
  }
  labels.normal = !labels.entity_pair && !labels.single_entity;
  return labels;
}

GoldTripleSet pad_gold_set(const std::vector<GoldTriple>& real_triples, int m, int no_relation,
                           std::string_view context) {
  if (static_cast<int>(real_triples.size()) > m) {
    throw ValidationError("sentence has " + std::to_string(real_triples.size()) +
                          " triples but the prediction set size m is " + std::to_string(m) +
                          " (" + std::string(context) + ")");
  }
  GoldTripleSet set;
  set.no_relation = no_relation;
  set.real_count = static_cast<int>(real_triples.size());
  set.triples = real_triples;
  for (const GoldTriple& t : real_triples) {
    if (t.relation == no_relation) {
      throw ValidationError("real triple uses the reserved no-triple relation index (" +
                            std::string(context) + ")");
    }
  }
  set.triples.resize(static_cast<std::size_t>(m), GoldTriple{no_relation, 0, 0, 0, 0});
  return set;
}

GoldTripleSet gold_set_for(const Sentence& sentence, int m, int no_relation) {
  std::vector<GoldTriple> real;
  real.reserve(sentence.triples.size());
  for (const SentenceTriple& t : sentence.triples) {
    // Shift into marker-inclusive coordinates: position 0 is the start marker.
    real.push_back(GoldTriple{t.relation, t.s_start + 1, t.s_end + 1, t.o_start + 1, t.o_end + 1});
  }
  return pad_gold_set(real, m, no_relation, sentence.text);
}

namespace {

const std::vector<std::string>& base_relation_names() {
  static const std::vector<std::string> names = {
      "leads",      "works_for", "lives_in", "born_in", "capital_of",
      "located_in", "part_of",   "founded",  "owns",    "married_to"};
  return names;
}

const std::vector<std::vector<std::string>>& entity_pool() {
  static const std::vector<std::vector<std::string>> pool = {
      {"arden"},           {"bailey"},         {"corin"},        {"devon"},
      {"ellis"},           {"farley"},         {"gale"},         {"harlow"},
      {"imre"},            {"jules"},          {"kiran"},        {"lowell"},
      {"mira"},            {"noor"},           {"petra"},        {"sten"},
      {"oak", "hollow"},   {"pine", "ridge"},  {"east", "bay"},  {"fort", "marsh"},
      {"new", "delta"},    {"stonegate"},      {"riverton"},     {"kalmar"},
      {"brightwater"},     {"veles"},          {"gray", "harbor"}, {"mill", "creek"}};
  return pool;
}

const std::vector<std::string>& opener_pool() {
  static const std::vector<std::string> openers = {"reportedly", "notably", "today",
                                                   "meanwhile",  "locally", "records", "sources"};
  return openers;
}

struct PlannedTriple {
  int subject;  // index into the entity pool
  int object;
  int relation;
};

// Lays out tokens for the planned triples and resolves spans to the first
// occurrence of each entity, matching the loader convention.
Sentence realize_sentence(const std::vector<PlannedTriple>& plan, int opener,
                          const RelationInventory& relations) {
  const auto& pool = entity_pool();
  Sentence sentence;
  sentence.tokens.push_back(opener_pool()[static_cast<std::size_t>(opener)]);

  std::unordered_map<int, std::pair<int, int>> first_span;
  auto emit_entity = [&](int entity) {
    const auto& words = pool[static_cast<std::size_t>(entity)];
    const int start = static_cast<int>(sentence.tokens.size());
    sentence.tokens.insert(sentence.tokens.end(), words.begin(), words.end());
    const int end = static_cast<int>(sentence.tokens.size()) - 1;
    first_span.emplace(entity, std::pair(start, end));  // keeps the first occurrence
  };

  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (i) sentence.tokens.push_back(",");
    emit_entity(plan[i].subject);
    sentence.tokens.push_back(relations.name(plan[i].relation));
    emit_entity(plan[i].object);
  }
  sentence.tokens.push_back(".");

  for (const PlannedTriple& p : plan) {
    SentenceTriple t;
    t.relation = p.relation;
    std::tie(t.s_start, t.s_end) = first_span.at(p.subject);
    std::tie(t.o_start, t.o_end) = first_span.at(p.object);
    sentence.triples.push_back(t);
  }

  std::ostringstream text;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    if (i) text << ' ';
    text << sentence.tokens[i];
  }
  sentence.text = text.str();
  return sentence;
}

std::vector<PlannedTriple> plan_triples(OverlapPattern pattern, int count, int relation_count,
                                        std::mt19937_64& rng) {
  const int pool_size = static_cast<int>(entity_pool().size());
  auto pick_relation = [&] {
    return static_cast<int>(rng() % static_cast<std::uint64_t>(relation_count));
  };

  // Draw distinct entities for the whole sentence, then wire them per pattern.
  std::vector<int> entities;
  while (static_cast<int>(entities.size()) < 2 * count) {
    const int candidate = static_cast<int>(rng() % static_cast<std::uint64_t>(pool_size));
    if (std::find(entities.begin(), entities.end(), candidate) == entities.end()) {
      entities.push_back(candidate);
    }
  }

  std::vector<PlannedTriple> plan;
  std::size_t next = 0;
  auto fresh = [&] { return entities[next++]; };

  if (pattern == OverlapPattern::kEntityPair && count >= 2) {
    const int a = fresh(), b = fresh();
    const int r1 = pick_relation();
    int r2 = pick_relation();
    while (r2 == r1 && relation_count > 1) r2 = pick_relation();
    plan.push_back({a, b, r1});
    plan.push_back({a, b, r2});
  } else if (pattern == OverlapPattern::kSingleEntity && count >= 2) {
    const int shared = fresh();
    plan.push_back({shared, fresh(), pick_relation()});
    plan.push_back({shared, fresh(), pick_relation()});
  }
  while (static_cast<int>(plan.size()) < count) {
    plan.push_back({fresh(), fresh(), pick_relation()});
  }
  return plan;
}

}  // namespace

Corpus generate_synthetic(std::uint64_t seed, const std::vector<SyntheticSpec>& specs,
                          int relation_count) {
  if (relation_count <= 0) throw ValidationError("relation_count must be positive");
  for (const SyntheticSpec& spec : specs) {
    if (spec.triple_count <= 0) throw ValidationError("triple counts must be positive");
    if (spec.pattern == OverlapPattern::kEntityPair && relation_count < 2) {
      throw ValidationError("entity-pair overlap needs at least two relation types");
    }
  }

  std::vector<std::string> names;
  for (int i = 0; i < relation_count; ++i) {
    const auto& base = base_relation_names();
    names.push_back(i < static_cast<int>(base.size())
                        ? base[static_cast<std::size_t>(i)]
                        : "relation_" + std::to_string(i));
  }
  RelationInventory relations = RelationInventory::build(std::move(names));

  std::mt19937_64 rng(seed);
  std::set<std::vector<std::string>> seen_token_lists;
  Corpus corpus;
  corpus.relations = relations;
  corpus.split = "synthetic";

  for (const SyntheticSpec& spec : specs) {
    Sentence sentence;
    for (int attempt = 0; attempt < 200; ++attempt) {
      const auto plan = plan_triples(spec.pattern, spec.triple_count, relation_count, rng);
      const int opener = static_cast<int>(rng() % opener_pool().size());
      sentence = realize_sentence(plan, opener, relations);
      if (seen_token_lists.insert(sentence.tokens).second) break;
    }
    sentence.overlap = classify_overlap(sentence);
    corpus.sentences.push_back(std::move(sentence));
  }

  corpus.vocab = Vocabulary::build(corpus.sentences);
  for (Sentence& s : corpus.sentences) {
    for (const std::string& token : s.tokens) s.token_ids.push_back(corpus.vocab.id(token));
  }
  return corpus;
}

Corpus generate_synthetic(std::uint64_t seed, int n_sentences, int relation_count,
                          int max_triples) {
  if (n_sentences <= 0 || max_triples <= 0) {
    throw ValidationError("generator parameters must be positive");
  }
  std::vector<SyntheticSpec> specs;
  specs.reserve(static_cast<std::size_t>(n_sentences));
  const OverlapPattern cycle[3] = {OverlapPattern::kNormal, OverlapPattern::kEntityPair,
                                   OverlapPattern::kSingleEntity};
  for (int i = 0; i < n_sentences; ++i) {
    SyntheticSpec spec;
    spec.triple_count = (i % max_triples) + 1;
    spec.pattern = spec.triple_count >= 2 ? cycle[(i / max_triples) % 3] : OverlapPattern::kNormal;
    if (spec.pattern == OverlapPattern::kEntityPair && relation_count < 2) {
      spec.pattern = OverlapPattern::kSingleEntity;
    }
    specs.push_back(spec);
  }
  return generate_synthetic(seed, specs, relation_count);
}

ModelFilterStats filter_for_model(Corpus& corpus, int l_max, int m) {
  ModelFilterStats stats;
  std::vector<Sentence> kept;
  kept.reserve(corpus.sentences.size());
  for (Sentence& s : corpus.sentences) {
    if (static_cast<int>(s.tokens.size()) + 2 > l_max) {
      ++stats.dropped_too_long;
    } else if (static_cast<int>(s.triples.size()) > m) {
      ++stats.dropped_too_many_triples;
    } else {
      kept.push_back(std::move(s));
    }
  }
  corpus.sentences = std::move(kept);
  return stats;
}

}  // namespace setre

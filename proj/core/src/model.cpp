#include "setre/model.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "setre/ops.hpp"
#include "setre/vocab_ids.hpp"

namespace setre {

void ModelConfig::validate() const {
  if (d <= 0 || l_max <= 0 || m < 1 || encoder_layers < 0 || decoder_layers < 1 || heads <= 0) {
    throw ValidationError("model config has non-positive dimensions");
  }
  if (t < 2) throw ValidationError("config.t must be at least 2 (one relation plus the no-triple class)");
  if (d % heads != 0) {
    throw ValidationError("hidden size " + std::to_string(d) + " not divisible by " +
                          std::to_string(heads) + " heads");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ValidationError("dropout must be in [0, 1)");
  if (vocab_size < vocab_ids::kReservedCount) {
    throw ValidationError("vocab_size must cover the reserved ids; got " +
                          std::to_string(vocab_size));
  }
}

namespace {

class ParamBuilder {
 public:
  ParamBuilder(std::uint64_t seed, double init_std,
               std::vector<std::pair<std::string, Tensor>>& registry)
      : rng_(seed), normal_(0.0, init_std), registry_(registry) {}

  Tensor weight(const std::string& name, std::vector<int> shape) {
    Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
    for (double& v : t.values()) v = normal_(rng_);
    registry_.emplace_back(name, t);
    return t;
  }

  Tensor constant(const std::string& name, std::vector<int> shape, double value) {
    Tensor t = Tensor::full(std::move(shape), value, /*requires_grad=*/true);
    registry_.emplace_back(name, t);
    return t;
  }

  LayerNormWeights norm(const std::string& prefix, int d) {
    return {constant(prefix + ".gain", {d}, 1.0), constant(prefix + ".bias", {d}, 0.0)};
  }

  AttentionWeights attention(const std::string& prefix, int d) {
    AttentionWeights w;
    w.wq = weight(prefix + ".wq", {d, d});
    w.bq = constant(prefix + ".bq", {d}, 0.0);
    w.wk = weight(prefix + ".wk", {d, d});
    w.bk = constant(prefix + ".bk", {d}, 0.0);
    w.wv = weight(prefix + ".wv", {d, d});
    w.bv = constant(prefix + ".bv", {d}, 0.0);
    w.wo = weight(prefix + ".wo", {d, d});
    w.bo = constant(prefix + ".bo", {d}, 0.0);
    return w;
  }

  FeedForwardWeights feed_forward(const std::string& prefix, int d, int inner) {
    FeedForwardWeights w;
    w.w1 = weight(prefix + ".w1", {d, inner});
    w.b1 = constant(prefix + ".b1", {inner}, 0.0);
    w.w2 = weight(prefix + ".w2", {inner, d});
    w.b2 = constant(prefix + ".b2", {d}, 0.0);
    return w;
  }

  SpanHeadWeights span_head(const std::string& prefix, int d) {
    SpanHeadWeights w;
    w.query_proj = weight(prefix + ".query_proj", {d, d});
    w.enc_proj = weight(prefix + ".enc_proj", {d, d});
    w.v = weight(prefix + ".v", {d});
    return w;
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::vector<std::pair<std::string, Tensor>>& registry_;
};

}  // namespace

Parameters Parameters::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Parameters p;
  p.config = config;
  ParamBuilder b(seed, 1.0 / std::sqrt(static_cast<double>(config.d)), p.registry_);

  p.token_embedding = b.weight("encoder.token_embedding", {config.vocab_size, config.d});
  p.position_embedding = b.weight("encoder.position_embedding", {config.l_max, config.d});
  p.embed_norm = b.norm("encoder.embed_norm", config.d);
  for (int layer = 0; layer < config.encoder_layers; ++layer) {
    const std::string prefix = "encoder.layer" + std::to_string(layer);
    EncoderLayerWeights w;
    w.self_attn = b.attention(prefix + ".self_attn", config.d);
    w.ln_attn = b.norm(prefix + ".ln_attn", config.d);
    w.ffn = b.feed_forward(prefix + ".ffn", config.d, config.ffn());
    w.ln_ffn = b.norm(prefix + ".ln_ffn", config.d);
    p.encoder.push_back(std::move(w));
  }

  p.triple_queries = b.weight("decoder.triple_queries", {config.m, config.d});
  for (int layer = 0; layer < config.decoder_layers; ++layer) {
    const std::string prefix = "decoder.layer" + std::to_string(layer);
    DecoderLayerWeights w;
    w.self_attn = b.attention(prefix + ".self_attn", config.d);
    w.ln_self = b.norm(prefix + ".ln_self", config.d);
    w.cross_attn = b.attention(prefix + ".cross_attn", config.d);
    w.ln_cross = b.norm(prefix + ".ln_cross", config.d);
    w.ffn = b.feed_forward(prefix + ".ffn", config.d, config.ffn());
    w.ln_ffn = b.norm(prefix + ".ln_ffn", config.d);
    p.decoder.push_back(std::move(w));
  }

  p.relation_proj = b.weight("heads.relation_proj", {config.t, config.d});
  p.subj_start = b.span_head("heads.subj_start", config.d);
  p.subj_end = b.span_head("heads.subj_end", config.d);
  p.obj_start = b.span_head("heads.obj_start", config.d);
  p.obj_end = b.span_head("heads.obj_end", config.d);
  return p;
}

std::vector<Tensor> Parameters::encoder_group() const {
  std::vector<Tensor> out;
  for (const auto& [name, tensor] : registry_) {
    if (name.rfind("encoder.", 0) == 0) out.push_back(tensor);
  }
  return out;
}

std::vector<Tensor> Parameters::decoder_group() const {
  std::vector<Tensor> out;
  for (const auto& [name, tensor] : registry_) {
    if (name.rfind("encoder.", 0) != 0) out.push_back(tensor);
  }
  return out;
}

std::vector<Tensor> Parameters::all() const {
  std::vector<Tensor> out;
  out.reserve(registry_.size());
  for (const auto& [name, tensor] : registry_) out.push_back(tensor);
  return out;
}

void Parameters::load_values(const std::vector<std::pair<std::string, Tensor>>& loaded) {
  std::map<std::string, Tensor> by_name;
  for (const auto& [name, tensor] : loaded) by_name.emplace(name, tensor);

  std::ostringstream diff;
  for (auto& [name, tensor] : registry_) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      diff << "  missing: " << name << " " << tensor.shape_string() << "\n";
          continue;
    }
    if (it->second.shape() != tensor.shape()) {
      diff << "  shape mismatch: " << name << " expected " << tensor.shape_string() << " got "
           << it->second.shape_string() << "\n";
    }
    by_name.erase(it);
  }
  for (const auto& [name, tensor] : by_name) {
    diff << "  unexpected: " << name << " " << tensor.shape_string() << "\n";
  }
  const std::string problems = diff.str();
  if (!problems.empty()) {
    throw ValidationError("checkpoint does not match the model configuration:\n" + problems);
  }

  std::map<std::string, Tensor> again;
  for (const auto& [name, tensor] : loaded) again.emplace(name, tensor);
  for (auto& [name, tensor] : registry_) tensor.values() = again.at(name).values();
}

Parameters Parameters::clone() const {
  Parameters copy = Parameters::init(config, /*seed=*/0);
  copy.load_values(registry_);
  return copy;
}

TripleDistribution PredictionSet::triple(int index) const {
  if (index < 0 || index >= size()) {
    throw ValidationError("prediction index " + std::to_string(index) + " out of range [0, " +
                          std::to_string(size()) + ")");
  }
  TripleDistribution out;
  const int t = relation_count(), l = length();
  out.relation.assign(relation.values().begin() + static_cast<std::ptrdiff_t>(index) * t,
                      relation.values().begin() + static_cast<std::ptrdiff_t>(index + 1) * t);
  auto row = [index, l](const Tensor& mat) {
    return std::vector<double>(mat.values().begin() + static_cast<std::ptrdiff_t>(index) * l,
                               mat.values().begin() + static_cast<std::ptrdiff_t>(index + 1) * l);
  };
  out.s_start = row(s_start);
  out.s_end = row(s_end);
  out.o_start = row(o_start);
  out.o_end = row(o_end);
  return out;
}

PredictionSet PredictionSet::from_rows(const std::vector<TripleDistribution>& rows) {
  if (rows.empty()) throw ValidationError("prediction set cannot be empty");
  const int m = static_cast<int>(rows.size());
  const int t = static_cast<int>(rows.front().relation.size());
  const int l = static_cast<int>(rows.front().s_start.size());
  auto check_row = [](const std::vector<double>& dist, std::size_t expected, const char* what) {
    if (dist.size() != expected) {
      throw ValidationError(std::string("prediction ") + what + " distribution has length " +
                            std::to_string(dist.size()) + ", expected " + std::to_string(expected));
    }
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) {
      throw ValidationError(std::string("prediction ") + what + " distribution sums to " +
                            std::to_string(total) + ", expected 1");
    }
  };

  PredictionSet set;
  set.relation = Tensor::zeros({m, t});
  set.s_start = Tensor::zeros({m, l});
  set.s_end = Tensor::zeros({m, l});
  set.o_start = Tensor::zeros({m, l});
  set.o_end = Tensor::zeros({m, l});
  for (int i = 0; i < m; ++i) {
    const TripleDistribution& r = rows[static_cast<std::size_t>(i)];
    check_row(r.relation, static_cast<std::size_t>(t), "relation");
    check_row(r.s_start, static_cast<std::size_t>(l), "s_start");
    check_row(r.s_end, static_cast<std::size_t>(l), "s_end");
    check_row(r.o_start, static_cast<std::size_t>(l), "o_start");
    check_row(r.o_end, static_cast<std::size_t>(l), "o_end");
    for (int j = 0; j < t; ++j) set.relation.at(i, j) = r.relation[static_cast<std::size_t>(j)];
    for (int j = 0; j < l; ++j) {
      set.s_start.at(i, j) = r.s_start[static_cast<std::size_t>(j)];
      set.s_end.at(i, j) = r.s_end[static_cast<std::size_t>(j)];
      set.o_start.at(i, j) = r.o_start[static_cast<std::size_t>(j)];
      set.o_end.at(i, j) = r.o_end[static_cast<std::size_t>(j)];
    }
  }
  return set;
}

namespace {

constexpr double kMaskedLogit = -1e30;

// Additive key mask: 0 on valid positions, a large negative bias on padding.
// Returned tensor does not require grad, so it is transparent to the tape.
Tensor key_mask(int valid_len, int padded_len) {
  Tensor mask = Tensor::zeros({padded_len});
  for (int j = valid_len; j < padded_len; ++j) mask.values()[static_cast<std::size_t>(j)] = kMaskedLogit;
  return mask;
}

Tensor multi_head_attention(const AttentionWeights& w, const Tensor& queries, const Tensor& keys,
                            int heads, const Tensor* mask, std::vector<double>* mean_probs) {
  namespace o = ops;
  const int d = queries.dim(1);
  const int head_dim = d / heads;
  const double scaling = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Tensor q = o::add(o::matmul(queries, w.wq), w.bq);
  Tensor k = o::add(o::matmul(keys, w.wk), w.bk);
  Tensor v = o::add(o::matmul(keys, w.wv), w.bv);

  if (mean_probs) {
    mean_probs->assign(static_cast<std::size_t>(queries.dim(0)) * keys.dim(0), 0.0);
  }

  std::vector<Tensor> contexts;
  contexts.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Tensor qh = o::slice_cols(q, h * head_dim, (h + 1) * head_dim);
    Tensor kh = o::slice_cols(k, h * head_dim, (h + 1) * head_dim);
    Tensor vh = o::slice_cols(v, h * head_dim, (h + 1) * head_dim);
    Tensor scores = o::scale(o::matmul(qh, o::transpose(kh)), scaling);
    if (mask) scores = o::add(scores, *mask);
    Tensor probs = o::softmax(scores, 1);
    if (mean_probs) {
      for (std::size_t i = 0; i < probs.numel(); ++i) {
        (*mean_probs)[i] += probs.values()[i] / heads;
      }
    }
    contexts.push_back(o::matmul(probs, vh));
  }
  return o::add(o::matmul(o::concat_cols(contexts), w.wo), w.bo);
}

Tensor feed_forward(const FeedForwardWeights& w, const Tensor& x) {
  namespace o = ops;
  return o::add(o::matmul(o::gelu(o::add(o::matmul(x, w.w1), w.b1)), w.w2), w.b2);
}

Tensor residual_block(const Tensor& x, const Tensor& sublayer_out, const LayerNormWeights& norm,
                      double dropout_rate, bool train, std::mt19937_64& rng) {
  namespace o = ops;
  return o::layer_norm(o::add(x, o::dropout(sublayer_out, dropout_rate, rng, train)), norm.gain,
                       norm.bias);
}

}  // namespace

EncodedSentence encode(const Parameters& params, const std::vector<int>& token_ids, bool train,
                       std::mt19937_64& rng, int pad_to) {
  namespace o = ops;
  const ModelConfig& cfg = params.config;

  EncodedSentence out;
  out.valid_len = static_cast<int>(token_ids.size()) + 2;
  out.padded_len = std::max(out.valid_len, pad_to);
  if (out.padded_len > cfg.l_max) {
    throw ValidationError("sentence length " + std::to_string(out.padded_len) +
                          " (markers included) exceeds l_max " + std::to_string(cfg.l_max));
  }

  out.token_ids.reserve(static_cast<std::size_t>(out.padded_len));
  out.token_ids.push_back(vocab_ids::kStartMarker);
  for (int id : token_ids) {
    out.token_ids.push_back(id >= 0 && id < cfg.vocab_size ? id : vocab_ids::kUnknown);
  }
  out.token_ids.push_back(vocab_ids::kEndMarker);
  while (static_cast<int>(out.token_ids.size()) < out.padded_len) {
    out.token_ids.push_back(vocab_ids::kPad);
  }

  std::vector<int> positions(static_cast<std::size_t>(out.padded_len));
  std::iota(positions.begin(), positions.end(), 0);

  Tensor x = o::add(o::embedding(params.token_embedding, out.token_ids),
                    o::embedding(params.position_embedding, positions));
  x = o::layer_norm(x, params.embed_norm.gain, params.embed_norm.bias);
  x = o::dropout(x, cfg.dropout, rng, train);

  const bool padded = out.padded_len > out.valid_len;
  Tensor mask;
  if (padded) mask = key_mask(out.valid_len, out.padded_len);

  for (const EncoderLayerWeights& layer : params.encoder) {
    Tensor attn = multi_head_attention(layer.self_attn, x, x, cfg.heads,
                                       padded ? &mask : nullptr, nullptr);
    x = residual_block(x, attn, layer.ln_attn, cfg.dropout, train, rng);
    x = residual_block(x, feed_forward(layer.ffn, x), layer.ln_ffn, cfg.dropout, train, rng);
  }
  out.states = x;
  return out;
}

PredictionSet decode_set(const Parameters& params, const EncodedSentence& sentence, bool train,
                         std::mt19937_64& rng, AttentionTrace* trace) {
  namespace o = ops;
  const ModelConfig& cfg = params.config;
  if (!sentence.states.defined() || sentence.states.dim(1) != cfg.d) {
    throw ValidationError("encoded sentence does not match model width");
  }

  const bool padded = sentence.padded_len > sentence.valid_len;
  Tensor enc_mask;
  if (padded) enc_mask = key_mask(sentence.valid_len, sentence.padded_len);

  if (trace) {
    trace->m = cfg.m;
    trace->decoder_self.clear();
  }

  Tensor x = params.triple_queries;
  for (const DecoderLayerWeights& layer : params.decoder) {
    std::vector<double> probs;
    // Self-attention over the m query states is unmasked: every query sees
    // every other query in both directions.
    Tensor self_attn = multi_head_attention(layer.self_attn, x, x, cfg.heads, nullptr,
                                            trace ? &probs : nullptr);
    if (trace) trace->decoder_self.push_back(std::move(probs));
    x = residual_block(x, self_attn, layer.ln_self, cfg.dropout, train, rng);

    Tensor cross = multi_head_attention(layer.cross_attn, x, sentence.states, cfg.heads,
                                        padded ? &enc_mask : nullptr, nullptr);
    x = residual_block(x, cross, layer.ln_cross, cfg.dropout, train, rng);
    x = residual_block(x, feed_forward(layer.ffn, x), layer.ln_ffn, cfg.dropout, train, rng);
  }

  PredictionSet preds;
  preds.relation = o::softmax(o::matmul(x, o::transpose(params.relation_proj)), 1);

  auto span_distribution = [&](const SpanHeadWeights& head) {
    Tensor query_side = o::matmul(x, head.query_proj);             // [m, d]
    Tensor token_side = o::matmul(sentence.states, head.enc_proj); // [l, d]
    Tensor logits = o::span_logits(query_side, token_side, head.v);
    if (padded) logits = o::add(logits, enc_mask);
    return o::softmax(logits, 1);
  };
  preds.s_start = span_distribution(params.subj_start);
  preds.s_end = span_distribution(params.subj_end);
  preds.o_start = span_distribution(params.obj_start);
  preds.o_end = span_distribution(params.obj_end);
  return preds;
}

}  // namespace setre

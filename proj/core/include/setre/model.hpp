#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "setre/tensor.hpp"

namespace setre {

struct ModelConfig {
  int d = 64;            // hidden size
  int l_max = 64;        // maximum sentence length, markers included
  int t = 2;             // relation types including the reserved no-triple class (last index)
  int m = 10;            // number of triple queries / predictions per sentence
  int encoder_layers = 2;
  int decoder_layers = 3;
  int heads = 4;
  int ffn_dim = 0;       // feed-forward inner width; 0 means 4*d
  double dropout = 0.1;
  int vocab_size = 0;

  int ffn() const { return ffn_dim > 0 ? ffn_dim : 4 * d; }
  int no_relation() const { return t - 1; }
  void validate() const;
};

struct LayerNormWeights {
  Tensor gain;  // [d]
  Tensor bias;  // [d]
};

struct AttentionWeights {
  // Projections use the x*W convention: W is [in, out], bias [out].
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

struct FeedForwardWeights {
  Tensor w1, b1;  // [d, ffn], [ffn]
  Tensor w2, b2;  // [ffn, d], [d]
};

struct EncoderLayerWeights {
  AttentionWeights self_attn;
  LayerNormWeights ln_attn;
  FeedForwardWeights ffn;
  LayerNormWeights ln_ffn;
};

struct DecoderLayerWeights {
  AttentionWeights self_attn;
  LayerNormWeights ln_self;
  AttentionWeights cross_attn;
  LayerNormWeights ln_cross;
  FeedForwardWeights ffn;
  LayerNormWeights ln_ffn;
};

struct SpanHeadWeights {
  Tensor query_proj;  // [d, d], applied to decoder output states
  Tensor enc_proj;    // [d, d], applied to encoder token states
  Tensor v;           // [d], scoring vector over tanh(query + token)
};

/// All learnable weights, addressable both structurally and through a flat
/// name -> tensor registry (used by the optimizer grouping and checkpoints).
/// Names under "encoder." form the encoder parameter group; everything else
/// (queries, decoder layers, prediction heads) forms the decoder group.
class Parameters {
 public:
  Parameters() = default;

  // Deterministic initialization: projection weights, embeddings and triple
  // queries from N(0, 1/sqrt(d)); biases and norm offsets zero, norm gains one.
  static Parameters init(const ModelConfig& config, std::uint64_t seed);

  ModelConfig config;

  Tensor token_embedding;     // [vocab_size, d]
  Tensor position_embedding;  // [l_max, d]
  LayerNormWeights embed_norm;
  std::vector<EncoderLayerWeights> encoder;

  Tensor triple_queries;  // [m, d]
  std::vector<DecoderLayerWeights> decoder;

  Tensor relation_proj;  // [t, d]; relation logits are states * relation_proj^T
  SpanHeadWeights subj_start, subj_end, obj_start, obj_end;

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return registry_; }
  std::vector<Tensor> encoder_group() const;
  std::vector<Tensor> decoder_group() const;
  std::vector<Tensor> all() const;

  // Copies values from a loaded checkpoint into this structure. Missing,
  // extra, or shape-mismatched entries raise a ValidationError that lists
  // every difference.
  void load_values(const std::vector<std::pair<std::string, Tensor>>& loaded);

  Parameters clone() const;

 private:
  std::vector<std::pair<std::string, Tensor>> registry_;
};

struct EncodedSentence {
  Tensor states;               // [padded_len, d]
  std::vector<int> token_ids;  // marker-wrapped ids, plus pad ids if padded
  int valid_len = 0;           // true length including the two markers
  int padded_len = 0;
};

/// The five categorical distributions of one predicted triple, detached from
/// the tape (plain probabilities).
struct TripleDistribution {
  std::vector<double> relation;  // over t types, no-triple last
  std::vector<double> s_start, s_end, o_start, o_end;  // over sentence positions
};

/// The fixed-size set of m predicted triples for one sentence, kept as five
/// stacked probability matrices so the loss can index straight into them.
struct PredictionSet {
  Tensor relation;                       // [m, t]
  Tensor s_start, s_end, o_start, o_end; // [m, l]

  int size() const { return relation.dim(0); }
  int relation_count() const { return relation.dim(1); }
  int length() const { return s_start.dim(1); }

  TripleDistribution triple(int index) const;

  // Builds a prediction set from explicit probability rows (no gradient
  // tracking); every row must sum to 1 within 1e-9.
  static PredictionSet from_rows(const std::vector<TripleDistribution>& rows);
};

/// Detached decoder-side attention probabilities captured during a forward
/// pass, mean over heads: one m x m (row-major) matrix per decoder layer.
struct AttentionTrace {
  int m = 0;
  std::vector<std::vector<double>> decoder_self;
};

/// Wraps the ids with the start/end markers, maps out-of-vocabulary ids to
/// the unknown id, and runs the transformer encoder. `pad_to`, when larger
/// than the natural length, appends pad tokens that are masked out of every
/// attention and span distribution downstream.
EncodedSentence encode(const Parameters& params, const std::vector<int>& token_ids, bool train,
                       std::mt19937_64& rng, int pad_to = 0);

/// Transforms the m triple queries through the non-autoregressive decoder
/// (unmasked self-attention + inter-attention over the encoded sentence) and
/// applies the relation and span prediction heads.
PredictionSet decode_set(const Parameters& params, const EncodedSentence& sentence, bool train,
                         std::mt19937_64& rng, AttentionTrace* trace = nullptr);

}  // namespace setre

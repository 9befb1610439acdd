#pragma once

#include <random>
#include <utility>
#include <vector>

#include "setre/tensor.hpp"

namespace setre::ops {

// Elementwise sum. Shapes must match, except that a rank-1 vector [q] may be
// broadcast across the rows of a [..., q] tensor (either argument order).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);

// Elementwise product, equal shapes only.
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double factor);

// [..., p, q] x [q, r] -> [..., p, r]; leading dimensions of `a` are batch.
Tensor matmul(const Tensor& a, const Tensor& b);

// 2D transpose.
Tensor transpose(const Tensor& a);

// Numerically stable softmax along `axis` (max subtraction before exp).
Tensor softmax(const Tensor& a, int axis);

Tensor tanh(const Tensor& a);
Tensor gelu(const Tensor& a);

// Natural log; rejects non-positive inputs.
Tensor log(const Tensor& a);

Tensor clamp_min(const Tensor& a, double floor);

// Row gather: out[i, :] = table[ids[i], :]. Backward scatter-adds into the
// table rows, so repeated ids accumulate.
Tensor embedding(const Tensor& table, const std::vector<int>& ids);

// Normalizes over the last dimension: gamma * (x - mean)/sqrt(var + eps) + beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// Inverted dropout: in train mode keeps each element with probability 1-p and
// scales survivors by 1/(1-p); identity (same tensor) in eval mode.
Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng, bool train);

// Column slice [r, c] -> [r, c1-c0) and its inverse concatenation.
Tensor slice_cols(const Tensor& x, int col_begin, int col_end);
Tensor concat_cols(const std::vector<Tensor>& parts);

// Reductions to a scalar tensor of shape {1}.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// out[k] = x[idx[k].first, idx[k].second] for a 2D x.
Tensor gather_entries(const Tensor& x, const std::vector<std::pair<int, int>>& idx);

// Additive-attention scores: out[i, j] = sum_k v[k] * tanh(q[i, k] + k[j, k])
// for q [m, d], keys [l, d], v [d]. This is the fused form of the span
// pointer heads, with the tanh folded in.
Tensor span_logits(const Tensor& queries, const Tensor& keys, const Tensor& v);

}  // namespace setre::ops

#include "setre/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

namespace setre::ops {

namespace {

bool tracked(const Tensor& t) { return active_tape() != nullptr && t.requires_grad(); }

void mark_and_record(Tensor& out, std::function<void()> step) {
  out.set_requires_grad(true);
  active_tape()->record(std::move(step));
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw ValidationError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                        b.shape_string());
}

// add/sub broadcast analysis: returns true when `small` is a rank-1 vector
// spanning the last dimension of `big`.
bool row_broadcastable(const Tensor& big, const Tensor& small) {
  return big.rank() >= 2 && small.rank() == 1 && big.shape().back() == small.dim(0);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) {
    Tensor out = Tensor::zeros(a.shape());
    const std::size_t n = out.numel();
    for (std::size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] + b.values()[i];
    if (tracked(a) || tracked(b)) {
      mark_and_record(out, [a, b, out]() mutable {
        if (!out.has_grad()) return;
        const auto& g = out.grad();
        if (a.requires_grad()) {
          auto& ga = a.ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (b.requires_grad()) {
          auto& gb = b.ensure_grad();
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
      });
    }
    return out;
  }

  // Vector broadcast across rows.
  const bool a_big = row_broadcastable(a, b);
  const bool b_big = row_broadcastable(b, a);
  if (!a_big && !b_big) shape_error("add", a, b);
  const Tensor& big = a_big ? a : b;
  const Tensor& vec = a_big ? b : a;
  const std::size_t cols = static_cast<std::size_t>(big.shape().back());
  const std::size_t rows = big.numel() / cols;

  Tensor out = Tensor::zeros(big.shape());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out.values()[r * cols + c] = big.values()[r * cols + c] + vec.values()[c];

  if (tracked(a) || tracked(b)) {
    mark_and_record(out, [big, vec, out, rows, cols]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      if (big.requires_grad()) {
        auto& gb = big.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
      if (vec.requires_grad()) {
        auto& gv = vec.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) gv[c] += g[r * cols + c];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a, b);
  Tensor out = Tensor::zeros(a.shape());
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * b.values()[i];
  if (tracked(a) || tracked(b)) {
    mark_and_record(out, [a, b, out]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      if (a.requires_grad()) {
        auto& ga = a.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.values()[i];
      }
      if (b.requires_grad()) {
        auto& gb = b.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.values()[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double factor) {
  Tensor out = Tensor::zeros(a.shape());
  const std::size_t n = out.numel();
  for (std::size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * factor;
  if (tracked(a)) {
    mark_and_record(out, [a, out, factor]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      auto& ga = a.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
    });
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() != 2) shape_error("matmul", a, b);
  const int p = a.shape()[a.rank() - 2];
  const int q = a.shape()[a.rank() - 1];
  if (q != b.dim(0)) shape_error("matmul", a, b);
  const int r = b.dim(1);
  const std::size_t batch = a.numel() / (static_cast<std::size_t>(p) * q);

  std::vector<int> out_shape(a.shape().begin(), a.shape().end() - 1);
  out_shape.back() = r;
  Tensor out = Tensor::zeros(out_shape);

  const auto* av = a.values().data();
  const auto* bv = b.values().data();
  auto* ov = out.values().data();
  for (std::size_t n = 0; n < batch; ++n) {
    const double* A = av + n * static_cast<std::size_t>(p) * q;
    double* C = ov + n * static_cast<std::size_t>(p) * r;
    for (int i = 0; i < p; ++i) {
      for (int k = 0; k < q; ++k) {
        const double x = A[i * q + k];
        if (x == 0.0) continue;
        const double* B = bv + static_cast<std::size_t>(k) * r;
        double* row = C + static_cast<std::size_t>(i) * r;
        for (int j = 0; j < r; ++j) row[j] += x * B[j];
      }
    }
  }

  if (tracked(a) || tracked(b)) {
    mark_and_record(out, [a, b, out, batch, p, q, r]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      if (a.requires_grad()) {
        auto& ga = a.ensure_grad();
        const auto* bv2 = b.values().data();
        for (std::size_t n = 0; n < batch; ++n) {
          const double* G = g.data() + n * static_cast<std::size_t>(p) * r;
          double* GA = ga.data() + n * static_cast<std::size_t>(p) * q;
          for (int i = 0; i < p; ++i)
            for (int j = 0; j < r; ++j) {
              const double gij = G[i * r + j];
              if (gij == 0.0) continue;
              for (int k = 0; k < q; ++k) GA[i * q + k] += gij * bv2[k * r + j];
            }
        }
      }
      if (b.requires_grad()) {
        auto& gb = b.ensure_grad();
        const auto* av2 = a.values().data();
        for (std::size_t n = 0; n < batch; ++n) {
          const double* G = g.data() + n * static_cast<std::size_t>(p) * r;
          const double* A = av2 + n * static_cast<std::size_t>(p) * q;
          for (int i = 0; i < p; ++i)
            for (int k = 0; k < q; ++k) {
              const double aik = A[i * q + k];
              if (aik == 0.0) continue;
              for (int j = 0; j < r; ++j) gb[k * r + j] += aik * G[i * r + j];
            }
        }
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw ValidationError("transpose expects a 2D tensor, got " + a.shape_string());
  const int rows = a.dim(0), cols = a.dim(1);
  Tensor out = Tensor::zeros({cols, rows});
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out.at(j, i) = a.at(i, j);
  if (tracked(a)) {
    mark_and_record(out, [a, out, rows, cols]() mutable {
      if (!out.has_grad()) return;
      auto& ga = a.ensure_grad();
      const auto& g = out.grad();
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
          ga[static_cast<std::size_t>(i) * cols + j] += g[static_cast<std::size_t>(j) * rows + i];
    });
  }
  return out;
}

namespace {

// Iterates the 1D slices of `shape` along `axis`: outer * inner slices of
// length len with stride inner.
struct AxisView {
  std::size_t outer, len, inner;
};

AxisView axis_view(const std::vector<int>& shape, int axis) {
  AxisView v{1, 1, 1};
  for (int i = 0; i < static_cast<int>(shape.size()); ++i) {
    if (i < axis)
      v.outer *= static_cast<std::size_t>(shape[i]);
    else if (i == axis)
      v.len = static_cast<std::size_t>(shape[i]);
    else
      v.inner *= static_cast<std::size_t>(shape[i]);
  }
  return v;
}

}  // namespace

Tensor softmax(const Tensor& a, int axis) {
  if (axis < 0 || axis >= a.rank()) {
    throw ValidationError("softmax axis " + std::to_string(axis) + " invalid for shape " +
                          a.shape_string());
  }
  const AxisView v = axis_view(a.shape(), axis);
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      const std::size_t base = o * v.len * v.inner + in;
      double mx = a.values()[base];
      for (std::size_t k = 1; k < v.len; ++k) mx = std::max(mx, a.values()[base + k * v.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < v.len; ++k) {
        const double e = std::exp(a.values()[base + k * v.inner] - mx);
        out.values()[base + k * v.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < v.len; ++k) out.values()[base + k * v.inner] /= total;
    }
  }
  if (tracked(a)) {
    mark_and_record(out, [a, out, v]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      const auto& y = out.values();
      auto& ga = a.ensure_grad();
      for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t in = 0; in < v.inner; ++in) {
          const std::size_t base = o * v.len * v.inner + in;
          double dot = 0.0;
          for (std::size_t k = 0; k < v.len; ++k)
            dot += g[base + k * v.inner] * y[base + k * v.inner];
          for (std::size_t k = 0; k < v.len; ++k) {
            const std::size_t ix = base + k * v.inner;
            ga[ix] += y[ix] * (g[ix] - dot);
          }
        }
      }
    });
  }
  return out;
}

Tensor tanh(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out.values()[i] = std::tanh(a.values()[i]);
  if (tracked(a)) {
    mark_and_record(out, [a, out]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      const auto& y = out.values();
      auto& ga = a.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
  }
  return out;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluK = 0.044715;
}  // namespace

Tensor gelu(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double x = a.values()[i];
    out.values()[i] = 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluK * x * x * x)));
  }
  if (tracked(a)) {
    mark_and_record(out, [a, out]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      auto& ga = a.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = a.values()[i];
        const double t = std::tanh(kGeluC * (x + kGeluK * x * x * x));
        const double dinner = kGeluC * (1.0 + 3.0 * kGeluK * x * x);
        ga[i] += g[i] * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner);
      }
    });
  }
  return out;
}

Tensor log(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double x = a.values()[i];
    if (!(x > 0.0)) {
      throw ValidationError("log requires positive inputs, got " + std::to_string(x) +
                            " at flat index " + std::to_string(i));
    }
    out.values()[i] = std::log(x);
  }
  if (tracked(a)) {
    mark_and_record(out, [a, out]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      auto& ga = a.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / a.values()[i];
    });
  }
  return out;
}

Tensor clamp_min(const Tensor& a, double floor) {
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out.values()[i] = std::max(a.values()[i], floor);
  if (tracked(a)) {
    mark_and_record(out, [a, out, floor]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      auto& ga = a.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i)
        if (a.values()[i] > floor) ga[i] += g[i];
    });
  }
  return out;
}

Tensor embedding(const Tensor& table, const std::vector<int>& ids) {
  if (table.rank() != 2) {
    throw ValidationError("embedding table must be 2D, got " + table.shape_string());
  }
  const int vocab = table.dim(0), width = table.dim(1);
  for (int id : ids) {
    if (id < 0 || id >= vocab) {
      throw ValidationError("embedding id " + std::to_string(id) + " out of range [0, " +
                            std::to_string(vocab) + ")");
    }
  }
  Tensor out = Tensor::zeros({static_cast<int>(ids.size()), width});
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (int c = 0; c < width; ++c) out.at(static_cast<int>(i), c) = table.at(ids[i], c);
  if (tracked(table)) {
    mark_and_record(out, [table, out, ids, width]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      auto& gt = table.ensure_grad();
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (int c = 0; c < width; ++c)
          gt[static_cast<std::size_t>(ids[i]) * width + c] += g[i * width + c];
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() < 1) throw ValidationError("layer_norm expects rank >= 1");
  const int d = x.shape().back();
  if (gamma.rank() != 1 || gamma.dim(0) != d || beta.rank() != 1 || beta.dim(0) != d) {
    throw ValidationError("layer_norm gamma/beta must be [" + std::to_string(d) + "], got " +
                          gamma.shape_string() + " and " + beta.shape_string());
  }
  const std::size_t rows = x.numel() / static_cast<std::size_t>(d);
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.values().data() + r * d;
    double* yr = out.values().data() + r * d;
    double mu = 0.0;
    for (int k = 0; k < d; ++k) mu += xr[k];
    mu /= d;
    double var = 0.0;
    for (int k = 0; k < d; ++k) var += (xr[k] - mu) * (xr[k] - mu);
    var /= d;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int k = 0; k < d; ++k)
      yr[k] = gamma.values()[k] * (xr[k] - mu) * inv + beta.values()[k];
  }
  if (tracked(x) || tracked(gamma) || tracked(beta)) {
    mark_and_record(out, [x, gamma, beta, out, rows, d, eps]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.values().data() + r * d;
        const double* gr = g.data() + r * d;
        double mu = 0.0;
        for (int k = 0; k < d; ++k) mu += xr[k];
        mu /= d;
        double var = 0.0;
        for (int k = 0; k < d; ++k) var += (xr[k] - mu) * (xr[k] - mu);
        var /= d;
        const double inv = 1.0 / std::sqrt(var + eps);
        if (gamma.requires_grad() || beta.requires_grad()) {
          for (int k = 0; k < d; ++k) {
            const double xhat = (xr[k] - mu) * inv;
            if (gamma.requires_grad()) gamma.ensure_grad()[k] += gr[k] * xhat;
            if (beta.requires_grad()) beta.ensure_grad()[k] += gr[k];
          }
        }
        if (x.requires_grad()) {
          auto& gx = x.ensure_grad();
          double mean_h = 0.0, mean_hx = 0.0;
          for (int k = 0; k < d; ++k) {
            const double h = gr[k] * gamma.values()[k];
            mean_h += h;
            mean_hx += h * (xr[k] - mu) * inv;
          }
          mean_h /= d;
          mean_hx /= d;
          for (int k = 0; k < d; ++k) {
            const double h = gr[k] * gamma.values()[k];
            const double xhat = (xr[k] - mu) * inv;
            gx[r * d + k] += inv * (h - mean_h - xhat * mean_hx);
          }
        }
      }
    });
  }
  return out;
}

Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng, bool train) {
  if (p < 0.0 || p >= 1.0) throw ValidationError("dropout rate must be in [0, 1)");
  if (!train || p == 0.0) return x;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.numel());
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    mask[i] = unif(rng) >= p ? keep_scale : 0.0;
    out.values()[i] = x.values()[i] * mask[i];
  }
  if (tracked(x)) {
    mark_and_record(out, [x, out, mask = std::move(mask)]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      auto& gx = x.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& x, int col_begin, int col_end) {
  if (x.rank() != 2) throw ValidationError("slice_cols expects 2D, got " + x.shape_string());
  const int rows = x.dim(0), cols = x.dim(1);
  if (col_begin < 0 || col_end > cols || col_begin >= col_end) {
    throw ValidationError("slice_cols range [" + std::to_string(col_begin) + ", " +
                          std::to_string(col_end) + ") invalid for " + x.shape_string());
  }
  const int width = col_end - col_begin;
  Tensor out = Tensor::zeros({rows, width});
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < width; ++j) out.at(i, j) = x.at(i, col_begin + j);
  if (tracked(x)) {
    mark_and_record(out, [x, out, rows, cols, col_begin, width]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      auto& gx = x.ensure_grad();
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < width; ++j)
          gx[static_cast<std::size_t>(i) * cols + col_begin + j] +=
              g[static_cast<std::size_t>(i) * width + j];
    });
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ValidationError("concat_cols needs at least one tensor");
  const int rows = parts.front().dim(0);
  int total = 0;
  bool needs_grad = false;
  for (const Tensor& t : parts) {
    if (t.rank() != 2 || t.dim(0) != rows) shape_error("concat_cols", parts.front(), t);
    total += t.dim(1);
    needs_grad = needs_grad || tracked(t);
  }
  Tensor out = Tensor::zeros({rows, total});
  int offset = 0;
  for (const Tensor& t : parts) {
    const int w = t.dim(1);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < w; ++j) out.at(i, offset + j) = t.at(i, j);
    offset += w;
  }
  if (needs_grad) {
    mark_and_record(out, [parts, out, rows, total]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      int off = 0;
      for (Tensor& t : parts) {
        const int w = t.dim(1);
        if (t.requires_grad()) {
          auto& gt = t.ensure_grad();
          for (int i = 0; i < rows; ++i)
            for (int j = 0; j < w; ++j)
              gt[static_cast<std::size_t>(i) * w + j] +=
                  g[static_cast<std::size_t>(i) * total + off + j];
        }
        off += w;
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  Tensor out = Tensor::scalar(total);
  if (tracked(x)) {
    mark_and_record(out, [x, out]() mutable {
      if (!out.has_grad()) return;
      const double g = out.grad()[0];
      auto& gx = x.ensure_grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor gather_entries(const Tensor& x, const std::vector<std::pair<int, int>>& idx) {
  if (x.rank() != 2) throw ValidationError("gather_entries expects 2D, got " + x.shape_string());
  const int rows = x.dim(0), cols = x.dim(1);
  for (const auto& [i, j] : idx) {
    if (i < 0 || i >= rows || j < 0 || j >= cols) {
      throw ValidationError("gather_entries index (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") out of range for " + x.shape_string());
    }
  }
  Tensor out = Tensor::zeros({static_cast<int>(idx.size())});
  for (std::size_t k = 0; k < idx.size(); ++k) out.values()[k] = x.at(idx[k].first, idx[k].second);
  if (tracked(x)) {
    mark_and_record(out, [x, out, idx, cols]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      auto& gx = x.ensure_grad();
      for (std::size_t k = 0; k < idx.size(); ++k)
        gx[static_cast<std::size_t>(idx[k].first) * cols + idx[k].second] += g[k];
    });
  }
  return out;
}

Tensor span_logits(const Tensor& queries, const Tensor& keys, const Tensor& v) {
  if (queries.rank() != 2 || keys.rank() != 2 || v.rank() != 1 ||
      queries.dim(1) != keys.dim(1) || v.dim(0) != queries.dim(1)) {
    throw ValidationError("span_logits expects [m,d], [l,d], [d]; got " + queries.shape_string() +
                          ", " + keys.shape_string() + ", " + v.shape_string());
  }
  const int m = queries.dim(0), l = keys.dim(0), d = queries.dim(1);
  Tensor out = Tensor::zeros({m, l});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < l; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k)
        s += v.values()[k] * std::tanh(queries.at(i, k) + keys.at(j, k));
      out.at(i, j) = s;
    }
  }
  if (tracked(queries) || tracked(keys) || tracked(v)) {
    mark_and_record(out, [queries, keys, v, out, m, l, d]() mutable {
      if (!out.has_grad()) return;
      const auto& g = out.grad();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < l; ++j) {
          const double gij = g[static_cast<std::size_t>(i) * l + j];
          if (gij == 0.0) continue;
          for (int k = 0; k < d; ++k) {
            const double t = std::tanh(queries.at(i, k) + keys.at(j, k));
            if (v.requires_grad()) v.ensure_grad()[k] += gij * t;
            const double through = gij * v.values()[k] * (1.0 - t * t);
            if (queries.requires_grad())
              queries.ensure_grad()[static_cast<std::size_t>(i) * d + k] += through;
            if (keys.requires_grad())
              keys.ensure_grad()[static_cast<std::size_t>(j) * d + k] += through;
          }
        }
      }
    });
  }
  return out;
}

}  // namespace setre::ops

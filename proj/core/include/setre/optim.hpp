#pragma once

#include <cstdint>
#include <vector>

#include "setre/tensor.hpp"

namespace setre {

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double clip_norm = 1.0;  // global gradient norm ceiling; <= 0 disables clipping
};

/// AdamW with decoupled weight decay and global gradient-norm clipping.
/// Parameters are organized into groups so the encoder and decoder can run
/// at different learning rates; clipping is applied over all groups jointly
/// before any moment update.
class AdamW {
 public:
  explicit AdamW(AdamWOptions options = {});

  void add_group(std::vector<Tensor> params, double learning_rate);

  // One update. Throws if any parameter is missing its gradient.
  void step();
  void zero_grad();

  std::int64_t step_count() const { return step_count_; }
  const AdamWOptions& options() const { return options_; }

  // Norm of the concatenated gradient before clipping, from the last step().
  double last_grad_norm() const { return last_grad_norm_; }

 private:
  struct Slot {
    Tensor param;
    std::vector<double> m;
    std::vector<double> v;
    double lr;
  };

  AdamWOptions options_;
  std::vector<Slot> slots_;
  std::int64_t step_count_ = 0;
  double last_grad_norm_ = 0.0;
};

}  // namespace setre

#include "setre/optim.hpp"

#include <cmath>

namespace setre {

AdamW::AdamW(AdamWOptions options) : options_(options) {
  if (options_.beta1 < 0 || options_.beta1 >= 1 || options_.beta2 < 0 || options_.beta2 >= 1) {
    throw ValidationError("AdamW betas must lie in [0, 1)");
  }
  if (options_.eps <= 0) throw ValidationError("AdamW eps must be positive");
}

void AdamW::add_group(std::vector<Tensor> params, double learning_rate) {
  if (learning_rate <= 0) throw ValidationError("learning rate must be positive");
  for (Tensor& p : params) {
    Slot slot;
    slot.param = p;
    slot.m.assign(p.numel(), 0.0);
    slot.v.assign(p.numel(), 0.0);
    slot.lr = learning_rate;
    slots_.push_back(std::move(slot));
  }
}

void AdamW::step() {
  double norm_sq = 0.0;
  for (const Slot& slot : slots_) {
    if (!slot.param.has_grad()) {
      throw ValidationError("AdamW step with a missing gradient (parameter shape " +
                            slot.param.shape_string() + "); run backward first");
    }
    for (double g : slot.param.grad()) norm_sq += g * g;
  }
  last_grad_norm_ = std::sqrt(norm_sq);

  double clip_scale = 1.0;
  if (options_.clip_norm > 0 && last_grad_norm_ > options_.clip_norm) {
    clip_scale = options_.clip_norm / last_grad_norm_;
  }

  ++step_count_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_count_));

  for (Slot& slot : slots_) {
    auto& p = slot.param.values();
    const auto& g = slot.param.grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] * clip_scale;
      slot.m[i] = options_.beta1 * slot.m[i] + (1.0 - options_.beta1) * gi;
      slot.v[i] = options_.beta2 * slot.v[i] + (1.0 - options_.beta2) * gi * gi;
      const double m_hat = slot.m[i] / bc1;
      const double v_hat = slot.v[i] / bc2;
      p[i] -= slot.lr * (m_hat / (std::sqrt(v_hat) + options_.eps) + options_.weight_decay * p[i]);
    }
  }
}

void AdamW::zero_grad() {
  for (Slot& slot : slots_) slot.param.zero_grad();
}

}  // namespace setre

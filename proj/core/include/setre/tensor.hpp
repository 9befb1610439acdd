#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "setre/errors.hpp"

namespace setre {

/// Dense 64-bit float tensor with optional gradient storage.
///
/// A Tensor is a cheap handle onto shared storage: copying a Tensor aliases
/// the same values/grad buffers, which is what lets the tape and the
/// optimizer see parameter updates. Scalars use shape {1}.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return data_ != nullptr; }
  const std::vector<int>& shape() const { return data_->shape; }
  int rank() const { return static_cast<int>(data_->shape.size()); }
  int dim(int axis) const;
  std::size_t numel() const { return data_->values.size(); }

  std::vector<double>& values() { return data_->values; }
  const std::vector<double>& values() const { return data_->values; }

  // 2D row-major access.
  double& at(int row, int col);
  double at(int row, int col) const;

  bool requires_grad() const { return data_->requires_grad; }
  void set_requires_grad(bool flag) { data_->requires_grad = flag; }

  bool has_grad() const { return !data_->grad.empty(); }
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  // Allocates a zero-filled grad buffer if one does not exist yet.
  std::vector<double>& ensure_grad();
  void zero_grad();
  void drop_grad() { data_->grad.clear(); }

  // Identity of the underlying storage, for grad bookkeeping in tests.
  const void* id() const { return data_.get(); }

  std::string shape_string() const;
  bool all_finite() const;

 private:
  struct Storage {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until needed; same length as values otherwise
    bool requires_grad = false;
  };

  std::shared_ptr<Storage> data_;
};

std::size_t shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

/// Reverse-mode tape. Operations append themselves during the forward pass,
/// so the list is topologically ordered by construction; backward() replays
/// it once, in reverse.
///
/// A tape must stay on one thread for the duration of a forward/backward
/// pass. Ops record onto the innermost active TapeScope on that thread.
class Tape {
 public:
  void record(std::function<void()> backward_step) {
    steps_.push_back(std::move(backward_step));
  }
  std::size_t size() const { return steps_.size(); }
  void clear() { steps_.clear(); }

  friend void backward(const Tensor& loss, Tape& tape);

 private:
  std::vector<std::function<void()>> steps_;
};

/// RAII activation of a tape on the current thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

/// Seeds d(loss)/d(loss) = 1 and runs every recorded step in reverse order,
/// accumulating gradients into each tensor that requires them.
/// The loss must be a scalar (one element).
void backward(const Tensor& loss, Tape& tape);

}  // namespace setre

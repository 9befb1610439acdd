#include "setre/tensor.hpp"

#include <cmath>
#include <sstream>

namespace setre {

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ValidationError("tensor shape must have positive dimensions, got " + shape_to_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
  Tensor t;
  t.data_ = std::make_shared<Storage>();
  std::size_t n = shape_numel(shape);
  t.data_->shape = std::move(shape);
  t.data_->values.assign(n, value);
  t.data_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  if (values.size() != n) {
    throw ValidationError("tensor value count " + std::to_string(values.size()) +
                          " does not match shape " + shape_to_string(shape));
  }
  Tensor t;
  t.data_ = std::make_shared<Storage>();
  t.data_->shape = std::move(shape);
  t.data_->values = std::move(values);
  t.data_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

int Tensor::dim(int axis) const {
  if (axis < 0 || axis >= rank()) {
    throw ValidationError("axis " + std::to_string(axis) + " out of range for shape " + shape_string());
  }
  return data_->shape[static_cast<std::size_t>(axis)];
}

double& Tensor::at(int row, int col) {
  return data_->values[static_cast<std::size_t>(row) * static_cast<std::size_t>(data_->shape[1]) +
                       static_cast<std::size_t>(col)];
}

double Tensor::at(int row, int col) const {
  return data_->values[static_cast<std::size_t>(row) * static_cast<std::size_t>(data_->shape[1]) +
                       static_cast<std::size_t>(col)];
}

std::vector<double>& Tensor::grad() {
  if (data_->grad.empty()) throw ValidationError("tensor has no gradient buffer");
  return data_->grad;
}

const std::vector<double>& Tensor::grad() const {
  if (data_->grad.empty()) throw ValidationError("tensor has no gradient buffer");
  return data_->grad;
}

std::vector<double>& Tensor::ensure_grad() {
  if (data_->grad.empty()) data_->grad.assign(data_->values.size(), 0.0);
  return data_->grad;
}

void Tensor::zero_grad() {
  if (!data_->grad.empty()) data_->grad.assign(data_->values.size(), 0.0);
}

std::string Tensor::shape_string() const { return shape_to_string(data_->shape); }

bool Tensor::all_finite() const {
  for (double v : data_->values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

void backward(const Tensor& loss, Tape& tape) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ValidationError("backward expects a scalar loss, got shape " +
                          (loss.defined() ? loss.shape_string() : std::string("<undefined>")));
  }
  Tensor seed = loss;
  seed.ensure_grad()[0] += 1.0;
  for (auto it = tape.steps_.rbegin(); it != tape.steps_.rend(); ++it) {
    (*it)();
  }
}

}  // namespace setre

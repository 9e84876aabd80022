#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gazekit/rng.hpp"

namespace gazekit {

class Tape;

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

// Dense row-major tensor of 64-bit floats. Copies are shallow: a Tensor is a
// handle onto shared storage, so parameter structs and optimizer state can
// alias the same buffers. A gradient buffer of identical shape exists exactly
// when requires_grad is set; it accumulates across backward calls until
// zero_grad.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value);
  // Xavier-uniform init for a 2-D projection [fan_in x fan_out].
  static Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out,
                               Rng& rng, bool requires_grad = true);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t rows() const;  // 2-D convenience
  std::size_t cols() const;
  bool requires_grad() const;

  std::span<double> data();
  std::span<const double> data() const;
  std::span<double> grad();
  std::span<const double> grad() const;
  void zero_grad();

  double value() const;                           // scalar tensors only
  double at(std::size_t r, std::size_t c) const;  // 2-D convenience

  // Deep copy; the clone shares nothing with the source.
  Tensor clone() const;

  bool all_finite() const;

 private:
  friend class Tape;
  struct Impl;
  std::shared_ptr<Impl> impl_;
  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
};

// Records the forward graph and replays it in reverse for gradients.
// Nodes are appended in execution order, so the list is topologically
// sorted by construction. A tape drives exactly one backward pass; it is
// owned by a single training step and is not thread-safe.
//
// Every primitive validates its output: a NaN or Inf raises NumericError
// immediately rather than propagating.
class Tape {
 public:
  Tape() = default;
  // recording = false skips node bookkeeping entirely (pure inference).
  explicit Tape(bool recording) : recording_(recording) {}

  // --- structural ---
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor transpose(const Tensor& x);
  Tensor reshape(const Tensor& x, Shape shape);
  Tensor concat_rows(const Tensor& a, const Tensor& b);
  Tensor concat_cols(const Tensor& a, const Tensor& b);
  Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);

  // --- elementwise / reductions ---
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& x, double c);
  Tensor add_scalar(const Tensor& x, double c);
  Tensor add_row(const Tensor& m, const Tensor& row);  // broadcast over rows
  Tensor scale_rows(const Tensor& m, std::span<const double> w);  // constant w
  Tensor scale_by(const Tensor& x, const Tensor& s);  // s is a scalar tensor
  Tensor sum(const Tensor& x);                        // -> shape {1}
  Tensor mean_rows(const Tensor& x);                  // {n,d} -> {1,d}

  // --- nonlinearities ---
  Tensor sigmoid(const Tensor& x);
  Tensor tanh(const Tensor& x);
  Tensor relu(const Tensor& x);
  Tensor gelu(const Tensor& x);  // tanh approximation
  Tensor softmax(const Tensor& x);  // along last axis, max-stabilized
  Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                    double eps = 1e-5);
  Tensor dropout(const Tensor& x, double p, Rng& rng, bool train);

  // Seeds d(loss)/d(loss) = 1 and walks the graph in reverse. `loss` must be
  // a scalar produced on this tape; a second call is an error.
  void backward(const Tensor& loss);

  bool consumed() const { return consumed_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  Tensor make_output(Shape shape, bool requires_grad, const char* op);
  void record(std::function<void()> backprop);
  bool track(const Tensor& t) const;

  bool recording_ = true;
  bool consumed_ = false;
  std::vector<std::function<void()>> nodes_;
};

// Max over coordinates of |analytic - central_difference| /
// max(|analytic|, |cd|, 1e-7) for a scalar-valued function of x.
// Runs the forward pass twice first; a bitwise mismatch (hidden
// nondeterminism) raises NumericError.
double grad_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                  const Tensor& x, double eps = 1e-5);

}  // namespace gazekit

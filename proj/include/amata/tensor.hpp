#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace amata {

using Label = int;

// Dense row-major array of doubles. Rank is arbitrary but most of the
// library works with vectors and matrices.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-D element access; no bounds checks.
  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  /// Row `r` of a matrix as a contiguous span.
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  bool operator==(const Tensor&) const = default;

  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

enum class Reduction { mean, sum };

/// -log softmax(logits)[label] for one row, max-shifted. Writes the softmax
/// into `probs` when it is non-empty.
double cross_entropy_row(std::span<const double> logits, Label label, std::span<double> probs = {});

// Records a forward computation and replays it backwards. A tape is
// single-use: once backward() has run, further recording or a second
// backward pass is a contract error. Build a fresh tape per batch.
class Tape {
 public:
  struct Var {
    std::size_t id;
  };

  /// Registers an input. Only leaves created with `requires_grad` can be
  /// asked for gradients, and gradient work is skipped for the others.
  Var leaf(Tensor value, bool requires_grad);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// out[i,j] = sum_k x[i,k] * w[k,j] + b[j]
  Var affine(Var x, Var w, Var b);
  Var relu(Var x);
  /// Sum of all elements, as a scalar.
  Var sum(Var x);
  /// Cross-entropy of softmax(logits) against integer labels, reduced over
  /// the batch. Logits are max-shifted before exponentiation.
  Var softmax_cross_entropy(Var logits, std::span<const Label> labels,
                            Reduction reduction = Reduction::mean);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool consumed() const { return consumed_; }

  /// Reverse pass from a scalar `loss`. Returns d(loss)/d(leaf) for each
  /// requested leaf, in order.
  std::vector<Tensor> backward(Var loss, std::span<const Var> leaves);

 private:
  enum class Op { leaf, affine, relu, sum, softmax_ce };

  struct Node {
    Op op = Op::leaf;
    Tensor value;
    Tensor grad;  // allocated lazily during backward
    std::size_t in[3] = {0, 0, 0};
    bool requires_grad = false;
    Tensor probs;  // softmax_ce only
    std::vector<Label> labels;
    double scale = 1.0;
  };

  Var push(Node node);
  const Node& node(Var v) const;
  void check_recording() const;
  Tensor& grad_of(std::size_t id);

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace amata

#include "amata/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "amata/error.hpp"

namespace amata {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("tensor shape " + amata::shape_string(shape_) + " needs " +
                         std::to_string(element_count(shape_)) + " values, got " +
                         std::to_string(data_.size()));
  }
}

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t c = shape_.at(1);
  return {data_.data() + r * c, c};
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t c = shape_.at(1);
  return {data_.data() + r * c, c};
}

double cross_entropy_row(std::span<const double> z, Label label, std::span<double> probs) {
  const std::size_t classes = z.size();
  const std::size_t top = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
  const double m = z[top];
  // log(sum exp(z - m)) = log1p(sum over j != top), exact near saturation.
  double rest = 0.0;
  for (std::size_t j = 0; j < classes; ++j) {
    const double e = std::exp(z[j] - m);
    if (!probs.empty()) probs[j] = e;
    if (j != top) rest += e;
  }
  if (!probs.empty()) {
    const double norm = 1.0 + rest;
    for (double& p : probs) p /= norm;
  }
  return std::log1p(rest) - (z[static_cast<std::size_t>(label)] - m);
}

std::string Tensor::shape_string() const { return amata::shape_string(shape_); }

// ---------------------------------------------------------------------------
// Tape

Tape::Var Tape::push(Node node) {
  check_recording();
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw ContractError("variable does not belong to this tape");
  return nodes_[v.id];
}

void Tape::check_recording() const {
  if (consumed_) throw ContractError("tape already consumed by backward(); record a new tape");
}

Tensor& Tape::grad_of(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && n.value.size() != 0) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Tape::Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

Tape::Var Tape::affine(Var x, Var w, Var b) {
  const Tensor& xv = node(x).value;
  const Tensor& wv = node(w).value;
  const Tensor& bv = node(b).value;
  if (xv.rank() != 2 || wv.rank() != 2 || bv.rank() != 1 || xv.dim(1) != wv.dim(0) ||
      bv.dim(0) != wv.dim(1)) {
    throw DimensionError("affine: input " + xv.shape_string() + " does not conform with weight " +
                         wv.shape_string() + " and bias " + bv.shape_string());
  }
  const std::size_t rows = xv.dim(0), in = wv.dim(0), out = wv.dim(1);
  Tensor y({rows, out});
  for (std::size_t i = 0; i < rows; ++i) {
    double* yr = y.data() + i * out;
    std::copy(bv.data(), bv.data() + out, yr);
    const double* xr = xv.data() + i * in;
    for (std::size_t k = 0; k < in; ++k) {
      const double a = xr[k];
      if (a == 0.0) continue;
      const double* wr = wv.data() + k * out;
      for (std::size_t j = 0; j < out; ++j) yr[j] += a * wr[j];
    }
  }
  Node n;
  n.op = Op::affine;
  n.value = std::move(y);
  n.in[0] = x.id;
  n.in[1] = w.id;
  n.in[2] = b.id;
  n.requires_grad = node(x).requires_grad || node(w).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

Tape::Var Tape::relu(Var x) {
  Tensor y = node(x).value;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  Node n;
  n.op = Op::relu;
  n.value = std::move(y);
  n.in[0] = x.id;
  n.requires_grad = node(x).requires_grad;
  return push(std::move(n));
}

Tape::Var Tape::sum(Var x) {
  double s = 0.0;
  for (double v : node(x).value.values()) s += v;
  Node n;
  n.op = Op::sum;
  n.value = Tensor::scalar(s);
  n.in[0] = x.id;
  n.requires_grad = node(x).requires_grad;
  return push(std::move(n));
}

Tape::Var Tape::softmax_cross_entropy(Var logits, std::span<const Label> labels,
                                      Reduction reduction) {
  const Tensor& z = node(logits).value;
  if (z.rank() != 2) throw DimensionError("softmax_cross_entropy: logits must be a matrix, got " +
                                          z.shape_string());
  const std::size_t rows = z.dim(0), classes = z.dim(1);
  if (labels.size() != rows) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for logits " + z.shape_string());
  }
  Tensor probs({rows, classes});
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const Label y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw IndexError("label " + std::to_string(y) + " out of range for " +
                       std::to_string(classes) + " classes (row " + std::to_string(i) + ")");
    }
    total += cross_entropy_row(z.row(i), y, probs.row(i));
  }
  Node n;
  n.op = Op::softmax_ce;
  n.scale = (reduction == Reduction::mean && rows > 0) ? 1.0 / static_cast<double>(rows) : 1.0;
  n.value = Tensor::scalar(total * n.scale);
  n.in[0] = logits.id;
  n.probs = std::move(probs);
  n.labels.assign(labels.begin(), labels.end());
  n.requires_grad = node(logits).requires_grad;
  return push(std::move(n));
}

std::vector<Tensor> Tape::backward(Var loss, std::span<const Var> leaves) {
  check_recording();
  if (node(loss).value.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        node(loss).value.shape_string());
  }
  for (const Var& l : leaves) {
    if (node(l).op != Op::leaf || !node(l).requires_grad) {
      throw ContractError("backward: requested gradient of a variable that is not a grad leaf");
    }
  }
  consumed_ = true;

  grad_of(loss.id)[0] = 1.0;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::sum: {
        if (!nodes_[n.in[0]].requires_grad) break;
        Tensor& gx = grad_of(n.in[0]);
        for (double& v : gx.values()) v += g[0];
        break;
      }
      case Op::relu: {
        if (!nodes_[n.in[0]].requires_grad) break;
        Tensor& gx = grad_of(n.in[0]);
        const Tensor& x = nodes_[n.in[0]].value;
        for (std::size_t i = 0; i < gx.size(); ++i) {
          if (x[i] > 0.0) gx[i] += g[i];
        }
        break;
      }
      case Op::softmax_ce: {
        if (!nodes_[n.in[0]].requires_grad) break;
        Tensor& gz = grad_of(n.in[0]);
        const double s = g[0] * n.scale;
        const std::size_t classes = n.probs.dim(1);
        for (std::size_t i = 0; i < n.labels.size(); ++i) {
          auto pr = n.probs.row(i);
          auto gr = gz.row(i);
          for (std::size_t j = 0; j < classes; ++j) {
            const double target = static_cast<Label>(j) == n.labels[i] ? 1.0 : 0.0;
            gr[j] += s * (pr[j] - target);
          }
        }
        break;
      }
      case Op::affine: {
        const std::size_t xid = n.in[0], wid = n.in[1], bid = n.in[2];
        const Tensor& x = nodes_[xid].value;
        const Tensor& w = nodes_[wid].value;
        const std::size_t rows = x.dim(0), in = w.dim(0), out = w.dim(1);
        if (nodes_[xid].requires_grad) {
          // Transposed copy keeps the inner loop contiguous.
          std::vector<double> wt(out * in);
          for (std::size_t k = 0; k < in; ++k)
            for (std::size_t j = 0; j < out; ++j) wt[j * in + k] = w(k, j);
          Tensor& gx = grad_of(xid);
          for (std::size_t i = 0; i < rows; ++i) {
            double* gxr = gx.data() + i * in;
            const double* gr = g.data() + i * out;
            for (std::size_t j = 0; j < out; ++j) {
              const double a = gr[j];
              if (a == 0.0) continue;
              const double* wtr = wt.data() + j * in;
              for (std::size_t k = 0; k < in; ++k) gxr[k] += a * wtr[k];
            }
          }
        }
        if (nodes_[wid].requires_grad) {
          Tensor& gw = grad_of(wid);
          for (std::size_t i = 0; i < rows; ++i) {
            const double* xr = x.data() + i * in;
            const double* gr = g.data() + i * out;
            for (std::size_t k = 0; k < in; ++k) {
              const double a = xr[k];
              if (a == 0.0) continue;
              double* gwr = gw.data() + k * out;
              for (std::size_t j = 0; j < out; ++j) gwr[j] += a * gr[j];
            }
          }
        }
        if (nodes_[bid].requires_grad) {
          Tensor& gb = grad_of(bid);
          for (std::size_t i = 0; i < rows; ++i) {
            const double* gr = g.data() + i * out;
            for (std::size_t j = 0; j < out; ++j) gb[j] += gr[j];
          }
        }
        break;
      }
    }
  }

  std::vector<Tensor> out;
  out.reserve(leaves.size());
  for (const Var& l : leaves) {
    Node& n = nodes_[l.id];
    out.push_back(n.grad.empty() ? Tensor(n.value.shape()) : n.grad);
  }
  return out;
}

}  // namespace amata

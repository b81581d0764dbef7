#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "amata/models.hpp"
#include "amata/rng.hpp"
#include "amata/tensor.hpp"

namespace amata::testing {

struct Instance {
  Params params;
  Tensor x;
  std::vector<Label> y;
};

// Plain triple-loop forward pass in long double, independent of the tape.
inline std::vector<long double> naive_logits_row(const Params& params, const double* x_row,
                                                 std::size_t dim,
                                                 std::vector<std::vector<long double>>* pre = nullptr) {
  std::vector<long double> h(x_row, x_row + dim);
  const auto layers = params.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Tensor& w = layers[l].weight;
    const Tensor& b = layers[l].bias;
    std::vector<long double> z(w.dim(1));
    for (std::size_t j = 0; j < w.dim(1); ++j) {
      long double acc = b[j];
      for (std::size_t i = 0; i < w.dim(0); ++i) acc += h[i] * static_cast<long double>(w(i, j));
      z[j] = acc;
    }
    if (pre) pre->push_back(z);
    if (l + 1 < layers.size()) {
      for (auto& v : z) v = std::max<long double>(v, 0.0L);
    }
    h = std::move(z);
  }
  return h;
}

inline long double naive_ce(const std::vector<long double>& z, Label label) {
  long double m = z[0];
  for (auto v : z) m = std::max(m, v);
  long double s = 0.0L;
  for (auto v : z) s += std::exp(v - m);
  return std::log(s) + m - z[static_cast<std::size_t>(label)];
}

inline long double naive_mean_loss(const Params& params, const Tensor& x, const std::vector<Label>& y) {
  long double total = 0.0L;
  for (std::size_t r = 0; r < x.dim(0); ++r) {
    total += naive_ce(naive_logits_row(params, x.data() + r * x.dim(1), x.dim(1)), y[r]);
  }
  return total / static_cast<long double>(x.dim(0));
}

// Smallest |pre-activation| over the hidden layers; finite differences across
// a ReLU kink are meaningless, so instances too close to one are redrawn.
inline double kink_margin(const Params& params, const Tensor& x) {
  double margin = 1e300;
  for (std::size_t r = 0; r < x.dim(0); ++r) {
    std::vector<std::vector<long double>> pre;
    naive_logits_row(params, x.data() + r * x.dim(1), x.dim(1), &pre);
    for (std::size_t l = 0; l + 1 < pre.size(); ++l) {
      for (auto v : pre[l]) margin = std::min(margin, static_cast<double>(std::fabs(v)));
    }
  }
  return margin;
}

inline Instance random_instance(std::uint64_t seed, double min_margin = 1e-3) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(seed * 1000 + attempt);
    const std::size_t depth = 1 + rng.below(3);
    std::vector<std::size_t> sizes{2 + rng.below(5)};
    for (std::size_t d = 0; d < depth; ++d) sizes.push_back(2 + rng.below(6));
    sizes.push_back(2 + rng.below(4));
    MlpSpec spec{sizes, rng.below(1u << 30)};
    Instance inst{init_params(spec), Tensor({1 + rng.below(4), sizes.front()}), {}};
    for (auto& layer : inst.params.layers()) {
      for (auto& b : layer.bias.values()) b = rng.uniform(-0.5, 0.5);
    }
    for (auto& v : inst.x.values()) v = rng.uniform();
    for (std::size_t r = 0; r < inst.x.dim(0); ++r) {
      inst.y.push_back(static_cast<Label>(rng.below(sizes.back())));
    }
    if (kink_margin(inst.params, inst.x) > min_margin) return inst;
  }
}

// Five-point central difference of a scalar function of one coordinate.
template <class F>
double central_difference(F&& f, double& coord, double h) {
  const double saved = coord;
  coord = saved + 2 * h;
  const long double f2 = f();
  coord = saved + h;
  const long double f1 = f();
  coord = saved - h;
  const long double fm1 = f();
  coord = saved - 2 * h;
  const long double fm2 = f();
  coord = saved;
  return static_cast<double>((-f2 + 8 * f1 - 8 * fm1 + fm2) / (12 * h));
}

inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

}  // namespace amata::testing

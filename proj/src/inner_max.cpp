#include "amata/inner_max.hpp"

#include <algorithm>
#include <cmath>

#include "amata/error.hpp"
#include "amata/parallel.hpp"
#include "amata/rng.hpp"

namespace amata {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t end) {
  const std::size_t cols = t.dim(1);
  return Tensor({end - begin, cols},
                std::vector<double>(t.data() + begin * cols, t.data() + end * cols));
}

}  // namespace

AdvBatch AdvBatch::from_clean(Tensor x0, std::vector<Label> y, double eps, double domain_lo,
                              double domain_hi) {
  AdvBatch b;
  b.x = x0;
  b.x0 = std::move(x0);
  b.y = std::move(y);
  b.eps = eps;
  b.domain_lo = domain_lo;
  b.domain_hi = domain_hi;
  b.validate();
  return b;
}

void AdvBatch::validate() const {
  if (x0.shape() != x.shape() || x0.rank() != 2) {
    throw ContractError("AdvBatch: x " + x.shape_string() + " and x0 " + x0.shape_string() +
                        " must be matrices of equal shape");
  }
  if (y.size() != x0.dim(0)) throw ContractError("AdvBatch: label count does not match rows");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ContractError("AdvBatch: eps must be finite and >= 0");
  if (!(domain_lo <= domain_hi)) throw ContractError("AdvBatch: empty input domain");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] - x0[i]) > eps + 1e-12 || x[i] < domain_lo || x[i] > domain_hi) {
      throw ContractError("AdvBatch: element " + std::to_string(i) + " outside the feasible box");
    }
  }
}

void pgd_ascend(Tensor& x, const Tensor& x0, double eps, double domain_lo, double domain_hi,
                bool clip_domain, double alpha, int k_steps, const InputGradientFn& grad,
                std::vector<Tensor>* trajectory) {
  if (x.shape() != x0.shape()) throw DimensionError("pgd: x and x0 shapes differ");
  if (k_steps < 0) throw ContractError("pgd: negative step count");
  if (!std::isfinite(alpha) || !std::isfinite(eps)) throw ContractError("pgd: alpha and eps must be finite");
  if (trajectory) trajectory->push_back(x);
  for (int k = 0; k < k_steps; ++k) {
    const Tensor g = grad(x);
    if (g.shape() != x.shape()) throw DimensionError("pgd: gradient shape differs from input");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw NumericError("pgd: non-finite input gradient at step " + std::to_string(k + 1));
      }
      double v = x[i] + alpha * sign(g[i]);
      v = std::clamp(v, x0[i] - eps, x0[i] + eps);
      if (clip_domain) v = std::clamp(v, domain_lo, domain_hi);
      x[i] = v;
    }
    if (trajectory) trajectory->push_back(x);
  }
}

PgdResult pgd_perturb(const Params& params, AdvBatch batch, double alpha, int k_steps,
                      const PgdOptions& options) {
  if (!(alpha > 0.0) && k_steps > 0) throw ContractError("pgd: alpha must be positive");
  const std::size_t rows = batch.rows();
  batch.x = batch.x0;
  if (options.init == PgdInit::uniform_random) {
    Rng rng(options.seed);
    for (std::size_t i = 0; i < batch.x.size(); ++i) {
      double v = batch.x0[i] + rng.uniform(-batch.eps, batch.eps);
      if (options.clip_domain) v = std::clamp(v, batch.domain_lo, batch.domain_hi);
      batch.x[i] = v;
    }
  }

  // Summed loss makes every row's input gradient independent of the rest
  // of the batch, so chunking by rows does not change the result.
  auto run = [&](Tensor& x, const Tensor& x0, std::span<const Label> y,
                 std::vector<Tensor>* trajectory) {
    pgd_ascend(x, x0, batch.eps, batch.domain_lo, batch.domain_hi, options.clip_domain, alpha,
               k_steps,
               [&](const Tensor& at) {
                 return loss_and_grads(params, at, y, Wrt::input, Reduction::sum).input_grad;
               },
               trajectory);
  };

  if (options.threads <= 1 || options.trajectory != nullptr || rows < 2) {
    run(batch.x, batch.x0, batch.y, options.trajectory);
  } else {
    const std::size_t cols = batch.x0.dim(1);
    parallel_chunks(rows, options.threads, [&](std::size_t begin, std::size_t end) {
      Tensor x = slice_rows(batch.x, begin, end);
      const Tensor x0 = slice_rows(batch.x0, begin, end);
      run(x, x0, std::span<const Label>(batch.y).subspan(begin, end - begin), nullptr);
      std::copy(x.data(), x.data() + x.size(), batch.x.data() + begin * cols);
    });
  }

  PgdResult result;
  result.loss = rows && options.compute_loss ? mean_loss(params, batch.x, batch.y) : 0.0;
  result.batch = std::move(batch);
  return result;
}

}  // namespace amata

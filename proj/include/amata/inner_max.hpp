#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "amata/models.hpp"
#include "amata/tensor.hpp"

namespace amata {

// Clean inputs, their current perturbation, and the box that binds them:
// |x - x0|_inf <= eps and domain_lo <= x <= domain_hi, componentwise.
struct AdvBatch {
  Tensor x0;
  Tensor x;
  std::vector<Label> y;
  double eps = 0.0;
  double domain_lo = 0.0;
  double domain_hi = 1.0;

  /// Batch with x == x0.
  static AdvBatch from_clean(Tensor x0, std::vector<Label> y, double eps, double domain_lo = 0.0,
                             double domain_hi = 1.0);

  /// Throws ContractError if a shape or box invariant is violated.
  void validate() const;
  std::size_t rows() const { return x0.rank() == 2 ? x0.dim(0) : 0; }
};

enum class PgdInit { clean, uniform_random };

struct PgdOptions {
  PgdInit init = PgdInit::clean;
  bool clip_domain = true;
  std::uint64_t seed = 0;       // uniform_random only
  std::size_t threads = 1;
  std::vector<Tensor>* trajectory = nullptr;  // if set, receives x after init and every step
  bool compute_loss = true;                   // fill PgdResult::loss
};

struct PgdResult {
  AdvBatch batch;
  double loss = 0.0;  // mean loss at the returned x
};

// Gradient of the objective being maximized, evaluated at x.
using InputGradientFn = std::function<Tensor(const Tensor& x)>;

/// Core sign-gradient ascent loop. Each step:
///   x <- clip(x + alpha * sign(grad(x)), x0 - eps, x0 + eps)
///   x <- clip(x, lo, hi)            (when clip_domain)
/// with sign(0) = 0. Non-finite gradients raise NumericError naming the step.
void pgd_ascend(Tensor& x, const Tensor& x0, double eps, double domain_lo, double domain_hi,
                bool clip_domain, double alpha, int k_steps, const InputGradientFn& grad,
                std::vector<Tensor>* trajectory = nullptr);

/// Inner maximization of the cross-entropy of `params` around batch.x0.
/// Starts from x0 (or a uniform draw in the eps-ball), ignoring batch.x.
PgdResult pgd_perturb(const Params& params, AdvBatch batch, double alpha, int k_steps,
                      const PgdOptions& options = {});

}  // namespace amata

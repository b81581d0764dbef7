#pragma once

#include <optional>
#include <span>
#include <vector>

#include "amata/inner_max.hpp"
#include "amata/models.hpp"
#include "amata/schedules.hpp"

namespace amata {

// Searchable inner-loop settings (K, alpha).
struct CandidateSet {
  std::vector<InnerSetting> settings;

  /// K in `ks`, alpha = tau / K.
  static CandidateSet with_budget(double tau, std::span<const int> ks);
  /// K in {1, 2, 5, 10, 20, 40}, alpha = tau / K.
  static CandidateSet default_grid(double tau);

  /// Non-empty, K >= 1, alpha > 0, and (if a band is given) every
  /// alpha * K inside [band_lo, band_hi].
  void validate(std::optional<std::pair<double, double>> budget_band = std::nullopt) const;
};

struct CandidateScore {
  InnerSetting setting;
  double grad_norm_sq = 0.0;
  double surrogate = 0.0;  // grad_norm_sq - gamma * K
};

struct CriterionReport {
  double gamma = 0.0;
  InnerSetting current;
  std::size_t current_index = 0;
  std::size_t best_index = 0;
  std::vector<CandidateScore> candidates;
  double c_value = 0.0;  // max surrogate - current surrogate

  const CandidateScore& best() const { return candidates[best_index]; }
};

/// Greedy optimality gap of the inner setting `current` at the present
/// parameters: for each candidate, attack the clean batch with PGD(K, alpha)
/// and score |grad_theta loss|^2 - gamma * K. `current` is appended to the
/// candidates when missing.
CriterionReport criterion_c(const Params& params, const AdvBatch& batch, InnerSetting current,
                            const CandidateSet& candidates, double gamma, bool clip_domain = true,
                            std::size_t threads = 1);

/// First-order stationarity of a perturbed point inside the l_inf ball:
///   eps * |g|_1 - <x - x0, g>
double fosc(std::span<const double> x, std::span<const double> x0, std::span<const double> grad_x,
            double eps);

}  // namespace amata

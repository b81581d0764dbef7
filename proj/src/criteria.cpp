#include "amata/criteria.hpp"

#include <algorithm>
#include <cmath>

#include "amata/error.hpp"
#include "amata/parallel.hpp"

namespace amata {

CandidateSet CandidateSet::with_budget(double tau, std::span<const int> ks) {
  CandidateSet g;
  for (int k : ks) g.settings.push_back({k, split_budget(tau, static_cast<double>(k))});
  return g;
}

CandidateSet CandidateSet::default_grid(double tau) {
  static constexpr int kDefaultKs[] = {1, 2, 5, 10, 20, 40};
  return with_budget(tau, kDefaultKs);
}

void CandidateSet::validate(std::optional<std::pair<double, double>> band) const {
  if (settings.empty()) throw ContractError("criterion: empty candidate set");
  for (const InnerSetting& s : settings) {
    if (s.k < 1 || !(s.alpha > 0.0)) throw ContractError("criterion: candidates need K >= 1 and alpha > 0");
    if (band) {
      const double budget = s.alpha * s.k;
      if (budget < band->first || budget > band->second) {
        throw ContractError("criterion: candidate budget " + std::to_string(budget) +
                            " outside the configured band");
      }
    }
  }
}

CriterionReport criterion_c(const Params& params, const AdvBatch& batch, InnerSetting current,
                            const CandidateSet& candidates, double gamma, bool clip_domain,
                            std::size_t threads) {
  candidates.validate();
  CriterionReport report;
  report.gamma = gamma;
  report.current = current;
  std::vector<InnerSetting> settings = candidates.settings;
  auto it = std::find(settings.begin(), settings.end(), current);
  if (it == settings.end()) {
    settings.push_back(current);
    it = settings.end() - 1;
  }
  report.current_index = static_cast<std::size_t>(it - settings.begin());
  report.candidates.resize(settings.size());

  // Candidates are independent; each writes only its own slot.
  parallel_chunks(settings.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      PgdOptions opts;
      opts.clip_domain = clip_domain;
      opts.compute_loss = false;
      const PgdResult adv = pgd_perturb(params, batch, settings[i].alpha, settings[i].k, opts);
      const LossAndGrads lg = loss_and_grads(params, adv.batch.x, batch.y, Wrt::params);
      CandidateScore& s = report.candidates[i];
      s.setting = settings[i];
      s.grad_norm_sq = squared_norm(lg.param_grads);
      s.surrogate = s.grad_norm_sq - gamma * settings[i].k;
    }
  });

  for (std::size_t i = 1; i < report.candidates.size(); ++i) {
    if (report.candidates[i].surrogate > report.candidates[report.best_index].surrogate) {
      report.best_index = i;
    }
  }
  report.c_value = report.candidates[report.best_index].surrogate -
                   report.candidates[report.current_index].surrogate;
  return report;
}

double fosc(std::span<const double> x, std::span<const double> x0, std::span<const double> grad_x,
            double eps) {
  if (x.size() != x0.size() || x.size() != grad_x.size()) {
    throw DimensionError("fosc: x, x0 and gradient lengths differ");
  }
  double l1 = 0.0, inner = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    l1 += std::abs(grad_x[i]);
    inner += (x[i] - x0[i]) * grad_x[i];
  }
  return eps * l1 - inner;
}

}  // namespace amata

#include "amata/attacks.hpp"

#include <cmath>

#include "amata/error.hpp"

namespace amata {

void AttackSpec::validate() const {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ContractError("attack eps must be finite and >= 0");
  if (!(alpha > 0.0)) throw ContractError("attack alpha must be positive");
  if (k_steps < 0) throw ContractError("attack k_steps must be >= 0");
  if (restarts < 1) throw ContractError("attack restarts must be >= 1");
}

RobustnessReport evaluate_robust(const Params& params, const Dataset& data, const AttackSpec& spec,
                                 std::size_t threads) {
  spec.validate();
  RobustnessReport report;
  const std::size_t n = data.size();
  if (n == 0) return report;

  const Tensor clean_logits = logits(params, data.inputs);
  const std::vector<Label> clean_pred = predict(clean_logits);
  std::vector<bool> robust(n);
  std::size_t clean_hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    robust[i] = clean_pred[i] == data.labels[i];
    clean_hits += robust[i];
  }
  report.clean_acc = static_cast<double>(clean_hits) / static_cast<double>(n);
  report.clean_loss = mean_loss(params, data.inputs, data.labels);

  for (int r = 0; r < spec.restarts; ++r) {
    PgdOptions opts;
    opts.init = r == 0 ? spec.init : PgdInit::uniform_random;
    opts.seed = spec.seed + static_cast<std::uint64_t>(r);
    opts.clip_domain = spec.clip_domain;
    opts.threads = threads;
    PgdResult adv = pgd_perturb(params, AdvBatch::from_clean(data.inputs, data.labels, spec.eps),
                                spec.alpha, spec.k_steps, opts);
    if (r == 0) report.adversarial_loss = adv.loss;
    const std::vector<Label> pred = predict(logits(params, adv.batch.x));
    for (std::size_t i = 0; i < n; ++i) {
      if (pred[i] != data.labels[i]) robust[i] = false;
    }
  }
  std::size_t hits = 0;
  for (bool b : robust) hits += b;
  report.robust_acc = static_cast<double>(hits) / static_cast<double>(n);
  return report;
}

}  // namespace amata

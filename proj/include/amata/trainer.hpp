#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amata/attacks.hpp"
#include "amata/data_io.hpp"
#include "amata/models.hpp"
#include "amata/schedules.hpp"

namespace amata {

struct TrainConfig {
  int epochs = 1;
  std::size_t batch_size = 100;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<int> lr_milestones;
  double lr_decay_factor = 0.1;
  std::uint64_t seed = 0;  // shuffling stream
  ScheduleSpec schedule;   // horizon must equal epochs
  double eps = 0.3;
  bool clip_domain = true;
  std::optional<AttackSpec> attack_eval;
  bool record_wall_time = false;  // off keeps the ledger byte-reproducible
  std::size_t threads = 1;

  void validate() const;
};

struct MetricsRow {
  int epoch = 0;
  int k = 0;
  double alpha = 0.0;
  double train_loss = 0.0;
  double clean_acc = 0.0;
  std::optional<double> robust_acc;
  std::int64_t cumulative_inner_steps = 0;
  double wall_seconds = 0.0;
  double grad_norm_sq = 0.0;  // |grad_theta loss|^2 on the epoch's last batch
};

struct TrainResult {
  Params params;
  std::vector<MetricsRow> ledger;
};

struct SgdState {
  std::vector<Layer> velocity;  // empty until the first step
};

/// v <- momentum * v + grad + weight_decay * param;  param <- param - lr * v
void sgd_step(Params& params, const std::vector<Layer>& grads, SgdState& state, double lr,
              double momentum, double weight_decay);

/// Base lr times decay_factor^(number of milestones <= epoch).
double lr_at(const TrainConfig& config, int epoch);

/// Adversarial training from freshly initialized parameters. Metrics are
/// measured on `eval` when given, otherwise on the training set.
TrainResult train(const TrainConfig& config, const Dataset& data, const MlpSpec& spec,
                  const Dataset* eval = nullptr);

/// As train(), starting from the given parameters.
TrainResult train_from(const TrainConfig& config, const Dataset& data, Params initial,
                       const Dataset* eval = nullptr);

std::size_t batches_per_epoch(std::size_t examples, std::size_t batch_size);

/// CSV with header
/// epoch,k,alpha,train_loss,clean_acc,robust_acc,cum_inner_steps,wall_seconds,grad_norm_sq
std::string metrics_csv(const std::vector<MetricsRow>& rows);

}  // namespace amata

#include "amata/trainer.hpp"

#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "amata/error.hpp"
#include "amata/inner_max.hpp"
#include "amata/rng.hpp"

namespace amata {

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractError("epochs must be >= 1");
  if (batch_size < 1) throw ContractError("batch_size must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ContractError("lr must be finite and >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ContractError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ContractError("weight_decay must be >= 0");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) {
    throw ContractError("lr_decay_factor must lie in (0, 1]");
  }
  if (!(eps >= 0.0)) throw ContractError("eps must be >= 0");
  schedule.validate();
  if (schedule.horizon != epochs) {
    throw ContractError("schedule horizon " + std::to_string(schedule.horizon) +
                        " differs from epochs " + std::to_string(epochs));
  }
  if (attack_eval) attack_eval->validate();
}

void sgd_step(Params& params, const std::vector<Layer>& grads, SgdState& state, double lr,
              double momentum, double weight_decay) {
  auto layers = params.layers();
  if (grads.size() != layers.size()) throw DimensionError("sgd_step: gradient layer count mismatch");
  if (state.velocity.empty()) {
    for (const Layer& L : layers) state.velocity.push_back({Tensor(L.weight.shape()), Tensor(L.bias.shape())});
  }
  auto update = [&](Tensor& p, const Tensor& g, Tensor& v) {
    if (p.shape() != g.shape() || p.shape() != v.shape()) {
      throw DimensionError("sgd_step: gradient " + g.shape_string() + " vs parameter " + p.shape_string());
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = momentum * v[i] + g[i] + weight_decay * p[i];
      p[i] -= lr * v[i];
    }
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, grads[l].weight, state.velocity[l].weight);
    update(layers[l].bias, grads[l].bias, state.velocity[l].bias);
  }
}

double lr_at(const TrainConfig& config, int epoch) {
  double lr = config.lr;
  for (int m : config.lr_milestones) {
    if (m <= epoch) lr *= config.lr_decay_factor;
  }
  return lr;
}

std::size_t batches_per_epoch(std::size_t examples, std::size_t batch_size) {
  return (examples + batch_size - 1) / batch_size;
}

TrainResult train(const TrainConfig& config, const Dataset& data, const MlpSpec& spec,
                  const Dataset* eval) {
  spec.validate();
  if (spec.input_dim() != data.dim() || spec.class_count() < data.class_count) {
    throw DimensionError("model " + shape_string(spec.layer_sizes) + " does not fit dataset with " +
                         std::to_string(data.dim()) + " features and " +
                         std::to_string(data.class_count) + " classes");
  }
  return train_from(config, data, init_params(spec), eval);
}

TrainResult train_from(const TrainConfig& config, const Dataset& data, Params params,
                       const Dataset* eval) {
  config.validate();
  if (params.layer_sizes().empty() || params.layer_sizes().front() != data.dim()) {
    throw DimensionError("parameters do not match dataset dimension " + std::to_string(data.dim()));
  }
  const Dataset& probe = eval ? *eval : data;
  const std::size_t n = data.size();
  const std::size_t batches = batches_per_epoch(n, config.batch_size);
  Rng shuffle(config.seed);
  SgdState state;
  TrainResult result;
  std::int64_t cumulative = 0;
  const auto started = std::chrono::steady_clock::now();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const InnerSetting inner = setting_at(config.schedule, epoch);
    const double lr = lr_at(config, epoch);
    const std::vector<std::size_t> order = shuffle.permutation(n);
    double loss_sum = 0.0;
    double last_grad_norm = 0.0;

    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(n, begin + config.batch_size);
      Dataset mb = data.gather(std::span<const std::size_t>(order).subspan(begin, end - begin));

      Tensor x_adv;
      if (config.eps > 0.0) {
        PgdOptions opts;
        opts.clip_domain = config.clip_domain;
        opts.threads = config.threads;
        opts.compute_loss = false;
        PgdResult adv = pgd_perturb(params, AdvBatch::from_clean(std::move(mb.inputs), mb.labels, config.eps),
                                    inner.alpha, inner.k, opts);
        x_adv = std::move(adv.batch.x);
      } else {
        // A zero-radius ball pins every PGD iterate to the clean input.
        x_adv = std::move(mb.inputs);
      }

      LossAndGrads lg = loss_and_grads(params, x_adv, mb.labels, Wrt::params);
      if (!std::isfinite(lg.loss)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b));
      }
      loss_sum += lg.loss * static_cast<double>(end - begin);
      last_grad_norm = squared_norm(lg.param_grads);
      sgd_step(params, lg.param_grads, state, lr, config.momentum, config.weight_decay);
    }
    cumulative += static_cast<std::int64_t>(inner.k) * static_cast<std::int64_t>(batches);

    MetricsRow row;
    row.epoch = epoch;
    row.k = inner.k;
    row.alpha = inner.alpha;
    row.train_loss = n ? loss_sum / static_cast<double>(n) : 0.0;
    row.clean_acc = accuracy(params, probe.inputs, probe.labels);
    if (config.attack_eval) {
      row.robust_acc = evaluate_robust(params, probe, *config.attack_eval, config.threads).robust_acc;
    }
    row.cumulative_inner_steps = cumulative;
    row.grad_norm_sq = last_grad_norm;
    if (config.record_wall_time) {
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    result.ledger.push_back(row);
  }
  result.params = std::move(params);
  return result;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out =
      "epoch,k,alpha,train_loss,clean_acc,robust_acc,cum_inner_steps,wall_seconds,grad_norm_sq\n";
  for (const MetricsRow& r : rows) {
    out += fmt::format("{},{},{:.9g},{:.9g},{:.9g},{},{},{:.9g},{:.9g}\n", r.epoch, r.k, r.alpha,
                       r.train_loss, r.clean_acc,
                       r.robust_acc ? fmt::format("{:.9g}", *r.robust_acc) : std::string(),
                       r.cumulative_inner_steps, r.wall_seconds, r.grad_norm_sq);
  }
  return out;
}

}  // namespace amata

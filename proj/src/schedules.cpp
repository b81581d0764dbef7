#include "amata/schedules.hpp"

#include <algorithm>
#include <cmath>

#include "amata/error.hpp"

namespace amata {

namespace {

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

}  // namespace

std::string to_string(ScheduleVariant v) {
  switch (v) {
    case ScheduleVariant::constant: return "constant";
    case ScheduleVariant::linear: return "linear";
    case ScheduleVariant::exponential: return "exponential";
    case ScheduleVariant::toy_optimal: return "toy_optimal";
    case ScheduleVariant::explicit_list: return "explicit";
  }
  return "?";
}

ScheduleVariant schedule_variant_from_string(const std::string& s) {
  if (s == "constant") return ScheduleVariant::constant;
  if (s == "linear") return ScheduleVariant::linear;
  if (s == "exponential") return ScheduleVariant::exponential;
  if (s == "toy_optimal") return ScheduleVariant::toy_optimal;
  if (s == "explicit") return ScheduleVariant::explicit_list;
  throw ContractError("unknown schedule variant '" + s + "'");
}

void ScheduleSpec::validate() const {
  if (horizon < 1) throw ContractError("schedule horizon must be >= 1");
  if (variant == ScheduleVariant::explicit_list) {
    if (explicit_list.size() != static_cast<std::size_t>(horizon)) {
      throw ContractError("explicit schedule has " + std::to_string(explicit_list.size()) +
                          " entries for horizon " + std::to_string(horizon));
    }
    for (const auto& s : explicit_list) {
      if (s.k < 1 || !(s.alpha > 0.0)) throw ContractError("explicit schedule entries need K >= 1, alpha > 0");
    }
    return;
  }
  if (k_min < 1 || k_max < k_min) {
    throw ContractError("schedule needs 1 <= k_min <= k_max (got " + std::to_string(k_min) + ", " +
                        std::to_string(k_max) + ")");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ContractError("schedule tau must be positive");
  if (variant == ScheduleVariant::exponential && !(eta_shape > 0.0)) {
    throw ContractError("exponential schedule needs eta_shape > 0");
  }
}

int steps_at(const ScheduleSpec& spec, int t) {
  spec.validate();
  const int upper = spec.variant == ScheduleVariant::explicit_list ? spec.horizon - 1 : spec.horizon;
  if (t < 0 || t > upper) {
    throw ContractError("schedule step " + std::to_string(t) + " outside [0, " +
                        std::to_string(spec.horizon) + ")");
  }
  const int span = spec.k_max - spec.k_min;
  const int T = spec.horizon;
  int k = 0;
  switch (spec.variant) {
    case ScheduleVariant::constant:
      k = spec.k_max;
      break;
    case ScheduleVariant::linear: {
      // Integer form of round_half_up(k_min + span * t / T), exact for all t.
      const std::int64_t num = 2LL * span * t + T;
      k = spec.k_min + static_cast<int>(num / (2LL * T));
      break;
    }
    case ScheduleVariant::exponential: {
      const double frac = -std::expm1(-spec.eta_shape * t) / -std::expm1(-spec.eta_shape * T);
      k = round_half_up(spec.k_min + span * frac);
      break;
    }
    case ScheduleVariant::toy_optimal: {
      const double toy_t = 3.0 * t / T;
      const double e = spec.theta0 * spec.theta0 * std::exp(-2.0 * toy_t);
      k = round_half_up(2.0 * spec.tau / (e + 1.0));
      break;
    }
    case ScheduleVariant::explicit_list:
      return spec.explicit_list[static_cast<std::size_t>(t)].k;
  }
  return std::clamp(k, 1, spec.k_max);
}

double split_budget(double budget, double divisor) {
  const double q = budget / divisor;
  if (q * divisor == budget) return q;
  double up = q, down = q;
  for (int i = 0; i < 4; ++i) {
    up = std::nextafter(up, HUGE_VAL);
    if (up * divisor == budget) return up;
    down = std::nextafter(down, -HUGE_VAL);
    if (down * divisor == budget) return down;
  }
  return q;
}

double alpha_at(const ScheduleSpec& spec, int t) {
  const int k = steps_at(spec, t);
  if (spec.variant == ScheduleVariant::explicit_list) {
    return spec.explicit_list[static_cast<std::size_t>(t)].alpha;
  }
  return split_budget(spec.tau, static_cast<double>(k));
}

InnerSetting setting_at(const ScheduleSpec& spec, int t) { return {steps_at(spec, t), alpha_at(spec, t)}; }

std::int64_t total_inner_steps(const ScheduleSpec& spec, std::int64_t batches_per_epoch) {
  std::int64_t total = 0;
  for (int t = 0; t < spec.horizon; ++t) total += steps_at(spec, t);
  return total * batches_per_epoch;
}

}  // namespace amata

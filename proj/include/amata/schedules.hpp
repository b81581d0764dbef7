#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace amata {

enum class ScheduleVariant { constant, linear, exponential, toy_optimal, explicit_list };

std::string to_string(ScheduleVariant v);
ScheduleVariant schedule_variant_from_string(const std::string& s);

struct InnerSetting {
  int k = 1;
  double alpha = 0.0;

  bool operator==(const InnerSetting&) const = default;
};

// Annealing schedule for the inner maximization: outer step t in [0, T)
// maps to a step count K_t and a step size alpha_t with alpha_t * K_t = tau
// (except for explicit lists, which carry their own alphas).
struct ScheduleSpec {
  ScheduleVariant variant = ScheduleVariant::linear;
  int k_min = 1;
  int k_max = 1;
  double tau = 1.0;
  int horizon = 1;         // T, number of epochs
  double eta_shape = 1.0;  // exponential only
  double theta0 = 1.0;     // toy_optimal only
  std::vector<InnerSetting> explicit_list;

  void validate() const;
};

/// K_t. Formula variants also accept t == T (the terminal value); explicit
/// lists accept t in [0, T).
int steps_at(const ScheduleSpec& spec, int t);

/// tau / K_t, or the listed alpha for explicit schedules.
double alpha_at(const ScheduleSpec& spec, int t);

InnerSetting setting_at(const ScheduleSpec& spec, int t);

/// sum over t in [0, T) of K_t * batches_per_epoch.
std::int64_t total_inner_steps(const ScheduleSpec& spec, std::int64_t batches_per_epoch);

/// Nearest double q to budget / divisor for which q * divisor == budget in
/// floating point, when such a neighbour of the quotient exists.
double split_budget(double budget, double divisor);

}  // namespace amata

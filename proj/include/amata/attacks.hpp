#pragma once

#include <cstdint>

#include "amata/data_io.hpp"
#include "amata/inner_max.hpp"
#include "amata/models.hpp"

namespace amata {

// PGD-K evaluation attack. Restart 0 starts from spec.init; later restarts
// start from uniform draws in the eps-ball, one seed stream per restart.
struct AttackSpec {
  double eps = 0.3;
  double alpha = 0.01;
  int k_steps = 40;
  PgdInit init = PgdInit::clean;
  int restarts = 1;
  std::uint64_t seed = 0;
  bool clip_domain = true;

  void validate() const;
};

struct RobustnessReport {
  double clean_acc = 0.0;
  double robust_acc = 0.0;
  double clean_loss = 0.0;        // mean over the dataset
  double adversarial_loss = 0.0;  // mean over the dataset, first restart
};

/// An example counts as robust only if it is classified correctly after
/// every restart.
RobustnessReport evaluate_robust(const Params& params, const Dataset& data, const AttackSpec& spec,
                                 std::size_t threads = 1);

}  // namespace amata

#include <gtest/gtest.h>

#include <cmath>

#include "amata/control_toy.hpp"
#include "amata/error.hpp"

using namespace amata;
using namespace amata::toy;

TEST(Toy, RobustLossIsInnerMaximum) {
  for (double theta : {-2.0, -0.5, 0.0, 0.7, 3.0}) {
    EXPECT_DOUBLE_EQ(loss(theta, theta), robust_loss(theta));
    EXPECT_LT(loss(theta, theta + 0.1), robust_loss(theta));
  }
}

TEST(Toy, InnerExactMatchesIteratedAscent) {
  for (double theta : {-1.3, 0.4, 1.0, 2.2}) {
    for (double alpha : {0.05, 0.25, 0.5}) {
      const double tau = 2.0;
      const int steps = static_cast<int>(std::lround(tau / alpha));
      const double s = theta * theta + 1.0;
      double x = 0.0;
      for (int k = 0; k < steps; ++k) x += alpha * (-2.0 * (x - theta) / s);
      EXPECT_NEAR(inner_exact(theta, alpha, tau), x, 1e-12) << theta << " " << alpha;
    }
  }
}

TEST(Toy, DriftIsNegativeOuterGradient) {
  // d theta/dt = -d/d theta loss(theta, x) with x held at the inner iterate.
  for (double theta : {-1.1, 0.3, 0.8, 1.7}) {
    for (double alpha : {0.1, 0.4}) {
      const double tau = 3.0;
      const double x = inner_exact(theta, alpha, tau);
      const double h = 1e-6;
      const double fd = (loss(theta + h, x) - loss(theta - h, x)) / (2 * h);
      EXPECT_NEAR(drift(theta, alpha, tau), -fd, 1e-8);
    }
  }
}

TEST(Toy, DriftIsContinuousAcrossStabilityBound) {
  const double theta = 0.9, tau = 10.0;
  const double top = alpha_upper(theta);
  EXPECT_DOUBLE_EQ(drift(theta, top, tau), -theta);
  EXPECT_NEAR(drift(theta, top - 1e-9, tau), -theta, 1e-12);
  EXPECT_DOUBLE_EQ(drift(theta, top + 1e-3, tau), -theta);
}

TEST(Toy, HamiltonianIncreasesInAlphaWhenCoStateOpposesState) {
  for (double theta : {0.3, 1.0, 1.5}) {
    const double p = -theta, tau = 10.0, gamma = 0.04;
    const double top = alpha_upper(theta);
    double prev = -HUGE_VAL;
    for (int i = 1; i <= 200; ++i) {
      const double a = top * i / 200.0;
      const double h = hamiltonian(theta, p, a, tau, gamma);
      EXPECT_GT(h, prev) << theta << " " << a;
      prev = h;
    }
  }
}

TEST(Toy, HamiltonianRejectsInadmissibleAlpha) {
  EXPECT_THROW(hamiltonian(1.0, -1.0, 0.0, 10.0, 0.04), ContractError);
  EXPECT_THROW(hamiltonian(1.0, -1.0, 1.0 + 1e-9, 10.0, 0.04), ContractError);
  EXPECT_NO_THROW(hamiltonian(1.0, -1.0, 1.0, 10.0, 0.04));
}

TEST(Toy, OptimalControlClosedForm) {
  for (double t : {0.0, 0.5, 1.0, 3.0}) {
    EXPECT_DOUBLE_EQ(optimal_alpha(1.0, t), alpha_upper(std::exp(-t)));
    EXPECT_NEAR(optimal_k(1.0, t, 10.0), 20.0 / (std::exp(-2 * t) + 1.0), 1e-12);
  }
  EXPECT_DOUBLE_EQ(optimal_k(1.0, 0.0, 10.0), 10.0);
}

TEST(Toy, FlowUnderOptimalControlIsExponentialDecay) {
  ToyConfig c;
  auto traj = integrate_flow(c, [&](double t) { return optimal_alpha(c.theta0, t); });
  ASSERT_EQ(traj.size(), 3001u);
  double worst = 0.0;
  for (const auto& s : traj) worst = std::max(worst, std::fabs(s.theta - c.theta0 * std::exp(-s.t)));
  EXPECT_LT(worst, 1e-6);
}

TEST(Toy, Rk4ConvergesAtFourthOrder) {
  ToyConfig c;
  c.t_end = 1.0;
  auto alpha = [](double t) { return 0.2 + 0.1 * std::sin(t); };
  auto end = [&](double dt) {
    ToyConfig cc = c;
    cc.dt = dt;
    return integrate_flow(cc, alpha).back().theta;
  };
  const double ref = end(1e-4);
  const double e1 = std::fabs(end(0.1) - ref);
  const double e2 = std::fabs(end(0.05) - ref);
  EXPECT_GT(e1 / e2, 12.0);
  EXPECT_LT(e1 / e2, 20.0);
}

TEST(Toy, PmpReproducesOptimalSchedule) {
  ToyConfig c;  // theta0 1, tau 10, gamma 0.04, t_end 3, dt 1e-3
  PmpReport r = verify_pmp(c, 1e-4, 1);
  ASSERT_EQ(r.samples.size(), 3001u);
  EXPECT_LE(r.max_deviation, 2e-4);
  for (std::size_t i = 1; i < r.samples.size(); ++i) {
    EXPECT_GT(r.samples[i].k_star, r.samples[i - 1].k_star);
  }
  for (const auto& s : r.samples) {
    EXPECT_LT(s.p * s.theta, 0.0) << s.t;
    // Along alpha* the flow is d theta/dt = -theta, so dp/dt = p from p_T = -theta_T.
    const double p_exact = -std::exp(-3.0) * std::exp(s.t - 3.0);
    EXPECT_NEAR(s.p, p_exact, 1e-6) << s.t;
  }
}

TEST(Toy, PmpSamplingKeepsFinalStep) {
  ToyConfig c;
  c.t_end = 0.1;
  PmpReport r = verify_pmp(c, 1e-3, 30);
  ASSERT_EQ(r.samples.size(), 5u);  // steps 0, 30, 60, 90 and the final 100
  EXPECT_NEAR(r.samples.back().t, 0.1, 1e-15);
}

TEST(Toy, ConfigValidation) {
  ToyConfig c;
  c.tau = 2.0;  // not above 1 + theta0^2
  EXPECT_THROW(c.validate(), ContractError);
  EXPECT_THROW(verify_pmp(c), ContractError);
  c = ToyConfig{};
  EXPECT_THROW(verify_pmp(c, 0.0), ContractError);
}

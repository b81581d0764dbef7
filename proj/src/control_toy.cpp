#include "amata/control_toy.hpp"

#include <algorithm>
#include <cmath>

#include "amata/error.hpp"
#include "amata/schedules.hpp"

namespace amata::toy {

namespace {

constexpr double kDivergence = 1e6;
constexpr double kThetaStep = 1e-6;  // central-difference step for dH/dtheta

double contraction(double theta, double alpha, double tau) {
  const double q = 1.0 - 2.0 * alpha / (theta * theta + 1.0);
  return std::pow(std::max(q, 0.0), tau / alpha);
}

// H without the admissibility check, for finite differences that straddle
// the stability bound.
double hamiltonian_unchecked(double theta, double p, double alpha, double tau, double gamma) {
  return p * drift(theta, alpha, tau) - gamma * tau / alpha;
}

template <typename F>
double rk4_step(double t, double y, double h, F&& f) {
  const double k1 = f(t, y);
  const double k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
  const double k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
  const double k4 = f(t + h, y + h * k3);
  return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

int step_count(const ToyConfig& c) { return static_cast<int>(std::lround(c.t_end / c.dt)); }

}  // namespace

void ToyConfig::validate() const {
  if (!(dt > 0.0) || !(t_end > 0.0)) throw ContractError("toy: dt and t_end must be positive");
  if (!(gamma > 0.0)) throw ContractError("toy: gamma must be positive");
  if (!(tau > 1.0 + theta0 * theta0)) {
    throw ContractError("toy: tau must exceed 1 + theta0^2");
  }
}

double loss(double theta, double x) {
  const double d = x - theta;
  return 0.5 * theta * theta - d * d / (theta * theta + 1.0);
}

double robust_loss(double theta) { return 0.5 * theta * theta; }

double alpha_upper(double theta) { return 0.5 * (1.0 + theta * theta); }

double inner_exact(double theta, double alpha, double tau) {
  if (!(alpha > 0.0)) throw ContractError("toy: alpha must be positive");
  return theta - theta * std::pow(1.0 - 2.0 * alpha / (theta * theta + 1.0), tau / alpha);
}

double drift(double theta, double alpha, double tau) {
  if (!(alpha > 0.0)) throw ContractError("toy: alpha must be positive");
  const double s = theta * theta + 1.0;
  const double r = contraction(theta, alpha, tau);
  return 2.0 * theta * r / s - 2.0 * theta * theta * theta * r * r / (s * s) - theta;
}

double hamiltonian(double theta, double p, double alpha, double tau, double gamma) {
  if (!(alpha > 0.0) || alpha > alpha_upper(theta)) {
    throw ContractError("toy: alpha outside the stability interval (0, (1 + theta^2) / 2]");
  }
  return hamiltonian_unchecked(theta, p, alpha, tau, gamma);
}

double optimal_alpha(double theta0, double t) {
  return 0.5 * (1.0 + theta0 * theta0 * std::exp(-2.0 * t));
}

double optimal_k(double theta0, double t, double tau) {
  return split_budget(tau, optimal_alpha(theta0, t));
}

std::vector<ToyState> integrate_flow(const ToyConfig& config, const AlphaSchedule& alpha) {
  if (!(config.dt > 0.0)) throw ContractError("toy: dt must be positive");
  const int n = step_count(config);
  auto f = [&](double t, double theta) { return drift(theta, alpha(t), config.tau); };
  std::vector<ToyState> traj;
  traj.reserve(static_cast<std::size_t>(n) + 1);
  double theta = config.theta0;
  traj.push_back({0.0, theta, 0.0});
  for (int i = 0; i < n; ++i) {
    const double t = i * config.dt;
    theta = rk4_step(t, theta, config.dt, f);
    if (!std::isfinite(theta) || std::abs(theta) > kDivergence) {
      throw NumericError("toy flow diverged at t = " + std::to_string(t + config.dt));
    }
    traj.push_back({(i + 1) * config.dt, theta, 0.0});
  }
  return traj;
}

PmpReport verify_pmp(const ToyConfig& config, double alpha_grid, int sample_every) {
  config.validate();
  if (!(alpha_grid > 0.0) || sample_every < 1) throw ContractError("toy: bad PMP grid settings");
  const double theta0 = config.theta0, tau = config.tau, gamma = config.gamma;
  auto alpha_star = [&](double t) { return optimal_alpha(theta0, t); };

  std::vector<ToyState> traj = integrate_flow(config, alpha_star);
  const int n = static_cast<int>(traj.size()) - 1;

  // Co-state runs backward jointly with the state, from the terminal
  // condition p_T = -dPhi/dtheta = -theta_T for Phi = theta^2 / 2.
  auto dh_dtheta = [&](double theta, double p, double t) {
    const double a = alpha_star(t);
    return (hamiltonian_unchecked(theta + kThetaStep, p, a, tau, gamma) -
            hamiltonian_unchecked(theta - kThetaStep, p, a, tau, gamma)) /
           (2.0 * kThetaStep);
  };
  double theta = traj.back().theta;
  double p = -theta;
  traj.back().p = p;
  const double h = -config.dt;
  for (int i = n; i > 0; --i) {
    const double t = traj[static_cast<std::size_t>(i)].t;
    auto ft = [&](double tt, double th) { return drift(th, alpha_star(tt), tau); };
    auto fp = [&](double tt, double th, double pp) { return -dh_dtheta(th, pp, tt); };
    const double k1t = ft(t, theta), k1p = fp(t, theta, p);
    const double k2t = ft(t + 0.5 * h, theta + 0.5 * h * k1t), k2p = fp(t + 0.5 * h, theta + 0.5 * h * k1t, p + 0.5 * h * k1p);
    const double k3t = ft(t + 0.5 * h, theta + 0.5 * h * k2t), k3p = fp(t + 0.5 * h, theta + 0.5 * h * k2t, p + 0.5 * h * k2p);
    const double k4t = ft(t + h, theta + h * k3t), k4p = fp(t + h, theta + h * k3t, p + h * k3p);
    theta += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    if (!std::isfinite(p) || std::abs(p) > kDivergence) {
      throw NumericError("toy co-state diverged at t = " + std::to_string(t + h));
    }
    traj[static_cast<std::size_t>(i - 1)].p = p;
  }

  PmpReport report;
  for (int i = 0; i <= n; ++i) {
    if (i % sample_every != 0 && i != n) continue;
    const ToyState& s = traj[static_cast<std::size_t>(i)];
    PmpSample out;
    out.t = s.t;
    out.theta = s.theta;
    out.p = s.p;
    out.alpha_star = alpha_star(s.t);
    out.k_star = optimal_k(theta0, s.t, tau);
    out.hamiltonian = hamiltonian_unchecked(s.theta, s.p, out.alpha_star, tau, gamma);

    // Grid anchored at the upper end of the admissible interval, stepping down.
    const double top = alpha_upper(s.theta);
    double best = -HUGE_VAL;
    for (long j = 0;; ++j) {
      const double a = top - static_cast<double>(j) * alpha_grid;
      if (!(a > 0.0)) break;
      const double v = hamiltonian(s.theta, s.p, a, tau, gamma);
      if (v > best) {
        best = v;
        out.alpha_argmax = a;
      }
    }
    report.max_deviation = std::max(report.max_deviation, std::abs(out.alpha_argmax - out.alpha_star));
    report.samples.push_back(out);
  }
  return report;
}

}  // namespace amata::toy

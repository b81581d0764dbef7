#pragma once

#include <functional>
#include <vector>

namespace amata::toy {

// One-dimensional min-max problem
//   loss(theta, x) = theta^2 / 2 - (x - theta)^2 / (theta^2 + 1)
// whose robust loss max_x loss = theta^2 / 2 has a unique minimum at 0,
// while the inner landscape in x sharpens as theta -> 0.

struct ToyConfig {
  double theta0 = 1.0;
  double tau = 10.0;  // inner budget alpha * K; must exceed 1 + theta0^2
  double gamma = 0.04;
  double t_end = 3.0;
  double dt = 1e-3;

  void validate() const;
};

struct ToyState {
  double t = 0.0;
  double theta = 0.0;
  double p = 0.0;  // co-state; zero where only the state was integrated
};

double loss(double theta, double x);
double robust_loss(double theta);

/// Largest stable inner step size, (1 + theta^2) / 2.
double alpha_upper(double theta);

/// Closed form of tau/alpha gradient-ascent steps on x from x = 0:
///   theta - theta * (1 - 2 alpha / (theta^2 + 1))^(tau / alpha)
double inner_exact(double theta, double alpha, double tau);

/// Outer gradient flow d(theta)/dt = -d loss/d theta at x = inner_exact(...).
/// Past the stability bound the contraction factor is clamped at zero, which
/// continues the drift C^1 across alpha = alpha_upper(theta).
double drift(double theta, double alpha, double tau);

/// H = p * drift - gamma * tau / alpha. Requires 0 < alpha <= alpha_upper(theta).
double hamiltonian(double theta, double p, double alpha, double tau, double gamma);

/// alpha*(t) = (1 + theta0^2 e^{-2t}) / 2
double optimal_alpha(double theta0, double t);
/// K*(t) = tau / alpha*(t) = 2 tau / (theta0^2 e^{-2t} + 1)
double optimal_k(double theta0, double t, double tau);

using AlphaSchedule = std::function<double(double t)>;

/// Classical RK4 on d(theta)/dt = drift(theta, alpha(t), tau) from theta0 over
/// [0, t_end]; one sample per step (including t = 0). Throws NumericError if
/// |theta| exceeds 1e6.
std::vector<ToyState> integrate_flow(const ToyConfig& config, const AlphaSchedule& alpha);

struct PmpSample {
  double t = 0.0;
  double theta = 0.0;
  double p = 0.0;
  double alpha_star = 0.0;
  double k_star = 0.0;
  double alpha_argmax = 0.0;  // grid maximizer of H at (theta, p)
  double hamiltonian = 0.0;   // H at alpha_star
};

struct PmpReport {
  std::vector<PmpSample> samples;
  double max_deviation = 0.0;  // max |alpha_argmax - alpha_star|
};

/// Integrates the state forward under alpha*, the co-state backward from
/// p_T = -theta_T (dp/dt = -dH/dtheta by central differences), and compares
/// the grid argmax of H over (0, alpha_upper(theta)] with alpha* at every
/// `sample_every`-th step (the final step is always sampled).
PmpReport verify_pmp(const ToyConfig& config, double alpha_grid = 1e-4, int sample_every = 1);

}  // namespace amata::toy

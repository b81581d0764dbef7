#include "amata/landscape.hpp"

#include <algorithm>
#include <cmath>

#include "amata/error.hpp"
#include "amata/rng.hpp"

namespace amata {

namespace {

constexpr double kResidualTol = 1e-10;
constexpr int kMaxIterations = 200000;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

}  // namespace

ProjectionAxes compute_axes(std::span<const std::vector<double>> perturbations, std::uint64_t seed,
                            bool orthogonalize) {
  if (perturbations.empty()) throw DegenerateInputError("compute_axes: no perturbation vectors");
  const std::size_t d = perturbations.front().size();
  bool any_nonzero = false;
  for (const auto& v : perturbations) {
    if (v.size() != d) throw DimensionError("compute_axes: perturbation vectors differ in length");
    any_nonzero = any_nonzero || std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
  }
  if (!any_nonzero) throw DegenerateInputError("compute_axes: all perturbation vectors are zero");

  Rng rng(seed);
  ProjectionAxes axes;
  axes.seed = seed;
  axes.y_axis.resize(d);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& v : axes.y_axis) v = rng.rademacher() * inv_sqrt_d;

  const double inv_n = 1.0 / static_cast<double>(perturbations.size());
  auto apply = [&](const std::vector<double>& u) {
    std::vector<double> out(d, 0.0);
    for (const auto& v : perturbations) {
      const double c = dot(v, u) * inv_n;
      for (std::size_t i = 0; i < d; ++i) out[i] += c * v[i];
    }
    return out;
  };

  std::vector<double> u(d);
  for (double& x : u) x = rng.normal();
  normalize(u);
  for (int it = 0; it < kMaxIterations; ++it) {
    std::vector<double> mu = apply(u);
    const double lambda = dot(u, mu);
    double res = 0.0;
    for (std::size_t i = 0; i < d; ++i) res += (mu[i] - lambda * u[i]) * (mu[i] - lambda * u[i]);
    const double scale = std::sqrt(dot(mu, mu));
    if (scale == 0.0) {
      // Start vector orthogonal to every perturbation; restart from one.
      u = perturbations.front();
      for (const auto& v : perturbations) {
        if (std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; })) {
          u = v;
          break;
        }
      }
      normalize(u);
      continue;
    }
    for (std::size_t i = 0; i < d; ++i) u[i] = mu[i] / scale;
    if (std::sqrt(res) <= kResidualTol * scale) break;
  }

  const auto first = std::find_if(u.begin(), u.end(), [](double x) { return std::abs(x) > 1e-12; });
  if (first != u.end() && *first < 0.0) {
    for (double& x : u) x = -x;
  }
  axes.x_axis = std::move(u);

  if (orthogonalize) {
    const double c = dot(axes.y_axis, axes.x_axis);
    for (std::size_t i = 0; i < d; ++i) axes.y_axis[i] -= c * axes.x_axis[i];
    normalize(axes.y_axis);
  }
  return axes;
}

LossGrid loss_grid(const Params& params, std::span<const double> x0, Label label,
                   const ProjectionAxes& axes, double extent, std::size_t resolution,
                   bool clip_domain) {
  if (resolution < 2) throw ContractError("loss_grid: resolution must be >= 2");
  const std::size_t d = x0.size();
  if (axes.x_axis.size() != d || axes.y_axis.size() != d) {
    throw DimensionError("loss_grid: axes do not match the input dimension");
  }
  LossGrid grid;
  grid.resolution = resolution;
  const double denom = static_cast<double>(resolution - 1);
  for (std::size_t i = 0; i < resolution; ++i) {
    grid.offsets.push_back(extent * (2.0 * static_cast<double>(i) - denom) / denom);
  }
  grid.values.resize(resolution * resolution);

  // One row of the grid per batched forward pass.
  const std::vector<Label> labels(resolution, label);
  for (std::size_t i = 0; i < resolution; ++i) {
    Tensor batch({resolution, d});
    const double si = grid.offsets[i];
    for (std::size_t j = 0; j < resolution; ++j) {
      const double sj = grid.offsets[j];
      auto r = batch.row(j);
      for (std::size_t k = 0; k < d; ++k) {
        double v = x0[k] + si * axes.x_axis[k] + sj * axes.y_axis[k];
        if (clip_domain) v = std::clamp(v, 0.0, 1.0);
        r[k] = v;
      }
    }
    const std::vector<double> losses = example_losses(params, batch, labels);
    std::copy(losses.begin(), losses.end(), grid.values.begin() + static_cast<std::ptrdiff_t>(i * resolution));
  }
  return grid;
}

std::vector<std::pair<double, double>> project_trajectory(
    std::span<const std::vector<double>> trajectory, std::span<const double> x0,
    const ProjectionAxes& axes) {
  std::vector<std::pair<double, double>> out;
  out.reserve(trajectory.size());
  std::vector<double> diff(x0.size());
  for (const auto& x : trajectory) {
    if (x.size() != x0.size()) throw DimensionError("project_trajectory: point length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - x0[i];
    out.emplace_back(dot(diff, axes.x_axis), dot(diff, axes.y_axis));
  }
  return out;
}

}  // namespace amata

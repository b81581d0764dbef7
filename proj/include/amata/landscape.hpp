#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "amata/models.hpp"

namespace amata {

// Two-dimensional view of the input space around a clean example: the
// leading principal direction of a set of perturbations, and a normalized
// Rademacher direction.
struct ProjectionAxes {
  std::vector<double> x_axis;
  std::vector<double> y_axis;
  std::uint64_t seed = 0;
};

/// x_axis: dominant eigenvector of (1/n) sum v v^T over the perturbations
/// (power iteration), sign fixed so its first nonzero entry is positive.
/// y_axis: seeded Rademacher vector / sqrt(D), optionally Gram-Schmidt
/// orthogonalized against x_axis.
ProjectionAxes compute_axes(std::span<const std::vector<double>> perturbations, std::uint64_t seed,
                            bool orthogonalize = false);

struct LossGrid {
  std::size_t resolution = 0;
  std::vector<double> offsets;  // s_0..s_{n-1}, shared by both axes
  std::vector<double> values;   // values[i * resolution + j] at (s_i, s_j)

  double at(std::size_t i, std::size_t j) const { return values[i * resolution + j]; }
};

/// Loss of the single example (x0, label) at x0 + s_i x_axis + s_j y_axis,
/// with s spanning [-extent, extent] uniformly (the middle offset of an odd
/// resolution is exactly 0).
LossGrid loss_grid(const Params& params, std::span<const double> x0, Label label,
                   const ProjectionAxes& axes, double extent, std::size_t resolution,
                   bool clip_domain = true);

/// (<x - x0, x_axis>, <x - x0, y_axis>) per point.
std::vector<std::pair<double, double>> project_trajectory(
    std::span<const std::vector<double>> trajectory, std::span<const double> x0,
    const ProjectionAxes& axes);

}  // namespace amata

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "amata/tensor.hpp"

namespace amata {

// Inputs in [0, 1], one row per example.
struct Dataset {
  Tensor inputs;  // [N x D]
  std::vector<Label> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return inputs.rank() == 2 ? inputs.dim(1) : 0; }

  /// Rows [begin, end) as a new dataset.
  Dataset slice(std::size_t begin, std::size_t end) const;
  /// Rows at the given indices, in that order.
  Dataset gather(std::span<const std::size_t> idx) const;

  void validate() const;
  bool operator==(const Dataset&) const = default;
};

/// Parses MNIST-style IDX images (magic 0x00000803) and labels (0x00000801).
/// Either file may be gzip-compressed. Pixels are scaled by 1/255.
Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
Dataset parse_mnist_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels);

/// Writes a dataset in the same IDX layout (pixels rounded to bytes).
/// Rows are stored as sqrt(D) x sqrt(D) images when D is square, else 1 x D.
void export_idx(const Dataset& data, const std::filesystem::path& images,
                const std::filesystem::path& labels);

/// Isotropic unit-variance Gaussians centred at separation * e_c, mapped
/// into [0, 1] by a fixed affine squash and clamp.
Dataset synth_gaussians(std::size_t n_per_class, std::size_t dim, std::size_t class_count,
                        double separation, std::uint64_t seed);

/// n rows drawn without replacement, kept in their original relative order.
Dataset subset(const Dataset& data, std::size_t n, std::uint64_t seed);

/// Same draw as subset(); the second element holds the rows not selected.
std::pair<Dataset, Dataset> partition(const Dataset& data, std::size_t n, std::uint64_t seed);

}  // namespace amata

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "amata/tensor.hpp"

namespace amata {

// Fully connected ReLU network. layer_sizes = {input, hidden..., classes}.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t class_count() const { return layer_sizes.back(); }
};

struct Layer {
  Tensor weight;  // [fan_in x fan_out]
  Tensor bias;    // [fan_out]

  bool operator==(const Layer&) const = default;
};

class Params {
 public:
  Params() = default;
  explicit Params(std::vector<Layer> layers);

  std::span<const Layer> layers() const { return layers_; }
  std::span<Layer> layers() { return layers_; }
  std::vector<std::size_t> layer_sizes() const;
  std::size_t parameter_count() const;

  /// Weights then bias of each layer, in layer order.
  std::vector<double> flatten() const;
  /// Inverse of flatten(); `flat` must have parameter_count() entries.
  void unflatten(std::span<const double> flat);

  bool operator==(const Params&) const = default;

 private:
  std::vector<Layer> layers_;
};

/// Weights ~ N(0, 1/fan_in) from the spec's seed, biases zero.
Params init_params(const MlpSpec& spec);

/// Inference-only forward pass.
Tensor logits(const Params& params, const Tensor& x);

enum class Wrt { params, input, both };

struct LossAndGrads {
  double loss = 0.0;
  std::vector<Layer> param_grads;  // populated for Wrt::params / Wrt::both
  Tensor input_grad;               // populated for Wrt::input / Wrt::both
};

// Cross-entropy of the network on (x, y) and the requested gradients.
// With Reduction::sum each row's input gradient depends only on that row,
// which is what the attack code relies on to split batches freely.
LossAndGrads loss_and_grads(const Params& params, const Tensor& x, std::span<const Label> y,
                            Wrt wrt, Reduction reduction = Reduction::mean);

/// Mean cross-entropy without gradients.
double mean_loss(const Params& params, const Tensor& x, std::span<const Label> y);

/// Per-row cross-entropy, computed row by row exactly as the batched loss.
std::vector<double> example_losses(const Params& params, const Tensor& x, std::span<const Label> y);

/// Index of the largest entry per row; ties go to the lowest index.
std::vector<Label> predict(const Tensor& logits);

/// Fraction of rows whose argmax matches the label (0 for an empty batch).
double accuracy(const Params& params, const Tensor& x, std::span<const Label> y);
double accuracy_from_logits(const Tensor& logits, std::span<const Label> y);

/// Squared L2 norm over all gradient entries.
double squared_norm(std::span<const Layer> grads);

// Binary model file: "AMLP", u32 version, u32 size count, u32 sizes...,
// then each layer's weights (row-major) and bias as little-endian f64.
void save_params(const Params& params, const std::filesystem::path& path);
Params load_params(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_params(const Params& params);
Params deserialize_params(std::span<const std::uint8_t> bytes);

}  // namespace amata

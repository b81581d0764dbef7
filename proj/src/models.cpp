#include "amata/models.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "amata/error.hpp"
#include "amata/io.hpp"
#include "amata/rng.hpp"

namespace amata {

namespace {

constexpr char kMagic[4] = {'A', 'M', 'L', 'P'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw FormatError("model file truncated at byte " + std::to_string(pos_));
    }
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct Forward {
  Tape tape;
  Tape::Var input{};
  std::vector<Tape::Var> weights, biases;
  Tape::Var out{};
};

void build_forward(Forward& f, const Params& params, const Tensor& x, bool grad_input,
                   bool grad_params) {
  const auto layers = params.layers();
  if (x.rank() != 2 || layers.empty() || x.dim(1) != layers.front().weight.dim(0)) {
    throw DimensionError("model expects inputs [B x " +
                         std::to_string(layers.empty() ? 0 : layers.front().weight.dim(0)) +
                         "], got " + x.shape_string());
  }
  f.input = f.tape.leaf(x, grad_input);
  Tape::Var h = f.input;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    f.weights.push_back(f.tape.leaf(layers[l].weight, grad_params));
    f.biases.push_back(f.tape.leaf(layers[l].bias, grad_params));
    h = f.tape.affine(h, f.weights.back(), f.biases.back());
    if (l + 1 < layers.size()) h = f.tape.relu(h);
  }
  f.out = h;
}

}  // namespace

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) throw ContractError("MlpSpec needs at least input and output sizes");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw ContractError("MlpSpec layer sizes must be positive");
  }
}

Params::Params(std::vector<Layer> layers) : layers_(std::move(layers)) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& L = layers_[l];
    if (L.weight.rank() != 2 || L.bias.rank() != 1 || L.bias.dim(0) != L.weight.dim(1) ||
        (l > 0 && layers_[l - 1].weight.dim(1) != L.weight.dim(0))) {
      throw DimensionError("inconsistent layer " + std::to_string(l) + ": weight " +
                           L.weight.shape_string() + ", bias " + L.bias.shape_string());
    }
  }
}

std::vector<std::size_t> Params::layer_sizes() const {
  std::vector<std::size_t> sizes;
  if (layers_.empty()) return sizes;
  sizes.push_back(layers_.front().weight.dim(0));
  for (const Layer& L : layers_) sizes.push_back(L.weight.dim(1));
  return sizes;
}

std::size_t Params::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& L : layers_) n += L.weight.size() + L.bias.size();
  return n;
}

std::vector<double> Params::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const Layer& L : layers_) {
    flat.insert(flat.end(), L.weight.values().begin(), L.weight.values().end());
    flat.insert(flat.end(), L.bias.values().begin(), L.bias.values().end());
  }
  return flat;
}

void Params::unflatten(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw DimensionError("unflatten: expected " + std::to_string(parameter_count()) +
                         " values, got " + std::to_string(flat.size()));
  }
  std::size_t pos = 0;
  for (Layer& L : layers_) {
    for (double& v : L.weight.values()) v = flat[pos++];
    for (double& v : L.bias.values()) v = flat[pos++];
  }
}

Params init_params(const MlpSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const std::size_t fan_in = spec.layer_sizes[l], fan_out = spec.layer_sizes[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor w({fan_in, fan_out});
    for (double& v : w.values()) v = scale * rng.normal();
    layers.push_back({std::move(w), Tensor({fan_out})});
  }
  return Params(std::move(layers));
}

Tensor logits(const Params& params, const Tensor& x) {
  Forward f;
  build_forward(f, params, x, false, false);
  return f.tape.value(f.out);
}

LossAndGrads loss_and_grads(const Params& params, const Tensor& x, std::span<const Label> y,
                            Wrt wrt, Reduction reduction) {
  const bool want_params = wrt != Wrt::input;
  const bool want_input = wrt != Wrt::params;
  Forward f;
  build_forward(f, params, x, want_input, want_params);
  Tape::Var loss = f.tape.softmax_cross_entropy(f.out, y, reduction);

  std::vector<Tape::Var> leaves;
  if (want_input) leaves.push_back(f.input);
  if (want_params) {
    for (std::size_t l = 0; l < f.weights.size(); ++l) {
      leaves.push_back(f.weights[l]);
      leaves.push_back(f.biases[l]);
    }
  }
  LossAndGrads result;
  result.loss = f.tape.value(loss)[0];
  std::vector<Tensor> grads = f.tape.backward(loss, leaves);
  std::size_t pos = 0;
  if (want_input) result.input_grad = std::move(grads[pos++]);
  if (want_params) {
    for (std::size_t l = 0; l < f.weights.size(); ++l) {
      Tensor gw = std::move(grads[pos++]);
      Tensor gb = std::move(grads[pos++]);
      result.param_grads.push_back({std::move(gw), std::move(gb)});
    }
  }
  return result;
}

double mean_loss(const Params& params, const Tensor& x, std::span<const Label> y) {
  Forward f;
  build_forward(f, params, x, false, false);
  return f.tape.value(f.tape.softmax_cross_entropy(f.out, y))[0];
}

std::vector<double> example_losses(const Params& params, const Tensor& x, std::span<const Label> y) {
  const Tensor z = logits(params, x);
  if (y.size() != z.dim(0)) throw DimensionError("example_losses: label count does not match rows");
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= z.dim(1)) {
      throw IndexError("label " + std::to_string(y[i]) + " out of range");
    }
    out[i] = cross_entropy_row(z.row(i), y[i]);
  }
  return out;
}

std::vector<Label> predict(const Tensor& z) {
  std::vector<Label> out(z.dim(0));
  for (std::size_t i = 0; i < z.dim(0); ++i) {
    auto r = z.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < r.size(); ++j) {
      if (r[j] > r[best]) best = j;
    }
    out[i] = static_cast<Label>(best);
  }
  return out;
}

double accuracy_from_logits(const Tensor& z, std::span<const Label> y) {
  if (y.empty()) return 0.0;
  const std::vector<Label> pred = predict(z);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i];
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

double accuracy(const Params& params, const Tensor& x, std::span<const Label> y) {
  if (y.empty()) return 0.0;
  return accuracy_from_logits(logits(params, x), y);
}

double squared_norm(std::span<const Layer> grads) {
  double s = 0.0;
  for (const Layer& L : grads) {
    for (double v : L.weight.values()) s += v * v;
    for (double v : L.bias.values()) s += v * v;
  }
  return s;
}

std::vector<std::uint8_t> serialize_params(const Params& params) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  const std::vector<std::size_t> sizes = params.layer_sizes();
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(sizes.size()));
  for (std::size_t s : sizes) put<std::uint32_t>(out, static_cast<std::uint32_t>(s));
  for (double v : params.flatten()) put<double>(out, v);
  return out;
}

Params deserialize_params(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not an AMLP model file (bad magic)");
  }
  Reader r(bytes.subspan(4));
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw FormatError("unsupported AMLP version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  MlpSpec spec;
  for (std::uint32_t i = 0; i < count; ++i) spec.layer_sizes.push_back(r.get<std::uint32_t>());
  try {
    spec.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("AMLP header: ") + e.what());
  }
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    layers.push_back({Tensor({spec.layer_sizes[l], spec.layer_sizes[l + 1]}),
                      Tensor({spec.layer_sizes[l + 1]})});
  }
  Params params(std::move(layers));
  std::vector<double> flat(params.parameter_count());
  for (double& v : flat) v = r.get<double>();
  if (!r.done()) throw FormatError("trailing bytes after AMLP payload");
  params.unflatten(flat);
  return params;
}

void save_params(const Params& params, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_params(params));
}

Params load_params(const std::filesystem::path& path) { return deserialize_params(read_file(path)); }

}  // namespace amata

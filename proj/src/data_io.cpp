#include "amata/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "amata/error.hpp"
#include "amata/io.hpp"
#include "amata/rng.hpp"

namespace amata {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t pos, const char* what) {
  if (pos + 4 > b.size()) {
    throw FormatError(std::string(what) + ": file truncated in header (" + std::to_string(b.size()) +
                      " bytes)");
  }
  return (std::uint32_t{b[pos]} << 24) | (std::uint32_t{b[pos + 1]} << 16) |
         (std::uint32_t{b[pos + 2]} << 8) | std::uint32_t{b[pos + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex;
  os.width(8);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = begin; i < end; ++i) idx.push_back(i);
  return gather(idx);
}

Dataset Dataset::gather(std::span<const std::size_t> idx) const {
  const std::size_t d = dim();
  Dataset out;
  out.class_count = class_count;
  std::vector<double> values;
  values.reserve(idx.size() * d);
  for (std::size_t i : idx) {
    if (i >= size()) throw IndexError("dataset row " + std::to_string(i) + " out of range");
    auto r = inputs.row(i);
    values.insert(values.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  out.inputs = Tensor({idx.size(), d}, std::move(values));
  return out;
}

void Dataset::validate() const {
  if (inputs.rank() != 2 || inputs.dim(0) != labels.size()) {
    throw ContractError("dataset inputs " + inputs.shape_string() + " do not match " +
                        std::to_string(labels.size()) + " labels");
  }
  for (Label y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
      throw ContractError("dataset label " + std::to_string(y) + " outside class count");
    }
  }
  for (double v : inputs.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError("dataset input outside [0, 1]");
  }
}

Dataset parse_mnist_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
  const std::uint32_t im = read_be32(images, 0, "images");
  if (im != kImageMagic) {
    throw FormatError("images: bad IDX magic " + hex(im) + " (expected " + hex(kImageMagic) + ")");
  }
  const std::uint32_t lm = read_be32(labels, 0, "labels");
  if (lm != kLabelMagic) {
    throw FormatError("labels: bad IDX magic " + hex(lm) + " (expected " + hex(kLabelMagic) + ")");
  }
  const std::size_t n = read_be32(images, 4, "images");
  const std::size_t rows = read_be32(images, 8, "images");
  const std::size_t cols = read_be32(images, 12, "images");
  const std::size_t n_labels = read_be32(labels, 4, "labels");
  if (n != n_labels) {
    throw FormatError("image count " + std::to_string(n) + " differs from label count " +
                      std::to_string(n_labels));
  }
  const std::size_t d = rows * cols;
  if (images.size() < 16 + n * d) {
    throw FormatError("images: truncated payload, expected " + std::to_string(16 + n * d) +
                      " bytes, found " + std::to_string(images.size()));
  }
  if (labels.size() < 8 + n) {
    throw FormatError("labels: truncated payload, expected " + std::to_string(8 + n) +
                      " bytes, found " + std::to_string(labels.size()));
  }

  Dataset out;
  std::vector<double> values(n * d);
  for (std::size_t i = 0; i < n * d; ++i) values[i] = images[16 + i] / 255.0;
  out.inputs = Tensor({n, d}, std::move(values));
  Label max_label = -1;
  for (std::size_t i = 0; i < n; ++i) {
    out.labels.push_back(labels[8 + i]);
    max_label = std::max(max_label, out.labels.back());
  }
  out.class_count = static_cast<std::size_t>(max_label + 1);
  return out;
}

Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  return parse_mnist_idx(read_file_maybe_gzip(images), read_file_maybe_gzip(labels));
}

void export_idx(const Dataset& data, const std::filesystem::path& images,
                const std::filesystem::path& labels) {
  const std::size_t d = data.dim();
  std::size_t side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(d))));
  const bool square = side * side == d;
  std::vector<std::uint8_t> im, lb;
  put_be32(im, kImageMagic);
  put_be32(im, static_cast<std::uint32_t>(data.size()));
  put_be32(im, static_cast<std::uint32_t>(square ? side : 1));
  put_be32(im, static_cast<std::uint32_t>(square ? side : d));
  for (double v : data.inputs.values()) {
    im.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  put_be32(lb, kLabelMagic);
  put_be32(lb, static_cast<std::uint32_t>(data.size()));
  for (Label y : data.labels) lb.push_back(static_cast<std::uint8_t>(y));
  write_file_atomic(images, im);
  write_file_atomic(labels, lb);
}

Dataset synth_gaussians(std::size_t n_per_class, std::size_t dim, std::size_t class_count,
                        double separation, std::uint64_t seed) {
  if (class_count == 0 || dim < class_count) {
    throw ContractError("synth_gaussians needs 1 <= class_count <= dim");
  }
  Rng rng(seed);
  // Raw values lie (up to 3 sigma) in [-3, separation + 3]; centre that
  // range and scale it onto [0, 1].
  const double sigma_max = 1.0 + std::abs(separation) / 6.0;
  const double centre = separation / 2.0;
  const std::size_t n = n_per_class * class_count;
  Dataset out;
  out.class_count = class_count;
  std::vector<double> values;
  values.reserve(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % class_count;
    for (std::size_t j = 0; j < dim; ++j) {
      const double raw = rng.normal() + (j == c ? separation : 0.0);
      values.push_back(std::clamp((raw - centre + 3.0 * sigma_max) / (6.0 * sigma_max), 0.0, 1.0));
    }
    out.labels.push_back(static_cast<Label>(c));
  }
  out.inputs = Tensor({n, dim}, std::move(values));
  return out;
}

std::pair<Dataset, Dataset> partition(const Dataset& data, std::size_t n, std::uint64_t seed) {
  if (n > data.size()) {
    throw ContractError("subset of " + std::to_string(n) + " rows requested from a dataset of " +
                        std::to_string(data.size()));
  }
  Rng rng(seed);
  std::vector<std::size_t> perm = rng.permutation(data.size());
  std::vector<std::size_t> chosen(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<std::size_t> rest(perm.begin() + static_cast<std::ptrdiff_t>(n), perm.end());
  std::sort(chosen.begin(), chosen.end());
  std::sort(rest.begin(), rest.end());
  return {data.gather(chosen), data.gather(rest)};
}

Dataset subset(const Dataset& data, std::size_t n, std::uint64_t seed) {
  return partition(data, n, seed).first;
}

}  // namespace amata

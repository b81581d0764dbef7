#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "amata/attacks.hpp"
#include "amata/control_toy.hpp"
#include "amata/schedules.hpp"
#include "amata/trainer.hpp"

namespace amata {

// Line-oriented "key = value" text with [section] headers and '#' comments.
// Keys are addressed as "section.key".
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, const std::string& source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value);
  std::vector<std::string> keys() const;
  /// "source:line" of a key, or just the source for keys set in code.
  std::string where(const std::string& key) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::string source_;
  std::map<std::string, Entry> entries_;
};

enum class Command { train, attack, criterion, toy, landscape };

struct DataConfig {
  std::string source = "synthetic";  // synthetic | mnist
  std::string mnist_images = "data/mnist5k/images-idx3-ubyte.gz";
  std::string mnist_labels = "data/mnist5k/labels-idx1-ubyte.gz";
  std::size_t train_size = 2000;
  std::size_t test_size = 1000;
  std::size_t synth_per_class = 1500;
  std::size_t synth_dim = 20;
  std::size_t synth_classes = 2;
  double synth_separation = 4.0;
};

struct CriterionConfig {
  double gamma = 0.04;
  double tau = 0.4;
  std::vector<int> candidates = {1, 2, 5, 10, 20, 40};
  InnerSetting current{10, 0.04};
  std::size_t probe_size = 256;
};

struct TrajectorySetting {
  std::string name;
  InnerSetting setting;
};

struct LandscapeConfig {
  std::size_t example = 0;
  std::size_t resolution = 100;
  std::optional<double> extent;  // defaults to attack.eps
  bool orthogonalize = false;
  std::vector<TrajectorySetting> trajectories;
};

struct ToyRunConfig {
  toy::ToyConfig toy;
  double alpha_grid = 1e-4;
  int sample_every = 10;
};

// Every setting a subcommand can read, with defaults filled in.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string out = "out";
  DataConfig data;
  std::vector<std::size_t> hidden = {256, 128};
  TrainConfig train;  // schedule.horizon tracks train.epochs
  bool eval_attack_each_epoch = false;
  AttackSpec attack;
  CriterionConfig criterion;
  ToyRunConfig toy;
  LandscapeConfig landscape;

  /// Validates and converts; unknown keys and, for `train`, a missing
  /// train.epochs raise ConfigError naming the key and its location.
  static ExperimentConfig from(const KeyValueConfig& kv, Command command);

  /// Canonical text of every key, loadable by from().
  std::string resolved_text() const;
};

}  // namespace amata

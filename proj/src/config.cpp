#include "amata/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "amata/error.hpp"
#include "amata/io.hpp"

namespace amata {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  if (trim(s).empty()) return parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(trim(cur));
  return parts;
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt::format("{}", v[i]);
  return out;
}

struct Field {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

class Parser {
 public:
  Parser(const KeyValueConfig& kv, std::string key) : kv_(kv), key_(std::move(key)) {}

  [[noreturn]] void fail(const std::string& value, const std::string& expected) const {
    throw ConfigError(kv_.where(key_) + ": key '" + key_ + "' has value '" + value + "', expected " +
                      expected);
  }

  double real(const std::string& s) const {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail(s, "a number");
    return v;
  }

  template <typename Int>
  Int integer(const std::string& s) const {
    Int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail(s, "an integer");
    return v;
  }

  bool boolean(const std::string& s) const {
    if (s == "true") return true;
    if (s == "false") return false;
    fail(s, "true or false");
  }

  template <typename Int>
  std::vector<Int> int_list(const std::string& s) const {
    std::vector<Int> out;
    for (const auto& part : split(s, ',')) out.push_back(integer<Int>(part));
    return out;
  }

 private:
  const KeyValueConfig& kv_;
  std::string key_;
};

std::vector<Field> schema(ExperimentConfig& c, const KeyValueConfig& kv) {
  std::vector<Field> f;
  auto add = [&](const std::string& key, auto setter, auto getter) {
    Parser p(kv, key);
    f.push_back({key, [p, setter](const std::string& v) { setter(p, v); }, getter});
  };
  auto real = [&](const std::string& key, double& ref) {
    add(key, [&ref](const Parser& p, const std::string& v) { ref = p.real(v); },
        [&ref] { return fmt_double(ref); });
  };
  auto boolean = [&](const std::string& key, bool& ref) {
    add(key, [&ref](const Parser& p, const std::string& v) { ref = p.boolean(v); },
        [&ref] { return std::string(ref ? "true" : "false"); });
  };
  auto text = [&](const std::string& key, std::string& ref) {
    add(key, [&ref](const Parser&, const std::string& v) { ref = v; }, [&ref] { return ref; });
  };
  auto size = [&](const std::string& key, std::size_t& ref) {
    add(key, [&ref](const Parser& p, const std::string& v) { ref = p.integer<std::size_t>(v); },
        [&ref] { return std::to_string(ref); });
  };
  auto integer = [&](const std::string& key, int& ref) {
    add(key, [&ref](const Parser& p, const std::string& v) { ref = p.integer<int>(v); },
        [&ref] { return std::to_string(ref); });
  };

  add("run.seed", [&c](const Parser& p, const std::string& v) { c.seed = p.integer<std::uint64_t>(v); },
      [&c] { return std::to_string(c.seed); });
  size("run.threads", c.threads);
  text("run.out", c.out);

  text("data.source", c.data.source);
  text("data.mnist_images", c.data.mnist_images);
  text("data.mnist_labels", c.data.mnist_labels);
  size("data.train_size", c.data.train_size);
  size("data.test_size", c.data.test_size);
  size("data.synth_per_class", c.data.synth_per_class);
  size("data.synth_dim", c.data.synth_dim);
  size("data.synth_classes", c.data.synth_classes);
  real("data.synth_separation", c.data.synth_separation);

  add("model.hidden",
      [&c](const Parser& p, const std::string& v) { c.hidden = p.int_list<std::size_t>(v); },
      [&c] { return join(c.hidden); });

  integer("train.epochs", c.train.epochs);
  size("train.batch_size", c.train.batch_size);
  real("train.lr", c.train.lr);
  real("train.momentum", c.train.momentum);
  real("train.weight_decay", c.train.weight_decay);
  add("train.lr_milestones",
      [&c](const Parser& p, const std::string& v) { c.train.lr_milestones = p.int_list<int>(v); },
      [&c] { return join(c.train.lr_milestones); });
  real("train.lr_decay_factor", c.train.lr_decay_factor);
  real("train.eps", c.train.eps);
  boolean("train.clip_domain", c.train.clip_domain);
  boolean("train.record_wall_time", c.train.record_wall_time);
  boolean("train.eval_attack", c.eval_attack_each_epoch);

  ScheduleSpec& s = c.train.schedule;
  add("schedule.variant",
      [&s](const Parser& p, const std::string& v) {
        try {
          s.variant = schedule_variant_from_string(v);
        } catch (const ContractError&) {
          p.fail(v, "constant, linear, exponential, toy_optimal or explicit");
        }
      },
      [&s] { return to_string(s.variant); });
  integer("schedule.k_min", s.k_min);
  integer("schedule.k_max", s.k_max);
  real("schedule.tau", s.tau);
  real("schedule.eta_shape", s.eta_shape);
  real("schedule.theta0", s.theta0);
  add("schedule.explicit",
      [&s](const Parser& p, const std::string& v) {
        s.explicit_list.clear();
        for (const auto& item : split(v, ',')) {
          const auto kv = split(item, ':');
          if (kv.size() != 2) p.fail(v, "a list of K:alpha pairs");
          s.explicit_list.push_back({p.integer<int>(kv[0]), p.real(kv[1])});
        }
      },
      [&s] {
        std::string out;
        for (std::size_t i = 0; i < s.explicit_list.size(); ++i) {
          out += (i ? "," : "") + std::to_string(s.explicit_list[i].k) + ":" +
                 fmt_double(s.explicit_list[i].alpha);
        }
        return out;
      });

  real("attack.eps", c.attack.eps);
  real("attack.alpha", c.attack.alpha);
  integer("attack.k_steps", c.attack.k_steps);
  add("attack.init",
      [&c](const Parser& p, const std::string& v) {
        if (v == "clean") c.attack.init = PgdInit::clean;
        else if (v == "uniform_random") c.attack.init = PgdInit::uniform_random;
        else p.fail(v, "clean or uniform_random");
      },
      [&c] { return std::string(c.attack.init == PgdInit::clean ? "clean" : "uniform_random"); });
  integer("attack.restarts", c.attack.restarts);

  real("criterion.gamma", c.criterion.gamma);
  real("criterion.tau", c.criterion.tau);
  add("criterion.candidates",
      [&c](const Parser& p, const std::string& v) { c.criterion.candidates = p.int_list<int>(v); },
      [&c] { return join(c.criterion.candidates); });
  integer("criterion.current_k", c.criterion.current.k);
  real("criterion.current_alpha", c.criterion.current.alpha);
  size("criterion.probe_size", c.criterion.probe_size);

  real("toy.theta0", c.toy.toy.theta0);
  real("toy.tau", c.toy.toy.tau);
  real("toy.gamma", c.toy.toy.gamma);
  real("toy.t_end", c.toy.toy.t_end);
  real("toy.dt", c.toy.toy.dt);
  real("toy.alpha_grid", c.toy.alpha_grid);
  integer("toy.sample_every", c.toy.sample_every);

  size("landscape.example", c.landscape.example);
  size("landscape.resolution", c.landscape.resolution);
  add("landscape.extent",
      [&c](const Parser& p, const std::string& v) {
        if (v.empty()) c.landscape.extent.reset();
        else c.landscape.extent = p.real(v);
      },
      [&c] { return c.landscape.extent ? fmt_double(*c.landscape.extent) : std::string(); });
  boolean("landscape.orthogonalize", c.landscape.orthogonalize);
  add("landscape.trajectories",
      [&c](const Parser& p, const std::string& v) {
        c.landscape.trajectories.clear();
        for (const auto& item : split(v, ',')) {
          const auto parts = split(item, ':');
          if (parts.size() != 3 || parts[0].empty()) p.fail(v, "a list of name:K:alpha triples");
          c.landscape.trajectories.push_back({parts[0], {p.integer<int>(parts[1]), p.real(parts[2])}});
        }
      },
      [&c] {
        std::string out;
        for (std::size_t i = 0; i < c.landscape.trajectories.size(); ++i) {
          const auto& t = c.landscape.trajectories[i];
          out += (i ? "," : "") + t.name + ":" + std::to_string(t.setting.k) + ":" +
                 fmt_double(t.setting.alpha);
        }
        return out;
      });
  return f;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& source) {
  KeyValueConfig cfg;
  cfg.source_ = source;
  std::string section;
  std::istringstream is{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ConfigError(at + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(at + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) throw ConfigError(at + ": empty key");
    if (section.empty()) throw ConfigError(at + ": key '" + key + "' outside any [section]");
    const std::string full = section + "." + key;
    if (cfg.entries_.count(full)) throw ConfigError(at + ": duplicate key '" + full + "'");
    cfg.entries_[full] = {trim(std::string_view(line).substr(eq + 1)), line_no};
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const Error&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
               path.string());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.value;
}

void KeyValueConfig::set(const std::string& key, std::string value) { entries_[key] = {std::move(value), 0}; }

std::vector<std::string> KeyValueConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : entries_) out.push_back(k);
  return out;
}

std::string KeyValueConfig::where(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.line == 0) return source_;
  return source_ + ":" + std::to_string(it->second.line);
}

ExperimentConfig ExperimentConfig::from(const KeyValueConfig& kv, Command command) {
  ExperimentConfig c;
  c.landscape.trajectories = {{"pgd40", {40, 0.01}}, {"pgd2", {2, 0.01}}, {"amata", {10, 0.04}}};
  c.train.schedule.variant = ScheduleVariant::linear;
  c.train.schedule.k_min = 2;
  c.train.schedule.k_max = 10;
  c.train.schedule.tau = 0.4;

  std::vector<Field> fields = schema(c, kv);
  for (const std::string& key : kv.keys()) {
    const bool known = std::any_of(fields.begin(), fields.end(), [&](const Field& f) { return f.key == key; });
    if (!known) throw ConfigError(kv.where(key) + ": unknown key '" + key + "'");
  }
  if (command == Command::train && !kv.get("train.epochs")) {
    throw ConfigError(kv.where("train.epochs") + ": missing required key 'train.epochs'");
  }
  for (const Field& f : fields) {
    if (auto v = kv.get(f.key)) f.set(*v);
  }

  if (c.data.source != "synthetic" && c.data.source != "mnist") {
    throw ConfigError(kv.where("data.source") + ": key 'data.source' must be synthetic or mnist");
  }
  c.train.schedule.horizon = c.train.epochs;
  if (!c.landscape.extent) c.landscape.extent = c.attack.eps;
  if (c.threads == 0) c.threads = 1;

  try {
    if (command == Command::train) c.train.validate();
    if (command == Command::attack || command == Command::landscape) c.attack.validate();
    if (command == Command::toy) c.toy.toy.validate();
  } catch (const ContractError& e) {
    throw ConfigError(kv.where("") + ": " + e.what());
  }
  return c;
}

std::string ExperimentConfig::resolved_text() const {
  ExperimentConfig copy = *this;
  const KeyValueConfig empty;
  std::vector<Field> fields = schema(copy, empty);
  std::string out;
  std::string section;
  for (const Field& f : fields) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "" : "\n") + ("[" + sec + "]\n");
      section = sec;
    }
    out += f.key.substr(dot + 1) + " = " + f.get() + "\n";
  }
  return out;
}

}  // namespace amata

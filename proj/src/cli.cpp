#include "amata/cli.hpp"

#include <filesystem>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "amata/config.hpp"
#include "amata/criteria.hpp"
#include "amata/data_io.hpp"
#include "amata/error.hpp"
#include "amata/io.hpp"
#include "amata/landscape.hpp"
#include "amata/rng.hpp"

namespace amata {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Splits {
  Dataset train;
  Dataset test;
};

Splits load_data(const ExperimentConfig& c) {
  Dataset full;
  if (c.data.source == "mnist") {
    if (!fs::exists(c.data.mnist_images) || !fs::exists(c.data.mnist_labels)) {
      throw ConfigError("MNIST files not found: " + c.data.mnist_images + ", " + c.data.mnist_labels);
    }
    full = load_mnist_idx(c.data.mnist_images, c.data.mnist_labels);
  } else {
    full = synth_gaussians(c.data.synth_per_class, c.data.synth_dim, c.data.synth_classes,
                           c.data.synth_separation, c.seed + seed_stream::kSynthetic);
  }
  if (c.data.train_size + c.data.test_size > full.size()) {
    throw ConfigError(fmt::format("data.train_size + data.test_size = {} exceeds the {} available examples",
                                  c.data.train_size + c.data.test_size, full.size()));
  }
  auto [train, rest] = partition(full, c.data.train_size, c.seed + seed_stream::kSubset);
  Dataset test = subset(rest, c.data.test_size, c.seed + seed_stream::kSubset);
  return {std::move(train), std::move(test)};
}

Params load_model(const std::string& path) {
  if (path.empty()) throw ConfigError("--model is required");
  if (!fs::exists(path)) throw ConfigError("model file not found: " + path);
  try {
    return load_params(path);
  } catch (const FormatError& e) {
    throw ConfigError("cannot load model " + path + ": " + e.what());
  }
}

void check_model_fits(const Params& p, const Dataset& d) {
  const auto sizes = p.layer_sizes();
  if (sizes.front() != d.dim() || sizes.back() < d.class_count) {
    throw ConfigError(fmt::format("model {} does not fit data with {} features and {} classes",
                                  shape_string(sizes), d.dim(), d.class_count));
  }
}

AttackSpec attack_spec(const ExperimentConfig& c) {
  AttackSpec a = c.attack;
  a.seed = c.seed + seed_stream::kAttack;
  return a;
}

json attack_json(const AttackSpec& a) {
  return {{"eps", a.eps},
          {"alpha", a.alpha},
          {"k_steps", a.k_steps},
          {"init", a.init == PgdInit::clean ? "clean" : "uniform_random"},
          {"restarts", a.restarts},
          {"seed", a.seed}};
}

void write_resolved(const ExperimentConfig& c, const fs::path& out) {
  write_file_atomic(out / "resolved.config", c.resolved_text());
}

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string s;
  for (const auto& c : cells) s += (s.empty() ? "" : ",") + c;
  return s + "\n";
}

std::string g9(double v) { return fmt::format("{:.9g}", v); }

int cmd_train(const ExperimentConfig& c, const fs::path& out, std::ostream& log) {
  const Splits data = load_data(c);
  MlpSpec spec;
  spec.layer_sizes.push_back(data.train.dim());
  spec.layer_sizes.insert(spec.layer_sizes.end(), c.hidden.begin(), c.hidden.end());
  spec.layer_sizes.push_back(data.train.class_count);
  spec.seed = c.seed + seed_stream::kInit;

  TrainConfig tc = c.train;
  tc.seed = c.seed + seed_stream::kShuffle;
  tc.threads = c.threads;
  if (c.eval_attack_each_epoch) tc.attack_eval = attack_spec(c);
  const TrainResult result = train(tc, data.train, spec, data.test.size() ? &data.test : nullptr);

  write_file_atomic(out / "metrics.csv", metrics_csv(result.ledger));
  save_params(result.params, out / "model.amlp");
  write_resolved(c, out);
  const MetricsRow& last = result.ledger.back();
  log << fmt::format("trained {} epochs: train_loss={:.6g} clean_acc={:.4f} inner_steps={}\n",
                     tc.epochs, last.train_loss, last.clean_acc, last.cumulative_inner_steps);
  return kExitOk;
}

int cmd_attack(const ExperimentConfig& c, const std::string& model, const fs::path& out,
               std::ostream& log) {
  const Params params = load_model(model);
  const Splits data = load_data(c);
  check_model_fits(params, data.test);
  const AttackSpec spec = attack_spec(c);
  const RobustnessReport r = evaluate_robust(params, data.test, spec, c.threads);
  const json j = {{"clean_acc", r.clean_acc}, {"robust_acc", r.robust_acc}, {"spec", attack_json(spec)}};
  write_file_atomic(out / "attack.json", j.dump(2) + "\n");
  write_resolved(c, out);
  log << j.dump() << "\n";
  return kExitOk;
}

int cmd_criterion(const ExperimentConfig& c, const std::string& model, const fs::path& out,
                  std::ostream& log) {
  const Params params = load_model(model);
  const Splits data = load_data(c);
  check_model_fits(params, data.test);
  const std::size_t n = std::min(c.criterion.probe_size, data.test.size());
  const Dataset probe = subset(data.test, n, c.seed + seed_stream::kProbe);
  const CandidateSet g = CandidateSet::with_budget(c.criterion.tau, c.criterion.candidates);
  const CriterionReport r =
      criterion_c(params, AdvBatch::from_clean(probe.inputs, probe.labels, c.attack.eps),
                  c.criterion.current, g, c.criterion.gamma, true, c.threads);
  json cands = json::array();
  for (const auto& s : r.candidates) {
    cands.push_back({{"k", s.setting.k},
                     {"alpha", s.setting.alpha},
                     {"grad_norm_sq", s.grad_norm_sq},
                     {"surrogate", s.surrogate}});
  }
  const json j = {{"gamma", r.gamma},
                  {"current", {{"k", r.current.k}, {"alpha", r.current.alpha}}},
                  {"candidates", cands},
                  {"c_value", r.c_value}};
  write_file_atomic(out / "criterion.json", j.dump(2) + "\n");
  write_resolved(c, out);
  log << j.dump() << "\n";
  return kExitOk;
}

int cmd_toy(const ExperimentConfig& c, const fs::path& out, std::ostream& log) {
  const toy::PmpReport r = toy::verify_pmp(c.toy.toy, c.toy.alpha_grid, c.toy.sample_every);
  std::string csv = "t,theta,p,alpha_star,k_star,alpha_argmax,hamiltonian\n";
  for (const auto& s : r.samples) {
    csv += csv_row({g9(s.t), g9(s.theta), g9(s.p), g9(s.alpha_star), g9(s.k_star), g9(s.alpha_argmax),
                    g9(s.hamiltonian)});
  }
  write_file_atomic(out / "toy.csv", csv);
  write_resolved(c, out);
  log << fmt::format("max |argmax H - alpha*| = {:.3g} over {} samples\n", r.max_deviation, r.samples.size());
  return kExitOk;
}

int cmd_landscape(const ExperimentConfig& c, const std::string& model, const fs::path& out,
                  std::ostream& log) {
  const Params params = load_model(model);
  const Splits data = load_data(c);
  check_model_fits(params, data.test);
  const LandscapeConfig& lc = c.landscape;
  if (lc.example >= data.test.size()) {
    throw ConfigError(fmt::format("landscape.example {} outside the {} test examples", lc.example,
                                  data.test.size()));
  }
  const Dataset one = data.test.slice(lc.example, lc.example + 1);
  const std::vector<double> x0(one.inputs.values().begin(), one.inputs.values().end());

  // PGD paths for every configured setting; their displacements from x0
  // define the principal axis.
  std::vector<std::vector<std::vector<double>>> paths;
  std::vector<std::vector<double>> displacements;
  for (const auto& ts : lc.trajectories) {
    std::vector<Tensor> steps;
    PgdOptions opts;
    opts.trajectory = &steps;
    pgd_perturb(params, AdvBatch::from_clean(one.inputs, one.labels, c.attack.eps), ts.setting.alpha,
                ts.setting.k, opts);
    auto& path = paths.emplace_back();
    for (const Tensor& s : steps) {
      path.emplace_back(s.values().begin(), s.values().end());
      std::vector<double> d(x0.size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = path.back()[i] - x0[i];
      displacements.push_back(std::move(d));
    }
  }
  const ProjectionAxes axes = compute_axes(displacements, c.seed + seed_stream::kLandscape, lc.orthogonalize);
  const LossGrid grid = loss_grid(params, x0, one.labels[0], axes, *lc.extent, lc.resolution);

  std::string csv = "i,j,sx,sy,loss\n";
  for (std::size_t i = 0; i < grid.resolution; ++i) {
    for (std::size_t j = 0; j < grid.resolution; ++j) {
      csv += csv_row({std::to_string(i), std::to_string(j), g9(grid.offsets[i]), g9(grid.offsets[j]),
                      g9(grid.at(i, j))});
    }
  }
  write_file_atomic(out / "grid.csv", csv);
  for (std::size_t t = 0; t < lc.trajectories.size(); ++t) {
    const auto proj = project_trajectory(paths[t], x0, axes);
    std::string tcsv = "step,sx,sy,loss\n";
    for (std::size_t k = 0; k < proj.size(); ++k) {
      const Tensor xk({1, x0.size()}, paths[t][k]);
      tcsv += csv_row({std::to_string(k), g9(proj[k].first), g9(proj[k].second),
                       g9(example_losses(params, xk, one.labels)[0])});
    }
    write_file_atomic(out / ("traj_" + lc.trajectories[t].name + ".csv"), tcsv);
  }
  write_resolved(c, out);
  log << fmt::format("landscape {}x{} and {} trajectories written to {}\n", grid.resolution,
                     grid.resolution, lc.trajectories.size(), out.string());
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Annealed adversarial training and schedule-optimality tools"};
  app.require_subcommand(1);
  std::string config_path, out_dir, model_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  app.add_option("--config", config_path, "Configuration file (key = value with [sections])");
  app.add_option("--out", out_dir, "Output directory (overrides run.out)");
  app.add_option("--seed", seed, "Top-level seed (overrides run.seed)");
  app.add_option("--threads", threads, "Worker threads (overrides run.threads)");

  struct Sub {
    const char* name;
    Command command;
    bool needs_model;
    const char* help;
  };
  const Sub subs[] = {
      {"train", Command::train, false, "Adversarial training; writes metrics.csv, model.amlp"},
      {"attack", Command::attack, true, "PGD robustness evaluation; writes attack.json"},
      {"criterion", Command::criterion, true, "Schedule optimality criterion; writes criterion.json"},
      {"toy-control", Command::toy, false, "1-D control example; writes toy.csv"},
      {"landscape", Command::landscape, true, "Loss landscape grid and PGD trajectories"},
  };
  std::vector<CLI::App*> handles;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    if (s.needs_model) sub->add_option("--model", model_path, "Model file (.amlp)");
    sub->fallthrough();
    handles.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    std::size_t which = 0;
    while (!handles[which]->parsed()) ++which;
    const Sub& sub = subs[which];

    KeyValueConfig kv = config_path.empty() ? KeyValueConfig::parse("", "<defaults>")
                                            : KeyValueConfig::load(config_path);
    if (seed) kv.set("run.seed", std::to_string(*seed));
    if (threads) kv.set("run.threads", std::to_string(*threads));
    if (!out_dir.empty()) kv.set("run.out", out_dir);
    const ExperimentConfig cfg = ExperimentConfig::from(kv, sub.command);
    const fs::path dir = cfg.out;
    fs::create_directories(dir);

    switch (sub.command) {
      case Command::train: return cmd_train(cfg, dir, out);
      case Command::attack: return cmd_attack(cfg, model_path, dir, out);
      case Command::criterion: return cmd_criterion(cfg, model_path, dir, out);
      case Command::toy: return cmd_toy(cfg, dir, out);
      case Command::landscape: return cmd_landscape(cfg, model_path, dir, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace amata

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "amata/cli.hpp"
#include "amata/control_toy.hpp"
#include "amata/criteria.hpp"
#include "amata/inner_max.hpp"
#include "amata/io.hpp"
#include "amata/landscape.hpp"
#include "amata/models.hpp"
#include "amata/rng.hpp"
#include "amata/schedules.hpp"
#include "support.hpp"

using namespace amata;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

const fs::path kWork = fs::temp_directory_path() / "amata_acceptance";

std::string mnist_section() {
  const fs::path root = AMATA_SOURCE_DIR;
  return fmt::format("[data]\nsource = mnist\nmnist_images = {}\nmnist_labels = {}\ntrain_size = 2000\ntest_size = 1000\n",
                     (root / "data/mnist5k/images-idx3-ubyte.gz").string(),
                     (root / "data/mnist5k/labels-idx1-ubyte.gz").string());
}

void cli(std::vector<std::string> args) {
  args.insert(args.begin(), "amata");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != kExitOk) throw std::runtime_error(fmt::format("amata {} exited {}: {}", args[1], code, err.str()));
}

std::string slurp(const fs::path& p) {
  auto b = read_file(p);
  return std::string(b.begin(), b.end());
}

struct RunResult {
  double clean_acc = 0.0;
  double robust_acc = 0.0;
  std::int64_t inner_steps = 0;
  double c_value = 0.0;
};

// Trains through the CLI, then evaluates PGD-40 and (optionally) the criterion
// at the model's final inner setting.
RunResult train_and_eval(const std::string& name, const std::string& train_and_schedule,
                         const InnerSetting* final_setting) {
  const fs::path dir = kWork / name;
  fs::create_directories(dir);
  std::string cfg = "[run]\nseed = 0\nthreads = 1\n" + mnist_section() + train_and_schedule +
                    "[attack]\neps = 0.3\nalpha = 0.01\nk_steps = 40\nrestarts = 1\ninit = clean\n";
  if (final_setting) {
    cfg += fmt::format("[criterion]\ngamma = 0.04\ntau = 0.4\ncandidates = 1,2,5,10,20,40\nprobe_size = 256\n"
                       "current_k = {}\ncurrent_alpha = {}\n",
                       final_setting->k, final_setting->alpha);
  }
  write_file_atomic(dir / "run.cfg", cfg);
  const std::string c = (dir / "run.cfg").string();
  cli({"train", "--config", c, "--out", dir.string()});
  cli({"attack", "--config", c, "--model", (dir / "model.amlp").string(), "--out", dir.string()});
  RunResult r;
  const json a = json::parse(slurp(dir / "attack.json"));
  r.clean_acc = a["clean_acc"].get<double>();
  r.robust_acc = a["robust_acc"].get<double>();
  const std::string metrics = slurp(dir / "metrics.csv");
  const std::string last = metrics.substr(metrics.rfind('\n', metrics.size() - 2) + 1);
  std::vector<std::string> cells;
  std::stringstream ss(last);
  for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
  r.inner_steps = std::stoll(cells.at(6));
  if (final_setting) {
    cli({"criterion", "--config", c, "--model", (dir / "model.amlp").string(), "--out", dir.string()});
    r.c_value = json::parse(slurp(dir / "criterion.json"))["c_value"].get<double>();
  }
  return r;
}

std::string train_block(double eps, const std::string& schedule) {
  return fmt::format("[train]\nepochs = 20\neps = {}\n[schedule]\n{}", eps, schedule);
}

// 1
Outcome gradient_correctness() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto inst = amata::testing::random_instance(1000 + s);
    auto g = loss_and_grads(inst.params, inst.x, inst.y, Wrt::both);
    auto f = [&] { return amata::testing::naive_mean_loss(inst.params, inst.x, inst.y); };
    auto layers = inst.params.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t i = 0; i < layers[l].weight.size(); ++i) {
        const double fd = amata::testing::central_difference(f, layers[l].weight[i], 1e-4);
        worst = std::max(worst, amata::testing::relative_error(g.param_grads[l].weight[i], fd));
      }
      for (std::size_t i = 0; i < layers[l].bias.size(); ++i) {
        const double fd = amata::testing::central_difference(f, layers[l].bias[i], 1e-4);
        worst = std::max(worst, amata::testing::relative_error(g.param_grads[l].bias[i], fd));
      }
    }
    for (std::size_t i = 0; i < inst.x.size(); ++i) {
      const double fd = amata::testing::central_difference(f, inst.x[i], 1e-4);
      worst = std::max(worst, amata::testing::relative_error(g.input_grad[i], fd));
    }
  }
  return {worst < 1e-5, fmt::format("worst relative error {:.2e} over 50 instances", worst)};
}

// 2
Outcome inner_max_oracle() {
  auto grid_max = [](const std::function<double(double)>& f, double lo, double hi) {
    double best = -HUGE_VAL;
    const auto n = static_cast<long>(std::floor((hi - lo) / 1e-4));
    for (long i = 0; i <= n; ++i) best = std::max(best, f(lo + static_cast<double>(i) * 1e-4));
    return std::max(best, f(hi));
  };
  auto pgd40 = [](double x0, double eps, const std::function<double(double)>& df) {
    Tensor x({1, 1}, {x0});
    const Tensor origin = x;
    pgd_ascend(x, origin, eps, 0.0, 0.0, false, eps / 20.0, 40,
               [&](const Tensor& at) { return Tensor({1, 1}, {df(at[0])}); });
    return x[0];
  };
  double worst = 0.0;
  int cases = 0;
  for (double theta : {-1.0, -0.2, 0.0, 0.5, 1.5}) {
    for (double x0 : {-0.5, 0.0, 0.3, 1.2}) {
      const double eps = 0.5;
      auto f = [&](double x) { return toy::loss(theta, x); };
      auto df = [&](double x) { return -2.0 * (x - theta) / (theta * theta + 1.0); };
      worst = std::max(worst, std::fabs(f(pgd40(x0, eps, df)) - grid_max(f, x0 - eps, x0 + eps)));
      ++cases;
    }
  }
  Rng rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const double a = rng.uniform(0.2, 3.0), eps = rng.uniform(0.1, 0.6), x0 = rng.uniform(-1, 1);
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double c = x0 + (trial % 2 == 0 ? rng.uniform(-0.9, 0.9) : sign * rng.uniform(1.2, 3.0)) * eps;
    auto f = [&](double x) { return -0.5 * a * (x - c) * (x - c); };
    auto df = [&](double x) { return -a * (x - c); };
    worst = std::max(worst, std::fabs(f(pgd40(x0, eps, df)) - grid_max(f, x0 - eps, x0 + eps)));
    ++cases;
  }
  return {worst < 1e-3, fmt::format("worst gap to grid search {:.2e} over {} problems", worst, cases)};
}

// 3
Outcome toy_pmp() {
  toy::ToyConfig c;
  c.theta0 = 1.0;
  c.tau = 10.0;
  c.gamma = 0.04;
  c.t_end = 3.0;
  const toy::PmpReport r = toy::verify_pmp(c, 1e-4);
  const auto traj = toy::integrate_flow(c, [&](double t) { return toy::optimal_alpha(c.theta0, t); });
  double theta_err = 0.0;
  for (const auto& s : traj) theta_err = std::max(theta_err, std::fabs(s.theta - c.theta0 * std::exp(-s.t)));
  bool increasing = true;
  for (std::size_t i = 1; i < r.samples.size(); ++i) increasing = increasing && r.samples[i].k_star > r.samples[i - 1].k_star;
  return {r.max_deviation <= 2e-4 && theta_err <= 1e-6 && increasing,
          fmt::format("max |argmax H - alpha*| {:.2e}, max |theta - theta0 e^-t| {:.2e}, K* increasing: {}",
                      r.max_deviation, theta_err, increasing)};
}

// 4
Outcome criterion_properties() {
  Rng rng(4);
  double min_c = HUGE_VAL;
  bool argmax_zero = true;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto inst = amata::testing::random_instance(2000 + s, 0.0);
    const AdvBatch b = AdvBatch::from_clean(inst.x, inst.y, rng.uniform(0.05, 0.4));
    CandidateSet g;
    const double tau = rng.uniform(0.05, 0.5);
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
      const int k = 1 + static_cast<int>(rng.below(20));
      g.settings.push_back({k, split_budget(tau, k)});
    }
    const InnerSetting current = g.settings[rng.below(n)];
    const CriterionReport r = criterion_c(inst.params, b, current, g, 0.04);
    min_c = std::min(min_c, r.c_value);
    const CriterionReport at_best = criterion_c(inst.params, b, r.best().setting, g, 0.04);
    argmax_zero = argmax_zero && at_best.c_value == 0.0;
  }
  double worst_fosc = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + rng.below(100);
    const double eps = rng.uniform(0.01, 0.5);
    std::vector<double> x0(d), grad(d), corner(d), zero(d, 0.0), inside(d);
    for (std::size_t i = 0; i < d; ++i) {
      x0[i] = rng.uniform();
      grad[i] = rng.normal();
      corner[i] = x0[i] + (grad[i] > 0 ? eps : -eps);
      inside[i] = x0[i] + rng.uniform(-eps, eps);
    }
    worst_fosc = std::max(worst_fosc, std::fabs(fosc(corner, x0, grad, eps)));
    worst_fosc = std::max(worst_fosc, std::fabs(fosc(inside, x0, zero, eps)));
  }
  return {min_c >= 0.0 && argmax_zero && worst_fosc <= 1e-10,
          fmt::format("min C {:.3g} over 100 instances, C at argmax == 0: {}, max |FOSC| {:.2e}", min_c,
                      argmax_zero, worst_fosc)};
}

// 5
Outcome annealed_beats_weak_constant() {
  const InnerSetting amata_final{5, split_budget(0.4, 5)};
  const InnerSetting low{5, 0.01}, high{40, 0.01};
  const RunResult a = train_and_eval(
      "amata_2_5", train_block(0.3, "variant = linear\nk_min = 2\nk_max = 5\ntau = 0.4\n"), &amata_final);
  const RunResult l = train_and_eval(
      "const_low", train_block(0.3, "variant = constant\nk_min = 5\nk_max = 5\ntau = 0.05\n"), &low);
  const RunResult h = train_and_eval(
      "const_high", train_block(0.3, "variant = constant\nk_min = 40\nk_max = 40\ntau = 0.4\n"), &high);
  const bool pass = a.c_value < l.c_value && a.robust_acc >= l.robust_acc + 0.05;
  return {pass, fmt::format("C amata {:.4g} / low {:.4g} / high {:.4g}; robust amata {:.3f} / low {:.3f} / high {:.3f}; "
                            "clean amata {:.3f} / low {:.3f} / high {:.3f}",
                            a.c_value, l.c_value, h.c_value, a.robust_acc, l.robust_acc, h.robust_acc, a.clean_acc,
                            l.clean_acc, h.clean_acc)};
}

// 6
Outcome acceleration() {
  const RunResult a =
      train_and_eval("amata_2_10", train_block(0.3, "variant = linear\nk_min = 2\nk_max = 10\ntau = 0.4\n"), nullptr);
  const RunResult c = train_and_eval(
      "const_10", train_block(0.3, "variant = constant\nk_min = 10\nk_max = 10\ntau = 0.4\n"), nullptr);
  const double ratio = static_cast<double>(a.inner_steps) / static_cast<double>(c.inner_steps);
  const double diff = a.robust_acc - c.robust_acc;
  return {ratio <= 0.62 && std::fabs(diff) <= 0.03,
          fmt::format("inner steps {} / {} = {:.3f}; robust amata {:.3f} vs constant {:.3f} (diff {:+.1f} points)",
                      a.inner_steps, c.inner_steps, ratio, a.robust_acc, c.robust_acc, 100.0 * diff)};
}

// 7
Outcome erm_vulnerability() {
  const RunResult e = train_and_eval("erm", train_block(0.0, "variant = constant\nk_min = 1\nk_max = 1\ntau = 0.01\n"), nullptr);
  return {e.robust_acc < 0.05 && e.clean_acc > 0.90,
          fmt::format("clean {:.3f}, PGD-40 robust {:.3f}", e.clean_acc, e.robust_acc)};
}

// 8
Outcome schedule_algebra() {
  ScheduleSpec lin;
  lin.variant = ScheduleVariant::linear;
  lin.k_min = 2;
  lin.k_max = 10;
  lin.tau = 0.4;
  lin.horizon = 100;
  ScheduleSpec ex = lin;
  ex.variant = ScheduleVariant::exponential;
  ex.eta_shape = 0.05;
  bool ok = steps_at(lin, 0) == 2 && steps_at(ex, 0) == 2 && steps_at(ex, 100) == 10;
  bool budget = true;
  for (const ScheduleSpec* s : {&lin, &ex}) {
    for (int t = 0; t <= 100; ++t) budget = budget && alpha_at(*s, t) * steps_at(*s, t) == 0.4;
  }
  // Direct summation of round-half-up(2 + 8 t / 100) in exact integer arithmetic.
  std::int64_t oracle = 0;
  for (int t = 0; t < 100; ++t) oracle += 2 + (2 * 8 * t + 100) / 200;
  const std::int64_t total = total_inner_steps(lin, 1);
  return {ok && budget && total == oracle,
          fmt::format("endpoints ok: {}, alpha*K == tau: {}, total_inner_steps {} vs direct sum {}", ok,
                      budget, total, oracle)};
}

// Cyclic Jacobi rotations until the off-diagonal mass vanishes.
std::array<double, 3> jacobi_leading(std::array<std::array<double, 3>, 3> a) {
  std::array<std::array<double, 3>, 3> v{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if (off < 1e-30) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = 0.5 * std::atan2(2 * a[p][q], a[q][q] - a[p][p]);
        const double c = std::cos(theta), s = std::sin(theta);
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (a[i][i] > a[best][best]) best = i;
  return {v[0][best], v[1][best], v[2][best]};
}

// 9
Outcome landscape_correctness() {
  Rng rng(9);
  double worst_angle = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    std::vector<std::vector<double>> vs(n, std::vector<double>(3));
    std::array<std::array<double, 3>, 3> m{};
    for (auto& v : vs) {
      for (double& x : v) x = rng.normal();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m[i][j] += v[i] * v[j] / static_cast<double>(n);
    }
    const auto axes = compute_axes(vs, 1);
    const auto e = jacobi_leading(m);
    const double c = std::fabs(axes.x_axis[0] * e[0] + axes.x_axis[1] * e[1] + axes.x_axis[2] * e[2]);
    const double cx = axes.x_axis[1] * e[2] - axes.x_axis[2] * e[1];
    const double cy = axes.x_axis[2] * e[0] - axes.x_axis[0] * e[2];
    const double cz = axes.x_axis[0] * e[1] - axes.x_axis[1] * e[0];
    worst_angle = std::max(worst_angle, std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), c));
  }

  bool center_exact = true, origin_zero = true;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto inst = amata::testing::random_instance(3000 + s, 0.0);
    const std::size_t d = inst.x.dim(1);
    const std::vector<double> x0(inst.x.row(0).begin(), inst.x.row(0).end());
    std::vector<Tensor> steps;
    PgdOptions opt;
    opt.trajectory = &steps;
    const Tensor x0t({1, d}, x0);
    const std::vector<Label> y{inst.y[0]};
    pgd_perturb(inst.params, AdvBatch::from_clean(x0t, y, 0.3), 0.05, 10, opt);
    std::vector<std::vector<double>> path, disp;
    for (const Tensor& t : steps) {
      path.emplace_back(t.values().begin(), t.values().end());
      std::vector<double> dv(d);
      for (std::size_t i = 0; i < d; ++i) dv[i] = path.back()[i] - x0[i];
      disp.push_back(dv);
    }
    disp.push_back(std::vector<double>(d, 0.01));
    const auto axes = compute_axes(disp, s);
    const LossGrid g = loss_grid(inst.params, x0, inst.y[0], axes, 0.3, 21);
    center_exact = center_exact && g.at(10, 10) == mean_loss(inst.params, x0t, y);
    const auto proj = project_trajectory(path, x0, axes);
    origin_zero = origin_zero && proj.front().first == 0.0 && proj.front().second == 0.0;
  }
  return {worst_angle < 1e-6 && center_exact && origin_zero,
          fmt::format("max PCA angle {:.2e} rad, grid centre == clean loss: {}, start projects to (0,0): {}",
                      worst_angle, center_exact, origin_zero)};
}

// 10
Outcome determinism() {
  const std::string cfg = "[run]\nseed = 5\nthreads = 1\n" + mnist_section() +
                          "[train]\nepochs = 2\neps = 0.3\n[schedule]\nvariant = linear\nk_min = 2\nk_max = 4\ntau = 0.4\n";
  const fs::path dir = kWork / "determinism";
  fs::create_directories(dir);
  write_file_atomic(dir / "run.cfg", cfg);
  cli({"train", "--config", (dir / "run.cfg").string(), "--out", (dir / "a").string()});
  cli({"train", "--config", (dir / "run.cfg").string(), "--out", (dir / "b").string()});
  const bool model = read_file(dir / "a/model.amlp") == read_file(dir / "b/model.amlp");
  const bool metrics = read_file(dir / "a/metrics.csv") == read_file(dir / "b/metrics.csv");
  return {model && metrics, fmt::format("model bytes identical: {}, metrics identical: {}", model, metrics)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "gradient correctness", 60, gradient_correctness},
      {2, "inner-max oracle equivalence", 60, inner_max_oracle},
      {3, "toy PMP reproduction", 60, toy_pmp},
      {4, "criterion properties", 120, criterion_properties},
      {5, "annealed vs weak constant", 1800, annealed_beats_weak_constant},
      {6, "acceleration proxy", 2400, acceleration},
      {7, "ERM vulnerability", 600, erm_vulnerability},
      {8, "schedule algebra", 60, schedule_algebra},
      {9, "landscape correctness", 60, landscape_correctness},
      {10, "determinism", 600, determinism},
  };
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    fmt::print("{} [{:2}] {}: {} ({:.1f} s{})\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail, secs,
               in_time ? "" : fmt::format(", over {:.0f} s budget", c.budget_seconds));
    std::fflush(stdout);
  }
  fmt::print("{} of {} acceptance criteria passed\n", 10 - failures, 10);
  return failures == 0 ? 0 : 1;
}

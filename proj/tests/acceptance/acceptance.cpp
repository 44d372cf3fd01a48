// Acceptance harness: one PASS/FAIL line per criterion, then a tally.
// Criteria 4-7 need the trained fixture (ANTIPURE_FIXTURE); criterion 8 drives
// the CLI with configs/smoke.cfg (ANTIPURE_SMOKE_CONFIG).
//
// Exit status is 0 only when all eight pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "antipure/attack.hpp"
#include "antipure/cli.hpp"
#include "antipure/dataset.hpp"
#include "antipure/dct.hpp"
#include "antipure/metrics.hpp"
#include "antipure/purification.hpp"
#include "antipure/rng.hpp"
#include "antipure/workflow.hpp"
#include "../fixture.hpp"
#include "../support.hpp"

using namespace antipure;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Verdict gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const NoiseSchedule sched = make_schedule(100, 1e-4, 0.02);
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < 3; ++trial) {
    const DenoiserModel m = DenoiserModel::random(DenoiserSpec{1, 4, 2, 8}, 100 + trial);
    const Image x = testing::uniform(Shape{1, 8, 8}, 200 + trial);
    const Image delta = testing::uniform(Shape{1, 8, 8}, 300 + trial, -0.05, 0.05);
    const Image eps = randn(x.shape(), 400 + trial);
    const int t = 1 + static_cast<int>(trial) * 4;

    worst = std::max(worst, testing::grad_check([&](Tape&, Var v) { return ops::mean(m.predict(v, t)); }, x));
    worst = std::max(worst, testing::grad_check([&](Tape&, Var v) { return loss_fre(v, 4); }, x));
    worst = std::max(worst, testing::grad_check([&](Tape&, Var v) { return loss_err_t(m, v, t, 99, sched); }, x));
    AttackConfig cfg;
    cfg.patch_size = 4;
    worst = std::max(worst, testing::grad_check(
                                [&](Tape& tape, Var v) {
                                  return loss_pgd(m, tape.constant(x), v, t, tape.constant(eps), cfg, sched).total;
                                },
                                delta));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0, "max rel err " + fmt(worst) + ", " + fmt(secs) + " s"};
}

Verdict dct() {
  Rng rng(7);
  double rt = 0.0, pv = 0.0;
  for (int p = 0; p < 1000; ++p) {
    Tensor patch(Shape{8, 8});
    for (double& v : patch.data()) v = 2.0 * uniform01(rng) - 1.0;
    const Tensor c = dct2d(patch);
    rt = std::max(rt, max_abs_diff(dct2d(c, true), patch));
    double ex = 0.0, ec = 0.0;
    for (double v : patch.data()) ex += v * v;
    for (double v : c.data()) ec += v * v;
    pv = std::max(pv, std::abs(ex - ec));
  }
  bool exact = true;
  for (double level : {-1.0, -0.3, 0.0, 0.7, 1.0}) exact = exact && loss_fre(Image(Shape{1, 32, 32}, level), 8) == 0.5;
  return {rt < 1e-10 && pv < 1e-10 && exact,
          "round trip " + fmt(rt) + ", Parseval " + fmt(pv) + ", constant loss_fre " + (exact ? "0.5" : "not 0.5")};
}

Verdict diffusion_algebra() {
  const NoiseSchedule s = make_schedule(100, 1e-4, 0.02);
  const Image x0 = testing::uniform(Shape{1, 32, 32}, 11);
  const Image eps = randn(x0.shape(), 12);
  double worst = 0.0;
  for (int t = 1; t <= 100; ++t) worst = std::max(worst, max_abs_diff(predict_x0(diffuse(x0, t, eps, s), eps, t, s), x0));
  return {worst < 1e-10, "max error " + fmt(worst) + " over t=1..100"};
}

Verdict pgd_invariants(const ImageSet& clean, ImageSet& adversarial) {
  const DenoiserModel& m = testing::trained().model;
  const NoiseSchedule& s = testing::trained_schedule();
  const double eta = 16.0 / 255.0;
  bool bounded = true;
  std::size_t pairs = 0, rising = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    AttackConfig cfg;
    cfg.seed = derive_seed(0, {i});
    const AttackResult r = pgd_attack(clean[i], m, s, cfg);
    for (const StepRecord& st : r.trace) bounded = bounded && st.delta_linf <= eta + 1e-9;
    bounded = bounded && r.trace.size() == 100 && linf_distance(r.adversarial, clean[i]) <= eta + 1e-9;
    for (double v : r.adversarial.data()) bounded = bounded && v >= -1.0 && v <= 1.0;
    adversarial.push_back(r.adversarial);

    cfg.freeze_noise = true;
    const AttackResult f = pgd_attack(clean[i], m, s, cfg);
    for (std::size_t k = 1; k < f.trace.size(); ++k, ++pairs) rising += f.trace[k].total >= f.trace[k - 1].total;
  }
  const double frac = static_cast<double>(rising) / static_cast<double>(pairs);
  return {bounded && frac >= 0.9,
          std::string("budget/range ") + (bounded ? "held" : "violated") + ", frozen-noise ascent on " + fmt(100 * frac) +
              "% of step pairs"};
}

Verdict convergence(const ImageSet& clean, const ImageSet& adversarial) {
  const auto t0 = std::chrono::steady_clock::now();
  const DenoiserModel& m = testing::trained().model;
  const NoiseSchedule& s = testing::trained_schedule();
  auto gap = [&](int tp) {
    std::vector<double> v;
    for (std::uint64_t seed = 0; seed < 4; ++seed)
      for (std::size_t i = 0; i < clean.size(); ++i) {
        const std::uint64_t k = derive_seed(500 + seed, {i});
        v.push_back(mse(diffpure(clean[i], tp, m, s, k), diffpure(adversarial[i], tp, m, s, k)));
      }
    return mean_of(v);
  };
  const double g10 = gap(10), g50 = gap(50);
  const double secs = seconds_since(t0);
  return {g50 < g10 && secs < 600.0,
          "mean MSE t_p=10 " + fmt(g10) + ", t_p=50 " + fmt(g50) + ", " + fmt(secs) + " s"};
}

Verdict ordering() {
  using testing::pc_value;
  const double a = pc_value("antipure", 40, "mean_hf_purified");
  const double b = pc_value("pgd_ddpm", 40, "mean_hf_purified");
  const double c = pc_value("none", 40, "mean_hf_purified");
  const double sa = pc_value("antipure", 40, "sample_hf");
  const double sb = pc_value("pgd_ddpm", 40, "sample_hf");
  return {a > b && b > c && sa > sb, "purified HF antipure " + fmt(a) + " pgd_ddpm " + fmt(b) + " none " + fmt(c) +
                                         "; sample HF @40 antipure " + fmt(sa) + " pgd_ddpm " + fmt(sb)};
}

Verdict ablation() {
  using testing::pc_value;
  const double full = pc_value("antipure", 40, "mean_hf_purified");
  bool ok = true;
  std::string detail = "full " + fmt(full);
  for (const char* arm : {"pgd_ddpm", "pgd_ddpm+fre", "pgd_ddpm+err_t"}) {
    const double v = pc_value(arm, 40, "mean_hf_purified");
    ok = ok && full >= 0.95 * v;
    detail += std::string(", ") + arm + " " + fmt(v);
  }
  return {ok, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Every regular file in `a` except the snapshot must exist in `b` with the same bytes.
bool same_outputs(const fs::path& a, const fs::path& b, std::string& why) {
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().filename() == "config_snapshot.cfg") continue;
    const fs::path rel = fs::relative(e.path(), a);
    ++files;
    if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) {
      why = rel.string();
      return false;
    }
  }
  if (files == 0) why = "no outputs";
  return files > 0;
}

Verdict determinism() {
  const char* cfg = std::getenv("ANTIPURE_SMOKE_CONFIG");
  if (cfg == nullptr) return {false, "ANTIPURE_SMOKE_CONFIG not set"};
  const fs::path root = fs::temp_directory_path() / "antipure_acceptance_cli";
  fs::remove_all(root);
  std::ostringstream sink;
  auto cli = [&](std::vector<std::string> args) { return cli_main(args, sink, sink); };
  auto d = [&](const std::string& n) { return (root / n).string(); };

  struct Step {
    std::string name;
    std::vector<std::string> args;
  };
  const std::vector<Step> steps{
      {"gen-data", {"gen-data"}},
      {"train", {"train", "--in", d("gen-data")}},
      {"attack", {"attack", "--in", d("gen-data"), "--model", d("train") + "/model.ckpt"}},
      {"purify", {"purify", "--in", d("attack"), "--model", d("train") + "/model.ckpt"}},
      {"finetune", {"finetune", "--in", d("purify"), "--model", d("train") + "/model.ckpt"}},
      {"sample", {"sample", "--model", d("finetune") + "/model.ckpt"}},
      {"probe-blocks", {"probe-blocks", "--clean", d("gen-data"), "--in", d("attack"), "--model", d("train") + "/model.ckpt"}},
      {"spectra", {"spectra", "--in", d("attack")}},
      {"eval", {"eval", "--in", d("attack"), "--clean", d("gen-data")}},
      {"run-pc", {"run-pc"}},
  };
  std::vector<std::string> bad;
  for (const Step& st : steps) {
    std::vector<std::string> first = st.args;
    first.insert(first.end(), {"--config", cfg, "--out", d(st.name)});
    const std::vector<std::string> replay{st.args[0], "--config", d(st.name) + "/config_snapshot.cfg", "--out",
                                          d(st.name + ".replay")};
    std::string why;
    if (cli(first) != 0 || cli(replay) != 0)
      bad.push_back(st.name + " (exit)");
    else if (!same_outputs(d(st.name), d(st.name + ".replay"), why))
      bad.push_back(st.name + " (" + why + ")");
  }
  if (bad.empty()) return {true, std::to_string(steps.size()) + " commands replayed bit-identically"};
  std::string detail = "differs:";
  for (const std::string& b : bad) detail += " " + b;
  return {false, detail};
}

}  // namespace

int main() {
  int passed = 0, evaluated = 0;
  auto report = [&](int n, const std::string& name, const std::function<Verdict()>& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    ++evaluated;
    passed += v.pass;
    std::printf("criterion %d %-26s %s  %s\n", n, name.c_str(), v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "gradient-correctness", gradients);
  report(2, "dct-fidelity", dct);
  report(3, "diffusion-algebra", diffusion_algebra);

  const ImageSet clean = procedural_dataset(16, 1, 32, 2);
  ImageSet adversarial;
  report(4, "pgd-invariants", [&] { return pgd_invariants(clean, adversarial); });
  report(5, "purification-convergence", [&]() -> Verdict {
    if (adversarial.size() != clean.size()) return {false, "no adversarial set (criterion 4 did not finish)"};
    return convergence(clean, adversarial);
  });
  report(6, "anti-purification-ordering", ordering);
  report(7, "ablation-structure", ablation);
  report(8, "cli-determinism", determinism);

  std::printf("acceptance: %d/%d criteria passed, %d evaluated\n", passed, 8, evaluated);
  return evaluated == 8 && passed == 8 ? 0 : 1;
}

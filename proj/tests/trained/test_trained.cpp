#include <doctest.h>

#include <cmath>
#include <vector>

#include "antipure/attack.hpp"
#include "antipure/dataset.hpp"
#include "antipure/metrics.hpp"
#include "antipure/purification.hpp"
#include "antipure/rng.hpp"
#include "antipure/workflow.hpp"
#include "../fixture.hpp"

using namespace antipure;
using testing::trained;
using testing::trained_schedule;

namespace {

const DenoiserModel& model() { return trained().model; }
const NoiseSchedule& sched() { return trained_schedule(); }

// 16 images the model never saw (training used data.seed = 1).
const ImageSet& clean16() {
  static const ImageSet set = procedural_dataset(16, 1, 32, 2);
  return set;
}

ImageSet attacked(Arm arm) {
  ImageSet out;
  for (std::size_t i = 0; i < clean16().size(); ++i) {
    AttackConfig cfg = arm_attack_config(arm, AttackConfig{});
    cfg.seed = derive_seed(0, {i});
    out.push_back(pgd_attack(clean16()[i], model(), sched(), cfg).adversarial);
  }
  return out;
}

const ImageSet& baseline_adv() {
  static const ImageSet set = attacked(Arm::pgd_ddpm);
  return set;
}

const ImageSet& antipure_adv() {
  static const ImageSet set = attacked(Arm::antipure);
  return set;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double mean_hf(const ImageSet& set) {
  std::vector<double> v;
  for (const Image& x : set) v.push_back(hf_energy_ratio(x, 8));
  return mean_of(v);
}

}  // namespace

TEST_CASE("trained model beats an untrained one at t=10 on the same batch") {
  const DenoiserModel untrained = DenoiserModel::random(model().spec(), 5);
  const ImageSet batch = procedural_dataset(8, 1, 32, 31);
  double lt = 0.0, lu = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Image eps = randn(batch[i].shape(), derive_seed(32, {i}));
    lt += ddpm_loss(model(), batch[i], 10, eps, sched());
    lu += ddpm_loss(untrained, batch[i], 10, eps, sched());
  }
  MESSAGE("t=10 loss trained " << lt / 8 << " untrained " << lu / 8);
  CHECK(lt < lu);
}

TEST_CASE("held-out ddpm loss is below half the untrained loss") {
  const DenoiserModel untrained = DenoiserModel::random(model().spec(), 5);
  const ImageSet held_out = procedural_dataset(16, 1, 32, 33);
  const double lt = eval_ddpm_loss(model(), held_out, sched(), 34);
  const double lu = eval_ddpm_loss(untrained, held_out, sched(), 34);
  MESSAGE("held-out loss trained " << lt << " untrained " << lu);
  CHECK(lt < 0.5 * lu);
}

TEST_CASE("reverse from t=10 moves a diffused image back towards the original") {
  std::vector<double> before, after;
  for (std::size_t i = 0; i < 8; ++i) {
    const Image& x0 = clean16()[i];
    const Image xt = diffuse(x0, 10, randn(x0.shape(), derive_seed(40, {i})), sched());
    const Image back = reverse(model(), xt, 10, 0, sched(), derive_seed(41, {i}));
    before.push_back(mse(xt, x0));
    after.push_back(mse(back, x0));
  }
  MESSAGE("mse diffused " << mean_of(before) << " reversed " << mean_of(after));
  CHECK(mean_of(after) < mean_of(before));
}

TEST_CASE("erroneous-timestep loss is strictly negative and matches two forward calls") {
  for (std::size_t i = 0; i < 4; ++i) {
    const Image xt = diffuse(clean16()[i], 10, randn(Shape{1, 32, 32}, derive_seed(50, {i})), sched());
    Tape tape;
    const double got = loss_err_t(model(), tape.constant(xt), 10, 99, sched()).value().item();
    const Image a = forward(model(), xt, 99);
    const Image b = forward(model(), xt, 10);
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += (a[k] - b[k]) * (a[k] - b[k]);
    CHECK(got < 0.0);
    CHECK(got == doctest::Approx(-acc / static_cast<double>(a.size())).epsilon(1e-12));
  }
}

// Measured: antipure > clean > pgd_ddpm. The ddpm-only attack pushes the signed
// HF sum of the t=1 prediction slightly negative. Kept as stated, known to fail.
TEST_CASE("attack effect on the model's t=1 prediction: antipure > pgd_ddpm > clean" * doctest::may_fail()) {
  auto lfre_at_1 = [&](const ImageSet& set) {
    std::vector<double> v;
    for (std::size_t i = 0; i < set.size(); ++i)
      for (std::size_t k = 0; k < 8; ++k) {
        const Image eps = randn(set[i].shape(), derive_seed(60, {i, k}));
        const Image x1 = diffuse(set[i], 1, eps, sched());
        v.push_back(loss_fre(predict_x0(x1, forward(model(), x1, 1), 1, sched()), 8));
      }
    return mean_of(v);
  };
  const double c = lfre_at_1(clean16());
  const double b = lfre_at_1(baseline_adv());
  const double a = lfre_at_1(antipure_adv());
  MESSAGE("mean loss_fre at t=1: clean " << c << " pgd_ddpm " << b << " antipure " << a);
  CHECK(b > c);
  CHECK(a > b);
}

TEST_CASE("GridPure at paper defaults strips most of a baseline perturbation's HF energy") {
  const ImageSet clean(clean16().begin(), clean16().begin() + 4);
  const ImageSet adv(baseline_adv().begin(), baseline_adv().begin() + 4);
  ImageSet purified;
  for (std::size_t i = 0; i < adv.size(); ++i) {
    PurifyConfig cfg;
    cfg.seed = derive_seed(70, {i});
    purified.push_back(gridpure(adv[i], cfg, model(), sched()).output);
  }
  const double hc = mean_hf(clean), ha = mean_hf(adv), hp = mean_hf(purified);
  MESSAGE("hf clean " << hc << " adversarial " << ha << " purified " << hp);
  CHECK(ha > 2.0 * hc);
  CHECK(std::abs(hp - hc) <= 0.2 * hc);
}

TEST_CASE("purified clean/adversarial l-inf gap shrinks as t_p grows (one inversion allowed)") {
  const std::vector<int> tps{5, 10, 25, 50};
  std::vector<double> gap;
  for (int tp : tps) {
    std::vector<double> v;
    for (std::uint64_t s = 0; s < 4; ++s)
      for (std::size_t i = 0; i < clean16().size(); ++i) {
        const std::uint64_t seed = derive_seed(80 + s, {i});
        v.push_back(linf_distance(diffpure(clean16()[i], tp, model(), sched(), seed),
                                  diffpure(antipure_adv()[i], tp, model(), sched(), seed)));
      }
    gap.push_back(mean_of(v));
    MESSAGE("t_p " << tp << " mean l-inf " << gap.back());
  }
  int inversions = 0;
  for (std::size_t k = 1; k < gap.size(); ++k) inversions += gap[k] > gap[k - 1];
  CHECK(inversions <= 1);
}

TEST_CASE("fine-tuning on clean images does not raise their loss by more than 5%") {
  const double base = eval_ddpm_loss(model(), clean16(), sched(), 90);
  const DenoiserModel ft = finetune_on(clean16(), model(), sched(), FinetuneParams{300, 0.2, 8, 91});
  const double after = eval_ddpm_loss(ft, clean16(), sched(), 90);
  MESSAGE("clean loss base " << base << " fine-tuned " << after);
  CHECK(after <= 1.05 * base);
}

TEST_CASE("run-pc report: antipure samples carry more HF than the clean arm's") {
  const double a = testing::pc_value("antipure", 40, "sample_hf");
  const double n = testing::pc_value("none", 40, "sample_hf");
  MESSAGE("sample_hf antipure " << a << " none " << n);
  CHECK(a > n);
}

// Measured: the baseline arm's sample HF rises with depth, because purification
// itself injects HF noise at this scale. Kept as stated, known to fail.
TEST_CASE("run-pc report: baseline artifact metric does not grow with purification depth" * doctest::may_fail()) {
  std::vector<double> v;
  for (int c : {10, 20, 30, 40}) v.push_back(testing::pc_value("pgd_ddpm", c, "sample_hf"));
  int inversions = 0;
  for (std::size_t k = 1; k < v.size(); ++k) inversions += v[k] > v[k - 1];
  MESSAGE("pgd_ddpm sample_hf " << v[0] << " " << v[1] << " " << v[2] << " " << v[3]);
  CHECK(inversions <= 1);
}

TEST_CASE("run-pc report: every metric is finite and the budget holds") {
  for (const auto& [key, row] : testing::pc_summary()) {
    for (const auto& [col, cell] : row)
      if (col != "arm") CHECK(std::isfinite(std::stod(cell)));
    CHECK(std::stod(row.at("mean_delta_linf")) <= 16.0 / 255.0 + 1e-9);
  }
  CHECK(testing::pc_summary().size() == 5 * 4);
}

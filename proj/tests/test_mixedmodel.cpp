#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lordpx/error.hpp"
#include "lordpx/estimators.hpp"
#include "lordpx/mixedmodel.hpp"
#include "lordpx/simulate.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace lordpx;
using testing::rec;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::CorruptAsset;
}

}  // namespace

TEST_CASE("block criterion agrees with the dense-matrix criterion") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const TrialDataset d = oracle::random_clustered(rng, 3 + rep, 2, 9);
    for (const LmmSpec spec : {LmmSpec::post_ancova(), LmmSpec::gain_anova()}) {
      const LmmProblem p = build_problem(d, spec);
      const RemlProfile profile(p);
      for (double lambda : {0.0, 1e-6, 0.01, 0.3, 2.0, 50.0, 1e4}) {
        const double a = profile.criterion(lambda);
        const double b = oracle::dense_reml_criterion(p, lambda);
        CHECK(a == doctest::Approx(b).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("golden-section optimum matches a 10,000-point grid on 4 schools x 6 pupils") {
  std::mt19937_64 rng(404);
  int interior = 0;
  for (int rep = 0; rep < 8; ++rep) {
    const TrialDataset d = oracle::random_clustered(rng, 4, 6, 6, 0.8);
    const LmmProblem p = build_problem(d, LmmSpec::post_ancova());
    const LmmFit fit = fit_reml(p);
    const oracle::GridOptimum grid =
        oracle::grid_minimum([&](double l) { return oracle::dense_reml_criterion(p, l); });
    CHECK(oracle::dense_reml_criterion(p, fit.lambda) <= grid.value + 1e-9);
    if (grid.lambda < 1e-4) {
      CHECK(fit.lambda < 1e-4);
      continue;
    }
    ++interior;
    CHECK(std::abs(std::log(fit.lambda) - std::log(grid.lambda)) <= grid.log_step);
  }
  CHECK(interior >= 3);
}

TEST_CASE("analytic slope agrees with a central difference") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 10; ++rep) {
    const TrialDataset d = oracle::random_clustered(rng, 3 + rep, 3, 12);
    for (const LmmSpec spec : {LmmSpec::post_ancova(), LmmSpec::gain_anova()}) {
      const RemlProfile profile(build_problem(d, spec));
      for (double x : {-6.0, -1.0, 0.0, 1.5, 5.0}) {
        const double h = 1e-5;
        const double fd =
            (profile.criterion(std::exp(x + h)) - profile.criterion(std::exp(x - h))) / (2.0 * h);
        CHECK(profile.slope(std::exp(x)) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("balanced one-way layout reproduces the ANOVA moment estimators") {
  std::mt19937_64 rng(77);
  int checked = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const TrialDataset d = oracle::random_clustered(rng, 3 + rep % 8, 4, 30, 0.5, true);
    const LmmProblem p = oracle::intercept_only(d);
    const oracle::AnovaMoments m = oracle::balanced_anova(p.y, p.group);
    if (m.msb <= m.msw) continue;
    const LmmFit fit = fit_reml(p);
    CHECK(std::abs(fit.sigma2_e - m.sigma2_e) < 1e-6);
    CHECK(std::abs(fit.sigma2_u - m.sigma2_u) < 1e-6);
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("one pupil per school reduces to ordinary least squares") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z;
  std::vector<PupilRecord> rows;
  for (int i = 0; i < 60; ++i) {
    const double pre = z(rng);
    rows.push_back(rec("school" + std::to_string(i), i % 2, pre, 0.4 + 0.3 * (i % 2) + 0.7 * pre + z(rng)));
  }
  const TrialDataset d(rows, "ols");
  for (const LmmSpec spec : {LmmSpec::post_ancova(), LmmSpec::gain_anova()}) {
    const LmmProblem p = build_problem(d, spec);
    const LmmFit fit = fit_reml(p);
    const oracle::Ols o = oracle::ols(p.x, p.y);
    CHECK(fit.lambda == 0.0);
    CHECK(fit.sigma2_u == 0.0);
    CHECK(fit.icc == 0.0);
    CHECK(fit.converged);
    for (std::size_t k = 0; k < p.p(); ++k) {
      CHECK(std::abs(fit.beta[k] - o.beta(k)) < 1e-8);
      CHECK(std::abs(fit.se_beta[k] - o.se(k)) < 1e-6);
    }
  }
}

TEST_CASE("simulated zero between-school variance keeps lambda near the boundary") {
  ScenarioSpec spec;
  spec.n_sch = 40;
  spec.pupils_per_school = {25};
  spec.seed = 21;
  const LmmFit fit = fit_lmm(generate(spec), LmmSpec::post_ancova());
  CHECK(fit.icc < 0.03);
}

TEST_CASE("gain with pretest covariate is post-ANCOVA shifted by one in the slope") {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    const TrialDataset d = oracle::random_clustered(rng, 3 + rep % 6, 4, 20);
    const LmmProblem post = build_problem(d, LmmSpec::post_ancova());
    const LmmProblem gain = build_problem(d, LmmSpec::gain_ancova());
    for (double lambda : {0.0, 0.05, 1.7}) {
      const LmmFit a = RemlProfile(post).fit_at(lambda);
      const LmmFit b = RemlProfile(gain).fit_at(lambda);
      CHECK(std::abs(a.beta[1] - b.beta[1]) < 1e-9);
      CHECK(std::abs(a.beta[2] - b.beta[2] - 1.0) < 1e-9);
    }
    const LmmFit a = fit_reml(post), b = fit_reml(gain);
    CHECK(std::abs(a.beta[1] - b.beta[1]) < 1e-9);
    CHECK(std::abs(a.beta[2] - b.beta[2] - 1.0) < 1e-9);
    CHECK(std::abs(a.lambda - b.lambda) <= 1e-6 * (1.0 + a.lambda));
  }
}

TEST_CASE("returned lambda is a local optimum") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    const TrialDataset d = oracle::random_clustered(rng, 4 + rep, 5, 25, 0.4);
    const LmmProblem p = build_problem(d, LmmSpec::post_ancova());
    const LmmFit fit = fit_reml(p);
    const RemlProfile profile(p);
    const double at = profile.criterion(fit.lambda);
    CHECK(at == doctest::Approx(fit.reml_value).epsilon(1e-12));
    if (fit.lambda > 0.0) {
      CHECK(at <= profile.criterion(fit.lambda * 0.99));
      CHECK(at <= profile.criterion(fit.lambda * 1.01));
    } else {
      CHECK(at <= profile.criterion(1e-4));
    }
  }
}

TEST_CASE("icc equals lambda / (1 + lambda)") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const LmmFit fit = fit_lmm(oracle::random_clustered(rng, 6, 5, 15, 0.6), LmmSpec::gain_anova());
    CHECK(std::abs(fit.icc - fit.lambda / (1.0 + fit.lambda)) < 1e-12);
    CHECK(fit.sigma2_u >= 0.0);
    CHECK(fit.sigma2_e > 0.0);
    CHECK(fit.icc < 1.0);
    CHECK(icc_of(fit) == doctest::Approx(fit.sigma2_u / (fit.sigma2_u + fit.sigma2_e)));
  }
}

TEST_CASE("record order does not change the fit") {
  std::mt19937_64 rng(8);
  const TrialDataset d = oracle::random_clustered(rng, 7, 3, 30, 0.5);
  std::vector<PupilRecord> shuffled = d.records();
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  for (const LmmSpec spec : {LmmSpec::post_ancova(), LmmSpec::gain_anova()}) {
    const LmmFit a = fit_lmm(d, spec);
    const LmmFit b = fit_lmm(TrialDataset(shuffled, "shuffled"), spec);
    CHECK(a == b);
  }
}

TEST_CASE("a small school borrows strength from a large one") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  std::vector<PupilRecord> rows;
  for (int i = 0; i < 5; ++i) rows.push_back(rec("A", i % 2, z(rng), 2.0 + z(rng)));
  for (int i = 0; i < 500; ++i) rows.push_back(rec("B", i % 2, z(rng), z(rng)));
  const TrialDataset d(rows, "pool");
  LmmProblem p = oracle::intercept_only(d);
  const LmmFit fit = fit_reml(p);
  REQUIRE(fit.lambda > 0.0);
  const auto& a = fit.schools.at(0);
  REQUIRE(a.school_id == "A");
  const double grand = fit.beta[0];
  CHECK(a.predicted_mean() > grand);
  CHECK(a.predicted_mean() < a.raw_mean);
  const double shrink = fit.lambda * 5 / (1.0 + fit.lambda * 5);
  CHECK(a.blup == doctest::Approx(shrink * (a.raw_mean - a.fixed_mean)).epsilon(1e-12));
}

TEST_CASE("total-variance effect size") {
  LmmFit fit;
  fit.beta = {0.0, 0.5};
  fit.se_beta = {0.1, 0.2};
  fit.sigma2_u = 0.2;
  fit.sigma2_e = 0.8;
  fit.converged = true;
  fit.kind = EstimateKind::MlmGainAnova;
  const EffectEstimate e = effect_size_total_variance(fit);
  CHECK(e.g == doctest::Approx(0.5));
  CHECK(e.lb == doctest::Approx(0.5 - 1.96 * 0.2));
  CHECK(e.kind == EstimateKind::MlmGainAnova);

  fit.beta[1] = 0.0;
  const EffectEstimate z = effect_size_total_variance(fit);
  CHECK(z.g == 0.0);
  CHECK(z.lb == -z.ub);

  fit.converged = false;
  CHECK(code_of([&] { effect_size_total_variance(fit); }) == ErrorCode::NotConverged);
  CHECK(code_of([&] { icc_of(fit); }) == ErrorCode::NotConverged);
}

TEST_CASE("icc_of boundary values") {
  LmmFit fit;
  fit.converged = true;
  fit.sigma2_u = 0.0;
  fit.sigma2_e = 1.3;
  CHECK(icc_of(fit) == 0.0);
  fit.sigma2_u = 1.3;
  CHECK(icc_of(fit) == 0.5);
}

TEST_CASE("clustered data widen the multilevel interval beyond the simple one") {
  ScenarioSpec spec;
  spec.n_sch = 30;
  spec.pupils_per_school = {40};
  spec.randomization = Randomization::Cluster;
  spec.icc_target = 0.15;
  spec.effect = 0.2;
  spec.seed = 42;
  const TrialDataset d = generate(spec);
  const EffectEstimate simple = dim_post(d);
  const EffectEstimate mlm = effect_size_total_variance(fit_lmm(d, LmmSpec::post_ancova()));
  CHECK(mlm.covers(mlm.g));
  CHECK(mlm.ci_width() > simple.ci_width());
}

TEST_CASE("icc estimate is unbiased enough at 361 schools") {
  ScenarioSpec spec;
  spec.n_sch = 361;
  spec.pupils_per_school = {30};
  spec.icc_target = 0.20;
  double sum = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    spec.seed = 1000 + r;
    sum += fit_lmm(generate(spec), LmmSpec{LmmOutcome::Post, false}).icc;
  }
  CHECK(std::abs(sum / reps - 0.20) < 0.04);
}

TEST_CASE("fit errors") {
  const TrialDataset one({rec("a", 1, 1, 2), rec("a", 0, 2, 3), rec("a", 1, 3, 5)}, "one");
  CHECK(code_of([&] { fit_lmm(one, LmmSpec::post_ancova()); }) == ErrorCode::TooFewSchools);
  const TrialDataset flat({rec("a", 1, 1, 2), rec("a", 0, 1, 3), rec("b", 1, 1, 5), rec("b", 0, 1, 1),
                           rec("c", 1, 1, 4)},
                          "flat");
  CHECK(code_of([&] { fit_lmm(flat, LmmSpec::post_ancova()); }) == ErrorCode::RankDeficientDesign);
  const TrialDataset tiny({rec("a", 1, 1, 2), rec("b", 0, 2, 3)}, "tiny");
  CHECK(code_of([&] { fit_lmm(tiny, LmmSpec::post_ancova()); }) == ErrorCode::RankDeficientDesign);
}

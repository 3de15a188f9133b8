#include "fedsim/analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "fedsim/objective.hpp"

using namespace fedsim;

namespace {

std::vector<ParamVector> random_family(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<ParamVector> vs;
  vs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ParamVector v(d);
    for (std::size_t j = 0; j < d; ++j) v[j] = rng.normal(0.0, 2.0);
    vs.push_back(std::move(v));
  }
  return vs;
}

}  // namespace

TEST(SamplingIdentity, TwoVectorsSingleDraw) {
  std::vector<ParamVector> vs{ParamVector{1}, ParamVector{-1}};
  auto id = check_sampling_identity(vs, 1);
  EXPECT_DOUBLE_EQ(id.lhs, 1.0);
  EXPECT_DOUBLE_EQ(id.rhs, 1.0);
}

TEST(SamplingIdentity, FullSamplingDropsVarianceTerm) {
  Rng rng(5);
  auto vs = random_family(rng, 6, 3);
  auto id = check_sampling_identity(vs, 6);
  ParamVector mean(3);
  for (const auto& v : vs) axpy_inplace(1.0 / 6.0, v, mean);
  EXPECT_NEAR(id.lhs, dot(mean, mean), 1e-12);
  EXPECT_NEAR(id.rhs, dot(mean, mean), 1e-12);
}

TEST(SamplingIdentity, IdenticalVectorsForEveryS) {
  ParamVector v{2, -1};
  std::vector<ParamVector> vs(5, v);
  for (std::size_t s = 1; s <= 5; ++s) {
    auto id = check_sampling_identity(vs, s);
    EXPECT_NEAR(id.lhs, dot(v, v), 1e-12);
    EXPECT_NEAR(id.rhs, dot(v, v), 1e-12);
  }
}

TEST(SamplingIdentity, ExactForRandomFamilies) {
  Rng rng(17);
  double worst = 0.0;
  for (int fam = 0; fam < 100; ++fam) {
    std::size_t n = 2 + fam % 7;  // N in 2..8
    auto vs = random_family(rng, n, 4);
    for (std::size_t s = 1; s <= n; ++s) {
      auto id = check_sampling_identity(vs, s);
      worst = std::max(worst, std::abs(id.lhs - id.rhs));
    }
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(SamplingIdentity, RejectsOutOfRange) {
  std::vector<ParamVector> one{ParamVector{1}};
  EXPECT_THROW(check_sampling_identity(one, 1), std::invalid_argument);
  std::vector<ParamVector> big(13, ParamVector{1});
  EXPECT_THROW(check_sampling_identity(big, 2), std::invalid_argument);
}

TEST(PerturbationVariance, NoNoiseNoShiftIsZero) {
  Rng rng(3);
  auto rep = check_perturbation_variance(1.0, 0.0, 0.0, 10000, rng);
  EXPECT_EQ(rep.empirical, 0.0);
  EXPECT_EQ(rep.bound, 0.0);
  EXPECT_TRUE(rep.passed);
}

TEST(PerturbationVariance, WorstDirectionShiftIsExact) {
  Rng rng(4);
  const double L = 0.8, rho = 1.0;
  auto rep = check_perturbation_variance(L, 0.0, rho, 10000, rng);
  EXPECT_NEAR(rep.empirical / ((L * rho) * (L * rho)), 1.0, 1e-9);
  EXPECT_TRUE(rep.passed);
}

TEST(PerturbationVariance, PureNoiseMatchesSigmaSquared) {
  Rng rng(5);
  const double sigma = 0.5;
  auto rep = check_perturbation_variance(1.0, sigma, 0.0, 100000, rng);
  EXPECT_NEAR(rep.empirical, sigma * sigma, rep.margin * sigma * sigma);
  EXPECT_TRUE(rep.passed);
}

TEST(PerturbationVariance, GridNeverViolatesBound) {
  Rng rng(6);
  for (double sigma : {0.0, 0.1, 0.5}) {
    for (double rho : {0.0, 0.01, 0.1, 1.0}) {
      auto rep = check_perturbation_variance(1.0, sigma, rho, 10000, rng);
      EXPECT_TRUE(rep.passed) << "sigma " << sigma << " rho " << rho << " empirical "
                              << rep.empirical << " bound " << rep.bound;
    }
  }
}

TEST(PerturbationVariance, TooFewTrialsRejected) {
  Rng rng(7);
  EXPECT_THROW(check_perturbation_variance(1.0, 0.1, 0.1, 100, rng), std::invalid_argument);
}

TEST(SharpnessProxy, IdentityQuadraticAtOptimum) {
  // f(x* + u) - f(x*) = 0.5 |u|^2 = 0.5 for every unit direction
  QuadraticObjective q(std::vector<double>(4, 1.0), ParamVector(4), 0.0);
  auto loss = [&q](const ParamVector& p) { return q.loss(p); };
  auto grad = [&q](const ParamVector& p) { return q.full_gradient(p).grad; };
  Rng rng(8);
  double s = sharpness_proxy(loss, grad, ParamVector(4), 1.0, 16, rng);
  EXPECT_NEAR(s, 0.5, 1e-12);
}

TEST(SharpnessProxy, ShrinksWithRadiusOnConvex) {
  QuadraticObjective q({1.0, 0.5, 0.25}, ParamVector{1, 1, 1}, 0.0);
  auto loss = [&q](const ParamVector& p) { return q.loss(p); };
  auto grad = [&q](const ParamVector& p) { return q.full_gradient(p).grad; };
  ParamVector x{0, 0, 0};
  Rng rng1(9), rng2(9);
  double big = sharpness_proxy(loss, grad, x, 0.5, 8, rng1);
  double small = sharpness_proxy(loss, grad, x, 0.05, 8, rng2);
  EXPECT_LT(small, big);
  EXPECT_GT(small, 0.0);
}

TEST(SharpnessProxy, LinearFunctionExactDirectionalIncrease) {
  ParamVector c{0.3, -0.4, 1.2};
  auto loss = [&c](const ParamVector& p) { return dot(c, p); };
  auto grad = [&c](const ParamVector&) { return c; };
  Rng rng(10);
  const double rho = 0.7;
  double s = sharpness_proxy(loss, grad, ParamVector(3), rho, 8, rng);
  EXPECT_NEAR(s, rho * norm2(c), 1e-12);
}

TEST(TrendCheck, AcceptsMonotoneAndSingleSoftInversion) {
  std::vector<ScanPoint> mono{{1, 1.0, 0.01, 3, 0}, {2, 0.8, 0.01, 3, 0}, {3, 0.5, 0.01, 3, 0}};
  EXPECT_TRUE(check_weakly_decreasing(mono).passed);

  std::vector<ScanPoint> soft{{1, 1.0, 0.05, 3, 0}, {2, 1.02, 0.05, 3, 0}, {3, 0.5, 0.05, 3, 0}};
  EXPECT_TRUE(check_weakly_decreasing(soft).passed);

  std::vector<ScanPoint> hard{{1, 1.0, 0.001, 3, 0}, {2, 1.5, 0.001, 3, 0}, {3, 0.5, 0.001, 3, 0}};
  EXPECT_FALSE(check_weakly_decreasing(hard).passed);

  std::vector<ScanPoint> twice{{1, 1.0, 0.05, 3, 0},
                               {2, 1.02, 0.05, 3, 0},
                               {3, 0.98, 0.05, 3, 0},
                               {4, 1.0, 0.05, 3, 0}};
  EXPECT_FALSE(check_weakly_decreasing(twice).passed);
}

TEST(TrendCheck, DivergedPointVoidsTrend) {
  std::vector<ScanPoint> pts{{1, 1.0, 0.01, 3, 0}, {2, 0.8, 0.01, 2, 1}};
  EXPECT_FALSE(check_weakly_decreasing(pts).passed);
}

TEST(RateTrendScan, MoreRoundsHelpOnDeterministicConvex) {
  RunConfig base;
  base.optimizer.kind = OptimizerKind::fedwmsam;
  base.optimizer.alpha_mode = AlphaMode::adaptive;
  base.optimizer.local_steps = 2;
  base.n_clients = 8;
  base.sample_rate = 0.5;
  base.rounds = 40;
  base.seed = 11;
  base.eval_every = 10;
  base.objective.kind = ObjectiveSpec::Kind::quadratic;
  base.objective.dim = 10;
  base.objective.hetero = 1.0;
  base.objective.cond = 5.0;
  base.objective.noise_sigma = 0.3;

  auto points = rate_trend_scan(base, ScanAxis::R, {20, 120}, 3, 2);
  ASSERT_EQ(points.size(), 2u);
  EXPECT_EQ(points[0].diverged_runs, 0u);
  EXPECT_EQ(points[1].diverged_runs, 0u);
  EXPECT_LE(points[1].mean_final_grad_norm, points[0].mean_final_grad_norm);
}

TEST(RateTrendScan, FullParticipationEndpointConsistent) {
  RunConfig base;
  base.optimizer.kind = OptimizerKind::fedavg;
  base.optimizer.alpha_mode = AlphaMode::frozen;
  base.optimizer.local_steps = 1;
  base.n_clients = 6;
  base.sample_rate = 0.5;
  base.rounds = 25;
  base.seed = 13;
  base.eval_every = 5;
  base.objective.kind = ObjectiveSpec::Kind::quadratic;
  base.objective.dim = 8;
  base.objective.hetero = 0.5;
  base.objective.cond = 3.0;

  auto points = rate_trend_scan(base, ScanAxis::S, {3, 6}, 3, 1);
  // Endpoint S = n_clients equals a plain full-participation run.
  RunConfig full = base;
  full.sample_rate = 1.0;
  full.seed = mix64(base.seed + 0x9e37 * 1);
  RunResult ref = run(full);
  EXPECT_DOUBLE_EQ(points[1].value, 6.0);
  // compare against the first seed's grad norm contribution
  RunConfig s6 = base;
  s6.sample_rate = 1.0;
  s6.seed = full.seed;
  EXPECT_EQ(run(s6).records.back().global_grad_norm, ref.records.back().global_grad_norm);
}

TEST(RateTrendScan, ValidatesInput) {
  RunConfig base;
  base.objective.kind = ObjectiveSpec::Kind::quadratic;
  EXPECT_THROW(rate_trend_scan(base, ScanAxis::R, {}, 3), std::invalid_argument);
  EXPECT_THROW(rate_trend_scan(base, ScanAxis::R, {10, 5}, 3), std::invalid_argument);
  EXPECT_THROW(rate_trend_scan(base, ScanAxis::R, {5, 10}, 2), std::invalid_argument);
}

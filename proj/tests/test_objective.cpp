#include "fedsim/objective.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

using namespace fedsim;

namespace {

/// Independent gradient oracle: central finite differences of the loss.
ParamVector fd_gradient(const Objective& obj, const ParamVector& x, double h) {
  ParamVector g(x.dim());
  for (std::size_t j = 0; j < x.dim(); ++j) {
    ParamVector hi = x, lo = x;
    hi[j] += h;
    lo[j] -= h;
    g[j] = (obj.loss(hi) - obj.loss(lo)) / (2.0 * h);
  }
  return g;
}

double rel_grad_err(const Objective& obj, const ParamVector& x, double h) {
  ParamVector analytic = obj.full_gradient(x).grad;
  ParamVector fd = fd_gradient(obj, x, h);
  return norm2(sub(analytic, fd)) / std::max(1.0, norm2(analytic));
}

ParamVector random_point(Rng& rng, std::size_t d, double scale = 1.0) {
  ParamVector x(d);
  for (std::size_t j = 0; j < d; ++j) x[j] = scale * rng.normal();
  return x;
}

std::shared_ptr<Dataset> small_classification_data(std::size_t classes, std::size_t dim,
                                                   std::size_t per_class, std::uint64_t seed) {
  return std::make_shared<Dataset>(gen_gaussian_mixture(classes, dim, per_class, 1.5, seed));
}

std::vector<std::size_t> all_rows(const Dataset& ds) {
  std::vector<std::size_t> rows(ds.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

}  // namespace

// ---------------------------------------------------------------------------
// Quadratic
// ---------------------------------------------------------------------------

TEST(Quadratic, ZeroGradientAtOptimum) {
  QuadraticObjective q({1.0, 0.5}, ParamVector{2, -3}, 0.0);
  auto gs = q.full_gradient(ParamVector{2, -3});
  EXPECT_EQ(norm2(gs.grad), 0.0);
  EXPECT_EQ(gs.loss, 0.0);
}

TEST(Quadratic, IdentityHessianClosedForm) {
  QuadraticObjective q({1.0, 1.0, 1.0}, ParamVector{1, 2, 3}, 0.0);
  ParamVector x{4, 4, 4};
  auto gs = q.full_gradient(x);
  EXPECT_EQ(gs.grad, sub(x, q.center()));
}

TEST(Quadratic, HandSolvedTwoClientAverage) {
  // Two 1-D clients with unit curvature and optima at -1 and +1: the average
  // objective is minimized at 0 with mean loss 1/2 there.
  std::vector<ObjectivePtr> ensemble{
      std::make_shared<QuadraticObjective>(std::vector<double>{1.0}, ParamVector{-1}, 0.0),
      std::make_shared<QuadraticObjective>(std::vector<double>{1.0}, ParamVector{1}, 0.0)};
  ParamVector opt = quadratic_global_optimum(ensemble);
  EXPECT_DOUBLE_EQ(opt[0], 0.0);
  double mean_loss =
      (ensemble[0]->loss(opt) + ensemble[1]->loss(opt)) / 2.0;
  EXPECT_DOUBLE_EQ(mean_loss, 0.5);
}

TEST(QuadraticEnsemble, HomogeneousCollapsesToSharedOptimum) {
  auto ensemble = make_quadratic_ensemble(5, 4, 0.0, 3.0, 17);
  auto* first = dynamic_cast<const QuadraticObjective*>(ensemble.front().get());
  ASSERT_NE(first, nullptr);
  for (const auto& obj : ensemble) {
    auto* q = dynamic_cast<const QuadraticObjective*>(obj.get());
    EXPECT_EQ(q->center(), first->center());
  }
  EXPECT_LE(max_abs_diff(quadratic_global_optimum(ensemble), first->center()), 1e-12);
}

TEST(QuadraticEnsemble, UnitConditionGivesIdentityHessian) {
  auto ensemble = make_quadratic_ensemble(3, 5, 1.0, 1.0, 23);
  for (const auto& obj : ensemble) {
    auto* q = dynamic_cast<const QuadraticObjective*>(obj.get());
    for (double a : q->diagonal()) EXPECT_DOUBLE_EQ(a, 1.0);
    ParamVector x{1, -2, 0.5, 3, 4};
    EXPECT_EQ(q->full_gradient(x).grad, sub(x, q->center()));
  }
}

TEST(QuadraticEnsemble, SmoothnessIsExactlyOne) {
  auto ensemble = make_quadratic_ensemble(6, 8, 1.0, 10.0, 29);
  for (const auto& obj : ensemble) {
    ASSERT_TRUE(obj->smoothness().has_value());
    EXPECT_DOUBLE_EQ(*obj->smoothness(), 1.0);
    auto* q = dynamic_cast<const QuadraticObjective*>(obj.get());
    for (double a : q->diagonal()) {
      EXPECT_GE(a, 1.0 / 10.0 - 1e-12);
      EXPECT_LE(a, 1.0);
    }
  }
}

TEST(QuadraticEnsemble, LipschitzBoundHoldsExactly) {
  auto ensemble = make_quadratic_ensemble(4, 6, 1.0, 10.0, 31);
  Rng rng(77);
  for (const auto& obj : ensemble) {
    const double L = *obj->smoothness();
    for (int t = 0; t < 50; ++t) {
      ParamVector x = random_point(rng, 6, 2.0);
      ParamVector y = random_point(rng, 6, 2.0);
      double lhs = norm2(sub(obj->full_gradient(x).grad, obj->full_gradient(y).grad));
      EXPECT_LE(lhs, L * norm2(sub(x, y)) + 1e-12);
    }
  }
}

TEST(Quadratic, StochasticNoNoiseEqualsFull) {
  QuadraticObjective q({1.0, 0.3}, ParamVector{1, 1}, 0.0);
  Rng rng(5);
  ParamVector x{0, 0};
  EXPECT_EQ(q.stochastic_gradient(x, 1, rng).grad, q.full_gradient(x).grad);
}

TEST(Quadratic, StochasticUnbiasedMonteCarlo) {
  const double sigma = 0.7;
  QuadraticObjective q({1.0, 0.5, 0.25}, ParamVector{1, -1, 2}, sigma);
  Rng rng(9);
  ParamVector x{0.5, 0.5, 0.5};
  const auto exact = q.full_gradient(x).grad;
  const int n = 10000;
  ParamVector mean(3);
  std::vector<double> sq(3, 0.0);
  for (int t = 0; t < n; ++t) {
    auto g = q.stochastic_gradient(x, 1, rng).grad;
    for (std::size_t j = 0; j < 3; ++j) {
      mean[j] += g[j] / n;
      sq[j] += g[j] * g[j] / n;
    }
  }
  for (std::size_t j = 0; j < 3; ++j) {
    // Monte-Carlo oracle: per-coordinate sample standard deviation
    double sd = std::sqrt(std::max(0.0, sq[j] - mean[j] * mean[j]));
    EXPECT_NEAR(mean[j], exact[j], 4.0 * sd / std::sqrt(static_cast<double>(n)) + 1e-12);
  }
}

TEST(Quadratic, NoiseTotalVarianceMatchesSigma) {
  // E |noise|^2 = sigma^2 regardless of dimension.
  const double sigma = 0.5;
  QuadraticObjective q(std::vector<double>(10, 1.0), ParamVector(10), sigma);
  Rng rng(13);
  ParamVector x(10);
  const auto exact = q.full_gradient(x).grad;
  const int n = 20000;
  double acc = 0.0;
  for (int t = 0; t < n; ++t) {
    double nm = norm2(sub(q.stochastic_gradient(x, 1, rng).grad, exact));
    acc += nm * nm / n;
  }
  EXPECT_NEAR(acc, sigma * sigma, 0.01 * sigma * sigma);
}

// ---------------------------------------------------------------------------
// Logistic
// ---------------------------------------------------------------------------

TEST(Logistic, UniformPredictorLossIsLogC) {
  auto data = small_classification_data(2, 3, 10, 41);
  LogisticObjective obj(data, all_rows(*data), 2, 0.0);
  EXPECT_NEAR(obj.loss(ParamVector(obj.dim())), std::log(2.0), 1e-12);

  auto data10 = small_classification_data(10, 3, 4, 43);
  LogisticObjective obj10(data10, all_rows(*data10), 10, 0.0);
  EXPECT_NEAR(obj10.loss(ParamVector(obj10.dim())), std::log(10.0), 1e-12);
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  auto data = small_classification_data(3, 4, 8, 47);
  LogisticObjective obj(data, all_rows(*data), 3, 1e-3);
  Rng rng(21);
  for (int t = 0; t < 5; ++t) {
    ParamVector x = random_point(rng, obj.dim(), 0.5);
    EXPECT_LE(rel_grad_err(obj, x, 1e-5), 1e-6);
  }
}

TEST(Logistic, StrongRegularizationShrinksOptimum) {
  auto data = small_classification_data(3, 3, 20, 53);
  // Deterministic fixed-iteration gradient descent per l2; the optimum norm
  // must decrease monotonically as l2 grows.
  double prev_norm = std::numeric_limits<double>::infinity();
  for (double l2 : {0.01, 0.1, 1.0, 10.0}) {
    LogisticObjective obj(data, all_rows(*data), 3, l2);
    ParamVector x(obj.dim());
    for (int it = 0; it < 400; ++it) {
      auto gs = obj.full_gradient(x);
      axpy_inplace(-0.2 / (1.0 + l2), gs.grad, x);
    }
    double n = norm2(x);
    EXPECT_LT(n, prev_norm);
    prev_norm = n;
  }
}

TEST(Logistic, StochasticFullBatchEqualsFull) {
  auto data = small_classification_data(3, 3, 5, 59);
  LogisticObjective obj(data, all_rows(*data), 3, 1e-3);
  Rng rng(31);
  ParamVector x = random_point(rng, obj.dim(), 0.3);
  auto stoch = obj.stochastic_gradient(x, obj.shard_size(), rng);
  auto full = obj.full_gradient(x);
  EXPECT_NEAR(max_abs_diff(stoch.grad, full.grad), 0.0, 1e-12);
}

TEST(Logistic, StochasticUnbiasedMonteCarlo) {
  auto data = small_classification_data(2, 2, 12, 61);
  LogisticObjective obj(data, all_rows(*data), 2, 0.0);
  Rng rng(37);
  ParamVector x = random_point(rng, obj.dim(), 0.4);
  const auto exact = obj.full_gradient(x).grad;
  const int n = 10000;
  ParamVector mean(obj.dim());
  std::vector<double> sq(obj.dim(), 0.0);
  for (int t = 0; t < n; ++t) {
    auto g = obj.stochastic_gradient(x, 4, rng).grad;
    for (std::size_t j = 0; j < obj.dim(); ++j) {
      mean[j] += g[j] / n;
      sq[j] += g[j] * g[j] / n;
    }
  }
  for (std::size_t j = 0; j < obj.dim(); ++j) {
    double sd = std::sqrt(std::max(0.0, sq[j] - mean[j] * mean[j]));
    EXPECT_NEAR(mean[j], exact[j], 4.0 * sd / std::sqrt(static_cast<double>(n)) + 1e-12);
  }
}

TEST(Logistic, BatchBoundsEnforced) {
  auto data = small_classification_data(2, 2, 3, 67);
  LogisticObjective obj(data, all_rows(*data), 2, 0.0);
  Rng rng(41);
  ParamVector x(obj.dim());
  EXPECT_THROW(obj.stochastic_gradient(x, 0, rng), std::invalid_argument);
  EXPECT_THROW(obj.stochastic_gradient(x, obj.shard_size() + 1, rng), std::invalid_argument);
}

TEST(Logistic, EmptyShardThrows) {
  auto data = small_classification_data(2, 2, 3, 71);
  EXPECT_THROW(LogisticObjective(data, {}, 2, 0.0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Two-layer MLP
// ---------------------------------------------------------------------------

TEST(Mlp, GradientMatchesFiniteDifferences) {
  auto data = small_classification_data(3, 4, 6, 73);
  TwoLayerMlpObjective obj(data, all_rows(*data), 3, 5, 1);
  Rng rng(43);
  for (int t = 0; t < 5; ++t) {
    ParamVector x = random_point(rng, obj.dim(), 0.4);
    EXPECT_LE(rel_grad_err(obj, x, 1e-5), 1e-4);
  }
}

TEST(Mlp, DuplicateSamplesAverageToSingleLoss) {
  Dataset single;
  single.feature_dim = 2;
  single.n_classes = 2;
  single.features = {0.5, -1.0};
  single.labels = {1};
  Dataset dup = single;
  for (int i = 0; i < 3; ++i) {
    dup.features.insert(dup.features.end(), {0.5, -1.0});
    dup.labels.push_back(1);
  }
  auto ds_single = std::make_shared<Dataset>(single);
  auto ds_dup = std::make_shared<Dataset>(dup);
  TwoLayerMlpObjective a(ds_single, all_rows(*ds_single), 2, 4, 7);
  TwoLayerMlpObjective b(ds_dup, all_rows(*ds_dup), 2, 4, 7);
  Rng rng(47);
  ParamVector x = random_point(rng, a.dim(), 0.5);
  EXPECT_NEAR(a.loss(x), b.loss(x), 1e-14);
}

TEST(Mlp, ZeroWeightsGiveConstantLogitsAndDeadFirstLayer) {
  auto data = small_classification_data(3, 4, 6, 79);
  TwoLayerMlpObjective obj(data, all_rows(*data), 3, 5, 2);
  // All weights zero, biases arbitrary: logits = b2 regardless of input,
  // and nothing flows back into the first layer.
  ParamVector x(obj.dim());
  const std::size_t w1 = 5 * 4, b1 = 5, w2 = 3 * 5;
  for (std::size_t i = 0; i < 5; ++i) x[w1 + i] = 0.3;               // b1
  for (std::size_t c = 0; c < 3; ++c) x[w1 + b1 + w2 + c] = 0.1 * c; // b2

  int pred = obj.predict(x, data->row(0));
  for (std::size_t i = 1; i < data->size(); ++i) {
    EXPECT_EQ(obj.predict(x, data->row(i)), pred);
  }
  auto gs = obj.full_gradient(x);
  for (std::size_t i = 0; i < w1; ++i) {
    EXPECT_EQ(gs.grad[i], 0.0) << "first-layer weight gradient at " << i;
  }
}

TEST(Mlp, SharedSeedGivesSharedInit) {
  auto data = small_classification_data(2, 3, 5, 83);
  TwoLayerMlpObjective a(data, {0, 1, 2}, 2, 4, 11);
  TwoLayerMlpObjective b(data, {3, 4, 5}, 2, 4, 11);
  EXPECT_EQ(a.initial_point(), b.initial_point());
}

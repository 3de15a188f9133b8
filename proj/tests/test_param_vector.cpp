#include "fedsim/param_vector.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fedsim/rng.hpp"

using namespace fedsim;

TEST(Axpy, ZeroScaleIsIdentityOnY) {
  ParamVector x{3, 4}, y{1, 2};
  EXPECT_EQ(axpy(0.0, x, y), (ParamVector{1, 2}));
}

TEST(Axpy, UnitScale) {
  EXPECT_EQ(axpy(1.0, ParamVector{1, 1}, ParamVector{0, 0}), (ParamVector{1, 1}));
}

TEST(Axpy, ElementwiseArithmetic) {
  // 2*[1,-1] + [3,3] worked out by hand
  EXPECT_EQ(axpy(2.0, ParamVector{1, -1}, ParamVector{3, 3}), (ParamVector{5, 1}));
}

TEST(Axpy, DimensionMismatchThrows) {
  EXPECT_THROW(axpy(1.0, ParamVector{1}, ParamVector{1, 2}), std::invalid_argument);
}

TEST(Axpy, NonFiniteResultThrows) {
  const double big = std::numeric_limits<double>::max();
  EXPECT_THROW(axpy(2.0, ParamVector{big}, ParamVector{big}), numeric_error);
  EXPECT_THROW(axpy(std::numeric_limits<double>::quiet_NaN(), ParamVector{1}, ParamVector{1}),
               std::invalid_argument);
}

TEST(Norm2, ZeroVector) { EXPECT_EQ(norm2(ParamVector{0, 0, 0}), 0.0); }

TEST(Norm2, PythagoreanTriple) { EXPECT_DOUBLE_EQ(norm2(ParamVector{3, 4}), 5.0); }

TEST(Norm2, Unit) { EXPECT_EQ(norm2(ParamVector{1}), 1.0); }

TEST(Norm2, NonFiniteEntriesThrow) {
  EXPECT_THROW(norm2(ParamVector{std::numeric_limits<double>::infinity()}), numeric_error);
}

TEST(CosineSim, SelfSimilarity) {
  EXPECT_NEAR(cosine_sim(ParamVector{1, 2}, ParamVector{1, 2}), 1.0, 1e-15);
}

TEST(CosineSim, Orthogonal) {
  EXPECT_EQ(cosine_sim(ParamVector{1, 0}, ParamVector{0, 1}), 0.0);
}

TEST(CosineSim, ZeroVectorConvention) {
  EXPECT_EQ(cosine_sim(ParamVector{0, 0}, ParamVector{1, 1}), 0.0);
  EXPECT_EQ(cosine_sim(ParamVector{1, 1}, ParamVector{0, 0}), 0.0);
}

TEST(CosineSim, DimensionMismatchThrows) {
  EXPECT_THROW(cosine_sim(ParamVector{1}, ParamVector{1, 2}), std::invalid_argument);
}

namespace {

ParamVector random_vector(Rng& rng, std::size_t d, double scale = 1.0) {
  ParamVector v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

}  // namespace

TEST(LinalgProperties, AxpyIdentityOnZero) {
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    auto x = random_vector(rng, 1 + t % 7);
    EXPECT_EQ(axpy(1.0, x, ParamVector(x.dim())), x);
  }
}

TEST(LinalgProperties, CosineSymmetricAndBounded) {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    std::size_t d = 1 + t % 9;
    auto a = random_vector(rng, d, 3.0);
    auto b = random_vector(rng, d, 0.5);
    double c1 = cosine_sim(a, b);
    double c2 = cosine_sim(b, a);
    EXPECT_DOUBLE_EQ(c1, c2);
    EXPECT_LE(std::abs(c1), 1.0 + 1e-12);
  }
}

TEST(LinalgProperties, CosineScaleInvariance) {
  Rng rng(13);
  for (int t = 0; t < 200; ++t) {
    std::size_t d = 2 + t % 6;
    auto a = random_vector(rng, d);
    auto b = random_vector(rng, d);
    double s = std::exp(rng.uniform(-3.0, 3.0));  // s > 0
    EXPECT_NEAR(cosine_sim(scale(s, a), b), cosine_sim(a, b), 1e-12);
  }
}

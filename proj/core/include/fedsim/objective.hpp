#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/param_vector.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

/// One gradient evaluation: the gradient, the loss at that point, and (for
/// sample-based kinds) the minibatch indices that produced it.
struct GradSample {
  ParamVector grad;
  double loss = 0.0;
  std::vector<std::size_t> batch_indices;
};

/// A client's local objective. Immutable after construction; gradient calls
/// are pure given the explicit RNG stream, so clients may evaluate
/// concurrently.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dim() const = 0;

  /// Exact gradient and loss of the client's empirical objective.
  virtual GradSample full_gradient(const ParamVector& x) const = 0;

  /// Unbiased estimate of full_gradient. Sample-based kinds subsample
  /// `batch` shard elements without replacement; the quadratic kind adds
  /// Gaussian noise with E|noise|^2 = sigma^2 instead.
  virtual GradSample stochastic_gradient(const ParamVector& x, std::size_t batch,
                                         Rng& rng) const = 0;

  virtual double loss(const ParamVector& x) const = 0;

  /// Gradient at x on a previously drawn minibatch (the second pass of a
  /// two-backprop SAM step). Sample-based kinds re-evaluate the given rows;
  /// the quadratic kind makes a fresh noisy oracle call instead.
  virtual GradSample gradient_on(const ParamVector& x, std::span<const std::size_t> rows,
                                 Rng& rng) const = 0;

  /// Smoothness constant when analytically known (the diagonal quadratic
  /// family); nullopt otherwise.
  virtual std::optional<double> smoothness() const { return std::nullopt; }

  /// Number of local samples; 0 for the quadratic kind (not sample-based).
  virtual std::size_t shard_size() const { return 0; }

  virtual bool is_classifier() const { return false; }
  /// Predicted class for a feature row; -1 for non-classifier kinds.
  virtual int predict(const ParamVector& x, std::span<const double> features) const {
    (void)x;
    (void)features;
    return -1;
  }

  /// Starting model shared by every client (zeros unless the kind needs a
  /// symmetry-breaking init).
  virtual ParamVector initial_point() const { return ParamVector(dim()); }
};

using ObjectivePtr = std::shared_ptr<const Objective>;

/// f(x) = 1/2 (x-b)^T diag(a) (x-b) with optional additive Gaussian
/// gradient noise (total variance sigma^2, i.e. E|noise|^2 = sigma^2, so
/// the stochastic-gradient second moment matches the assumption's sigma
/// directly).
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(std::vector<double> diag, ParamVector center, double noise_sigma);

  std::size_t dim() const override { return center_.dim(); }
  GradSample full_gradient(const ParamVector& x) const override;
  GradSample stochastic_gradient(const ParamVector& x, std::size_t batch,
                                 Rng& rng) const override;
  GradSample gradient_on(const ParamVector& x, std::span<const std::size_t> rows,
                         Rng& rng) const override;
  double loss(const ParamVector& x) const override;
  std::optional<double> smoothness() const override { return max_eigen_; }

  const std::vector<double>& diagonal() const { return diag_; }
  const ParamVector& center() const { return center_; }
  double noise_sigma() const { return noise_sigma_; }
  /// Index of the largest diagonal entry (worst-curvature axis).
  std::size_t top_eigen_axis() const { return top_axis_; }

 private:
  std::vector<double> diag_;
  ParamVector center_;
  double noise_sigma_;
  double max_eigen_;
  std::size_t top_axis_;
};

/// Heterogeneous strongly convex family: client i minimizes
/// 1/2 (x - b_i)^T A_i (x - b_i) with diagonal A_i whose eigenvalues are
/// log-uniform in [1/cond, 1], rescaled so each client's largest is exactly
/// 1. Optima are b_i = center + hetero * (u_i - mean(u)), so hetero = 0
/// collapses every client onto the shared center.
std::vector<ObjectivePtr> make_quadratic_ensemble(std::size_t n_clients, std::size_t dim,
                                                  double hetero, double cond, std::uint64_t seed,
                                                  double noise_sigma = 0.0);

/// Closed-form minimizer of the uniform average of a diagonal quadratic
/// ensemble: per coordinate, sum(a*b)/sum(a).
ParamVector quadratic_global_optimum(const std::vector<ObjectivePtr>& ensemble);

/// Multinomial logistic regression on a shard: d = classes * (p + 1)
/// (weights then bias per class, class-major), loss = mean cross-entropy
/// + (l2/2)|x|^2. Log-sum-exp stabilized.
class LogisticObjective final : public Objective {
 public:
  LogisticObjective(std::shared_ptr<const Dataset> data, std::vector<std::size_t> shard,
                    std::size_t classes, double l2);

  std::size_t dim() const override;
  GradSample full_gradient(const ParamVector& x) const override;
  GradSample stochastic_gradient(const ParamVector& x, std::size_t batch,
                                 Rng& rng) const override;
  GradSample gradient_on(const ParamVector& x, std::span<const std::size_t> rows,
                         Rng& rng) const override;
  double loss(const ParamVector& x) const override;
  std::size_t shard_size() const override { return shard_.size(); }
  bool is_classifier() const override { return true; }
  int predict(const ParamVector& x, std::span<const double> features) const override;

 private:
  GradSample gradient_over(const ParamVector& x, std::span<const std::size_t> rows) const;

  std::shared_ptr<const Dataset> data_;
  std::vector<std::size_t> shard_;
  std::size_t classes_;
  double l2_;
};

/// Two-layer network: tanh hidden layer, softmax output, mean cross-entropy.
/// Exact backprop. Weights initialized uniform in +-1/sqrt(fan_in) from the
/// seed, biases zero; pass the same seed to every client so initial_point()
/// agrees across the federation.
class TwoLayerMlpObjective final : public Objective {
 public:
  TwoLayerMlpObjective(std::shared_ptr<const Dataset> data, std::vector<std::size_t> shard,
                       std::size_t classes, std::size_t hidden, std::uint64_t seed);

  std::size_t dim() const override;
  GradSample full_gradient(const ParamVector& x) const override;
  GradSample stochastic_gradient(const ParamVector& x, std::size_t batch,
                                 Rng& rng) const override;
  GradSample gradient_on(const ParamVector& x, std::span<const std::size_t> rows,
                         Rng& rng) const override;
  double loss(const ParamVector& x) const override;
  std::size_t shard_size() const override { return shard_.size(); }
  bool is_classifier() const override { return true; }
  int predict(const ParamVector& x, std::span<const double> features) const override;
  ParamVector initial_point() const override { return init_; }

 private:
  GradSample gradient_over(const ParamVector& x, std::span<const std::size_t> rows) const;
  // Parameter layout offsets.
  std::size_t w1_at() const { return 0; }
  std::size_t b1_at() const { return hidden_ * p_; }
  std::size_t w2_at() const { return hidden_ * p_ + hidden_; }
  std::size_t b2_at() const { return hidden_ * p_ + hidden_ + classes_ * hidden_; }

  std::shared_ptr<const Dataset> data_;
  std::vector<std::size_t> shard_;
  std::size_t classes_;
  std::size_t hidden_;
  std::size_t p_;
  ParamVector init_;
};

/// Fraction of rows in `eval` predicted correctly. Ties in the argmax break
/// toward the lower class index.
double classification_accuracy(const Objective& model_kind, const ParamVector& x,
                               const Dataset& eval);

}  // namespace fedsim

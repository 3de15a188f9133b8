#include "fedsim/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedsim {

namespace {

/// log(sum(exp(v))) with max-shift stabilization.
double log_sum_exp(std::span<const double> v) {
  double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

void check_batch(std::size_t batch, std::size_t shard) {
  if (batch < 1 || batch > shard) {
    throw std::invalid_argument("stochastic_gradient: batch must be in [1, shard size], got " +
                                std::to_string(batch) + " for shard of " + std::to_string(shard));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Quadratic
// ---------------------------------------------------------------------------

QuadraticObjective::QuadraticObjective(std::vector<double> diag, ParamVector center,
                                       double noise_sigma)
    : diag_(std::move(diag)), center_(std::move(center)), noise_sigma_(noise_sigma) {
  if (diag_.size() != center_.dim() || diag_.empty()) {
    throw std::invalid_argument("QuadraticObjective: diag/center dimension mismatch");
  }
  if (noise_sigma_ < 0.0) {
    throw std::invalid_argument("QuadraticObjective: noise sigma must be >= 0");
  }
  top_axis_ = 0;
  for (std::size_t j = 1; j < diag_.size(); ++j) {
    if (diag_[j] > diag_[top_axis_]) top_axis_ = j;
  }
  max_eigen_ = diag_[top_axis_];
}

double QuadraticObjective::loss(const ParamVector& x) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < dim(); ++j) {
    double d = x[j] - center_[j];
    acc += 0.5 * diag_[j] * d * d;
  }
  return acc;
}

GradSample QuadraticObjective::full_gradient(const ParamVector& x) const {
  if (x.dim() != dim()) throw std::invalid_argument("full_gradient: dimension mismatch");
  GradSample out;
  out.grad = ParamVector(dim());
  for (std::size_t j = 0; j < dim(); ++j) {
    out.grad[j] = diag_[j] * (x[j] - center_[j]);
  }
  out.grad.check_finite("quadratic gradient");
  out.loss = loss(x);
  return out;
}

GradSample QuadraticObjective::stochastic_gradient(const ParamVector& x, std::size_t batch,
                                                   Rng& rng) const {
  (void)batch;  // noise model, not subsampling
  GradSample out = full_gradient(x);
  if (noise_sigma_ > 0.0) {
    const double per_coord = noise_sigma_ / std::sqrt(static_cast<double>(dim()));
    for (std::size_t j = 0; j < dim(); ++j) {
      out.grad[j] += per_coord * rng.normal();
    }
    out.grad.check_finite("quadratic stochastic gradient");
  }
  return out;
}

GradSample QuadraticObjective::gradient_on(const ParamVector& x, std::span<const std::size_t> rows,
                                           Rng& rng) const {
  (void)rows;
  return stochastic_gradient(x, 1, rng);
}

std::vector<ObjectivePtr> make_quadratic_ensemble(std::size_t n_clients, std::size_t dim,
                                                  double hetero, double cond, std::uint64_t seed,
                                                  double noise_sigma) {
  if (n_clients < 1) throw std::invalid_argument("make_quadratic_ensemble: need >= 1 client");
  if (dim < 1) throw std::invalid_argument("make_quadratic_ensemble: dim must be >= 1");
  if (cond < 1.0) throw std::invalid_argument("make_quadratic_ensemble: cond must be >= 1");
  if (hetero < 0.0) throw std::invalid_argument("make_quadratic_ensemble: hetero must be >= 0");

  Rng rng(derive_stream(seed, stream_purpose::kDataGeneration, 0, 1));

  ParamVector shared_center(dim);
  for (std::size_t j = 0; j < dim; ++j) shared_center[j] = rng.normal();

  // Raw offsets, recentered so the ensemble mean optimum equals the shared
  // center exactly for every hetero.
  std::vector<ParamVector> offsets(n_clients, ParamVector(dim));
  ParamVector mean_offset(dim);
  for (auto& u : offsets) {
    for (std::size_t j = 0; j < dim; ++j) {
      u[j] = rng.normal();
      mean_offset[j] += u[j] / static_cast<double>(n_clients);
    }
  }

  const double log_lo = std::log(1.0 / cond);
  std::vector<ObjectivePtr> out;
  out.reserve(n_clients);
  for (std::size_t i = 0; i < n_clients; ++i) {
    std::vector<double> diag(dim);
    double mx = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      diag[j] = std::exp(rng.uniform(log_lo, 0.0));
      mx = std::max(mx, diag[j]);
    }
    for (auto& a : diag) a /= mx;  // largest eigenvalue exactly 1

    ParamVector b(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      b[j] = shared_center[j] + hetero * (offsets[i][j] - mean_offset[j]);
    }
    out.push_back(std::make_shared<QuadraticObjective>(std::move(diag), std::move(b), noise_sigma));
  }
  return out;
}

ParamVector quadratic_global_optimum(const std::vector<ObjectivePtr>& ensemble) {
  if (ensemble.empty()) throw std::invalid_argument("quadratic_global_optimum: empty ensemble");
  const auto* first = dynamic_cast<const QuadraticObjective*>(ensemble.front().get());
  if (!first) throw std::invalid_argument("quadratic_global_optimum: not a quadratic ensemble");
  const std::size_t d = first->dim();
  std::vector<double> num(d, 0.0), den(d, 0.0);
  for (const auto& obj : ensemble) {
    const auto* q = dynamic_cast<const QuadraticObjective*>(obj.get());
    if (!q || q->dim() != d) {
      throw std::invalid_argument("quadratic_global_optimum: mixed ensemble");
    }
    for (std::size_t j = 0; j < d; ++j) {
      num[j] += q->diagonal()[j] * q->center()[j];
      den[j] += q->diagonal()[j];
    }
  }
  ParamVector opt(d);
  for (std::size_t j = 0; j < d; ++j) opt[j] = num[j] / den[j];
  return opt;
}

// ---------------------------------------------------------------------------
// Multinomial logistic regression
// ---------------------------------------------------------------------------

LogisticObjective::LogisticObjective(std::shared_ptr<const Dataset> data,
                                     std::vector<std::size_t> shard, std::size_t classes,
                                     double l2)
    : data_(std::move(data)), shard_(std::move(shard)), classes_(classes), l2_(l2) {
  if (!data_) throw std::invalid_argument("LogisticObjective: null dataset");
  if (shard_.empty()) throw std::invalid_argument("LogisticObjective: empty shard");
  if (classes_ < 2) throw std::invalid_argument("LogisticObjective: need >= 2 classes");
  if (l2_ < 0.0) throw std::invalid_argument("LogisticObjective: l2 must be >= 0");
}

std::size_t LogisticObjective::dim() const { return classes_ * (data_->feature_dim + 1); }

GradSample LogisticObjective::gradient_over(const ParamVector& x,
                                            std::span<const std::size_t> rows) const {
  if (x.dim() != dim()) throw std::invalid_argument("logistic gradient: dimension mismatch");
  const std::size_t p = data_->feature_dim;
  const std::size_t stride = p + 1;
  GradSample out;
  out.grad = ParamVector(dim());
  double data_loss = 0.0;
  std::vector<double> logits(classes_);
  const double inv_n = 1.0 / static_cast<double>(rows.size());

  for (std::size_t row : rows) {
    auto feat = data_->row(row);
    const int y = data_->labels[row];
    for (std::size_t c = 0; c < classes_; ++c) {
      double z = x[c * stride + p];  // bias
      for (std::size_t j = 0; j < p; ++j) z += x[c * stride + j] * feat[j];
      logits[c] = z;
    }
    const double lse = log_sum_exp(logits);
    data_loss += (lse - logits[static_cast<std::size_t>(y)]) * inv_n;
    for (std::size_t c = 0; c < classes_; ++c) {
      double delta = std::exp(logits[c] - lse) - (static_cast<int>(c) == y ? 1.0 : 0.0);
      delta *= inv_n;
      for (std::size_t j = 0; j < p; ++j) out.grad[c * stride + j] += delta * feat[j];
      out.grad[c * stride + p] += delta;
    }
  }

  double reg = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    out.grad[i] += l2_ * x[i];
    reg += 0.5 * l2_ * x[i] * x[i];
  }
  out.grad.check_finite("logistic gradient");
  out.loss = data_loss + reg;
  return out;
}

GradSample LogisticObjective::full_gradient(const ParamVector& x) const {
  return gradient_over(x, shard_);
}

GradSample LogisticObjective::stochastic_gradient(const ParamVector& x, std::size_t batch,
                                                  Rng& rng) const {
  check_batch(batch, shard_.size());
  auto picks = rng.sample_without_replacement(shard_.size(), batch);
  std::vector<std::size_t> rows(batch);
  for (std::size_t i = 0; i < batch; ++i) rows[i] = shard_[picks[i]];
  GradSample out = gradient_over(x, rows);
  out.batch_indices = std::move(rows);
  return out;
}

GradSample LogisticObjective::gradient_on(const ParamVector& x, std::span<const std::size_t> rows,
                                          Rng& rng) const {
  (void)rng;
  if (rows.empty()) return full_gradient(x);
  GradSample out = gradient_over(x, rows);
  out.batch_indices.assign(rows.begin(), rows.end());
  return out;
}

double LogisticObjective::loss(const ParamVector& x) const { return full_gradient(x).loss; }

int LogisticObjective::predict(const ParamVector& x, std::span<const double> features) const {
  const std::size_t p = data_->feature_dim;
  const std::size_t stride = p + 1;
  int best = 0;
  double best_z = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < classes_; ++c) {
    double z = x[c * stride + p];
    for (std::size_t j = 0; j < p; ++j) z += x[c * stride + j] * features[j];
    if (z > best_z) {
      best_z = z;
      best = static_cast<int>(c);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Two-layer MLP
// ---------------------------------------------------------------------------

TwoLayerMlpObjective::TwoLayerMlpObjective(std::shared_ptr<const Dataset> data,
                                           std::vector<std::size_t> shard, std::size_t classes,
                                           std::size_t hidden, std::uint64_t seed)
    : data_(std::move(data)), shard_(std::move(shard)), classes_(classes), hidden_(hidden) {
  if (!data_) throw std::invalid_argument("TwoLayerMlpObjective: null dataset");
  if (shard_.empty()) throw std::invalid_argument("TwoLayerMlpObjective: empty shard");
  if (hidden_ < 1) throw std::invalid_argument("TwoLayerMlpObjective: hidden must be >= 1");
  if (classes_ < 2) throw std::invalid_argument("TwoLayerMlpObjective: need >= 2 classes");
  p_ = data_->feature_dim;

  init_ = ParamVector(dim());
  Rng rng(derive_stream(seed, stream_purpose::kModelInit, 0, 2));
  const double s1 = 1.0 / std::sqrt(static_cast<double>(p_));
  for (std::size_t i = 0; i < hidden_ * p_; ++i) init_[w1_at() + i] = rng.uniform(-s1, s1);
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
  for (std::size_t i = 0; i < classes_ * hidden_; ++i) init_[w2_at() + i] = rng.uniform(-s2, s2);
  // biases stay zero
}

std::size_t TwoLayerMlpObjective::dim() const {
  return hidden_ * p_ + hidden_ + classes_ * hidden_ + classes_;
}

GradSample TwoLayerMlpObjective::gradient_over(const ParamVector& x,
                                               std::span<const std::size_t> rows) const {
  if (x.dim() != dim()) throw std::invalid_argument("mlp gradient: dimension mismatch");
  GradSample out;
  out.grad = ParamVector(dim());
  double data_loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(rows.size());

  std::vector<double> a1(hidden_), logits(classes_), d2(classes_), d1(hidden_);
  for (std::size_t row : rows) {
    auto feat = data_->row(row);
    const int y = data_->labels[row];

    for (std::size_t i = 0; i < hidden_; ++i) {
      double z = x[b1_at() + i];
      for (std::size_t j = 0; j < p_; ++j) z += x[w1_at() + i * p_ + j] * feat[j];
      a1[i] = std::tanh(z);
    }
    for (std::size_t c = 0; c < classes_; ++c) {
      double z = x[b2_at() + c];
      for (std::size_t i = 0; i < hidden_; ++i) z += x[w2_at() + c * hidden_ + i] * a1[i];
      logits[c] = z;
    }
    const double lse = log_sum_exp(logits);
    data_loss += (lse - logits[static_cast<std::size_t>(y)]) * inv_n;

    for (std::size_t c = 0; c < classes_; ++c) {
      d2[c] = (std::exp(logits[c] - lse) - (static_cast<int>(c) == y ? 1.0 : 0.0)) * inv_n;
    }
    for (std::size_t i = 0; i < hidden_; ++i) {
      double acc = 0.0;
      for (std::size_t c = 0; c < classes_; ++c) acc += x[w2_at() + c * hidden_ + i] * d2[c];
      d1[i] = acc * (1.0 - a1[i] * a1[i]);
    }
    for (std::size_t c = 0; c < classes_; ++c) {
      out.grad[b2_at() + c] += d2[c];
      for (std::size_t i = 0; i < hidden_; ++i) out.grad[w2_at() + c * hidden_ + i] += d2[c] * a1[i];
    }
    for (std::size_t i = 0; i < hidden_; ++i) {
      out.grad[b1_at() + i] += d1[i];
      for (std::size_t j = 0; j < p_; ++j) out.grad[w1_at() + i * p_ + j] += d1[i] * feat[j];
    }
  }
  out.grad.check_finite("mlp gradient");
  out.loss = data_loss;
  return out;
}

GradSample TwoLayerMlpObjective::full_gradient(const ParamVector& x) const {
  return gradient_over(x, shard_);
}

GradSample TwoLayerMlpObjective::stochastic_gradient(const ParamVector& x, std::size_t batch,
                                                     Rng& rng) const {
  check_batch(batch, shard_.size());
  auto picks = rng.sample_without_replacement(shard_.size(), batch);
  std::vector<std::size_t> rows(batch);
  for (std::size_t i = 0; i < batch; ++i) rows[i] = shard_[picks[i]];
  GradSample out = gradient_over(x, rows);
  out.batch_indices = std::move(rows);
  return out;
}

GradSample TwoLayerMlpObjective::gradient_on(const ParamVector& x,
                                             std::span<const std::size_t> rows, Rng& rng) const {
  (void)rng;
  if (rows.empty()) return full_gradient(x);
  GradSample out = gradient_over(x, rows);
  out.batch_indices.assign(rows.begin(), rows.end());
  return out;
}

double TwoLayerMlpObjective::loss(const ParamVector& x) const { return full_gradient(x).loss; }

int TwoLayerMlpObjective::predict(const ParamVector& x, std::span<const double> features) const {
  std::vector<double> a1(hidden_);
  for (std::size_t i = 0; i < hidden_; ++i) {
    double z = x[b1_at() + i];
    for (std::size_t j = 0; j < p_; ++j) z += x[w1_at() + i * p_ + j] * features[j];
    a1[i] = std::tanh(z);
  }
  int best = 0;
  double best_z = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < classes_; ++c) {
    double z = x[b2_at() + c];
    for (std::size_t i = 0; i < hidden_; ++i) z += x[w2_at() + c * hidden_ + i] * a1[i];
    if (z > best_z) {
      best_z = z;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double classification_accuracy(const Objective& model_kind, const ParamVector& x,
                               const Dataset& eval) {
  if (!model_kind.is_classifier() || eval.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    if (model_kind.predict(x, eval.row(i)) == eval.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(eval.size());
}

}  // namespace fedsim

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedsim {

/// Raised when an operation would produce or has observed a non-finite value.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

/// Zero-norm guard used by cosine similarity and perturbation normalization.
inline constexpr double kZeroNormEps = 1e-12;

/// Flat dense vector of doubles. The shared currency for models, gradients,
/// momenta, perturbations and correction terms. Dimension is fixed at
/// construction; all public operations reject NaN/Inf results instead of
/// propagating them.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : data_(dim, fill) {}
  ParamVector(std::initializer_list<double> values);
  explicit ParamVector(std::vector<double> values);

  std::size_t dim() const { return data_.size(); }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  std::span<const double> values() const { return data_; }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool all_finite() const;
  /// Throws numeric_error if any entry is NaN or Inf.
  void check_finite(const char* context) const;

  bool operator==(const ParamVector& other) const = default;

 private:
  std::vector<double> data_;
};

/// a*x + y, elementwise. Dimensions must match and the result must be finite.
ParamVector axpy(double a, const ParamVector& x, const ParamVector& y);

/// Euclidean norm. Zero iff x is the zero vector.
double norm2(const ParamVector& x);

double dot(const ParamVector& a, const ParamVector& b);

/// a.b / (|a||b|), clamped to [-1, 1]. Returns 0 when either norm is below
/// kZeroNormEps: the zero vector has no direction, so no similarity.
double cosine_sim(const ParamVector& a, const ParamVector& b);

ParamVector scale(double a, const ParamVector& x);
ParamVector add(const ParamVector& x, const ParamVector& y);
ParamVector sub(const ParamVector& x, const ParamVector& y);

/// In-place y += a*x; same contract as axpy.
void axpy_inplace(double a, const ParamVector& x, ParamVector& y);

double max_abs_diff(const ParamVector& a, const ParamVector& b);
double max_abs(const ParamVector& x);

}  // namespace fedsim

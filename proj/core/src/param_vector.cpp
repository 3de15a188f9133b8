#include "fedsim/param_vector.hpp"

#include <algorithm>
#include <cmath>

namespace fedsim {

namespace {

void require_same_dim(const ParamVector& a, const ParamVector& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
}

}  // namespace

ParamVector::ParamVector(std::initializer_list<double> values) : data_(values) {}

ParamVector::ParamVector(std::vector<double> values) : data_(std::move(values)) {}

bool ParamVector::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void ParamVector::check_finite(const char* context) const {
  if (!all_finite()) {
    throw numeric_error(std::string(context) + ": non-finite entry");
  }
}

ParamVector axpy(double a, const ParamVector& x, const ParamVector& y) {
  require_same_dim(x, y, "axpy");
  if (!std::isfinite(a)) {
    throw std::invalid_argument("axpy: scale factor is not finite");
  }
  ParamVector out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) {
    out[i] = a * x[i] + y[i];
  }
  out.check_finite("axpy");
  return out;
}

void axpy_inplace(double a, const ParamVector& x, ParamVector& y) {
  require_same_dim(x, y, "axpy_inplace");
  if (!std::isfinite(a)) {
    throw std::invalid_argument("axpy_inplace: scale factor is not finite");
  }
  for (std::size_t i = 0; i < x.dim(); ++i) {
    y[i] += a * x[i];
  }
  y.check_finite("axpy_inplace");
}

double norm2(const ParamVector& x) {
  x.check_finite("norm2");
  double acc = 0.0;
  for (double v : x.values()) {
    acc += v * v;
  }
  double n = std::sqrt(acc);
  if (!std::isfinite(n)) {
    throw numeric_error("norm2: overflow");
  }
  return n;
}

double dot(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    acc += a[i] * b[i];
  }
  if (!std::isfinite(acc)) {
    throw numeric_error("dot: overflow");
  }
  return acc;
}

double cosine_sim(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "cosine_sim");
  double na = norm2(a);
  double nb = norm2(b);
  if (na < kZeroNormEps || nb < kZeroNormEps) {
    return 0.0;
  }
  double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

ParamVector scale(double a, const ParamVector& x) {
  ParamVector out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) {
    out[i] = a * x[i];
  }
  out.check_finite("scale");
  return out;
}

ParamVector add(const ParamVector& x, const ParamVector& y) { return axpy(1.0, x, y); }

ParamVector sub(const ParamVector& x, const ParamVector& y) {
  require_same_dim(x, y, "sub");
  ParamVector out(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) {
    out[i] = x[i] - y[i];
  }
  out.check_finite("sub");
  return out;
}

double max_abs_diff(const ParamVector& a, const ParamVector& b) {
  require_same_dim(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

double max_abs(const ParamVector& x) {
  double m = 0.0;
  for (double v : x.values()) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

}  // namespace fedsim

#include "fedsim/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace fedsim {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t round,
                            std::uint64_t client) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ (purpose * 0xff51afd7ed558ccdULL));
  h = mix64(h ^ (round * 0xc4ceb9fe1a85ec53ULL));
  h = mix64(h ^ (client * 0x2545f4914f6cdd1dULL));
  return h;
}

std::uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform01_open() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) {
    throw std::invalid_argument("uniform_int: n must be positive");
  }
  const std::uint64_t rem = std::uint64_t(-n) % n;  // 2^64 mod n
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x < rem);
  return x % n;
}

double Rng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform01_open();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  have_cached_normal_ = true;
  return r * std::cos(theta);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) {
    throw std::invalid_argument("gamma: shape must be positive");
  }
  if (shape < 1.0) {
    // Boost: Gamma(a) = Gamma(a+1) * U^(1/a)
    double u = uniform01_open();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    double v = t * t * t;
    double u = uniform01_open();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<double> Rng::dirichlet_symmetric(double beta, std::size_t n) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("dirichlet_symmetric: beta must be positive");
  }
  std::vector<double> w(n);
  double sum = 0.0;
  for (auto& wi : w) {
    wi = gamma(beta);
    sum += wi;
  }
  if (sum <= 0.0) {
    // All gamma draws underflowed to zero (possible at tiny beta); fall back
    // to a single random winner, the correct limit of Dir(beta -> 0).
    std::size_t winner = static_cast<std::size_t>(uniform_int(n));
    for (std::size_t i = 0; i < n; ++i) w[i] = (i == winner) ? 1.0 : 0.0;
    return w;
  }
  for (auto& wi : w) wi /= sum;
  return w;
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t s) {
  if (s > n) {
    throw std::invalid_argument("sample_without_replacement: s > n");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < s; ++i) {
    std::size_t j = i + static_cast<std::size_t>(uniform_int(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(s);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace fedsim

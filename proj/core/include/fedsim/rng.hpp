#pragma once

#include <cstdint>
#include <vector>

namespace fedsim {

/// Counter-based 64-bit mix (splitmix64 finalizer). Used both as the PRNG
/// step and to derive independent stream seeds from structured keys.
std::uint64_t mix64(std::uint64_t z);

/// Deterministic PRNG with explicitly derivable streams. Client updates,
/// partitioners and Monte-Carlo checks each get their own stream keyed by
/// (seed, purpose, round, client); results are then independent of worker
/// scheduling. Distributions are implemented here rather than with
/// std::*_distribution so that sequences are pinned across standard
/// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed ^ 0x5851f42d4c957f2dULL)) {}

  std::uint64_t next_u64();

  /// Uniform in [0, 1).
  double uniform01();
  /// Uniform in (0, 1]; never returns zero (safe for log/pow).
  double uniform01_open();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n); n must be positive. Unbiased (rejection).
  std::uint64_t uniform_int(std::uint64_t n);

  /// Standard normal via Box-Muller (second value cached).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Gamma(shape, 1), shape > 0 (Marsaglia-Tsang; boosted for shape < 1).
  double gamma(double shape);

  /// Dirichlet(beta, ..., beta) of length n.
  std::vector<double> dirichlet_symmetric(double beta, std::size_t n);

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Uniform s-subset of {0..n-1} without replacement, ascending order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t s);

 private:
  std::uint64_t state_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

/// Stream seed for a (seed, purpose, round, client) tuple. `purpose`
/// separates e.g. client sampling from client minibatch draws.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t round,
                            std::uint64_t client);

namespace stream_purpose {
inline constexpr std::uint64_t kClientUpdate = 1;
inline constexpr std::uint64_t kClientSampling = 2;
inline constexpr std::uint64_t kCorrectionInit = 3;
inline constexpr std::uint64_t kDataGeneration = 4;
inline constexpr std::uint64_t kPartition = 5;
inline constexpr std::uint64_t kModelInit = 6;
inline constexpr std::uint64_t kAnalysis = 7;
}  // namespace stream_purpose

}  // namespace fedsim

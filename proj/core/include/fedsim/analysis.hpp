#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fedsim/engine.hpp"
#include "fedsim/param_vector.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

/// Outcome of an empirical-vs-theoretical bound check.
struct BoundCheckReport {
  double empirical = 0.0;
  double bound = 0.0;
  std::size_t samples = 0;
  double margin = 0.0;  // statistical allowance relative to the bound
  bool passed = false;  // empirical <= bound * (1 + margin)
};

struct SamplingIdentity {
  double lhs = 0.0;  // exact expectation over all s-subsets
  double rhs = 0.0;  // closed form
};

/// Uniform-subsampling second-moment identity: the expectation of
/// |mean of an s-subset|^2 over all C(N,s) subsets equals
/// |vbar|^2 + (N-s)/(s(N-1)) * (1/N) sum |v_i - vbar|^2.
/// Full enumeration; N is capped at 12.
SamplingIdentity check_sampling_identity(std::span<const ParamVector> vs, std::size_t s);

/// Monte-Carlo estimate of E|grad F(x + delta; xi) - grad f(x)|^2 on a
/// diagonal quadratic with top eigenvalue L, with the perturbation of norm
/// rho placed along the worst (top-eigenvalue) axis and gradient noise of
/// total variance sigma^2. Checked against sigma^2 + (L*rho)^2 with a
/// 5/sqrt(trials) allowance.
BoundCheckReport check_perturbation_variance(double L, double sigma, double rho,
                                             std::size_t trials, Rng& rng);

/// Max loss increase over `directions` random unit directions plus the
/// normalized-gradient direction (skipped if the gradient is numerically
/// zero): max_u f(x + rho*u) - f(x).
double sharpness_proxy(const std::function<double(const ParamVector&)>& loss,
                       const std::function<ParamVector(const ParamVector&)>& gradient,
                       const ParamVector& x, double rho, std::size_t directions, Rng& rng);

/// sharpness_proxy over a federation's uniform-average objective.
double sharpness_proxy(const Federation& fed, const ParamVector& x, double rho,
                       std::size_t directions, Rng& rng);

enum class ScanAxis { S, K, R };

struct ScanPoint {
  double value = 0.0;
  double mean_final_grad_norm = 0.0;
  double std_error = 0.0;
  std::size_t seeds = 0;
  std::size_t diverged_runs = 0;  // flagged, never silently dropped
};

/// Sweep one axis (participants per round, local steps, or rounds) of the
/// base config across `values`, running `n_seeds` seeds per value, and
/// report the seed-averaged final global gradient norm.
std::vector<ScanPoint> rate_trend_scan(const RunConfig& base, ScanAxis axis,
                                       const std::vector<double>& values, std::size_t n_seeds,
                                       std::size_t workers = 1);

struct TrendVerdict {
  bool passed = false;
  std::size_t inversions = 0;  // increases beyond the allowed slack
};

/// Weak monotone decrease with at most `allowed_inversions` increases, each
/// within `se_mult` combined standard errors.
TrendVerdict check_weakly_decreasing(std::span<const ScanPoint> points, double se_mult = 1.0,
                                     std::size_t allowed_inversions = 1);

}  // namespace fedsim

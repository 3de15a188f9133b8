#include "fedsim/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "fedsim/objective.hpp"

namespace fedsim {

SamplingIdentity check_sampling_identity(std::span<const ParamVector> vs, std::size_t s) {
  const std::size_t n = vs.size();
  if (n < 2 || n > 12) {
    throw std::invalid_argument("check_sampling_identity: need 2 <= N <= 12 for enumeration");
  }
  if (s < 1 || s > n) throw std::invalid_argument("check_sampling_identity: need 1 <= s <= N");
  const std::size_t d = vs.front().dim();
  for (const auto& v : vs) {
    if (v.dim() != d) throw std::invalid_argument("check_sampling_identity: dimension mismatch");
  }

  ParamVector mean(d);
  for (const auto& v : vs) axpy_inplace(1.0 / static_cast<double>(n), v, mean);

  SamplingIdentity out;
  double dispersion = 0.0;
  for (const auto& v : vs) {
    double nv = norm2(sub(v, mean));
    dispersion += nv * nv / static_cast<double>(n);
  }
  const double mean_sq = dot(mean, mean);
  out.rhs = (s == n) ? mean_sq
                     : mean_sq + dispersion * static_cast<double>(n - s) /
                                     (static_cast<double>(s) * static_cast<double>(n - 1));

  // Enumerate all s-subsets with a revolving-door style index walk.
  std::vector<std::size_t> idx(s);
  for (std::size_t i = 0; i < s; ++i) idx[i] = i;
  double acc = 0.0;
  std::size_t count = 0;
  for (;;) {
    ParamVector sum(d);
    for (std::size_t i : idx) axpy_inplace(1.0, vs[i], sum);
    double nm = norm2(scale(1.0 / static_cast<double>(s), sum));
    acc += nm * nm;
    ++count;

    // next combination
    std::size_t k = s;
    while (k > 0 && idx[k - 1] == n - s + (k - 1)) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t j = k; j < s; ++j) idx[j] = idx[j - 1] + 1;
  }
  out.lhs = acc / static_cast<double>(count);
  return out;
}

BoundCheckReport check_perturbation_variance(double L, double sigma, double rho,
                                             std::size_t trials, Rng& rng) {
  if (!(L > 0.0)) throw std::invalid_argument("check_perturbation_variance: L must be > 0");
  if (sigma < 0.0 || rho < 0.0) {
    throw std::invalid_argument("check_perturbation_variance: sigma and rho must be >= 0");
  }
  if (trials < 10000) {
    throw std::invalid_argument("check_perturbation_variance: need at least 10^4 trials");
  }

  // Diagonal quadratic with a known top eigenvalue on axis 0.
  const std::size_t d = 8;
  std::vector<double> diag(d);
  for (std::size_t j = 0; j < d; ++j) {
    diag[j] = L / static_cast<double>(1 << std::min<std::size_t>(j, 30));
  }
  QuadraticObjective obj(diag, ParamVector(d), sigma);

  ParamVector x(d);
  for (std::size_t j = 0; j < d; ++j) x[j] = rng.normal();
  const GradSample exact = obj.full_gradient(x);

  // Worst-case shift: rho along the top-eigenvalue axis.
  ParamVector x_shift = x;
  x_shift[obj.top_eigen_axis()] += rho;

  double acc = 0.0;
  Rng noise_rng(derive_stream(rng.next_u64(), stream_purpose::kAnalysis, 0, 0));
  for (std::size_t t = 0; t < trials; ++t) {
    GradSample gs = obj.stochastic_gradient(x_shift, 1, noise_rng);
    double nm = norm2(sub(gs.grad, exact.grad));
    acc += nm * nm;
  }

  BoundCheckReport rep;
  rep.samples = trials;
  rep.empirical = acc / static_cast<double>(trials);
  rep.bound = sigma * sigma + (L * rho) * (L * rho);
  rep.margin = 5.0 / std::sqrt(static_cast<double>(trials));
  rep.passed = rep.empirical <= rep.bound * (1.0 + rep.margin);
  return rep;
}

double sharpness_proxy(const std::function<double(const ParamVector&)>& loss,
                       const std::function<ParamVector(const ParamVector&)>& gradient,
                       const ParamVector& x, double rho, std::size_t directions, Rng& rng) {
  if (!(rho > 0.0)) throw std::invalid_argument("sharpness_proxy: rho must be > 0");
  if (directions < 1) throw std::invalid_argument("sharpness_proxy: directions must be >= 1");
  const double base = loss(x);
  double best = -std::numeric_limits<double>::infinity();

  ParamVector g = gradient(x);
  const double gn = norm2(g);
  if (gn >= kZeroNormEps) {
    best = std::max(best, loss(axpy(rho / gn, g, x)) - base);
  }
  for (std::size_t t = 0; t < directions; ++t) {
    ParamVector u(x.dim());
    double nu = 0.0;
    do {
      for (std::size_t j = 0; j < u.dim(); ++j) u[j] = rng.normal();
      nu = norm2(u);
    } while (nu < kZeroNormEps);
    best = std::max(best, loss(axpy(rho / nu, u, x)) - base);
  }
  return best;
}

double sharpness_proxy(const Federation& fed, const ParamVector& x, double rho,
                       std::size_t directions, Rng& rng) {
  auto loss = [&fed](const ParamVector& p) {
    double acc = 0.0;
    for (const auto& c : fed.clients) acc += c.objective->loss(p) / fed.clients.size();
    return acc;
  };
  auto grad = [&fed](const ParamVector& p) {
    ParamVector g(p.dim());
    for (const auto& c : fed.clients) {
      axpy_inplace(1.0 / static_cast<double>(fed.clients.size()),
                   c.objective->full_gradient(p).grad, g);
    }
    return g;
  };
  return sharpness_proxy(loss, grad, x, rho, directions, rng);
}

std::vector<ScanPoint> rate_trend_scan(const RunConfig& base, ScanAxis axis,
                                       const std::vector<double>& values, std::size_t n_seeds,
                                       std::size_t workers) {
  if (values.empty()) throw std::invalid_argument("rate_trend_scan: empty value list");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) {
      throw std::invalid_argument("rate_trend_scan: values must be strictly increasing");
    }
  }
  if (n_seeds < 3) throw std::invalid_argument("rate_trend_scan: need >= 3 seeds per point");

  struct Job {
    std::size_t point;
    std::size_t seed_idx;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < values.size(); ++p) {
    for (std::size_t sdx = 0; sdx < n_seeds; ++sdx) jobs.push_back({p, sdx});
  }
  std::vector<double> grads(jobs.size(), std::nan(""));
  std::vector<char> diverged(jobs.size(), 0);

  auto run_job = [&](std::size_t j) {
    const Job& job = jobs[j];
    RunConfig cfg = base;
    cfg.workers = 1;  // determinism is owned by the outer fan-out
    cfg.capture_trajectory = false;
    cfg.seed = mix64(base.seed + 0x9e37 * (job.seed_idx + 1));
    const double v = values[job.point];
    switch (axis) {
      case ScanAxis::S:
        cfg.sample_rate =
            std::min(1.0, v / static_cast<double>(cfg.n_clients) + 1e-12);
        break;
      case ScanAxis::K:
        cfg.optimizer.local_steps = static_cast<std::size_t>(v);
        break;
      case ScanAxis::R:
        cfg.rounds = static_cast<std::size_t>(v);
        break;
    }
    RunResult res = run(cfg);
    if (res.diverged || res.records.empty()) {
      diverged[j] = 1;
      return;
    }
    grads[j] = res.records.back().global_grad_norm;
  };

  std::atomic<std::size_t> next{0};
  auto worker_fn = [&]() {
    for (;;) {
      std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      run_job(j);
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(workers, jobs.size()));
  if (n_threads <= 1) {
    worker_fn();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker_fn);
    for (auto& th : pool) th.join();
  }

  std::vector<ScanPoint> out(values.size());
  for (std::size_t p = 0; p < values.size(); ++p) {
    ScanPoint& pt = out[p];
    pt.value = values[p];
    std::vector<double> ok;
    for (std::size_t sdx = 0; sdx < n_seeds; ++sdx) {
      const std::size_t j = p * n_seeds + sdx;
      if (diverged[j]) {
        pt.diverged_runs += 1;
      } else {
        ok.push_back(grads[j]);
      }
    }
    pt.seeds = ok.size();
    if (!ok.empty()) {
      double mean = 0.0;
      for (double g : ok) mean += g;
      mean /= static_cast<double>(ok.size());
      double var = 0.0;
      for (double g : ok) var += (g - mean) * (g - mean);
      var = ok.size() > 1 ? var / static_cast<double>(ok.size() - 1) : 0.0;
      pt.mean_final_grad_norm = mean;
      pt.std_error = std::sqrt(var / static_cast<double>(ok.size()));
    }
  }
  return out;
}

TrendVerdict check_weakly_decreasing(std::span<const ScanPoint> points, double se_mult,
                                     std::size_t allowed_inversions) {
  TrendVerdict v;
  std::size_t soft = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].diverged_runs > 0 || points[i - 1].diverged_runs > 0) {
      v.passed = false;
      v.inversions = points.size();  // divergence voids the trend
      return v;
    }
    const double rise = points[i].mean_final_grad_norm - points[i - 1].mean_final_grad_norm;
    if (rise <= 0.0) continue;
    const double slack = se_mult * std::sqrt(points[i].std_error * points[i].std_error +
                                             points[i - 1].std_error * points[i - 1].std_error);
    if (rise <= slack) {
      ++soft;
    } else {
      ++v.inversions;
    }
  }
  v.passed = v.inversions == 0 && soft <= allowed_inversions;
  v.inversions += soft;
  return v;
}

}  // namespace fedsim

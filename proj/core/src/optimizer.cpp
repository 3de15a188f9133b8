#include "fedsim/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedsim {

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::fedavg: return "fedavg";
    case OptimizerKind::fedcm: return "fedcm";
    case OptimizerKind::scaffold: return "scaffold";
    case OptimizerKind::fedsam: return "fedsam";
    case OptimizerKind::mofedsam: return "mofedsam";
    case OptimizerKind::fedgamma: return "fedgamma";
    case OptimizerKind::fedwmsam: return "fedwmsam";
  }
  return "unknown";
}

OptimizerKind optimizer_kind_from_string(const std::string& name) {
  if (name == "fedavg") return OptimizerKind::fedavg;
  if (name == "fedcm") return OptimizerKind::fedcm;
  if (name == "scaffold") return OptimizerKind::scaffold;
  if (name == "fedsam") return OptimizerKind::fedsam;
  if (name == "mofedsam") return OptimizerKind::mofedsam;
  if (name == "fedgamma") return OptimizerKind::fedgamma;
  if (name == "fedwmsam") return OptimizerKind::fedwmsam;
  throw std::invalid_argument("unknown optimizer kind '" + name + "'");
}

bool OptimizerConfig::uses_corrections() const {
  switch (kind) {
    case OptimizerKind::scaffold:
    case OptimizerKind::fedgamma:
      return true;
    case OptimizerKind::fedwmsam:
      return corrections;
    default:
      return false;
  }
}

bool OptimizerConfig::uses_momentum() const {
  return kind == OptimizerKind::fedcm || kind == OptimizerKind::mofedsam ||
         kind == OptimizerKind::fedwmsam;
}

bool OptimizerConfig::two_pass_sam() const {
  return kind == OptimizerKind::fedsam || kind == OptimizerKind::mofedsam ||
         kind == OptimizerKind::fedgamma;
}

void OptimizerConfig::validate() const {
  if (!(eta_l > 0.0)) throw std::invalid_argument("optimizer.eta_l: must be > 0");
  if (!(eta_g > 0.0)) throw std::invalid_argument("optimizer.eta_g: must be > 0");
  if (!(rho >= 0.0)) throw std::invalid_argument("optimizer.rho: must be >= 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("optimizer.lambda: must be in [0, 1]");
  }
  if (local_steps < 1) throw std::invalid_argument("optimizer.local_steps: must be >= 1");
  if (!(alpha_lo > 0.0 && alpha_lo <= alpha_hi && alpha_hi < 1.0)) {
    throw std::invalid_argument("optimizer.alpha_lo/alpha_hi: need 0 < alpha_lo <= alpha_hi < 1");
  }
  // alpha0 = 1 is the exact plain-SGD switch: only meaningful when the blend
  // is frozen and nothing divides by 1 - alpha (personalized momentum off).
  const bool alpha_one_switch =
      alpha0 == 1.0 && alpha_mode == AlphaMode::frozen &&
      (kind == OptimizerKind::fedcm || kind == OptimizerKind::mofedsam ||
       (kind == OptimizerKind::fedwmsam && !corrections));
  if (!alpha_one_switch) {
    if (kind == OptimizerKind::fedwmsam && alpha_mode == AlphaMode::adaptive) {
      if (!(alpha0 >= alpha_lo && alpha0 <= alpha_hi)) {
        throw std::invalid_argument(
            "optimizer.alpha0: must satisfy alpha_lo <= alpha0 <= alpha_hi < 1");
      }
    } else if (!(alpha0 > 0.0 && alpha0 < 1.0)) {
      throw std::invalid_argument("optimizer.alpha0: must be in (0, 1)");
    }
  }
}

ParamVector personalized_momentum(const ParamVector& delta, double alpha,
                                  const ParamVector& c_k) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("personalized_momentum: alpha must be in (0, 1)");
  }
  return axpy(alpha / (1.0 - alpha), c_k, delta);
}

namespace {

std::size_t effective_batch(const OptimizerConfig& cfg, const Objective& obj) {
  const std::size_t shard = obj.shard_size();
  if (shard == 0) return 1;  // noise-model kinds ignore the batch size
  if (cfg.batch == 0) return shard;
  return std::min(cfg.batch, shard);
}

void check_iterate(const ParamVector& x) {
  if (!x.all_finite() || max_abs(x) > 1e8) {
    throw numeric_error("client update diverged");
  }
}

/// x -= eta * (alpha*g + (1-alpha)*m). With alpha == 1 this is exactly the
/// plain step (IEEE: 1*g + 0*m == g).
void blend_step(ParamVector& x, const ParamVector& g, const ParamVector& m, double alpha,
                double eta) {
  for (std::size_t j = 0; j < x.dim(); ++j) {
    x[j] -= eta * (alpha * g[j] + (1.0 - alpha) * m[j]);
  }
}

void plain_step(ParamVector& x, const ParamVector& g, double eta) {
  for (std::size_t j = 0; j < x.dim(); ++j) {
    x[j] -= eta * g[j];
  }
}

void corrected_step(ParamVector& x, const ParamVector& g, const ParamVector& c_k,
                    const ParamVector& c_g, double eta) {
  for (std::size_t j = 0; j < x.dim(); ++j) {
    x[j] -= eta * (g[j] - c_k[j] + c_g[j]);
  }
}

/// Classic SAM ascent: evaluate the gradient at x + rho * g1/|g1| on the
/// same minibatch that produced g1. Two backprops. Returns the descent
/// gradient sample.
GradSample sam_two_pass(const Objective& obj, const ParamVector& x, double rho, std::size_t batch,
                        Rng& rng) {
  GradSample g1 = obj.stochastic_gradient(x, batch, rng);
  double n = norm2(g1.grad);
  if (rho > 0.0 && n >= kZeroNormEps) {
    ParamVector x_eval = axpy(rho / n, g1.grad, x);
    return obj.gradient_on(x_eval, g1.batch_indices, rng);
  }
  return obj.gradient_on(x, g1.batch_indices, rng);
}

}  // namespace

ClientReturn wmsam_client_update(const ParamVector& x_r, const ParamVector& personalized,
                                 double alpha, const OptimizerConfig& cfg, const Objective& obj,
                                 Rng& rng) {
  if (x_r.dim() != personalized.dim() || x_r.dim() != obj.dim()) {
    throw std::invalid_argument("wmsam_client_update: dimension mismatch");
  }
  const std::size_t B = cfg.local_steps;
  const std::size_t batch = effective_batch(cfg, obj);

  ClientReturn ret;
  ret.loss_trace.reserve(B);
  ParamVector x = x_r;
  ParamVector delta(x.dim());
  for (std::size_t b = 0; b < B; ++b) {
    GradSample gs;
    bool perturbed = false;
    if (cfg.rho > 0.0) {
      // delta = (x_r + b*personalized) - x_b; zero at b = 0 by construction,
      // in which case the gradient is taken unperturbed.
      for (std::size_t j = 0; j < x.dim(); ++j) {
        delta[j] = (x_r[j] + static_cast<double>(b) * personalized[j]) - x[j];
      }
      const double nd = norm2(delta);
      if (nd >= kZeroNormEps) {
        const double s = cfg.rho / nd;
        ParamVector x_eval = axpy(s, delta, x);
        double applied = 0.0;
        for (std::size_t j = 0; j < x.dim(); ++j) {
          const double dj = x_eval[j] - x[j];
          applied += dj * dj;
        }
        applied = std::sqrt(applied);
        ret.max_perturbation_dev =
            std::max(ret.max_perturbation_dev, std::abs(applied - cfg.rho));
        ret.perturbed_steps += 1;
        gs = obj.stochastic_gradient(x_eval, batch, rng);
        perturbed = true;
      }
    }
    if (!perturbed) {
      gs = obj.stochastic_gradient(x, batch, rng);
    }
    ret.loss_trace.push_back(gs.loss);
    blend_step(x, gs.grad, personalized, alpha, cfg.eta_l);
    check_iterate(x);
  }
  ret.delta = sub(x, x_r);
  ret.backprops = B;
  return ret;
}

ClientReturn baseline_client_update(OptimizerKind kind, const ParamVector& x_r,
                                    const BaselineExtras& extras, const OptimizerConfig& cfg,
                                    const Objective& obj, Rng& rng) {
  if (x_r.dim() != obj.dim()) {
    throw std::invalid_argument("baseline_client_update: dimension mismatch");
  }
  const bool needs_momentum = kind == OptimizerKind::fedcm || kind == OptimizerKind::mofedsam;
  const bool needs_corrections = kind == OptimizerKind::scaffold || kind == OptimizerKind::fedgamma;
  if (needs_momentum && extras.momentum == nullptr) {
    throw std::invalid_argument("baseline_client_update: momentum vector required");
  }
  if (needs_corrections && (extras.c_k == nullptr || extras.c_g == nullptr)) {
    throw std::invalid_argument("baseline_client_update: correction vectors required");
  }

  const std::size_t B = cfg.local_steps;
  const std::size_t batch = effective_batch(cfg, obj);
  const bool two_pass = kind == OptimizerKind::fedsam || kind == OptimizerKind::mofedsam ||
                        kind == OptimizerKind::fedgamma;

  ClientReturn ret;
  ret.loss_trace.reserve(B);
  ParamVector x = x_r;
  for (std::size_t b = 0; b < B; ++b) {
    GradSample gs = two_pass ? sam_two_pass(obj, x, cfg.rho, batch, rng)
                             : obj.stochastic_gradient(x, batch, rng);
    ret.loss_trace.push_back(gs.loss);
    switch (kind) {
      case OptimizerKind::fedavg:
      case OptimizerKind::fedsam:
        plain_step(x, gs.grad, cfg.eta_l);
        break;
      case OptimizerKind::fedcm:
      case OptimizerKind::mofedsam:
        blend_step(x, gs.grad, *extras.momentum, cfg.alpha0, cfg.eta_l);
        break;
      case OptimizerKind::scaffold:
      case OptimizerKind::fedgamma:
        corrected_step(x, gs.grad, *extras.c_k, *extras.c_g, cfg.eta_l);
        break;
      case OptimizerKind::fedwmsam:
        throw std::invalid_argument("baseline_client_update: fedwmsam has its own update");
    }
    check_iterate(x);
  }
  ret.delta = sub(x, x_r);
  ret.backprops = two_pass ? 2 * B : B;
  return ret;
}

ParamVector aggregate_momentum(std::span<const ClientReturn> returns, double eta_l,
                               std::size_t local_steps, bool literal_signs) {
  if (returns.empty()) {
    throw std::invalid_argument("aggregate_momentum: empty participant set");
  }
  const std::size_t d = returns.front().delta.dim();
  ParamVector acc(d);
  for (const auto& r : returns) {
    if (r.delta.dim() != d) {
      throw std::invalid_argument("aggregate_momentum: dimension mismatch");
    }
    for (std::size_t j = 0; j < d; ++j) acc[j] += r.delta[j];
  }
  const double denom =
      eta_l * static_cast<double>(local_steps) * static_cast<double>(returns.size());
  const double s = (literal_signs ? 1.0 : -1.0) / denom;
  ParamVector out = scale(s, acc);
  out.check_finite("aggregate_momentum");
  return out;
}

ParamVector apply_server_update(const ParamVector& x, const ParamVector& momentum, double eta_g) {
  ParamVector out = axpy(-eta_g, momentum, x);
  out.check_finite("apply_server_update");
  return out;
}

double update_alpha(double alpha, std::span<const double> sims, double lambda, double lo,
                    double hi) {
  if (sims.empty()) throw std::invalid_argument("update_alpha: empty similarity list");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("update_alpha: lambda must be in [0, 1]");
  }
  if (!(lo > 0.0 && lo < hi && hi < 1.0)) {
    throw std::invalid_argument("update_alpha: need 0 < lo < hi < 1");
  }
  double mean = 0.0;
  for (double s : sims) {
    if (!(s >= -1.0 - 1e-12 && s <= 1.0 + 1e-12)) {
      throw std::invalid_argument("update_alpha: similarity outside [-1, 1]");
    }
    mean += s;
  }
  mean /= static_cast<double>(sims.size());
  return (1.0 - lambda) * alpha + lambda * std::clamp(mean, lo, hi);
}

ParamVector update_client_correction(const ParamVector& c_k, const ParamVector& c_g,
                                     const ParamVector& delta_k, double eta_l,
                                     std::size_t local_steps) {
  if (local_steps == 0) throw std::invalid_argument("update_client_correction: B must be >= 1");
  const double inv = 1.0 / (eta_l * static_cast<double>(local_steps));
  ParamVector out(c_k.dim());
  if (c_g.dim() != c_k.dim() || delta_k.dim() != c_k.dim()) {
    throw std::invalid_argument("update_client_correction: dimension mismatch");
  }
  for (std::size_t j = 0; j < out.dim(); ++j) {
    out[j] = c_k[j] - c_g[j] - inv * delta_k[j];
  }
  out.check_finite("update_client_correction");
  return out;
}

ParamVector update_global_correction(const ParamVector& c_g, std::span<const ParamVector> changes,
                                     std::size_t denom) {
  if (denom == 0) throw std::invalid_argument("update_global_correction: zero denominator");
  ParamVector out = c_g;
  const double inv = 1.0 / static_cast<double>(denom);
  for (const auto& ch : changes) {
    if (ch.dim() != out.dim()) {
      throw std::invalid_argument("update_global_correction: dimension mismatch");
    }
    for (std::size_t j = 0; j < out.dim(); ++j) out[j] += inv * ch[j];
  }
  out.check_finite("update_global_correction");
  return out;
}

}  // namespace fedsim

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsim/objective.hpp"
#include "fedsim/param_vector.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

enum class OptimizerKind { fedavg, fedcm, scaffold, fedsam, mofedsam, fedgamma, fedwmsam };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);

enum class CorrInit { zero, minibatch };
enum class AlphaMode { adaptive, frozen };
/// How the shared correction c_g is advanced each round: `verbatim` adds the
/// participant mean of the per-client changes; `population` scales that mean
/// by |P_r|/N (the classic control-variate update).
enum class ScaffoldScaling { verbatim, population };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::fedwmsam;
  double eta_l = 0.1;   // local step size
  double eta_g = 1.0;   // global step size
  double rho = 0.01;    // perturbation radius
  double alpha0 = 0.1;  // initial momentum factor
  double lambda = 0.01; // adaptation rate for alpha
  double alpha_lo = 0.1;
  double alpha_hi = 0.9;
  std::size_t local_steps = 5;  // B
  std::size_t batch = 0;        // minibatch size; 0 = full shard
  CorrInit corr_init = CorrInit::zero;
  AlphaMode alpha_mode = AlphaMode::adaptive;
  /// Correction terms on/off (fedwmsam). Off is used by the degenerate
  /// equivalence oracles; scaffold/fedgamma always carry corrections.
  bool corrections = true;
  /// Store the aggregated momentum with the displacement sign exactly as the
  /// update rule is written, instead of negating to gradient direction. See
  /// aggregate_momentum.
  bool literal_signs = false;
  ScaffoldScaling scaffold_scaling = ScaffoldScaling::verbatim;

  bool uses_corrections() const;
  bool uses_momentum() const;
  bool two_pass_sam() const;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Per-client material held by the server between rounds.
struct ClientState {
  std::size_t id = 0;
  ObjectivePtr objective;
  ParamVector correction;  // c_k, server-held
  double weight = 0.0;     // n_k / n; recorded for metrics, not aggregation
};

/// What one local training pass hands back.
struct ClientReturn {
  ParamVector delta;  // x_B - x_r, the raw displacement
  double sim = 0.0;   // cos(momentum, personalized momentum); engine-filled
  std::size_t backprops = 0;
  std::vector<double> loss_trace;
  /// max | |applied perturbation| - rho | over steps that perturbed
  double max_perturbation_dev = 0.0;
  std::size_t perturbed_steps = 0;
};

/// Server-side view of the federation between rounds.
struct ServerState {
  ParamVector x;
  ParamVector momentum;  // gradient-directed unless literal_signs
  double alpha = 0.1;
  ParamVector c_global;
  std::size_t round = 0;
};

/// Personalized momentum: delta + (alpha/(1-alpha)) * c_k. The coefficient
/// makes the correction hit the gradient with unit weight once the client
/// blends v = alpha*g + (1-alpha)*personalized.
ParamVector personalized_momentum(const ParamVector& delta, double alpha, const ParamVector& c_k);

/// Momentum-guided single-backprop SAM client pass: at local step b the
/// perturbation direction is (x_r + b*personalized) - x_b, normalized to
/// radius rho (skipped while its norm is below kZeroNormEps, which always
/// covers b = 0). One stochastic gradient per step, blended
/// v = alpha*g + (1-alpha)*personalized, then x -= eta_l * v.
ClientReturn wmsam_client_update(const ParamVector& x_r, const ParamVector& personalized,
                                 double alpha, const OptimizerConfig& cfg, const Objective& obj,
                                 Rng& rng);

/// Broadcast vectors a baseline client may need beyond the model.
struct BaselineExtras {
  const ParamVector* momentum = nullptr;  // fedcm, mofedsam
  const ParamVector* c_k = nullptr;       // scaffold, fedgamma
  const ParamVector* c_g = nullptr;       // scaffold, fedgamma
};

/// Local pass for fedavg/fedcm/scaffold/fedsam/mofedsam/fedgamma. The SAM
/// kinds take the classic two-backprop ascent step (raw stochastic gradient
/// direction, same minibatch for the descent gradient).
ClientReturn baseline_client_update(OptimizerKind kind, const ParamVector& x_r,
                                    const BaselineExtras& extras, const OptimizerConfig& cfg,
                                    const Objective& obj, Rng& rng);

/// Round aggregation of client displacements into stored momentum:
///   literal:  (1 / (eta_l * B * |P|)) * sum(delta_k)
///   default:  the negation, so the stored vector points with the gradient
///             and blends consistently with fresh gradients downstream.
/// The extra 1/B (relative to writing the rule with eta_l alone) keeps the
/// stored momentum in per-step gradient units for any local step count.
ParamVector aggregate_momentum(std::span<const ClientReturn> returns, double eta_l,
                               std::size_t local_steps, bool literal_signs);

/// x_{r+1} = x_r - eta_g * momentum.
ParamVector apply_server_update(const ParamVector& x, const ParamVector& momentum, double eta_g);

/// alpha' = (1-lambda)*alpha + lambda*clamp(mean(sims), lo, hi).
double update_alpha(double alpha, std::span<const double> sims, double lambda, double lo,
                    double hi);

/// c_k' = c_k - c_g - delta_k / (eta_l * B), with delta_k the raw
/// displacement uploaded by the client.
ParamVector update_client_correction(const ParamVector& c_k, const ParamVector& c_g,
                                     const ParamVector& delta_k, double eta_l,
                                     std::size_t local_steps);

/// c_g' = c_g + (1/denom) * sum(changes), applied once per round after all
/// participant updates. denom = |P_r| (verbatim) or N (population scaling).
ParamVector update_global_correction(const ParamVector& c_g, std::span<const ParamVector> changes,
                                     std::size_t denom);

}  // namespace fedsim

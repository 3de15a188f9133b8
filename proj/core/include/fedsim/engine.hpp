#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/objective.hpp"
#include "fedsim/optimizer.hpp"

namespace fedsim {

struct ObjectiveSpec {
  enum class Kind { quadratic, logistic, mlp2 };
  Kind kind = Kind::quadratic;
  // quadratic family
  std::size_t dim = 20;
  double hetero = 1.0;
  double cond = 10.0;
  double noise_sigma = 0.0;
  // classifier kinds
  double l2 = 1e-3;        // logistic
  std::size_t hidden = 16; // mlp2

  void validate() const;
};

struct DataSpec {
  enum class PartitionKind { dirichlet, pathological };
  std::size_t classes = 10;
  std::size_t feature_dim = 10;
  std::size_t per_class = 100;       // training samples per class
  std::size_t eval_per_class = 20;   // held-out samples per class
  double spread = 2.0;
  PartitionKind partition = PartitionKind::dirichlet;
  double beta = 0.1;       // dirichlet concentration
  std::size_t gamma = 2;   // classes per client (pathological)

  void validate() const;
};

struct RunConfig {
  OptimizerConfig optimizer;
  std::size_t n_clients = 20;
  double sample_rate = 0.2;  // fraction of clients per round, (0, 1]
  std::size_t rounds = 200;
  std::uint64_t seed = 1;
  std::size_t eval_every = 5;
  std::size_t workers = 1;
  bool capture_trajectory = false;  // store x after every round (tests)
  ObjectiveSpec objective;
  DataSpec data;

  std::size_t participants_per_round() const;
  void validate() const;
};

/// Counts of protocol traffic and computation. Transmission and backprop
/// counters accumulate per round; the stored-vector counts are the
/// persistent model-size vectors the protocol keeps resident and are fixed
/// per optimizer kind.
struct CostLedger {
  std::uint64_t downlink_vectors = 0;
  std::uint64_t uplink_vectors = 0;
  std::uint64_t backward_passes = 0;
  std::uint64_t stored_vectors_per_client_serverside = 0;
  std::uint64_t stored_vectors_clientside = 0;
};

/// Per-kind per-round per-client accounting constants behind CostLedger.
std::uint64_t downlink_vectors_per_client(OptimizerKind kind);
std::uint64_t clientside_stored_vectors(OptimizerKind kind);

struct RoundRecord {
  std::size_t round = 0;
  double global_grad_norm = 0.0;
  double train_loss = 0.0;
  /// Classification accuracy on the held-out set; the quadratic family
  /// reports distance to the closed-form optimum here instead.
  double eval_accuracy = 0.0;
  double alpha = 0.0;
  double mean_cos_sim = 0.0;
  std::uint64_t downlink = 0;   // cumulative snapshots
  std::uint64_t uplink = 0;
  std::uint64_t backprops = 0;
  bool diverged = false;
};

struct EvalReport {
  double grad_norm = 0.0;
  double loss = 0.0;
  double accuracy = 0.0;  // or distance-to-optimum for quadratic
};

/// Everything run() builds before the first round; exposed for tests that
/// want to poke at the federation directly.
struct Federation {
  std::vector<ClientState> clients;
  std::optional<Dataset> eval_set;
  std::optional<ParamVector> global_optimum;  // quadratic ensembles
  ParamVector x0;
};

struct RunResult {
  std::vector<RoundRecord> records;
  CostLedger ledger;
  ServerState final_state;
  std::vector<double> alpha_trace;          // alpha_r for every round
  std::vector<ParamVector> trajectory;      // per-round x, if captured
  double max_perturbation_dev = 0.0;        // across all client steps
  /// max over rounds of |mean(c_k) - c_g| (infinity norm); only meaningful
  /// for correction-carrying optimizers
  double max_correction_mean_dev = 0.0;
  bool diverged = false;
  std::size_t rounds_completed = 0;
};

/// Uniform s-subset of {0..n-1} without replacement, ascending, volatile
/// only in (seed, round).
std::vector<std::size_t> sample_clients(std::size_t n, std::size_t s, std::size_t round,
                                        std::uint64_t seed);

Federation build_federation(const RunConfig& cfg);

/// Full gradients across all clients: |mean grad|, mean loss, and held-out
/// accuracy (quadratic: distance to the closed-form optimum). This is
/// instrumentation and never touches the ledger.
EvalReport evaluate(const Federation& fed, const ParamVector& x);

/// Execute the round loop. Deterministic in cfg (including across
/// cfg.workers values); divergence aborts with partial records and the
/// diverged marker set.
RunResult run(const RunConfig& cfg);

}  // namespace fedsim

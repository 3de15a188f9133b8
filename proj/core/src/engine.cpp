#include "fedsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace fedsim {

void ObjectiveSpec::validate() const {
  switch (kind) {
    case Kind::quadratic:
      if (dim < 1) throw std::invalid_argument("objective.dim: must be >= 1");
      if (cond < 1.0) throw std::invalid_argument("objective.cond: must be >= 1");
      if (hetero < 0.0) throw std::invalid_argument("objective.hetero: must be >= 0");
      if (noise_sigma < 0.0) throw std::invalid_argument("objective.noise_sigma: must be >= 0");
      break;
    case Kind::logistic:
      if (l2 < 0.0) throw std::invalid_argument("objective.l2: must be >= 0");
      break;
    case Kind::mlp2:
      if (hidden < 1) throw std::invalid_argument("objective.hidden: must be >= 1");
      break;
  }
}

void DataSpec::validate() const {
  if (classes < 2) throw std::invalid_argument("data.classes: must be >= 2");
  if (feature_dim < 1) throw std::invalid_argument("data.feature_dim: must be >= 1");
  if (per_class < 1) throw std::invalid_argument("data.per_class: must be >= 1");
  if (!(spread > 0.0)) throw std::invalid_argument("data.spread: must be > 0");
  if (partition == PartitionKind::dirichlet) {
    if (!(beta > 0.0)) throw std::invalid_argument("data.beta: must be > 0");
  } else {
    if (gamma < 1 || gamma > classes) {
      throw std::invalid_argument("data.gamma: must be in [1, classes]");
    }
  }
}

std::size_t RunConfig::participants_per_round() const {
  const double raw = sample_rate * static_cast<double>(n_clients);
  auto s = static_cast<std::size_t>(std::ceil(raw - 1e-12));
  return std::clamp<std::size_t>(s, 1, n_clients);
}

void RunConfig::validate() const {
  optimizer.validate();
  objective.validate();
  if (objective.kind != ObjectiveSpec::Kind::quadratic) data.validate();
  if (n_clients < 1) throw std::invalid_argument("n_clients: must be >= 1");
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
    throw std::invalid_argument("sample_rate: must be in (0, 1]");
  }
  if (rounds < 1) throw std::invalid_argument("rounds: must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("eval_every: must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers: must be >= 1");
}

std::uint64_t downlink_vectors_per_client(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::fedavg:
    case OptimizerKind::fedsam:
      return 1;  // x_r
    case OptimizerKind::fedcm:
    case OptimizerKind::mofedsam:
      return 2;  // x_r, momentum
    case OptimizerKind::scaffold:
    case OptimizerKind::fedgamma:
      return 2;  // x_r, combined correction (c_g - c_k travels as one vector)
    case OptimizerKind::fedwmsam:
      return 2;  // x_r, personalized momentum
  }
  return 1;
}

std::uint64_t clientside_stored_vectors(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::fedavg:
    case OptimizerKind::fedsam:
      return 1;  // model
    case OptimizerKind::fedcm:
    case OptimizerKind::mofedsam:
    case OptimizerKind::fedwmsam:
      return 2;  // model + received momentum
    case OptimizerKind::scaffold:
    case OptimizerKind::fedgamma:
      return 3;  // model + own and global corrections
  }
  return 1;
}

std::vector<std::size_t> sample_clients(std::size_t n, std::size_t s, std::size_t round,
                                        std::uint64_t seed) {
  if (s < 1 || s > n) throw std::invalid_argument("sample_clients: need 1 <= s <= n");
  Rng rng(derive_stream(seed, stream_purpose::kClientSampling, round, 0));
  return rng.sample_without_replacement(n, s);
}

namespace {

/// Copy per-class head/tail rows of a grouped mixture into train/eval sets.
void split_train_eval(const Dataset& all, std::size_t per_class, std::size_t eval_per_class,
                      Dataset& train, Dataset& eval) {
  const std::size_t block = per_class + eval_per_class;
  train.feature_dim = eval.feature_dim = all.feature_dim;
  train.n_classes = eval.n_classes = all.n_classes;
  for (std::size_t c = 0; c < all.n_classes; ++c) {
    for (std::size_t i = 0; i < block; ++i) {
      const std::size_t src = c * block + i;
      Dataset& dst = (i < per_class) ? train : eval;
      auto row = all.row(src);
      dst.features.insert(dst.features.end(), row.begin(), row.end());
      dst.labels.push_back(all.labels[src]);
    }
  }
}

ObjectivePtr make_client_objective(const RunConfig& cfg, std::shared_ptr<const Dataset> train,
                                   std::vector<std::size_t> shard) {
  switch (cfg.objective.kind) {
    case ObjectiveSpec::Kind::logistic:
      return std::make_shared<LogisticObjective>(std::move(train), std::move(shard),
                                                 cfg.data.classes, cfg.objective.l2);
    case ObjectiveSpec::Kind::mlp2:
      return std::make_shared<TwoLayerMlpObjective>(std::move(train), std::move(shard),
                                                    cfg.data.classes, cfg.objective.hidden,
                                                    cfg.seed);
    case ObjectiveSpec::Kind::quadratic:
      throw std::logic_error("make_client_objective: quadratic built as an ensemble");
  }
  throw std::logic_error("make_client_objective: unreachable");
}

struct RoundOutcome {
  std::vector<ClientReturn> returns;  // ascending participant order
  std::vector<double> sims;
  bool diverged = false;
};

}  // namespace

Federation build_federation(const RunConfig& cfg) {
  Federation fed;
  if (cfg.objective.kind == ObjectiveSpec::Kind::quadratic) {
    auto ensemble = make_quadratic_ensemble(cfg.n_clients, cfg.objective.dim, cfg.objective.hetero,
                                            cfg.objective.cond, cfg.seed,
                                            cfg.objective.noise_sigma);
    fed.global_optimum = quadratic_global_optimum(ensemble);
    fed.x0 = ParamVector(cfg.objective.dim);
    fed.clients.reserve(cfg.n_clients);
    for (std::size_t k = 0; k < cfg.n_clients; ++k) {
      fed.clients.push_back(ClientState{k, ensemble[k], ParamVector(cfg.objective.dim),
                                        1.0 / static_cast<double>(cfg.n_clients)});
    }
    return fed;
  }

  Dataset all = gen_gaussian_mixture(cfg.data.classes, cfg.data.feature_dim,
                                     cfg.data.per_class + cfg.data.eval_per_class,
                                     cfg.data.spread, cfg.seed);
  auto train = std::make_shared<Dataset>();
  Dataset eval;
  split_train_eval(all, cfg.data.per_class, cfg.data.eval_per_class, *train, eval);
  if (cfg.data.eval_per_class > 0) fed.eval_set = std::move(eval);

  Partition part =
      cfg.data.partition == DataSpec::PartitionKind::dirichlet
          ? partition_dirichlet(*train, cfg.n_clients, cfg.data.beta, cfg.seed)
          : partition_pathological(*train, cfg.n_clients, cfg.data.gamma, cfg.seed);

  const auto total = static_cast<double>(train->size());
  fed.clients.reserve(cfg.n_clients);
  for (std::size_t k = 0; k < cfg.n_clients; ++k) {
    auto obj = make_client_objective(cfg, train, part.shards[k]);
    ParamVector corr(obj->dim());
    fed.clients.push_back(ClientState{
        k, std::move(obj), std::move(corr),
        static_cast<double>(part.shards[k].size()) / total});
  }
  fed.x0 = fed.clients.front().objective->initial_point();
  return fed;
}

EvalReport evaluate(const Federation& fed, const ParamVector& x) {
  EvalReport rep;
  const std::size_t n = fed.clients.size();
  ParamVector mean_grad(x.dim());
  double loss = 0.0;
  for (const auto& client : fed.clients) {
    GradSample gs = client.objective->full_gradient(x);
    axpy_inplace(1.0 / static_cast<double>(n), gs.grad, mean_grad);
    loss += gs.loss / static_cast<double>(n);
  }
  rep.grad_norm = norm2(mean_grad);
  rep.loss = loss;
  if (fed.global_optimum) {
    rep.accuracy = norm2(sub(x, *fed.global_optimum));
  } else if (fed.eval_set) {
    rep.accuracy = classification_accuracy(*fed.clients.front().objective, x, *fed.eval_set);
  }
  return rep;
}

namespace {

/// Run the participants' local updates, parallelized over `workers` threads.
/// Each client draws from its own (seed, round, id) stream and lands in its
/// own slot, so the outcome is identical for any worker count.
RoundOutcome run_round_clients(const RunConfig& cfg, const Federation& fed,
                               const ServerState& st,
                               const std::vector<std::size_t>& participants) {
  const auto& opt = cfg.optimizer;
  const std::size_t m = participants.size();
  RoundOutcome out;
  out.returns.resize(m);
  out.sims.assign(m, 0.0);

  // Broadcast vectors are precomputed server-side (ascending id order).
  std::vector<ParamVector> personalized(m);
  const bool alpha_one_bypass = opt.kind == OptimizerKind::fedwmsam && st.alpha == 1.0;
  if (opt.kind == OptimizerKind::fedwmsam) {
    for (std::size_t i = 0; i < m; ++i) {
      const auto& ck = fed.clients[participants[i]].correction;
      personalized[i] = (opt.uses_corrections() && !alpha_one_bypass)
                            ? personalized_momentum(st.momentum, st.alpha, ck)
                            : st.momentum;
      out.sims[i] = cosine_sim(st.momentum, personalized[i]);
    }
  } else if (opt.uses_momentum()) {
    const double self_sim = norm2(st.momentum) >= kZeroNormEps ? 1.0 : 0.0;
    out.sims.assign(m, self_sim);
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> diverged{false};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= m) return;
      const std::size_t id = participants[i];
      const ClientState& client = fed.clients[id];
      Rng rng(derive_stream(cfg.seed, stream_purpose::kClientUpdate, st.round, id));
      try {
        if (opt.kind == OptimizerKind::fedwmsam) {
          out.returns[i] =
              wmsam_client_update(st.x, personalized[i], st.alpha, opt, *client.objective, rng);
        } else {
          BaselineExtras extras;
          if (opt.uses_momentum()) extras.momentum = &st.momentum;
          if (opt.uses_corrections()) {
            extras.c_k = &client.correction;
            extras.c_g = &st.c_global;
          }
          out.returns[i] =
              baseline_client_update(opt.kind, st.x, extras, opt, *client.objective, rng);
        }
      } catch (const numeric_error&) {
        diverged.store(true);
      }
    }
  };

  const std::size_t n_threads = std::min<std::size_t>(cfg.workers, m);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  out.diverged = diverged.load();
  return out;
}

void init_corrections(const RunConfig& cfg, Federation& fed, ServerState& st) {
  if (!cfg.optimizer.uses_corrections()) return;
  if (cfg.optimizer.corr_init == CorrInit::zero) return;
  // Minibatch init: c_k = (1/B) sum of B stochastic gradients at x0,
  // c_g = mean of the c_k.
  const std::size_t B = cfg.optimizer.local_steps;
  for (auto& client : fed.clients) {
    Rng rng(derive_stream(cfg.seed, stream_purpose::kCorrectionInit, 0, client.id));
    const std::size_t shard = client.objective->shard_size();
    std::size_t batch = 1;
    if (shard > 0) {
      batch = cfg.optimizer.batch == 0 ? shard : std::min(cfg.optimizer.batch, shard);
    }
    ParamVector acc(st.x.dim());
    for (std::size_t b = 0; b < B; ++b) {
      GradSample gs = client.objective->stochastic_gradient(st.x, batch, rng);
      axpy_inplace(1.0 / static_cast<double>(B), gs.grad, acc);
    }
    client.correction = std::move(acc);
    axpy_inplace(1.0 / static_cast<double>(fed.clients.size()), client.correction, st.c_global);
  }
}

}  // namespace

RunResult run(const RunConfig& cfg) {
  cfg.validate();
  Federation fed = build_federation(cfg);
  const auto& opt = cfg.optimizer;
  const std::size_t d = fed.x0.dim();

  RunResult res;
  ServerState st{fed.x0, ParamVector(d), opt.alpha0, ParamVector(d), 0};
  init_corrections(cfg, fed, st);

  res.ledger.stored_vectors_clientside = clientside_stored_vectors(opt.kind);
  res.ledger.stored_vectors_per_client_serverside = opt.uses_corrections() ? 1 : 0;
  const std::uint64_t dl = downlink_vectors_per_client(opt.kind);
  const std::size_t S = cfg.participants_per_round();

  auto record_round = [&](double alpha_used, double mean_sim, bool diverged) {
    RoundRecord rec;
    rec.round = st.round;
    rec.alpha = alpha_used;
    rec.mean_cos_sim = mean_sim;
    rec.downlink = res.ledger.downlink_vectors;
    rec.uplink = res.ledger.uplink_vectors;
    rec.backprops = res.ledger.backward_passes;
    rec.diverged = diverged;
    if (!diverged) {
      EvalReport ev = evaluate(fed, st.x);
      rec.global_grad_norm = ev.grad_norm;
      rec.train_loss = ev.loss;
      rec.eval_accuracy = ev.accuracy;
    } else {
      rec.global_grad_norm = std::nan("");
      rec.train_loss = std::nan("");
      rec.eval_accuracy = std::nan("");
    }
    res.records.push_back(rec);
  };

  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    st.round = r;
    const double alpha_used = st.alpha;
    res.alpha_trace.push_back(alpha_used);
    const auto participants = sample_clients(cfg.n_clients, S, r, cfg.seed);
    RoundOutcome outcome = run_round_clients(cfg, fed, st, participants);
    if (outcome.diverged) {
      res.diverged = true;
      record_round(alpha_used, 0.0, true);
      break;
    }

    for (const auto& ret : outcome.returns) {
      res.ledger.downlink_vectors += dl;
      res.ledger.uplink_vectors += 1;
      res.ledger.backward_passes += ret.backprops;
      res.max_perturbation_dev = std::max(res.max_perturbation_dev, ret.max_perturbation_dev);
    }

    const bool literal = opt.kind == OptimizerKind::fedwmsam && opt.literal_signs;
    ParamVector next_momentum;
    ParamVector next_x;
    try {
      next_momentum = aggregate_momentum(outcome.returns, opt.eta_l, opt.local_steps, literal);
      next_x = apply_server_update(st.x, next_momentum, opt.eta_g);
      if (max_abs(next_x) > 1e8) throw numeric_error("server iterate out of range");
    } catch (const numeric_error&) {
      res.diverged = true;
      record_round(alpha_used, 0.0, true);
      break;
    }

    st.x = std::move(next_x);
    if (opt.uses_momentum()) st.momentum = std::move(next_momentum);

    double mean_sim = 0.0;
    if (!outcome.sims.empty()) {
      for (double s : outcome.sims) mean_sim += s;
      mean_sim /= static_cast<double>(outcome.sims.size());
    }

    if (opt.kind == OptimizerKind::fedwmsam && opt.alpha_mode == AlphaMode::adaptive) {
      st.alpha = update_alpha(st.alpha, outcome.sims, opt.lambda, opt.alpha_lo, opt.alpha_hi);
    }

    if (opt.uses_corrections()) {
      std::vector<ParamVector> changes;
      changes.reserve(participants.size());
      std::vector<ParamVector> fresh(participants.size());
      for (std::size_t i = 0; i < participants.size(); ++i) {
        const auto& client = fed.clients[participants[i]];
        fresh[i] = update_client_correction(client.correction, st.c_global,
                                            outcome.returns[i].delta, opt.eta_l, opt.local_steps);
        changes.push_back(sub(fresh[i], client.correction));
      }
      const std::size_t denom = opt.scaffold_scaling == ScaffoldScaling::verbatim
                                    ? participants.size()
                                    : cfg.n_clients;
      st.c_global = update_global_correction(st.c_global, changes, denom);
      for (std::size_t i = 0; i < participants.size(); ++i) {
        fed.clients[participants[i]].correction = std::move(fresh[i]);
      }
      ParamVector mean_corr(d);
      for (const auto& client : fed.clients) {
        axpy_inplace(1.0 / static_cast<double>(cfg.n_clients), client.correction, mean_corr);
      }
      res.max_correction_mean_dev =
          std::max(res.max_correction_mean_dev, max_abs_diff(mean_corr, st.c_global));
    }

    res.rounds_completed = r + 1;
    if (cfg.capture_trajectory) res.trajectory.push_back(st.x);
    if (r % cfg.eval_every == 0 || r + 1 == cfg.rounds) {
      record_round(alpha_used, mean_sim, false);
    }
  }

  res.final_state = std::move(st);
  return res;
}

}  // namespace fedsim

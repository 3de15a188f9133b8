#include "fedsim/experiment.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace fedsim {

namespace {

using nlohmann::json;

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& section) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.contains(it.key())) {
      throw config_error("unknown key '" + it.key() + "' in " + section);
    }
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error("key '" + key + "' has the wrong type");
  }
}

OptimizerConfig parse_optimizer(const json& j) {
  reject_unknown_keys(j, {"kind", "eta_l", "eta_g", "rho", "alpha0", "lambda", "alpha_lo",
                          "alpha_hi", "local_steps", "batch", "corr_init", "alpha_mode",
                          "corrections", "literal_signs", "scaffold_scaling"},
                      "section 'optimizer'");
  OptimizerConfig cfg;
  if (j.contains("kind")) {
    try {
      cfg.kind = optimizer_kind_from_string(j.at("kind").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw config_error(std::string("optimizer.kind: ") + e.what());
    }
  }
  cfg.eta_l = get_or(j, "eta_l", cfg.eta_l);
  cfg.eta_g = get_or(j, "eta_g", cfg.eta_g);
  cfg.rho = get_or(j, "rho", cfg.rho);
  cfg.alpha0 = get_or(j, "alpha0", cfg.alpha0);
  cfg.lambda = get_or(j, "lambda", cfg.lambda);
  cfg.alpha_lo = get_or(j, "alpha_lo", cfg.alpha_lo);
  cfg.alpha_hi = get_or(j, "alpha_hi", cfg.alpha_hi);
  cfg.local_steps = get_or<std::size_t>(j, "local_steps", cfg.local_steps);
  cfg.batch = get_or<std::size_t>(j, "batch", cfg.batch);
  if (j.contains("corr_init")) {
    const auto v = j.at("corr_init").get<std::string>();
    if (v == "zero") cfg.corr_init = CorrInit::zero;
    else if (v == "minibatch") cfg.corr_init = CorrInit::minibatch;
    else throw config_error("optimizer.corr_init: expected 'zero' or 'minibatch'");
  }
  if (j.contains("alpha_mode")) {
    const auto v = j.at("alpha_mode").get<std::string>();
    if (v == "adaptive") cfg.alpha_mode = AlphaMode::adaptive;
    else if (v == "frozen") cfg.alpha_mode = AlphaMode::frozen;
    else throw config_error("optimizer.alpha_mode: expected 'adaptive' or 'frozen'");
  }
  cfg.corrections = get_or(j, "corrections", cfg.corrections);
  cfg.literal_signs = get_or(j, "literal_signs", cfg.literal_signs);
  if (j.contains("scaffold_scaling")) {
    const auto v = j.at("scaffold_scaling").get<std::string>();
    if (v == "verbatim") cfg.scaffold_scaling = ScaffoldScaling::verbatim;
    else if (v == "population") cfg.scaffold_scaling = ScaffoldScaling::population;
    else throw config_error("optimizer.scaffold_scaling: expected 'verbatim' or 'population'");
  }
  return cfg;
}

ObjectiveSpec parse_objective(const json& j) {
  reject_unknown_keys(j, {"kind", "dim", "hetero", "cond", "noise_sigma", "l2", "hidden"},
                      "section 'objective'");
  ObjectiveSpec spec;
  if (j.contains("kind")) {
    const auto v = j.at("kind").get<std::string>();
    if (v == "quadratic") spec.kind = ObjectiveSpec::Kind::quadratic;
    else if (v == "logistic") spec.kind = ObjectiveSpec::Kind::logistic;
    else if (v == "mlp2") spec.kind = ObjectiveSpec::Kind::mlp2;
    else throw config_error("objective.kind: expected 'quadratic', 'logistic' or 'mlp2'");
  }
  spec.dim = get_or<std::size_t>(j, "dim", spec.dim);
  spec.hetero = get_or(j, "hetero", spec.hetero);
  spec.cond = get_or(j, "cond", spec.cond);
  spec.noise_sigma = get_or(j, "noise_sigma", spec.noise_sigma);
  spec.l2 = get_or(j, "l2", spec.l2);
  spec.hidden = get_or<std::size_t>(j, "hidden", spec.hidden);
  return spec;
}

DataSpec parse_data(const json& j) {
  reject_unknown_keys(j, {"classes", "feature_dim", "per_class", "eval_per_class", "spread",
                          "partition", "beta", "gamma"},
                      "section 'data'");
  DataSpec spec;
  spec.classes = get_or<std::size_t>(j, "classes", spec.classes);
  spec.feature_dim = get_or<std::size_t>(j, "feature_dim", spec.feature_dim);
  spec.per_class = get_or<std::size_t>(j, "per_class", spec.per_class);
  spec.eval_per_class = get_or<std::size_t>(j, "eval_per_class", spec.eval_per_class);
  spec.spread = get_or(j, "spread", spec.spread);
  if (j.contains("partition")) {
    const auto v = j.at("partition").get<std::string>();
    if (v == "dirichlet") spec.partition = DataSpec::PartitionKind::dirichlet;
    else if (v == "pathological") spec.partition = DataSpec::PartitionKind::pathological;
    else throw config_error("data.partition: expected 'dirichlet' or 'pathological'");
  }
  spec.beta = get_or(j, "beta", spec.beta);
  spec.gamma = get_or<std::size_t>(j, "gamma", spec.gamma);
  return spec;
}

bool filesystem_safe(const std::string& name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

}  // namespace

ExperimentSpec parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw config_error("parse error at line " + std::to_string(line_of_byte(json_text, e.byte)) +
                       ": " + e.what());
  }
  if (!doc.is_object()) {
    throw config_error("top level must be an object");
  }
  reject_unknown_keys(doc, {"name", "seed", "rounds", "n_clients", "sample_rate", "eval_every",
                            "workers", "outputs", "emit_plots", "optimizer", "objective", "data"},
                      "the top level");

  ExperimentSpec spec;
  spec.name = get_or<std::string>(doc, "name", "experiment");
  if (!filesystem_safe(spec.name)) {
    throw config_error("name: must be non-empty and filesystem-safe ([A-Za-z0-9._-])");
  }
  spec.outputs = get_or<std::string>(doc, "outputs", spec.outputs);
  spec.emit_plots = get_or(doc, "emit_plots", spec.emit_plots);

  RunConfig& run = spec.run;
  run.seed = get_or<std::uint64_t>(doc, "seed", run.seed);
  run.rounds = get_or<std::size_t>(doc, "rounds", run.rounds);
  run.n_clients = get_or<std::size_t>(doc, "n_clients", run.n_clients);
  run.sample_rate = get_or(doc, "sample_rate", run.sample_rate);
  run.eval_every = get_or<std::size_t>(doc, "eval_every", run.eval_every);
  run.workers = get_or<std::size_t>(doc, "workers", run.workers);
  if (doc.contains("optimizer")) run.optimizer = parse_optimizer(doc.at("optimizer"));
  if (doc.contains("objective")) run.objective = parse_objective(doc.at("objective"));
  if (doc.contains("data")) run.data = parse_data(doc.at("data"));

  try {
    run.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  return spec;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"paper-defaults", "convex-sanity", "theory-checks"};
  return names;
}

std::string preset_config(const std::string& name) {
  if (name == "paper-defaults") {
    return R"({
  "name": "paper-defaults",
  "seed": 1,
  "rounds": 200,
  "n_clients": 20,
  "sample_rate": 0.2,
  "eval_every": 5,
  "optimizer": {
    "kind": "fedwmsam",
    "eta_l": 0.1,
    "eta_g": 1.0,
    "rho": 0.01,
    "alpha0": 0.1,
    "lambda": 0.01,
    "alpha_lo": 0.1,
    "alpha_hi": 0.9,
    "local_steps": 5,
    "batch": 20
  },
  "objective": { "kind": "logistic", "l2": 0.001 },
  "data": {
    "classes": 10,
    "feature_dim": 10,
    "per_class": 100,
    "eval_per_class": 20,
    "spread": 2.0,
    "partition": "dirichlet",
    "beta": 0.1
  }
})";
  }
  if (name == "convex-sanity") {
    return R"({
  "name": "convex-sanity",
  "seed": 1,
  "rounds": 500,
  "n_clients": 20,
  "sample_rate": 1.0,
  "eval_every": 1,
  "optimizer": {
    "kind": "fedwmsam",
    "eta_l": 0.1,
    "eta_g": 1.0,
    "rho": 0.01,
    "alpha0": 0.1,
    "lambda": 0.01,
    "local_steps": 1
  },
  "objective": {
    "kind": "quadratic",
    "dim": 50,
    "hetero": 1.0,
    "cond": 10.0,
    "noise_sigma": 0.0
  }
})";
  }
  if (name == "theory-checks") {
    return R"({
  "name": "theory-checks",
  "seed": 1,
  "rounds": 100,
  "n_clients": 20,
  "sample_rate": 0.2,
  "eval_every": 5,
  "optimizer": {
    "kind": "fedwmsam",
    "eta_l": 0.1,
    "eta_g": 1.0,
    "rho": 0.01,
    "alpha0": 0.1,
    "lambda": 0.01,
    "local_steps": 2
  },
  "objective": {
    "kind": "quadratic",
    "dim": 20,
    "hetero": 1.0,
    "cond": 10.0,
    "noise_sigma": 0.5
  }
})";
  }
  throw config_error("unknown preset '" + name + "'; available: paper-defaults, convex-sanity, theory-checks");
}

}  // namespace fedsim

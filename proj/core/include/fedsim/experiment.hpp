#pragma once

#include <string>
#include <vector>

#include "fedsim/engine.hpp"

namespace fedsim {

/// A named, fully validated run plus its output destination.
struct ExperimentSpec {
  std::string name;
  RunConfig run;
  std::string outputs = "out";
  bool emit_plots = true;
};

/// Raised on malformed or invalid configuration; the message names the
/// offending key or the parse location.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Parse a JSON experiment document. Unknown keys anywhere are errors;
/// missing optional keys take the documented defaults; everything is
/// validated before the spec is returned.
ExperimentSpec parse_config(const std::string& json_text);

/// Built-in experiment presets:
///   paper-defaults  non-IID logistic desk run (Dirichlet 0.1, 20 clients,
///                   20% sampling, fedwmsam knobs eta_l=0.1 eta_g=1 rho=0.01
///                   alpha0=0.1 lambda=0.01, bounds [0.1, 0.9])
///   convex-sanity   deterministic heterogeneous quadratic ensemble
///   theory-checks   small stochastic quadratic for bound checks and scans
const std::vector<std::string>& preset_names();
std::string preset_config(const std::string& name);

}  // namespace fedsim

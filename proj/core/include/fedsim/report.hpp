#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/engine.hpp"

namespace fedsim {

/// %.12g rendering used for every number the tool emits; re-parsing and
/// re-emitting a value printed this way reproduces the same bytes.
std::string format_g12(double v);

/// One header row, one row per record
/// (round,grad_norm,train_loss,eval_accuracy,alpha,mean_cos_sim,downlink,
/// uplink,backprops), then the ledger totals as a trailing comment row.
void emit_csv(const std::vector<RoundRecord>& records, const CostLedger& ledger,
              std::ostream& out);
void emit_csv_file(const std::vector<RoundRecord>& records, const CostLedger& ledger,
                   const std::string& path);

/// Parse a metrics CSV back (comment rows skipped). Round-trip fidelity
/// check lives in the tests.
std::vector<RoundRecord> parse_csv(std::istream& in);

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// Minimal self-contained SVG line plot: linear axes auto-fit to the data,
/// one polyline and one legend entry per series.
void emit_svg_lines(const std::vector<PlotSeries>& series, std::ostream& out,
                    const std::string& title = "");
void emit_svg_lines_file(const std::vector<PlotSeries>& series, const std::string& path,
                         const std::string& title = "");

}  // namespace fedsim

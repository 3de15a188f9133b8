#include "fedsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fedsim {

std::string format_g12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void emit_csv(const std::vector<RoundRecord>& records, const CostLedger& ledger,
              std::ostream& out) {
  out << "round,grad_norm,train_loss,eval_accuracy,alpha,mean_cos_sim,downlink,uplink,backprops\n";
  for (const auto& r : records) {
    out << r.round << ',' << format_g12(r.global_grad_norm) << ',' << format_g12(r.train_loss)
        << ',' << format_g12(r.eval_accuracy) << ',' << format_g12(r.alpha) << ','
        << format_g12(r.mean_cos_sim) << ',' << r.downlink << ',' << r.uplink << ','
        << r.backprops;
    if (r.diverged) out << ",diverged";
    out << '\n';
  }
  out << "# totals,downlink=" << ledger.downlink_vectors << ",uplink=" << ledger.uplink_vectors
      << ",backward_passes=" << ledger.backward_passes
      << ",stored_serverside_per_client=" << ledger.stored_vectors_per_client_serverside
      << ",stored_clientside=" << ledger.stored_vectors_clientside << '\n';
}

void emit_csv_file(const std::vector<RoundRecord>& records, const CostLedger& ledger,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_csv_file: cannot open " + path);
  emit_csv(records, ledger, out);
  if (!out) throw std::runtime_error("emit_csv_file: write failed for " + path);
}

std::vector<RoundRecord> parse_csv(std::istream& in) {
  std::vector<RoundRecord> records;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() < 9) throw std::runtime_error("parse_csv: short row: " + line);
    RoundRecord r;
    r.round = std::stoul(fields[0]);
    r.global_grad_norm = std::strtod(fields[1].c_str(), nullptr);
    r.train_loss = std::strtod(fields[2].c_str(), nullptr);
    r.eval_accuracy = std::strtod(fields[3].c_str(), nullptr);
    r.alpha = std::strtod(fields[4].c_str(), nullptr);
    r.mean_cos_sim = std::strtod(fields[5].c_str(), nullptr);
    r.downlink = std::stoull(fields[6]);
    r.uplink = std::stoull(fields[7]);
    r.backprops = std::stoull(fields[8]);
    r.diverged = fields.size() > 9 && fields[9] == "diverged";
    records.push_back(r);
  }
  return records;
}

namespace {

struct Bounds {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -std::numeric_limits<double>::infinity();
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

void emit_svg_lines(const std::vector<PlotSeries>& series, std::ostream& out,
                    const std::string& title) {
  if (series.empty()) throw std::invalid_argument("emit_svg_lines: no series");
  Bounds b;
  for (const auto& s : series) {
    if (s.points.empty()) {
      throw std::invalid_argument("emit_svg_lines: series '" + s.label + "' is empty");
    }
    for (const auto& [x, y] : s.points) {
      b.xmin = std::min(b.xmin, x);
      b.xmax = std::max(b.xmax, x);
      b.ymin = std::min(b.ymin, y);
      b.ymax = std::max(b.ymax, y);
    }
  }
  if (b.xmax == b.xmin) {
    b.xmin -= 0.5;
    b.xmax += 0.5;
  }
  if (b.ymax == b.ymin) {
    b.ymin -= 0.5;
    b.ymax += 0.5;
  }

  const double W = 640, H = 400;
  const double ml = 70, mr = 160, mt = title.empty() ? 20 : 40, mb = 50;
  auto sx = [&](double x) { return ml + (x - b.xmin) / (b.xmax - b.xmin) * (W - ml - mr); };
  auto sy = [&](double y) { return H - mb - (y - b.ymin) / (b.ymax - b.ymin) * (H - mt - mb); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title
        << "</text>\n";
  }
  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
      << H - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
  // min/max tick labels
  out << "<text x=\"" << ml << "\" y=\"" << H - mb + 18 << "\" font-size=\"11\">"
      << format_g12(b.xmin) << "</text>\n";
  out << "<text x=\"" << W - mr << "\" y=\"" << H - mb + 18
      << "\" text-anchor=\"end\" font-size=\"11\">" << format_g12(b.xmax) << "</text>\n";
  out << "<text x=\"" << ml - 6 << "\" y=\"" << H - mb << "\" text-anchor=\"end\" font-size=\"11\">"
      << format_g12(b.ymin) << "</text>\n";
  out << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 4
      << "\" text-anchor=\"end\" font-size=\"11\">" << format_g12(b.ymax) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t p = 0; p < series[i].points.size(); ++p) {
      if (p) out << ' ';
      out << format_g12(sx(series[i].points[p].first)) << ','
          << format_g12(sy(series[i].points[p].second));
    }
    out << "\"/>\n";
    const double ly = mt + 16.0 * static_cast<double>(i);
    out << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly + 4 << "\" x2=\"" << W - mr + 30
        << "\" y2=\"" << ly + 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - mr + 36 << "\" y=\"" << ly + 8 << "\" font-size=\"12\">"
        << series[i].label << "</text>\n";
  }
  out << "</svg>\n";
}

void emit_svg_lines_file(const std::vector<PlotSeries>& series, const std::string& path,
                         const std::string& title) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_svg_lines_file: cannot open " + path);
  emit_svg_lines(series, out, title);
  if (!out) throw std::runtime_error("emit_svg_lines_file: write failed for " + path);
}

}  // namespace fedsim

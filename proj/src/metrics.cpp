#include "limip/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace limip {

double shifted_geomean(const std::vector<double>& xs, double shift) {
  if (xs.empty()) throw std::invalid_argument("shifted_geomean: empty input");
  double acc = 0.0;
  for (double x : xs) {
    double v = x + shift;
    if (!(v > 0.0)) throw std::invalid_argument("shifted_geomean: requires x + shift > 0");
    acc += std::log(v);
  }
  return std::exp(acc / static_cast<double>(xs.size())) - shift;
}

double stdpct(const std::vector<std::vector<double>>& runs) {
  if (runs.empty()) throw std::invalid_argument("stdpct: empty input");
  double acc = 0.0;
  for (const auto& r : runs) {
    if (r.size() < 2) continue;
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    if (mean == 0.0) continue;
    double ss = 0.0;
    for (double v : r) ss += (v - mean) * (v - mean);
    double sd = std::sqrt(ss / static_cast<double>(r.size() - 1));
    acc += sd / mean * 100.0;
  }
  return acc / static_cast<double>(runs.size());
}

std::string EvalMatrix::to_csv() const {
  std::ostringstream os;
  os << "checkpoint";
  for (const auto& c : col_names)
    os << "," << c << "_nodes," << c << "_time_s," << c << "_std_pct," << c << "_cap_hits";
  os << "\n";
  char buf[64];
  for (size_t r = 0; r < cells.size(); ++r) {
    os << row_names[r];
    for (const EvalCell& cell : cells[r]) {
      snprintf(buf, sizeof buf, ",%.6f,%.6f,%.3f,%ld", cell.geo_nodes, cell.geo_time,
               cell.node_std_pct, cell.cap_hits);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

std::string EvalMatrix::to_table() const {
  std::ostringstream os;
  size_t w = 12;
  for (const auto& name : row_names) w = std::max(w, name.size() + 2);
  char buf[64];
  snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w), "geo nodes");
  os << buf;
  for (const auto& c : col_names) {
    snprintf(buf, sizeof buf, "%14s", c.c_str());
    os << buf;
  }
  os << "\n";
  for (size_t r = 0; r < cells.size(); ++r) {
    snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w), row_names[r].c_str());
    os << buf;
    for (const EvalCell& cell : cells[r]) {
      snprintf(buf, sizeof buf, "%14.2f", cell.geo_nodes);
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace limip

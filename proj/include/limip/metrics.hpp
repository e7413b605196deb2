#pragma once

#include <string>
#include <vector>

namespace limip {

// exp(mean(ln(x + shift))) - shift. Throws when any x + shift <= 0 or the
// input is empty.
double shifted_geomean(const std::vector<double>& xs, double shift = 1.0);

// runs[i] holds one instance's measurements across seeds. Returns the mean
// over instances of (sample standard deviation / mean) * 100. Instances with
// fewer than two runs or a zero mean contribute 0.
double stdpct(const std::vector<std::vector<double>>& runs);

struct EvalCell {
  double geo_time = 0.0;
  double geo_nodes = 0.0;
  double node_std_pct = 0.0;
  long cap_hits = 0;
};

// Rows are training checkpoints, columns evaluation tasks.
struct EvalMatrix {
  std::vector<std::string> row_names;
  std::vector<std::string> col_names;
  std::vector<std::vector<EvalCell>> cells;

  std::string to_csv() const;
  // Aligned fixed-width text rendering of the node geomeans.
  std::string to_table() const;
};

}  // namespace limip

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "limip/common.hpp"

namespace limip {

// Minimization MILP in row form: min c'x s.t. Ax <= b, l <= x <= u, with the
// first num_int variables integral. Rows with >= sense are stored negated.
// Instances are immutable after construction and shared by reference.
struct MilpInstance {
  struct Entry {
    int col;
    double coef;
  };

  std::string name;
  int num_vars = 0;
  int num_int = 0;  // integral block is the prefix [0, num_int)
  std::vector<double> obj;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::vector<Entry>> rows;  // per-row sparse entries, cols ascending
  std::vector<double> rhs;

  int num_rows() const { return static_cast<int>(rows.size()); }
};

// Structural problems are reported as messages; an empty result means valid.
std::vector<std::string> validate(const MilpInstance& inst);

// Bound tightening applied on top of an instance. Patches compose by
// intersection of the bound intervals.
struct VarDomainPatch {
  int var = -1;
  double new_lower = -kInf;
  double new_upper = kInf;
};

// LP relaxation of an instance under a patch list. Shares the instance's
// matrix and objective; owns only the working bounds.
struct LpProblem {
  std::shared_ptr<const MilpInstance> inst;
  std::vector<double> lower;
  std::vector<double> upper;
  // Set when a patch emptied some variable's domain (lower > upper).
  bool infeasible_by_bounds = false;

  int num_vars() const { return inst->num_vars; }
  int num_rows() const { return inst->num_rows(); }
};

LpProblem relax(std::shared_ptr<const MilpInstance> inst,
                const std::vector<VarDomainPatch>& patches);

// Text round trip. Files written by write_instance and re-read parse to an
// identical instance; re-writing reproduces the bytes exactly.
MilpInstance instance_from_text(const std::string& text);
std::string instance_to_text(const MilpInstance& inst);
MilpInstance read_instance(const std::string& path);
void write_instance(const MilpInstance& inst, const std::string& path);

}  // namespace limip

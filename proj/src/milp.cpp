#include "limip/milp.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace limip {

std::vector<std::string> validate(const MilpInstance& inst) {
  std::vector<std::string> errs;
  auto fail = [&](std::string msg) { errs.push_back(std::move(msg)); };

  if (inst.num_vars < 0) fail("negative variable count");
  if (inst.num_int < 0 || inst.num_int > inst.num_vars)
    fail("integral block size outside [0, num_vars]");
  auto expect_size = [&](size_t got, const char* what) {
    if (got != static_cast<size_t>(inst.num_vars))
      fail(std::string(what) + " length " + std::to_string(got) +
           " != num_vars " + std::to_string(inst.num_vars));
  };
  expect_size(inst.obj.size(), "obj");
  expect_size(inst.lower.size(), "lower");
  expect_size(inst.upper.size(), "upper");
  if (inst.rhs.size() != inst.rows.size())
    fail("rhs length != row count");

  for (int j = 0; j < inst.num_vars && j < static_cast<int>(inst.lower.size()) &&
                  j < static_cast<int>(inst.upper.size());
       ++j) {
    if (inst.lower[j] > inst.upper[j])
      fail("inverted bounds on var " + std::to_string(j));
    if (std::isnan(inst.lower[j]) || std::isnan(inst.upper[j]))
      fail("nan bound on var " + std::to_string(j));
  }
  for (double c : inst.obj)
    if (!std::isfinite(c)) {
      fail("non-finite objective coefficient");
      break;
    }
  for (size_t i = 0; i < inst.rows.size(); ++i) {
    int prev = -1;
    for (const auto& e : inst.rows[i]) {
      if (e.col < 0 || e.col >= inst.num_vars) {
        fail("row " + std::to_string(i) + " references var " + std::to_string(e.col));
        continue;
      }
      if (e.col <= prev)
        fail("row " + std::to_string(i) + " has out-of-order or duplicate column " +
             std::to_string(e.col));
      prev = e.col;
      if (!std::isfinite(e.coef))
        fail("row " + std::to_string(i) + " has non-finite coefficient");
    }
    if (i < inst.rhs.size() && !std::isfinite(inst.rhs[i]))
      fail("row " + std::to_string(i) + " has non-finite rhs");
  }
  return errs;
}

LpProblem relax(std::shared_ptr<const MilpInstance> inst,
                const std::vector<VarDomainPatch>& patches) {
  if (!inst) throw std::invalid_argument("relax: null instance");
  LpProblem lp;
  lp.lower = inst->lower;
  lp.upper = inst->upper;
  lp.inst = std::move(inst);
  for (const auto& p : patches) {
    if (p.var < 0 || p.var >= lp.num_vars())
      throw std::invalid_argument("patch references var " + std::to_string(p.var));
    lp.lower[p.var] = std::max(lp.lower[p.var], p.new_lower);
    lp.upper[p.var] = std::min(lp.upper[p.var], p.new_upper);
    if (lp.lower[p.var] > lp.upper[p.var]) lp.infeasible_by_bounds = true;
  }
  return lp;
}

}  // namespace limip

#pragma once

#include <cstdint>
#include <vector>

#include "limip/milp.hpp"

namespace limip {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

// Per-column basis state. FixedZero marks a nonbasic free variable held at 0.
enum class VarStatus : uint8_t { AtLower = 0, Basic = 1, AtUpper = 2, FixedZero = 3 };

// Warm-start handle: statuses cover structural columns then row slacks.
struct Basis {
  std::vector<VarStatus> status;  // length num_vars + num_rows
  std::vector<int> basic;         // length num_rows, column index per basis slot

  bool empty() const { return basic.empty(); }
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;              // structural values
  double objective = 0;
  std::vector<double> duals;          // per row; <= 0 at optimality for <= rows
  std::vector<double> reduced_costs;  // structural: c_j - y'A_j
  std::vector<VarStatus> basis_status;  // structural columns only
  std::vector<uint8_t> row_tight;     // slack within kFeasTol of zero
  int iterations = 0;
  Basis basis;                        // full handle for warm starts
};

// Dual objective under the bounded-variable convention; finite-bound terms
// only, reduced costs within kOptTol of zero treated as zero. Used by the
// weak-duality checks.
double dual_objective(const LpProblem& lp, const LpSolution& sol);

// Two-phase primal simplex on min c'x, Ax + s = b, l <= x <= u, s >= 0.
// Dantzig pricing with a Bland fallback after 1000 degenerate pivots; dense LU
// of the basis refactorized every 100 pivots; iteration cap 50*(n+m).
LpSolution solve_lp(const LpProblem& lp, const Basis* warm = nullptr);

// Convenience: solve lp with one extra patch applied, warm-started from the
// parent basis. Warm starts change iteration counts only, never the objective
// beyond roundoff.
LpSolution solve_child(const LpProblem& lp, const VarDomainPatch& patch, const Basis* warm);

}  // namespace limip

#include "limip/features.hpp"

#include <cmath>
#include <stdexcept>

#include "limip/bnb.hpp"

namespace limip {
namespace {

constexpr double kNormGuard = 1e-10;

double row_norm(const MilpInstance& inst, int i) {
  double acc = 0.0;
  for (const auto& e : inst.rows[i]) acc += e.coef * e.coef;
  return std::sqrt(acc);
}

double obj_norm(const MilpInstance& inst) {
  double acc = 0.0;
  for (double c : inst.obj) acc += c * c;
  return std::sqrt(acc);
}

}  // namespace

void NodeStats::after_node_lp(const LpProblem& lp, const LpSolution& sol) {
  ++total_lp;
  for (int i = 0; i < lp.num_rows(); ++i)
    row_age[i] = sol.row_tight[i] ? 0 : row_age[i] + 1;
  for (int j = 0; j < lp.num_vars(); ++j) {
    bool at_bound = std::abs(sol.x[j] - lp.lower[j]) <= kFeasTol ||
                    std::abs(sol.x[j] - lp.upper[j]) <= kFeasTol;
    var_age[j] = at_bound ? var_age[j] + 1 : 0;
  }
}

void NodeStats::on_incumbent(const std::vector<double>& x) {
  has_incumbent = true;
  inc_best = x;
  ++inc_count;
  for (size_t j = 0; j < x.size(); ++j) inc_sum[j] += x[j];
}

BranchState featurize(const LpProblem& lp, const LpSolution& sol, const NodeStats& stats) {
  if (sol.status != LpStatus::Optimal)
    throw std::invalid_argument("featurize requires an optimally solved node LP");
  const MilpInstance& inst = *lp.inst;
  const int n = inst.num_vars;
  const int m = inst.num_rows();

  BranchState st;
  st.num_vars = n;
  st.num_cons = m;
  st.var_feats.assign(static_cast<size_t>(n) * kVarFeatDim, 0.0);
  st.con_feats.assign(static_cast<size_t>(m) * kConFeatDim, 0.0);

  const double cnorm = obj_norm(inst);
  const double age_div = stats.total_lp + 5.0;

  for (int j = 0; j < n; ++j) {
    bool integral = j < inst.num_int;
    bool binary = integral && lp.lower[j] == 0.0 && lp.upper[j] == 1.0;
    st.vf(j, binary ? VF_TYPE_BINARY : (integral ? VF_TYPE_INTEGER : VF_TYPE_CONTINUOUS)) = 1.0;
    st.vf(j, VF_OBJ_COEF) = inst.obj[j] / (cnorm + kNormGuard);
    bool has_lb = lp.lower[j] > -kInf;
    bool has_ub = lp.upper[j] < kInf;
    st.vf(j, VF_HAS_LB) = has_lb ? 1.0 : 0.0;
    st.vf(j, VF_HAS_UB) = has_ub ? 1.0 : 0.0;
    st.vf(j, VF_AT_LB) = has_lb && std::abs(sol.x[j] - lp.lower[j]) <= kFeasTol ? 1.0 : 0.0;
    st.vf(j, VF_AT_UB) = has_ub && std::abs(sol.x[j] - lp.upper[j]) <= kFeasTol ? 1.0 : 0.0;
    if (integral) st.vf(j, VF_FRAC) = sol.x[j] - std::floor(sol.x[j]);
    switch (sol.basis_status[j]) {
      case VarStatus::AtLower: st.vf(j, VF_BASIS_LOWER) = 1.0; break;
      case VarStatus::Basic: st.vf(j, VF_BASIS_BASIC) = 1.0; break;
      case VarStatus::AtUpper: st.vf(j, VF_BASIS_UPPER) = 1.0; break;
      case VarStatus::FixedZero: st.vf(j, VF_BASIS_ZERO) = 1.0; break;
    }
    st.vf(j, VF_REDUCED_COST) = sol.reduced_costs[j] / (cnorm + kNormGuard);
    st.vf(j, VF_AGE) = stats.var_age[j] / age_div;
    st.vf(j, VF_SOL_VAL) = sol.x[j];
    if (stats.has_incumbent) {
      st.vf(j, VF_INC_VAL) = stats.inc_best[j];
      st.vf(j, VF_AVG_INC_VAL) = stats.inc_sum[j] / stats.inc_count;
    }
  }

  for (int i = 0; i < m; ++i) {
    double rnorm = row_norm(inst, i);
    double dotc = 0.0;
    for (const auto& e : inst.rows[i]) dotc += e.coef * inst.obj[e.col];
    st.cf(i, CF_OBJ_COS_SIM) = dotc / (rnorm * cnorm + kNormGuard);
    st.cf(i, CF_BIAS) = inst.rhs[i] / (rnorm + kNormGuard);
    st.cf(i, CF_DUAL) = sol.duals[i] / (rnorm * cnorm + 1.0);
    st.cf(i, CF_IS_TIGHT) = sol.row_tight[i] ? 1.0 : 0.0;
    st.cf(i, CF_AGE) = stats.row_age[i] / age_div;
    for (const auto& e : inst.rows[i])
      st.edges.push_back({i, e.col, e.coef / (rnorm + kNormGuard)});
  }

  st.cand_mask.assign(n, 0);
  for (int j : fractional_candidates(inst, sol)) st.cand_mask[j] = 1;
  return st;
}

BatchedState batch(const std::vector<const BranchState*>& states) {
  BatchedState out;
  int voff = 0, coff = 0;
  for (const BranchState* s : states) {
    out.graphs.push_back({voff, coff, s->num_vars, s->num_cons});
    out.merged.var_feats.insert(out.merged.var_feats.end(), s->var_feats.begin(),
                                s->var_feats.end());
    out.merged.con_feats.insert(out.merged.con_feats.end(), s->con_feats.begin(),
                                s->con_feats.end());
    for (const auto& e : s->edges)
      out.merged.edges.push_back({e.con + coff, e.var + voff, e.feat});
    out.merged.cand_mask.insert(out.merged.cand_mask.end(), s->cand_mask.begin(),
                                s->cand_mask.end());
    voff += s->num_vars;
    coff += s->num_cons;
  }
  out.merged.num_vars = voff;
  out.merged.num_cons = coff;
  return out;
}

}  // namespace limip

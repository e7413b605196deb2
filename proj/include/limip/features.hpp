#pragma once

#include <cstdint>
#include <vector>

#include "limip/simplex.hpp"

namespace limip {

inline constexpr int kVarFeatDim = 19;
inline constexpr int kConFeatDim = 5;

// Variable feature columns, in storage order.
enum VarFeat {
  VF_TYPE_BINARY = 0,
  VF_TYPE_INTEGER,
  VF_TYPE_IMPLINT,  // reserved; this pipeline never marks implied integers
  VF_TYPE_CONTINUOUS,
  VF_OBJ_COEF,
  VF_HAS_LB,
  VF_HAS_UB,
  VF_AT_LB,
  VF_AT_UB,
  VF_FRAC,
  VF_BASIS_LOWER,
  VF_BASIS_BASIC,
  VF_BASIS_UPPER,
  VF_BASIS_ZERO,
  VF_REDUCED_COST,
  VF_AGE,
  VF_SOL_VAL,
  VF_INC_VAL,
  VF_AVG_INC_VAL,
};

enum ConFeat {
  CF_OBJ_COS_SIM = 0,
  CF_BIAS,
  CF_DUAL,
  CF_IS_TIGHT,
  CF_AGE,
};

// Bipartite view of one branching node: constraint nodes x variable nodes with
// one normalized coefficient feature per edge.
struct BranchState {
  struct Edge {
    int con;
    int var;
    double feat;
  };

  int num_vars = 0;
  int num_cons = 0;
  std::vector<double> var_feats;  // num_vars x kVarFeatDim, row-major
  std::vector<double> con_feats;  // num_cons x kConFeatDim, row-major
  std::vector<Edge> edges;        // ordered by (con, var)
  std::vector<uint8_t> cand_mask; // per variable

  double& vf(int j, int k) { return var_feats[static_cast<size_t>(j) * kVarFeatDim + k]; }
  double vf(int j, int k) const { return var_feats[static_cast<size_t>(j) * kVarFeatDim + k]; }
  double& cf(int i, int k) { return con_feats[static_cast<size_t>(i) * kConFeatDim + k]; }
  double cf(int i, int k) const { return con_feats[static_cast<size_t>(i) * kConFeatDim + k]; }
};

// Per-instance solver statistics feeding the dynamic features. Ages count
// consecutive node LP solves; speculative lookahead solves do not touch them.
struct NodeStats {
  int total_lp = 0;
  std::vector<int> row_age;
  std::vector<int> var_age;
  bool has_incumbent = false;
  std::vector<double> inc_best;
  std::vector<double> inc_sum;
  int inc_count = 0;

  void init(int num_vars, int num_rows) {
    total_lp = 0;
    row_age.assign(num_rows, 0);
    var_age.assign(num_vars, 0);
    has_incumbent = false;
    inc_best.assign(num_vars, 0.0);
    inc_sum.assign(num_vars, 0.0);
    inc_count = 0;
  }

  // Call once per node relaxation solved to optimality, before featurizing it.
  void after_node_lp(const LpProblem& lp, const LpSolution& sol);
  void on_incumbent(const std::vector<double>& x);
};

// Builds the bipartite state for an optimally solved node LP. Throws
// std::invalid_argument on any other solve status.
BranchState featurize(const LpProblem& lp, const LpSolution& sol, const NodeStats& stats);

// Disjoint union of states with per-graph candidate slices kept separate so
// downstream softmaxes stay per-sample.
struct BatchedState {
  BranchState merged;
  struct Graph {
    int var_off;
    int con_off;
    int num_vars;
    int num_cons;
  };
  std::vector<Graph> graphs;
};

BatchedState batch(const std::vector<const BranchState*>& states);

}  // namespace limip

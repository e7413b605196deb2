#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "limip/features.hpp"
#include "limip/rng.hpp"
#include "limip/simplex.hpp"

namespace limip {

// Lookahead scoring constants: infeasible children count as a gain of kSbBig,
// and per-side gains are floored at kSbEps before multiplying.
inline constexpr double kSbBig = 1e9;
inline constexpr double kSbEps = 1e-6;
inline constexpr double kPruneTol = 1e-9;

// Integral variables whose LP value is fractional beyond kIntTol, ascending.
std::vector<int> fractional_candidates(const MilpInstance& inst, const LpSolution& sol);

struct SbResult {
  std::vector<double> scores;  // aligned with the candidate list
  std::vector<double> down_gain;
  std::vector<double> up_gain;
  int best = -1;               // index into the candidate list, lowest on ties
  int lp_solves = 0;
  int stalled_children = 0;
};

// Full lookahead branching: solves both child LPs per candidate, warm-started
// from the node basis, and scores by the product of floored objective gains.
SbResult strong_branch(const LpProblem& lp, const LpSolution& sol,
                       const std::vector<int>& cands, const Basis* warm);

struct BranchContext {
  const LpProblem& lp;
  const LpSolution& sol;
  const std::vector<int>& cands;
  const NodeStats& stats;
  int depth = 0;
  long* lp_counter = nullptr;  // policies add their lookahead solves here
};

class BranchingPolicy {
 public:
  virtual ~BranchingPolicy() = default;
  // Returns an index into ctx.cands.
  virtual int choose(const BranchContext& ctx) = 0;
  virtual const char* name() const = 0;
  // Set when a collection quota is filled; the search stops early.
  virtual bool want_stop() const { return false; }
};

class StrongBranchPolicy : public BranchingPolicy {
 public:
  int choose(const BranchContext& ctx) override;
  const char* name() const override { return "strong"; }
};

class MostFractionalPolicy : public BranchingPolicy {
 public:
  int choose(const BranchContext& ctx) override;
  const char* name() const override { return "most_fractional"; }
};

class RandomPolicy : public BranchingPolicy {
 public:
  explicit RandomPolicy(uint64_t seed) : rng_(seed) {}
  int choose(const BranchContext& ctx) override;
  const char* name() const override { return "random"; }

 private:
  Rng rng_;
};

enum class MipStatus { Optimal, Infeasible, Limit };

struct BnbLimits {
  long node_cap = 0;       // 0 = unlimited
  double wall_cap_s = 0;   // 0 = unlimited
  uint64_t seed = 0;       // tie-breaking stream for equal-bound nodes
};

// Optional introspection for property tests.
struct BnbAudit {
  struct Prune {
    double node_bound;
    double incumbent;
    int reason;  // 0 bound, 1 infeasible, 2 integral
  };
  std::vector<Prune> prunes;
  std::vector<std::pair<double, double>> pops;  // (popped bound, min open bound)
};

struct SolveReport {
  MipStatus status = MipStatus::Infeasible;
  double objective = kInf;       // incumbent value; +inf when none found
  std::vector<double> incumbent; // empty when none
  long node_count = 0;           // nodes whose relaxation was solved
  long lp_count = 0;             // includes lookahead child solves
  double gap = kInf;
  double wall_s = 0;
};

SolveReport solve_mip(std::shared_ptr<const MilpInstance> inst, BranchingPolicy& policy,
                      const BnbLimits& limits = {}, BnbAudit* audit = nullptr);

// One expert decision captured during collection.
struct BranchSample {
  BranchState state;
  std::vector<int> cands;   // variable indices, ascending
  int action = 0;           // expert argmax, index into cands
  int instance_id = 0;
  std::string instance_name;
  int depth = 0;
};

struct CollectConfig {
  int quota = 0;
  double explore_prob = 0.05;
  uint64_t seed = 0;
  BnbLimits limits;  // per-instance search limits during collection
};

// Runs the lookahead expert over the instances in order, recording one sample
// per expert query until the quota is filled. The expert label is recorded
// even when an exploration step takes a different branch.
std::vector<BranchSample> collect_samples(
    const std::vector<std::shared_ptr<const MilpInstance>>& insts, const CollectConfig& cfg);

// Compact JSON encoding of one featurized state, shared by the sample files
// and the replay-buffer checkpoint.
nlohmann::json branch_state_to_json(const BranchState& st);
BranchState branch_state_from_json(const nlohmann::json& j);

// Versioned sample-set round trip (JSON lines).
std::string samples_to_text(const std::vector<BranchSample>& samples);
std::vector<BranchSample> samples_from_text(const std::string& text);
void write_samples(const std::vector<BranchSample>& samples, const std::string& path);
std::vector<BranchSample> read_samples(const std::string& path);

}  // namespace limip

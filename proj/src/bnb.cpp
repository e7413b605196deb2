#include "limip/bnb.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace limip {

using json = nlohmann::json;

std::vector<int> fractional_candidates(const MilpInstance& inst, const LpSolution& sol) {
  std::vector<int> out;
  for (int j = 0; j < inst.num_int; ++j) {
    double f = sol.x[j] - std::floor(sol.x[j]);
    if (std::min(f, 1.0 - f) > kIntTol) out.push_back(j);
  }
  return out;
}

SbResult strong_branch(const LpProblem& lp, const LpSolution& sol,
                       const std::vector<int>& cands, const Basis* warm) {
  SbResult res;
  res.scores.reserve(cands.size());
  double best_score = -kInf;
  for (size_t k = 0; k < cands.size(); ++k) {
    int j = cands[k];
    double x = sol.x[j];
    auto gain = [&](const LpSolution& child) {
      switch (child.status) {
        case LpStatus::Optimal:
          return child.objective - sol.objective;
        case LpStatus::Infeasible:
          return kSbBig;
        default:
          ++res.stalled_children;
          return 0.0;
      }
    };
    LpSolution down = solve_child(lp, {j, -kInf, std::floor(x)}, warm);
    LpSolution up = solve_child(lp, {j, std::ceil(x), kInf}, warm);
    res.lp_solves += 2;
    double dg = gain(down);
    double ug = gain(up);
    double score = std::max(dg, kSbEps) * std::max(ug, kSbEps);
    res.down_gain.push_back(dg);
    res.up_gain.push_back(ug);
    res.scores.push_back(score);
    if (score > best_score) {
      best_score = score;
      res.best = static_cast<int>(k);
    }
  }
  return res;
}

int StrongBranchPolicy::choose(const BranchContext& ctx) {
  SbResult sb = strong_branch(ctx.lp, ctx.sol, ctx.cands, &ctx.sol.basis);
  if (ctx.lp_counter) *ctx.lp_counter += sb.lp_solves;
  return sb.best;
}

int MostFractionalPolicy::choose(const BranchContext& ctx) {
  int best = 0;
  double best_frac = -1.0;
  for (size_t k = 0; k < ctx.cands.size(); ++k) {
    double x = ctx.sol.x[ctx.cands[k]];
    double f = x - std::floor(x);
    double frac = std::min(f, 1.0 - f);
    if (frac > best_frac) {
      best_frac = frac;
      best = static_cast<int>(k);
    }
  }
  return best;
}

int RandomPolicy::choose(const BranchContext& ctx) {
  return static_cast<int>(rng_.below(ctx.cands.size()));
}

namespace {

struct OpenNode {
  double bound;
  int depth;
  uint64_t tie;
  long seq;
  std::vector<VarDomainPatch> patches;
  Basis basis;
};

struct NodeKey {
  double bound;
  int depth;
  uint64_t tie;
  long seq;
  // Minimum lower bound first; among equal bounds the deeper node wins.
  bool operator<(const NodeKey& o) const {
    if (bound != o.bound) return bound < o.bound;
    if (depth != o.depth) return depth > o.depth;
    if (tie != o.tie) return tie < o.tie;
    return seq < o.seq;
  }
};

}  // namespace

SolveReport solve_mip(std::shared_ptr<const MilpInstance> inst, BranchingPolicy& policy,
                      const BnbLimits& limits, BnbAudit* audit) {
  auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  Rng tie_rng = derive_rng(limits.seed, "bnb.tie");
  NodeStats stats;
  stats.init(inst->num_vars, inst->num_rows());

  std::vector<OpenNode> storage;
  std::set<std::pair<NodeKey, size_t>> open;
  long seq = 0;
  auto push = [&](double bound, int depth, std::vector<VarDomainPatch> patches, Basis basis) {
    NodeKey key{bound, depth, tie_rng.next(), seq};
    storage.push_back({bound, depth, key.tie, seq, std::move(patches), std::move(basis)});
    open.insert({key, storage.size() - 1});
    ++seq;
  };
  push(-kInf, 0, {}, Basis{});

  double incumbent_obj = kInf;
  std::vector<double> incumbent;
  int iter_limited_nodes = 0;
  MipStatus status = MipStatus::Limit;
  bool limit_hit = false;

  while (!open.empty()) {
    if (limits.node_cap > 0 && rep.node_count >= limits.node_cap) {
      limit_hit = true;
      break;
    }
    if (limits.wall_cap_s > 0) {
      double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (el > limits.wall_cap_s) {
        limit_hit = true;
        break;
      }
    }
    auto it = open.begin();
    if (audit) audit->pops.push_back({it->first.bound, it->first.bound});
    OpenNode node = std::move(storage[it->second]);
    open.erase(it);

    if (node.bound >= incumbent_obj - kPruneTol) {
      if (audit) audit->prunes.push_back({node.bound, incumbent_obj, 0});
      continue;
    }
    LpProblem lp = relax(inst, node.patches);
    LpSolution sol = solve_lp(lp, node.basis.empty() ? nullptr : &node.basis);
    ++rep.node_count;
    ++rep.lp_count;
    if (sol.status == LpStatus::Infeasible) {
      if (audit) audit->prunes.push_back({kInf, incumbent_obj, 1});
      continue;
    }
    if (sol.status == LpStatus::Unbounded)
      throw std::runtime_error("unbounded relaxation: instance violates bounded-domain contract");
    if (sol.status == LpStatus::IterLimit) {
      // Cannot trust the bound; drop the node and record the stall.
      ++iter_limited_nodes;
      continue;
    }
    if (sol.objective >= incumbent_obj - kPruneTol) {
      if (audit) audit->prunes.push_back({sol.objective, incumbent_obj, 0});
      continue;
    }
    stats.after_node_lp(lp, sol);
    std::vector<int> cands = fractional_candidates(*inst, sol);
    if (cands.empty()) {
      std::vector<double> x = sol.x;
      for (int j = 0; j < inst->num_int; ++j) x[j] = std::round(x[j]);
      double obj = 0.0;
      for (int j = 0; j < inst->num_vars; ++j) obj += inst->obj[j] * x[j];
      if (obj < incumbent_obj - kPruneTol) {
        incumbent_obj = obj;
        incumbent = x;
        stats.on_incumbent(x);
      }
      if (audit) audit->prunes.push_back({sol.objective, incumbent_obj, 2});
      continue;
    }
    BranchContext ctx{lp, sol, cands, stats, node.depth, &rep.lp_count};
    int choice = policy.choose(ctx);
    if (policy.want_stop()) {
      limit_hit = true;
      break;
    }
    if (choice < 0 || choice >= static_cast<int>(cands.size()))
      throw std::logic_error("branching policy returned an out-of-range candidate");
    int var = cands[choice];
    double x = sol.x[var];
    auto floor_patches = node.patches;
    floor_patches.push_back({var, -kInf, std::floor(x)});
    push(sol.objective, node.depth + 1, std::move(floor_patches), sol.basis);
    auto ceil_patches = node.patches;
    ceil_patches.push_back({var, std::ceil(x), kInf});
    push(sol.objective, node.depth + 1, std::move(ceil_patches), sol.basis);
  }

  if (!limit_hit) {
    status = incumbent.empty() ? MipStatus::Infeasible : MipStatus::Optimal;
  }
  rep.status = limit_hit ? MipStatus::Limit : status;
  rep.objective = incumbent.empty() ? kInf : incumbent_obj;
  rep.incumbent = incumbent;
  if (rep.status == MipStatus::Optimal) {
    rep.gap = 0.0;
  } else if (incumbent.empty()) {
    rep.gap = kInf;
  } else {
    double lo = incumbent_obj;
    if (!open.empty()) lo = std::min(lo, open.begin()->first.bound);
    rep.gap = (incumbent_obj - lo) / std::max(1e-9, std::abs(incumbent_obj));
  }
  rep.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  (void)iter_limited_nodes;
  return rep;
}

namespace {

// Lookahead expert plus epsilon exploration; fills the shared sample vector.
class CollectPolicy : public BranchingPolicy {
 public:
  CollectPolicy(std::vector<BranchSample>& out, const CollectConfig& cfg)
      : out_(out), cfg_(cfg), explore_rng_(0) {}

  void begin_instance(int iid, std::string name) {
    iid_ = iid;
    name_ = std::move(name);
    explore_rng_ = derive_rng(cfg_.seed, "collect.explore", static_cast<uint64_t>(iid));
  }

  int choose(const BranchContext& ctx) override {
    SbResult sb = strong_branch(ctx.lp, ctx.sol, ctx.cands, &ctx.sol.basis);
    if (ctx.lp_counter) *ctx.lp_counter += sb.lp_solves;
    BranchSample s;
    s.state = featurize(ctx.lp, ctx.sol, ctx.stats);
    s.cands = ctx.cands;
    s.action = sb.best;
    s.instance_id = iid_;
    s.instance_name = name_;
    s.depth = ctx.depth;
    out_.push_back(std::move(s));
    if (static_cast<int>(out_.size()) >= cfg_.quota) stop_ = true;
    double roll = explore_rng_.uniform();
    if (roll < cfg_.explore_prob)
      return static_cast<int>(explore_rng_.below(ctx.cands.size()));
    return sb.best;
  }

  bool want_stop() const override { return stop_; }
  const char* name() const override { return "collect"; }

 private:
  std::vector<BranchSample>& out_;
  const CollectConfig& cfg_;
  Rng explore_rng_;
  int iid_ = 0;
  std::string name_;
  bool stop_ = false;
};

}  // namespace

std::vector<BranchSample> collect_samples(
    const std::vector<std::shared_ptr<const MilpInstance>>& insts, const CollectConfig& cfg) {
  if (cfg.quota <= 0) return {};
  std::vector<BranchSample> out;
  CollectPolicy policy(out, cfg);
  for (size_t idx = 0; idx < insts.size(); ++idx) {
    policy.begin_instance(static_cast<int>(idx), insts[idx]->name);
    BnbLimits lim = cfg.limits;
    lim.seed = mix_seed(cfg.seed, "collect.bnb", idx);
    solve_mip(insts[idx], policy, lim);
    if (static_cast<int>(out.size()) >= cfg.quota) break;
  }
  return out;
}

json branch_state_to_json(const BranchState& st) {
  json e = json::array();
  for (const auto& ed : st.edges) e.push_back({ed.con, ed.var, ed.feat});
  return json{{"nv", st.num_vars},
              {"nc", st.num_cons},
              {"v", st.var_feats},
              {"c", st.con_feats},
              {"e", std::move(e)},
              {"mask", st.cand_mask}};
}

BranchState branch_state_from_json(const json& j) {
  BranchState st;
  st.num_vars = j.at("nv").get<int>();
  st.num_cons = j.at("nc").get<int>();
  st.var_feats = j.at("v").get<std::vector<double>>();
  st.con_feats = j.at("c").get<std::vector<double>>();
  for (const auto& ed : j.at("e"))
    st.edges.push_back({ed.at(0).get<int>(), ed.at(1).get<int>(), ed.at(2).get<double>()});
  st.cand_mask = j.at("mask").get<std::vector<uint8_t>>();
  if (st.var_feats.size() != static_cast<size_t>(st.num_vars) * kVarFeatDim ||
      st.con_feats.size() != static_cast<size_t>(st.num_cons) * kConFeatDim)
    throw std::runtime_error("sample state has inconsistent feature shapes");
  return st;
}

std::string samples_to_text(const std::vector<BranchSample>& samples) {
  std::string out;
  json hdr{{"format", "limip-samples"}, {"version", 1}, {"vdim", kVarFeatDim}, {"cdim", kConFeatDim}};
  out += hdr.dump();
  out += '\n';
  for (const auto& s : samples) {
    json j{{"iid", s.instance_id}, {"name", s.instance_name}, {"depth", s.depth},
           {"cands", s.cands},     {"action", s.action},      {"state", branch_state_to_json(s.state)}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<BranchSample> samples_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("sample set: empty input");
  json hdr = json::parse(line);
  if (hdr.at("format") != "limip-samples")
    throw std::runtime_error("sample set: unrecognized format tag");
  if (hdr.at("version").get<int>() != 1)
    throw std::runtime_error("sample set: unsupported version");
  if (hdr.at("vdim").get<int>() != kVarFeatDim || hdr.at("cdim").get<int>() != kConFeatDim)
    throw std::runtime_error("sample set: feature layout mismatch");
  std::vector<BranchSample> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    BranchSample s;
    s.instance_id = j.at("iid").get<int>();
    s.instance_name = j.at("name").get<std::string>();
    s.depth = j.at("depth").get<int>();
    s.cands = j.at("cands").get<std::vector<int>>();
    s.action = j.at("action").get<int>();
    s.state = branch_state_from_json(j.at("state"));
    if (s.action < 0 || s.action >= static_cast<int>(s.cands.size()))
      throw std::runtime_error("sample set: action outside candidate list");
    out.push_back(std::move(s));
  }
  return out;
}

void write_samples(const std::vector<BranchSample>& samples, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << samples_to_text(samples);
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<BranchSample> read_samples(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return samples_from_text(ss.str());
}

}  // namespace limip

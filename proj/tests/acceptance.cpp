// Qualification harness. Runs ten numbered end-to-end checks against the
// library, prints one PASS/FAIL line per check with the measured values and
// the pinned tolerance, and exits nonzero when any check fails. Every check
// uses fixed seeds, so reruns are bit-reproducible; the slow checks (5, 10)
// retrain networks and dominate the runtime.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "limip/config.hpp"
#include "limip/experiment.hpp"

using namespace limip;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_passed = 0;
int g_failed = 0;

double secs_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, bool pass, const char* fmt, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, fmt);
  vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  std::printf("[%2d] %s  %s\n", id, pass ? "PASS" : "FAIL", buf);
  std::fflush(stdout);
  (pass ? g_passed : g_failed) += 1;
}

// A solved root relaxation with its fractional candidates and features.
struct RootNode {
  std::shared_ptr<const MilpInstance> inst;
  LpProblem lp;
  LpSolution sol;
  std::vector<int> cands;
  BranchState state;
};

bool root_node(uint64_t seed, int rows, int cols, double density, int min_cands,
               RootNode* out) {
  TaskSpec sc;
  sc.family = Family::SetCover;
  sc.seed = seed;
  sc.sc_rows = rows;
  sc.sc_cols = cols;
  sc.sc_density = density;
  auto inst = std::make_shared<MilpInstance>(gen_instance(sc, 0));
  LpProblem lp = relax(inst, {});
  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) return false;
  std::vector<int> cands = fractional_candidates(*inst, sol);
  if (static_cast<int>(cands.size()) < min_cands) return false;
  NodeStats stats;
  stats.init(inst->num_vars, inst->num_rows());
  stats.after_node_lp(lp, sol);
  out->inst = inst;
  out->lp = lp;
  out->sol = sol;
  out->cands = std::move(cands);
  out->state = featurize(lp, sol, stats);
  return true;
}

std::vector<RootNode> gather_nodes(int count, int rows, int cols, double density,
                                   int min_cands) {
  std::vector<RootNode> out;
  for (uint64_t s = 1; s < 2000 && static_cast<int>(out.size()) < count; ++s) {
    RootNode nd;
    if (root_node(s, rows, cols, density, min_cands, &nd)) out.push_back(std::move(nd));
  }
  return out;
}

// Expert samples from a pool of tiny covers; most roots are integral, so the
// pool is generous and collection stops at the quota.
std::vector<BranchSample> tiny_collect(uint64_t seed, int quota, double density) {
  std::vector<std::shared_ptr<const MilpInstance>> insts;
  for (int k = 0; k < 1200; ++k) {
    TaskSpec sc;
    sc.family = Family::SetCover;
    sc.seed = seed + static_cast<uint64_t>(k);
    sc.sc_rows = 6;
    sc.sc_cols = 8;
    sc.sc_density = density;
    insts.push_back(std::make_shared<MilpInstance>(gen_instance(sc, k)));
  }
  CollectConfig cc;
  cc.quota = quota;
  cc.seed = seed;
  cc.explore_prob = 0.1;
  return collect_samples(insts, cc);
}

double median3(double a, double b, double c) {
  std::vector<double> v{a, b, c};
  std::sort(v.begin(), v.end());
  return v[1];
}

// The three-task drift sequence used by checks 5 and 10, with every training
// and evaluation knob pinned.
ExperimentConfig drift_config(uint64_t seed, Strategy strat, const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.tasks = desk_sequence(Family::SetCover);
  cfg.gat = {32, 2};
  cfg.lifelong.strategy = strat;
  cfg.lifelong.max_epochs = 60;
  cfg.lifelong.patience = 20;
  cfg.samples_per_task = 800;
  cfg.eval_instances = 16;
  cfg.eval_seeds = 2;
  cfg.eval_node_cap = 2000;
  cfg.collect_node_cap = 400;
  cfg.seed = seed;
  cfg.out_dir = out_dir;
  return cfg;
}

struct DriftRun {
  ExperimentConfig cfg;
  RunResult res;
  double increase = 0.0;  // first-task geomean growth, final over post-task-0
};

bool run_drift(uint64_t seed, Strategy strat, const std::string& out_dir, DriftRun* out) {
  out->cfg = drift_config(seed, strat, out_dir);
  out->res = run_experiment(out->cfg);
  const auto& cells = out->res.matrix.cells;
  if (cells.size() != 3 || cells[0].empty() || cells[0][0].geo_nodes <= 0) return false;
  out->increase = cells[2][0].geo_nodes / cells[0][0].geo_nodes - 1.0;
  return true;
}

bool matrices_identical(const RunResult& a, const RunResult& b, std::string* why) {
  if (a.matrix.row_names != b.matrix.row_names || a.matrix.col_names != b.matrix.col_names) {
    *why = "row/col names differ";
    return false;
  }
  for (size_t r = 0; r < a.matrix.cells.size(); ++r)
    for (size_t c = 0; c < a.matrix.cells[r].size(); ++c) {
      const EvalCell& x = a.matrix.cells[r][c];
      const EvalCell& y = b.matrix.cells[r][c];
      if (x.geo_nodes != y.geo_nodes || x.cap_hits != y.cap_hits ||
          x.node_std_pct != y.node_std_pct) {
        *why = "cell (" + std::to_string(r) + "," + std::to_string(c) + ") differs";
        return false;
      }
    }
  if (a.node_runs != b.node_runs) {
    *why = "per-run node counts differ";
    return false;
  }
  return true;
}

}  // namespace

int main() {
  auto t_all = Clock::now();
  fs::remove_all("acc_tmp");
  fs::create_directories("acc_tmp");

  // Shared across checks: 1 feeds 6, 4 feeds 9, 5 feeds 9 and 10.
  std::vector<RootNode> grad_nodes;
  std::vector<BranchSample> signal_data;
  std::vector<std::shared_ptr<const MilpInstance>> signal_insts;
  EvalCell signal_attention{};
  bool signal_ok = false;
  std::vector<DriftRun> drift_runs;  // ft 301,302,303 then limip 301,302,303
  bool drift_ok = false;

  // 1. Analytic gradient against central finite differences on 10 states
  //    (8 variables, 6 constraints, hidden 8, 2 heads), max relative error
  //    below 1e-4 in under 5 seconds.
  try {
    auto t0 = Clock::now();
    grad_nodes = gather_nodes(10, 6, 8, 0.3, 1);
    GatParams params = init_params({8, 2}, 4242);
    double worst = 0;
    for (size_t si = 0; si < grad_nodes.size(); ++si) {
      const RootNode& nd = grad_nodes[si];
      ForwardTrace tr;
      std::vector<double> logits = gat_forward(params, nd.state, EncoderMode::Attention, &tr);
      Rng wr(mix_seed(4242, "w", si));
      std::vector<double> w(logits.size());
      for (double& v : w) v = wr.uniform(-1.0, 1.0);
      std::vector<double> an = gat_backward(params, tr, w);
      GatParams probe = params;
      const double eps = 1e-5;
      for (size_t i = 0; i < params.flat.size(); ++i) {
        double keep = probe.flat[i];
        probe.flat[i] = keep + eps;
        std::vector<double> lu = gat_forward(probe, nd.state, EncoderMode::Attention, nullptr);
        probe.flat[i] = keep - eps;
        std::vector<double> ld = gat_forward(probe, nd.state, EncoderMode::Attention, nullptr);
        probe.flat[i] = keep;
        double up = 0, dn = 0;
        for (size_t c = 0; c < w.size(); ++c) {
          up += w[c] * lu[c];
          dn += w[c] * ld[c];
        }
        double fd = (up - dn) / (2 * eps);
        double rel = std::abs(fd - an[i]) / std::max(1e-2, std::abs(fd) + std::abs(an[i]));
        worst = std::max(worst, rel);
      }
    }
    double dt = secs_since(t0);
    bool pass = grad_nodes.size() == 10 && worst < 1e-4 && dt < 5.0;
    report(1, pass, "gradient check: %zu states, %zu params, max rel err %.2e (<1e-4), %.2fs (<5s)",
           grad_nodes.size(), params.flat.size(), worst, dt);
  } catch (const std::exception& e) {
    report(1, false, "gradient check threw: %s", e.what());
  }

  // 2. Tree search equals exhaustive 0/1 enumeration on 50 tiny instances per
  //    family, exactly, under all four branching policies.
  try {
    auto t0 = Clock::now();
    int mismatches = 0, checked = 0, oversized = 0;
    GatParams net = init_params({8, 2}, 7);
    for (int fam = 0; fam < 3; ++fam) {
      for (int k = 0; k < 50; ++k) {
        TaskSpec spec;
        if (fam == 0) {
          spec.family = Family::SetCover;
          spec.seed = 900 + static_cast<uint64_t>(k);
          spec.sc_rows = 5;
          spec.sc_cols = 8;
          spec.sc_density = 0.3;
        } else if (fam == 1) {
          spec.family = Family::IndepSet;
          spec.seed = 1900 + static_cast<uint64_t>(k);
          spec.is_affinity = 2;
          spec.is_size = 8;
        } else {
          spec.family = Family::FacilityLoc;
          spec.seed = 2900 + static_cast<uint64_t>(k);
          spec.fc_customers = 3;
          spec.fc_facilities = 2;
          spec.fc_cap_lo = 10;
          spec.fc_cap_hi = 14;
          spec.fc_dem_lo = 2;
          spec.fc_dem_hi = 5;
        }
        auto inst = std::make_shared<MilpInstance>(gen_instance(spec, k));
        if (inst->num_vars > 12 || inst->num_int != inst->num_vars) {
          ++oversized;
          continue;
        }
        const int n = inst->num_vars;
        double best = kInf;
        bool feas = false;
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
          bool ok = true;
          for (int i = 0; i < inst->num_rows() && ok; ++i) {
            double ax = 0;
            for (const auto& e : inst->rows[i])
              if (mask & (1u << e.col)) ax += e.coef;
            ok = ax <= inst->rhs[i] + 1e-9;
          }
          if (!ok) continue;
          double obj = 0;
          for (int j = 0; j < n; ++j)
            if (mask & (1u << j)) obj += inst->obj[j];
          if (!feas || obj < best) {
            feas = true;
            best = obj;
          }
        }
        StrongBranchPolicy strong;
        MostFractionalPolicy mf;
        RandomPolicy rnd(555 + static_cast<uint64_t>(k));
        LearnedPolicy learned(net);
        BranchingPolicy* policies[] = {&strong, &mf, &rnd, &learned};
        for (BranchingPolicy* p : policies) {
          SolveReport rep = solve_mip(inst, *p, {});
          ++checked;
          bool same = feas ? (rep.status == MipStatus::Optimal && rep.objective == best)
                           : (rep.status == MipStatus::Infeasible);
          if (!same) ++mismatches;
        }
      }
    }
    bool pass = mismatches == 0 && oversized == 0 && checked == 600;
    report(2, pass,
           "exhaustive agreement: %d policy solves over 150 instances, %d mismatches, "
           "%d oversized, %.1fs",
           checked, mismatches, oversized, secs_since(t0));
  } catch (const std::exception& e) {
    report(2, false, "exhaustive agreement threw: %s", e.what());
  }

  // 3. Lookahead scores reproduced by an independent cold two-LP recomputation
  //    on 20 nodes (gains to 1e-9 absolute, scores to 1e-9 relative), and the
  //    chosen candidate is invariant under positive score scaling.
  try {
    auto t0 = Clock::now();
    std::vector<RootNode> nodes = gather_nodes(20, 8, 12, 0.4, 2);
    double worst_gain = 0, worst_score = 0;
    int argmax_breaks = 0, scored = 0;
    for (const RootNode& nd : nodes) {
      SbResult res = strong_branch(nd.lp, nd.sol, nd.cands, &nd.sol.basis);
      for (size_t i = 0; i < nd.cands.size(); ++i) {
        int j = nd.cands[i];
        double xj = nd.sol.x[j];
        auto gain_for = [&](bool down) {
          LpProblem child = nd.lp;
          if (down)
            child.upper[j] = std::min(child.upper[j], std::floor(xj));
          else
            child.lower[j] = std::max(child.lower[j], std::ceil(xj));
          if (child.lower[j] > child.upper[j]) return kSbBig;
          LpSolution cs = solve_lp(child);
          if (cs.status == LpStatus::Optimal) return cs.objective - nd.sol.objective;
          if (cs.status == LpStatus::Infeasible) return kSbBig;
          return 0.0;
        };
        double dg = gain_for(true);
        double ug = gain_for(false);
        double score = std::max(dg, kSbEps) * std::max(ug, kSbEps);
        worst_gain = std::max(worst_gain, std::abs(dg - res.down_gain[i]));
        worst_gain = std::max(worst_gain, std::abs(ug - res.up_gain[i]));
        double rel = std::abs(score - res.scores[i]) /
                     std::max(1.0, std::max(std::abs(score), std::abs(res.scores[i])));
        worst_score = std::max(worst_score, rel);
        ++scored;
      }
      for (double f : {3.7, 0.004}) {
        int arg = 0;
        for (size_t i = 1; i < res.scores.size(); ++i)
          if (f * res.scores[i] > f * res.scores[arg]) arg = static_cast<int>(i);
        if (arg != res.best) ++argmax_breaks;
      }
    }
    bool pass = nodes.size() == 20 && worst_gain <= 1e-9 && worst_score <= 1e-9 &&
                argmax_breaks == 0;
    report(3, pass,
           "lookahead recheck: %d candidate scores over %zu nodes, worst gain dev %.2e, "
           "worst score rel %.2e (<=1e-9), scaling argmax breaks %d, %.1fs",
           scored, nodes.size(), worst_gain, worst_score, argmax_breaks, secs_since(t0));
  } catch (const std::exception& e) {
    report(3, false, "lookahead recheck threw: %s", e.what());
  }

  // 4. Imitation signal on one cover task (60x80, density 0.2, 2000 samples):
  //    held-out top-1 at least 3x the mean uniform-guess rate, learned-policy
  //    geomean nodes no worse than most-fractional, under 30 minutes.
  try {
    auto t0 = Clock::now();
    ExperimentConfig cfg;
    TaskSpec sc;
    sc.family = Family::SetCover;
    sc.name = "c4";
    sc.sc_rows = 60;
    sc.sc_cols = 80;
    sc.sc_density = 0.2;
    cfg.tasks = {sc};
    cfg.gat = {32, 2};
    cfg.seed = 2024;
    cfg.collect_node_cap = 400;
    cfg.eval_instances = 20;
    cfg.eval_node_cap = 5000;
    signal_data = collect_for_task(cfg, 0, 2000);
    double uniform = 0;
    for (const auto& s : signal_data) uniform += 1.0 / static_cast<double>(s.cands.size());
    uniform /= static_cast<double>(signal_data.size());

    LifelongConfig lc;
    lc.strategy = Strategy::FT;
    lc.max_epochs = 40;
    lc.patience = 6;
    lc.seed = 99;
    GatParams params = init_params(cfg.gat, 7);
    ReplayBuffer buf;
    std::vector<TaskSnapshot> snaps;
    TrainResult tr = train_task(params, signal_data, 0, buf, snaps, lc, nullptr);

    signal_insts = eval_instances_for_task(cfg, 0);
    signal_attention = evaluate_policy(learned_policy_factory(params, lc.mode), signal_insts,
                                       1, cfg.eval_node_cap, 5);
    EvalCell mf = evaluate_policy(named_policy_factory("most_fractional"), signal_insts, 1,
                                  cfg.eval_node_cap, 5);
    double dt = secs_since(t0);
    bool pass = tr.val_top1 >= 3.0 * uniform && signal_attention.geo_nodes <= mf.geo_nodes &&
                dt < 1800.0;
    signal_ok = true;
    report(4, pass,
           "imitation signal: top-1 %.3f vs uniform %.3f (%.1fx, need >=3x), learned geo "
           "%.2f <= most_fractional %.2f, %.0fs (<1800s)",
           tr.val_top1, uniform, tr.val_top1 / uniform, signal_attention.geo_nodes,
           mf.geo_nodes, dt);
  } catch (const std::exception& e) {
    report(4, false, "imitation signal threw: %s", e.what());
  }

  // 5. Sequential drift on the three-task cover sequence with paired seeds:
  //    plain fine-tuning degrades the first task's geomean by at least 20% at
  //    the final checkpoint, and the distillation+anchor strategy holds the
  //    degradation to at most half of that (medians over seeds 301..303).
  try {
    auto t0 = Clock::now();
    const uint64_t seeds[] = {301, 302, 303};
    bool shape_ok = true;
    for (Strategy strat : {Strategy::FT, Strategy::LiMIP})
      for (uint64_t s : seeds) {
        DriftRun run;
        std::string dir = "acc_tmp/c5_" + strategy_name(strat) + "_" + std::to_string(s);
        if (!run_drift(s, strat, dir, &run)) shape_ok = false;
        drift_runs.push_back(std::move(run));
      }
    double ft_med = median3(drift_runs[0].increase, drift_runs[1].increase,
                            drift_runs[2].increase);
    double li_med = median3(drift_runs[3].increase, drift_runs[4].increase,
                            drift_runs[5].increase);
    bool pass = shape_ok && ft_med >= 0.20 && li_med <= 0.5 * ft_med;
    drift_ok = true;
    report(5, pass,
           "forgetting: ft first-task growth {%.1f%%, %.1f%%, %.1f%%} median %.1f%% "
           "(>=20%%), mitigated {%.1f%%, %.1f%%, %.1f%%} median %.1f%% (<=%.1f%%), %.0fs",
           100 * drift_runs[0].increase, 100 * drift_runs[1].increase,
           100 * drift_runs[2].increase, 100 * ft_med, 100 * drift_runs[3].increase,
           100 * drift_runs[4].increase, 100 * drift_runs[5].increase, 100 * li_med,
           100 * 0.5 * ft_med, secs_since(t0));
  } catch (const std::exception& e) {
    report(5, false, "forgetting sequence threw: %s", e.what());
  }

  // 6. Component properties: anchor penalty vanishes at the anchor, the
  //    distillation loss vanishes at matching logits, importances are
  //    nonnegative, attention rows are distributions, reservoir inclusion is
  //    uniform within 3 sigma over 10k trials, and the zero-weight full
  //    strategy reproduces plain fine-tuning bit for bit.
  try {
    auto t0 = Clock::now();
    std::string fails;

    GatParams anchor = init_params({8, 2}, 11);
    std::vector<TaskSnapshot> snaps(1);
    snaps[0].task = 0;
    snaps[0].theta = anchor.flat;
    snaps[0].omega.assign(anchor.flat.size(), 0.5);
    std::vector<double> grad;
    double pen = ewc_penalty(anchor.flat, snaps, &grad);
    double gmax = 0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (pen != 0.0 || gmax != 0.0) fails += " anchor-zero";
    std::vector<double> moved = anchor.flat;
    moved[3] += 0.1;
    if (ewc_penalty(moved, snaps, nullptr) <= 0.0) fails += " anchor-positive";

    if (grad_nodes.empty()) {
      fails += " no-states";
    } else {
      ReplayEntry match;
      match.state = grad_nodes[0].state;
      match.action = 0;
      match.z = gat_forward(anchor, match.state, EncoderMode::Attention, nullptr);
      LossBatch kd = kd_loss(anchor, EncoderMode::Attention, {&match});
      if (std::abs(kd.loss) > 1e-12) fails += " kd-zero";

      std::vector<BranchSample> imp_samples(grad_nodes.size());
      std::vector<const BranchSample*> imp_ptrs;
      for (size_t i = 0; i < grad_nodes.size(); ++i) {
        imp_samples[i].state = grad_nodes[i].state;
        imp_samples[i].cands = grad_nodes[i].cands;
        imp_samples[i].action = 0;
        imp_ptrs.push_back(&imp_samples[i]);
      }
      std::vector<double> omega = compute_importance(anchor, EncoderMode::Attention, imp_ptrs);
      double omin = 0;
      for (double o : omega) omin = std::min(omin, o);
      if (omin < 0.0 || omega.size() != anchor.flat.size()) fails += " importance-negative";

      ForwardTrace tr;
      gat_forward(anchor, grad_nodes[0].state, EncoderMode::Attention, &tr);
      double row_dev = 0;
      for (const auto& head : tr.heads) {
        for (int i = 0; i < tr.m; ++i) {
          double sum = head.a_self[i];
          for (int e : tr.con_edges[i]) sum += head.a_edge[e];
          row_dev = std::max(row_dev, std::abs(sum - 1.0));
        }
        for (int j = 0; j < tr.n; ++j) {
          double sum = head.a2_self[j];
          for (int e : tr.var_edges[j]) sum += head.a2_edge[e];
          row_dev = std::max(row_dev, std::abs(sum - 1.0));
        }
      }
      if (row_dev > 1e-9) fails += " attention-rows";
    }

    const int cap = 20, stream = 100, trials = 10000;
    std::vector<long> hits(stream, 0);
    for (int t = 0; t < trials; ++t) {
      ReplayBuffer rb;
      rb.capacity = cap;
      Rng rng(mix_seed(1, "mc", static_cast<uint64_t>(t)));
      for (int i = 0; i < stream; ++i) {
        ReplayEntry e;
        e.task = i;
        rb.offer(std::move(e), rng);
      }
      for (const auto& e : rb.entries) ++hits[e.task];
    }
    const double expect = trials * static_cast<double>(cap) / stream;
    const double sigma3 = 3.0 * std::sqrt(trials * 0.2 * 0.8);
    long worst_dev = 0;
    for (long h : hits) worst_dev = std::max(worst_dev, std::labs(h - static_cast<long>(expect)));
    if (static_cast<double>(worst_dev) > sigma3) fails += " reservoir-uniformity";

    std::vector<BranchSample> t0_data = tiny_collect(605, 48, 0.3);
    std::vector<BranchSample> t1_data = tiny_collect(606, 48, 0.4);
    GatParams plain = init_params({4, 1}, 50);
    GatParams full = plain;
    ReplayBuffer plain_buf, full_buf;
    std::vector<TaskSnapshot> plain_snaps, full_snaps;
    LifelongConfig plain_cfg, full_cfg;
    plain_cfg.strategy = Strategy::FT;
    full_cfg.strategy = Strategy::LiMIP;
    full_cfg.kd_weight = 0.0;
    full_cfg.ewc_weight = 0.0;
    for (LifelongConfig* c : {&plain_cfg, &full_cfg}) {
      c->batch = 4;
      c->kd_batch = 4;
      c->max_epochs = 5;
      c->patience = 3;
      c->seed = 77;
    }
    bool traj_equal = true;
    for (int task = 0; task < 2; ++task) {
      const auto& data = task == 0 ? t0_data : t1_data;
      TrainResult a = train_task(plain, data, task, plain_buf, plain_snaps, plain_cfg, nullptr);
      TrainResult b = train_task(full, data, task, full_buf, full_snaps, full_cfg, nullptr);
      traj_equal = traj_equal && a.epochs_run == b.epochs_run && a.best_epoch == b.best_epoch &&
                   a.best_val == b.best_val;
    }
    traj_equal = traj_equal && plain.flat == full.flat;
    if (!traj_equal) fails += " zero-weight-equality";

    report(6, fails.empty(),
           "component properties: reservoir worst dev %ld of %.0f (3sigma %.0f)%s%s, %.0fs",
           worst_dev, expect, sigma3, fails.empty() ? ", all properties hold" : ", failed:",
           fails.c_str(), secs_since(t0));
  } catch (const std::exception& e) {
    report(6, false, "component properties threw: %s", e.what());
  }

  // 7. Shipped defaults: distillation weight 1.5, anchor weight 100, buffer
  //    500, 2 heads, hidden 32, Adam at lr 0.001 with the standard betas.
  try {
    ExperimentConfig cfg = experiment_from_table(
        parse_config_text("[experiment]\ntasks_preset = \"sc_desk\"\n"));
    bool pass = cfg.lifelong.kd_weight == 1.5 && cfg.lifelong.ewc_weight == 100.0 &&
                cfg.lifelong.buffer_capacity == 500 && cfg.gat.heads == 2 &&
                cfg.gat.hidden == 32 && cfg.lifelong.adam.lr == 0.001 &&
                cfg.lifelong.adam.beta1 == 0.9 && cfg.lifelong.adam.beta2 == 0.999;
    report(7, pass,
           "defaults: kd %.2f, anchor %.0f, buffer %zu, heads %d, hidden %d, adam lr %.4f "
           "betas (%.1f, %.3f)",
           cfg.lifelong.kd_weight, cfg.lifelong.ewc_weight, cfg.lifelong.buffer_capacity,
           cfg.gat.heads, cfg.gat.hidden, cfg.lifelong.adam.lr, cfg.lifelong.adam.beta1,
           cfg.lifelong.adam.beta2);
  } catch (const std::exception& e) {
    report(7, false, "defaults snapshot threw: %s", e.what());
  }

  // 8. Metric arithmetic against hand-computed fixtures.
  try {
    struct GeoCase {
      std::vector<double> xs;
      double shift, want;
    };
    const GeoCase geo_cases[] = {
        {{1, 7}, 1.0, 3.0},
        {{0, 0, 0}, 1.0, 0.0},
        {{9}, 1.0, 9.0},
        {{2, 4, 8}, 0.0, 4.0},
    };
    double worst = 0;
    for (const auto& g : geo_cases)
      worst = std::max(worst, std::abs(shifted_geomean(g.xs, g.shift) - g.want));
    const double half_cv = 23.570226039551584;  // mean of 100*sqrt(2)/3 and 0
    worst = std::max(worst, std::abs(stdpct({{2, 4}, {6, 6}}) - half_cv));
    worst = std::max(worst, std::abs(stdpct({{1, 2, 3}}) - 50.0));
    worst = std::max(worst, std::abs(stdpct({{5}, {2, 4}}) - half_cv));
    report(8, worst <= 1e-9, "metric fixtures: worst abs dev %.2e (<=1e-9) over 7 cases",
           worst);
  } catch (const std::exception& e) {
    report(8, false, "metric fixtures threw: %s", e.what());
  }

  // 9. Ablation and transfer plumbing: the mean-pool encoder trains and
  //    evaluates on the same task and samples as check 4, and the transfer
  //    protocol runs against a finished sequential run and writes its
  //    reports. Direction notes are informational, not gates.
  try {
    auto t0 = Clock::now();
    std::string fails;
    EvalCell meanpool{};
    if (!signal_ok) {
      fails += " no-check4-data";
    } else {
      LifelongConfig lc;
      lc.strategy = Strategy::FT;
      lc.mode = EncoderMode::MeanPool;
      lc.max_epochs = 40;
      lc.patience = 6;
      lc.seed = 99;
      GatParams params = init_params({32, 2}, 7);
      ReplayBuffer buf;
      std::vector<TaskSnapshot> snaps;
      TrainResult tr = train_task(params, signal_data, 0, buf, snaps, lc, nullptr);
      meanpool = evaluate_policy(learned_policy_factory(params, EncoderMode::MeanPool),
                                 signal_insts, 1, 5000, 5);
      if (tr.epochs_run <= 0 || !(meanpool.geo_nodes > 0)) fails += " meanpool-run";
      std::ofstream ab("acc_tmp/ablation.csv");
      ab << "encoder,geo_nodes,geo_time_s,std_pct,cap_hits\n";
      ab << "attention," << signal_attention.geo_nodes << "," << signal_attention.geo_time
         << "," << signal_attention.node_std_pct << "," << signal_attention.cap_hits << "\n";
      ab << "meanpool," << meanpool.geo_nodes << "," << meanpool.geo_time << ","
         << meanpool.node_std_pct << "," << meanpool.cap_hits << "\n";
      if (!fs::exists("acc_tmp/ablation.csv")) fails += " ablation-report";
    }

    TransferReport xfer{};
    bool xfer_ran = false;
    if (!drift_ok || drift_runs.empty()) {
      fails += " no-check5-run";
    } else {
      TaskSpec lowdata;
      lowdata.family = Family::SetCover;
      lowdata.name = "xfer";
      lowdata.sc_rows = 60;
      lowdata.sc_cols = 80;
      lowdata.sc_density = 0.45;
      const std::string run_dir = drift_runs[0].cfg.out_dir;
      xfer = run_transfer(drift_runs[0].cfg, run_dir, lowdata, 400);
      xfer_ran = true;
      if (!(xfer.finetuned.geo_nodes > 0) || !(xfer.scratch.geo_nodes > 0) ||
          !(xfer.baseline.geo_nodes > 0))
        fails += " transfer-cells";
      std::ifstream csv(run_dir + "/transfer.csv");
      std::string header;
      std::getline(csv, header);
      if (header != "arm,geo_nodes,geo_time_s,std_pct,cap_hits") fails += " transfer-csv";
      if (!fs::exists(run_dir + "/transfer.json")) fails += " transfer-json";
    }

    report(9, fails.empty(), "ablation and transfer plumbing%s%s, %.0fs",
           fails.empty() ? ": reports written" : ": failed:", fails.c_str(), secs_since(t0));
    if (signal_ok)
      std::printf("     note: attention geo %.2f vs mean-pool geo %.2f "
                  "(expected direction: attention <= mean-pool, informational)\n",
                  signal_attention.geo_nodes, meanpool.geo_nodes);
    if (xfer_ran)
      std::printf("     note: finetuned geo %.2f vs scratch geo %.2f, most_fractional %.2f "
                  "(expected direction: finetuned <= scratch, informational)\n",
                  xfer.finetuned.geo_nodes, xfer.scratch.geo_nodes, xfer.baseline.geo_nodes);
    std::fflush(stdout);
  } catch (const std::exception& e) {
    report(9, false, "ablation and transfer plumbing threw: %s", e.what());
  }

  // 10. Determinism: repeating every check-5 run with the same seeds yields
  //     identical node-count matrices and per-run node counts.
  try {
    auto t0 = Clock::now();
    if (!drift_ok || drift_runs.size() != 6) {
      report(10, false, "determinism skipped: check 5 did not produce six runs");
    } else {
      int identical = 0;
      std::string why, first_why;
      for (size_t i = 0; i < drift_runs.size(); ++i) {
        const DriftRun& base = drift_runs[i];
        DriftRun redo;
        std::string dir = base.cfg.out_dir;
        dir.replace(dir.find("c5_"), 3, "c10_");
        run_drift(base.cfg.seed, base.cfg.lifelong.strategy, dir, &redo);
        if (matrices_identical(base.res, redo.res, &why)) {
          ++identical;
        } else if (first_why.empty()) {
          first_why = why;
        }
      }
      bool pass = identical == 6;
      report(10, pass, "determinism: %d of 6 repeated runs bit-identical%s%s, %.0fs",
             identical, first_why.empty() ? "" : ", first diff: ", first_why.c_str(),
             secs_since(t0));
    }
  } catch (const std::exception& e) {
    report(10, false, "determinism threw: %s", e.what());
  }

  std::printf("acceptance: %d/%d checks passed in %.0fs\n", g_passed, g_passed + g_failed,
              secs_since(t_all));
  return g_failed == 0 ? 0 : 1;
}

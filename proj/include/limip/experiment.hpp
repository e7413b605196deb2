#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "limip/bnb.hpp"
#include "limip/config.hpp"
#include "limip/gat.hpp"
#include "limip/instgen.hpp"
#include "limip/lifelong.hpp"
#include "limip/metrics.hpp"

namespace limip {

inline constexpr const char* kVersionString = "1.0.0";

// Full description of a lifelong run: ordered task sequence, strategy,
// training hyperparameters, evaluation protocol, and output location.
struct ExperimentConfig {
  std::vector<TaskSpec> tasks;
  GatConfig gat;
  LifelongConfig lifelong;
  int samples_per_task = 2000;
  int eval_instances = 20;
  int eval_seeds = 5;
  long eval_node_cap = 20000;
  long collect_node_cap = 400;
  double explore_prob = 0.05;
  std::string out_dir = "runs/out";
  uint64_t seed = 1;
};

// Builds a config from a parsed table; throws std::runtime_error naming the
// offending key. Sections: [experiment], [model], [train], [task.0] ...
ExperimentConfig experiment_from_table(const ConfigTable& table);
ExperimentConfig load_experiment(const std::string& path);
std::string experiment_to_json(const ExperimentConfig& cfg);

// Generates the held-out evaluation instances for one task (fixed by the
// global seed, independent of training).
std::vector<std::shared_ptr<const MilpInstance>> eval_instances_for_task(
    const ExperimentConfig& cfg, size_t task_index);

// Collects expert samples for one task, generating instances on demand from
// the task's distribution until the quota is met.
std::vector<BranchSample> collect_for_task(const ExperimentConfig& cfg, size_t task_index,
                                           int quota);

using PolicyFactory = std::function<std::unique_ptr<BranchingPolicy>(uint64_t run_seed)>;

PolicyFactory learned_policy_factory(const GatParams& params, EncoderMode mode);
PolicyFactory named_policy_factory(const std::string& name);  // strong | most_fractional | random

// Solves every (instance, seed) pair under a node cap and aggregates
// shifted geomeans plus the across-seed node dispersion. node_runs, when
// non-null, receives the per-instance per-seed node counts.
EvalCell evaluate_policy(const PolicyFactory& make,
                         const std::vector<std::shared_ptr<const MilpInstance>>& insts,
                         int eval_seeds, long node_cap, uint64_t seed_base,
                         std::vector<std::vector<double>>* node_runs = nullptr);

struct RunResult {
  EvalMatrix matrix;
  // node_runs[checkpoint][task][instance][seed]
  std::vector<std::vector<std::vector<std::vector<double>>>> node_runs;
  std::vector<std::string> checkpoint_paths;
};

// Sequential lifelong training with per-checkpoint evaluation on every
// task's held-out set; writes matrix CSV/JSON, per-task curves, checkpoints,
// the epoch log, the replay buffer, and anchor snapshots under out_dir.
RunResult run_experiment(const ExperimentConfig& cfg);

struct TransferReport {
  EvalCell finetuned;
  EvalCell scratch;
  EvalCell baseline;  // most_fractional reference on the same set
};

// Fine-tunes a finished run's final checkpoint on a low-data task and trains
// a fresh model on the same samples; writes transfer.csv/json under run_dir.
TransferReport run_transfer(const ExperimentConfig& cfg, const std::string& run_dir,
                            const TaskSpec& lowdata, int samples);

// Picks the low-data task for the transfer protocol: an explicit [transfer]
// section when present, otherwise the final task of the sequence.
TaskSpec transfer_task_from_table(const ConfigTable& table, const ExperimentConfig& cfg);

// Report rendering: matrix.json round trip plus CSV/table/curve emission.
EvalMatrix matrix_from_json_file(const std::string& path);
void write_report(const EvalMatrix& matrix, const std::string& run_dir);

// Buffer and snapshot persistence used at the end of a run.
void write_buffer(const ReplayBuffer& buf, const std::string& path);
ReplayBuffer read_buffer(const std::string& path);
void write_snapshots(const std::vector<TaskSnapshot>& snaps, const std::string& path);
std::vector<TaskSnapshot> read_snapshots(const std::string& path);

}  // namespace limip

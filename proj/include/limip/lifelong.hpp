#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "limip/bnb.hpp"
#include "limip/gat.hpp"

namespace limip {

// One retained branching state. z holds the stored policy logits over the
// state's candidates (used by distillation); action is the expert label
// (used by ground-truth replay).
struct ReplayEntry {
  BranchState state;
  int action = 0;
  std::vector<double> z;
  int task = 0;
};

// Fixed-capacity uniform retention over an unbounded stream.
struct ReplayBuffer {
  size_t capacity = 500;
  std::vector<ReplayEntry> entries;
  uint64_t stream_count = 0;

  // Classic reservoir step: append while under capacity, then replace a
  // uniform slot with probability capacity/stream_count.
  void offer(ReplayEntry e, Rng& rng);
};

// Frozen per-task parameters and importances for the quadratic anchor.
struct TaskSnapshot {
  int task = 0;
  std::vector<double> theta;
  std::vector<double> omega;
};

enum class Strategy { FT, ER, EWC, LiMIP };

// Throws std::invalid_argument listing valid names on unknown input.
Strategy strategy_from_string(const std::string& s);
std::string strategy_name(Strategy s);

struct LifelongConfig {
  Strategy strategy = Strategy::LiMIP;
  EncoderMode mode = EncoderMode::Attention;
  double kd_weight = 1.5;
  double ewc_weight = 100.0;
  double ewc_only_weight = 1000.0;
  size_t buffer_capacity = 500;
  int batch = 32;
  int kd_batch = 32;
  int max_epochs = 60;
  int patience = 8;
  double val_frac = 0.1;
  AdamConfig adam;
  uint64_t seed = 0;
  // When true, stored logits are the ones computed at reservoir insertion
  // time; default recomputes them with the end-of-task parameters.
  bool kd_logits_at_insertion = false;
};

struct LossBatch {
  double loss = 0.0;
  // Gradient of the batch-mean loss with respect to each sample's logits
  // (already scaled by 1/batch).
  std::vector<std::vector<double>> dlogits;
};

// Mean cross-entropy −log softmax(logits)[action] over the batch.
LossBatch imitation_loss(const GatParams& params, EncoderMode mode,
                         const std::vector<const BranchState*>& states,
                         const std::vector<int>& actions);

// Mean KL(softmax(stored z) || softmax(current logits)) over the batch.
LossBatch kd_loss(const GatParams& params, EncoderMode mode,
                  const std::vector<const ReplayEntry*>& batch);

// Per-parameter mean of squared per-sample gradients of the cross-entropy.
std::vector<double> compute_importance(const GatParams& params, EncoderMode mode,
                                       const std::vector<const BranchSample*>& data);

// Quadratic anchor value and its gradient: sum over snapshots of
// omega * (theta - theta_star)^2.
double ewc_penalty(const std::vector<double>& theta, const std::vector<TaskSnapshot>& snapshots,
                   std::vector<double>* grad_out);

struct TrainResult {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val = 0.0;
  double val_top1 = 0.0;
};

// One task of the sequential loop. Trains params in place with a fresh
// optimizer state, early-stops on validation cross-entropy, restores the
// best-validation parameters, then performs the strategy's end-of-task
// bookkeeping (reservoir offers, stored-logit refresh, snapshot append).
// Writes one JSON line per epoch to log when non-null.
TrainResult train_task(GatParams& params, const std::vector<BranchSample>& data, int task_id,
                       ReplayBuffer& buffer, std::vector<TaskSnapshot>& snapshots,
                       const LifelongConfig& cfg, std::ostream* log);

}  // namespace limip

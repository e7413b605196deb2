#include "limip/lifelong.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace limip {

namespace {

constexpr double kProbFloor = 1e-30;

int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace

void ReplayBuffer::offer(ReplayEntry e, Rng& rng) {
  ++stream_count;
  if (capacity == 0) return;
  if (entries.size() < capacity) {
    entries.push_back(std::move(e));
    return;
  }
  uint64_t j = rng.below(stream_count);
  if (j < capacity) entries[j] = std::move(e);
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "ft") return Strategy::FT;
  if (s == "er") return Strategy::ER;
  if (s == "ewc") return Strategy::EWC;
  if (s == "limip") return Strategy::LiMIP;
  throw std::invalid_argument("unknown strategy '" + s + "' (expected one of: ft, er, ewc, limip)");
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::FT: return "ft";
    case Strategy::ER: return "er";
    case Strategy::EWC: return "ewc";
    case Strategy::LiMIP: return "limip";
  }
  return "?";
}

LossBatch imitation_loss(const GatParams& params, EncoderMode mode,
                         const std::vector<const BranchState*>& states,
                         const std::vector<int>& actions) {
  if (states.size() != actions.size())
    throw std::invalid_argument("imitation_loss: states/actions size mismatch");
  LossBatch out;
  if (states.empty()) return out;
  const double inv = 1.0 / static_cast<double>(states.size());
  for (size_t s = 0; s < states.size(); ++s) {
    std::vector<double> logits = gat_forward(params, *states[s], mode, nullptr);
    if (actions[s] < 0 || actions[s] >= static_cast<int>(logits.size()))
      throw std::invalid_argument("imitation_loss: action out of candidate range");
    std::vector<double> p = softmax(logits);
    out.loss += -std::log(std::max(p[actions[s]], kProbFloor));
    p[actions[s]] -= 1.0;
    for (double& v : p) v *= inv;
    out.dlogits.push_back(std::move(p));
  }
  out.loss *= inv;
  return out;
}

LossBatch kd_loss(const GatParams& params, EncoderMode mode,
                  const std::vector<const ReplayEntry*>& batch) {
  LossBatch out;
  if (batch.empty()) return out;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (const ReplayEntry* e : batch) {
    std::vector<double> logits = gat_forward(params, e->state, mode, nullptr);
    if (logits.size() != e->z.size())
      throw std::runtime_error("kd_loss: stored logits do not match candidate count");
    std::vector<double> p = softmax(e->z);
    std::vector<double> q = softmax(logits);
    double kl = 0.0;
    for (size_t i = 0; i < p.size(); ++i)
      kl += p[i] * (std::log(std::max(p[i], kProbFloor)) - std::log(std::max(q[i], kProbFloor)));
    out.loss += kl;
    std::vector<double> dl(p.size());
    for (size_t i = 0; i < p.size(); ++i) dl[i] = (q[i] - p[i]) * inv;
    out.dlogits.push_back(std::move(dl));
  }
  out.loss *= inv;
  return out;
}

std::vector<double> compute_importance(const GatParams& params, EncoderMode mode,
                                       const std::vector<const BranchSample*>& data) {
  if (data.empty()) throw std::invalid_argument("compute_importance: empty data");
  std::vector<double> omega(params.flat.size(), 0.0);
  for (const BranchSample* s : data) {
    ForwardTrace tr;
    std::vector<double> logits = gat_forward(params, s->state, mode, &tr);
    std::vector<double> dl = softmax(logits);
    dl[s->action] -= 1.0;
    std::vector<double> g = gat_backward(params, tr, dl);
    for (size_t i = 0; i < omega.size(); ++i) omega[i] += g[i] * g[i];
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  for (double& v : omega) v *= inv;
  return omega;
}

double ewc_penalty(const std::vector<double>& theta, const std::vector<TaskSnapshot>& snapshots,
                   std::vector<double>* grad_out) {
  double pen = 0.0;
  if (grad_out) grad_out->assign(theta.size(), 0.0);
  for (const TaskSnapshot& sn : snapshots) {
    if (sn.theta.size() != theta.size() || sn.omega.size() != theta.size())
      throw std::invalid_argument("ewc_penalty: snapshot length mismatch");
    for (size_t i = 0; i < theta.size(); ++i) {
      double d = theta[i] - sn.theta[i];
      pen += sn.omega[i] * d * d;
      if (grad_out) (*grad_out)[i] += 2.0 * sn.omega[i] * d;
    }
  }
  return pen;
}

TrainResult train_task(GatParams& params, const std::vector<BranchSample>& data, int task_id,
                       ReplayBuffer& buffer, std::vector<TaskSnapshot>& snapshots,
                       const LifelongConfig& cfg, std::ostream* log) {
  if (data.empty()) throw std::invalid_argument("train_task: empty task data");
  if (cfg.kd_weight < 0 || cfg.ewc_weight < 0 || cfg.ewc_only_weight < 0)
    throw std::invalid_argument("train_task: loss weights must be non-negative");
  if (cfg.batch < 1 || cfg.kd_batch < 1)
    throw std::invalid_argument("train_task: batch sizes must be positive");
  buffer.capacity = cfg.buffer_capacity;

  const size_t N = data.size();
  const size_t P = params.flat.size();

  // Validation split fixed by seed; when too small for a split the full set
  // doubles as its own validation proxy.
  Rng val_rng = derive_rng(cfg.seed, "train.valsplit", static_cast<uint64_t>(task_id));
  std::vector<size_t> perm(N);
  std::iota(perm.begin(), perm.end(), size_t{0});
  val_rng.shuffle(perm);
  size_t nval = static_cast<size_t>(cfg.val_frac * static_cast<double>(N) + 1e-9);
  std::vector<size_t> val_idx(perm.begin(), perm.begin() + nval);
  std::vector<size_t> train_idx(perm.begin() + nval, perm.end());
  if (train_idx.empty()) {
    train_idx = val_idx;
  }
  const std::vector<size_t>& score_idx = val_idx.empty() ? train_idx : val_idx;

  Rng shuffle_rng = derive_rng(cfg.seed, "train.shuffle", static_cast<uint64_t>(task_id));
  Rng replay_rng = derive_rng(cfg.seed, "train.replay", static_cast<uint64_t>(task_id));
  Rng reservoir_rng = derive_rng(cfg.seed, "train.reservoir", static_cast<uint64_t>(task_id));

  const bool use_kd = cfg.strategy == Strategy::LiMIP && cfg.kd_weight > 0;
  const bool use_er = cfg.strategy == Strategy::ER;
  const double ewc_w = cfg.strategy == Strategy::EWC  ? cfg.ewc_only_weight
                       : cfg.strategy == Strategy::LiMIP ? cfg.ewc_weight
                                                         : 0.0;
  const bool offers = cfg.strategy == Strategy::ER || cfg.strategy == Strategy::LiMIP;

  AdamState adam;
  TrainResult res;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> best_flat = params.flat;
  int bad_epochs = 0;

  std::vector<size_t> pick;
  auto draw_replay = [&](size_t want) {
    size_t avail = buffer.entries.size();
    size_t k = std::min(want, avail);
    pick.resize(avail);
    std::iota(pick.begin(), pick.end(), size_t{0});
    for (size_t t = 0; t < k; ++t) {
      size_t j = t + static_cast<size_t>(replay_rng.below(avail - t));
      std::swap(pick[t], pick[j]);
    }
    return k;
  };

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(train_idx);
    double ep_imit = 0, ep_rep = 0, ep_kd = 0, ep_ewc = 0;
    long steps = 0;
    std::vector<double> grad(P), dl, eg;

    for (size_t start = 0; start < train_idx.size(); start += static_cast<size_t>(cfg.batch)) {
      size_t stop = std::min(train_idx.size(), start + static_cast<size_t>(cfg.batch));
      size_t bsz = stop - start;
      std::fill(grad.begin(), grad.end(), 0.0);

      double imit = 0;
      for (size_t t = start; t < stop; ++t) {
        const BranchSample& smp = data[train_idx[t]];
        ForwardTrace tr;
        std::vector<double> logits = gat_forward(params, smp.state, cfg.mode, &tr);
        std::vector<double> p = softmax(logits);
        imit += -std::log(std::max(p[smp.action], kProbFloor));
        dl = p;
        dl[smp.action] -= 1.0;
        double inv = 1.0 / static_cast<double>(bsz);
        for (double& v : dl) v *= inv;
        std::vector<double> g = gat_backward(params, tr, dl);
        for (size_t i = 0; i < P; ++i) grad[i] += g[i];
        if (epoch == 1 && offers) {
          ReplayEntry e;
          e.state = smp.state;
          e.action = smp.action;
          e.z = logits;
          e.task = task_id;
          buffer.offer(std::move(e), reservoir_rng);
        }
      }
      imit /= static_cast<double>(bsz);

      double rep = 0;
      if (use_er && !buffer.entries.empty()) {
        size_t k = draw_replay(static_cast<size_t>(cfg.kd_batch));
        for (size_t t = 0; t < k; ++t) {
          const ReplayEntry& e = buffer.entries[pick[t]];
          ForwardTrace tr;
          std::vector<double> logits = gat_forward(params, e.state, cfg.mode, &tr);
          std::vector<double> p = softmax(logits);
          rep += -std::log(std::max(p[e.action], kProbFloor));
          dl = p;
          dl[e.action] -= 1.0;
          double inv = 1.0 / static_cast<double>(k);
          for (double& v : dl) v *= inv;
          std::vector<double> g = gat_backward(params, tr, dl);
          for (size_t i = 0; i < P; ++i) grad[i] += g[i];
        }
        rep /= static_cast<double>(k);
      }

      double kd_term = 0;
      if (use_kd && !buffer.entries.empty()) {
        size_t k = draw_replay(static_cast<size_t>(cfg.kd_batch));
        double kl_sum = 0;
        for (size_t t = 0; t < k; ++t) {
          const ReplayEntry& e = buffer.entries[pick[t]];
          ForwardTrace tr;
          std::vector<double> logits = gat_forward(params, e.state, cfg.mode, &tr);
          if (logits.size() != e.z.size())
            throw std::runtime_error("train_task: stored logits do not match candidate count");
          std::vector<double> tp = softmax(e.z);
          std::vector<double> q = softmax(logits);
          double kl = 0;
          for (size_t i = 0; i < tp.size(); ++i)
            kl += tp[i] *
                  (std::log(std::max(tp[i], kProbFloor)) - std::log(std::max(q[i], kProbFloor)));
          kl_sum += kl;
          dl.resize(q.size());
          double scale = cfg.kd_weight / static_cast<double>(k);
          for (size_t i = 0; i < q.size(); ++i) dl[i] = (q[i] - tp[i]) * scale;
          std::vector<double> g = gat_backward(params, tr, dl);
          for (size_t i = 0; i < P; ++i) grad[i] += g[i];
        }
        kd_term = cfg.kd_weight * kl_sum / static_cast<double>(k);
      }

      double ewc_term = 0;
      if (ewc_w > 0 && !snapshots.empty()) {
        double pen = ewc_penalty(params.flat, snapshots, &eg);
        for (size_t i = 0; i < P; ++i) grad[i] += ewc_w * eg[i];
        ewc_term = ewc_w * pen;
      }

      adam_step(params, grad, adam, cfg.adam);
      ep_imit += imit;
      ep_rep += rep;
      ep_kd += kd_term;
      ep_ewc += ewc_term;
      ++steps;
    }

    double vloss = 0;
    long hits = 0;
    for (size_t s : score_idx) {
      std::vector<double> logits = gat_forward(params, data[s].state, cfg.mode, nullptr);
      std::vector<double> p = softmax(logits);
      vloss += -std::log(std::max(p[data[s].action], kProbFloor));
      hits += argmax_lowest(logits) == data[s].action ? 1 : 0;
    }
    vloss /= static_cast<double>(score_idx.size());
    double top1 = static_cast<double>(hits) / static_cast<double>(score_idx.size());
    res.epochs_run = epoch;

    if (log) {
      nlohmann::json line;
      double mi = ep_imit / steps, mr = ep_rep / steps, mk = ep_kd / steps, me = ep_ewc / steps;
      line["task"] = task_id;
      line["epoch"] = epoch;
      line["imit"] = mi;
      line["replay"] = mr;
      line["kd"] = mk;
      line["ewc"] = me;
      line["total"] = mi + mr + mk + me;
      line["val"] = vloss;
      line["top1"] = top1;
      (*log) << line.dump() << "\n";
    }

    if (vloss < best_val) {
      best_val = vloss;
      best_flat = params.flat;
      res.best_epoch = epoch;
      res.best_val = vloss;
      res.val_top1 = top1;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs >= cfg.patience) break;
    }
  }

  params.flat = best_flat;

  if (cfg.strategy == Strategy::LiMIP && !cfg.kd_logits_at_insertion) {
    for (ReplayEntry& e : buffer.entries)
      if (e.task == task_id) e.z = gat_forward(params, e.state, cfg.mode, nullptr);
  }

  if (cfg.strategy == Strategy::EWC || cfg.strategy == Strategy::LiMIP) {
    std::vector<const BranchSample*> ptrs;
    ptrs.reserve(N);
    for (const BranchSample& s : data) ptrs.push_back(&s);
    TaskSnapshot sn;
    sn.task = task_id;
    sn.theta = params.flat;
    sn.omega = compute_importance(params, cfg.mode, ptrs);
    snapshots.push_back(std::move(sn));
  }

  return res;
}

}  // namespace limip

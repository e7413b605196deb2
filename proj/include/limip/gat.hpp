#pragma once

#include <string>
#include <vector>

#include "limip/bnb.hpp"
#include "limip/features.hpp"

namespace limip {

struct GatConfig {
  int hidden = 32;
  int heads = 2;
};

// One named contiguous block of the flat parameter vector.
struct ParamSeg {
  std::string name;
  size_t offset;
  size_t rows;
  size_t cols;    // 1 for vectors
  size_t fan_in;  // drives the init range
};

std::vector<ParamSeg> param_layout(const GatConfig& cfg);
size_t param_count(const GatConfig& cfg);

struct GatParams {
  GatConfig cfg;
  std::vector<double> flat;

  const std::vector<double>& to_flat() const { return flat; }
  void from_flat(const std::vector<double>& v);
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per segment, fixed draw order.
GatParams init_params(const GatConfig& cfg, uint64_t seed);

enum class EncoderMode { Attention, MeanPool };

// Everything backward needs; valid while the featurized state it points to
// stays alive.
struct ForwardTrace;

// Returns one logit per candidate variable, ordered by ascending variable
// index (the order of the state's candidate mask). If trace is non-null it is
// filled for a later backward call.
std::vector<double> gat_forward(const GatParams& params, const BranchState& state,
                                EncoderMode mode, ForwardTrace* trace);

// Gradient of dlogits'.logits w.r.t. the flat parameters. dlogits aligns with
// the logits returned by the forward that filled the trace.
std::vector<double> gat_backward(const GatParams& params, const ForwardTrace& trace,
                                 const std::vector<double>& dlogits);

std::vector<double> softmax(const std::vector<double>& z);
double log_sum_exp(const std::vector<double>& z);

// Softmax over candidate logits.
std::vector<double> policy_probs(const GatParams& params, const BranchState& state,
                                 EncoderMode mode = EncoderMode::Attention);

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
};

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(GatParams& params, const std::vector<double>& grad, AdamState& st,
               const AdamConfig& cfg = {});

// Versioned binary checkpoint, named segments, 64-bit floats, exact round trip.
void save_checkpoint(const GatParams& params, const std::string& path);
GatParams load_checkpoint(const std::string& path);

// Branches on the argmax policy logit; ties go to the lowest variable index.
class LearnedPolicy : public BranchingPolicy {
 public:
  LearnedPolicy(const GatParams& params, EncoderMode mode = EncoderMode::Attention)
      : params_(&params), mode_(mode) {}
  int choose(const BranchContext& ctx) override;
  const char* name() const override { return "learned"; }

 private:
  const GatParams* params_;
  EncoderMode mode_;
};

// Trace internals are exposed for the backward implementation and tests that
// inspect attention rows.
struct ForwardTrace {
  GatConfig cfg;
  EncoderMode mode = EncoderMode::Attention;
  const BranchState* state = nullptr;
  int n = 0, m = 0;
  std::vector<std::vector<int>> con_edges;  // edge indices per constraint
  std::vector<std::vector<int>> var_edges;  // edge indices per variable
  std::vector<int> cand_vars;

  // Embedders.
  std::vector<double> ve_z1, ve_a1, vh;  // n*h
  std::vector<double> ce_z1, ce_a1, ch;  // m*h

  struct Head {
    // Constraint-side half aggregation.
    std::vector<double> tc, tv;              // m*h, n*h
    std::vector<double> pre_self, pre_edge;  // m, E (attention mode)
    std::vector<double> a_self, a_edge;      // m, E
    std::vector<double> agg, c1;             // m*h
    // Variable-side half aggregation.
    std::vector<double> uv, uc;                // n*h, m*h
    std::vector<double> pre2_self, pre2_edge;  // n, E
    std::vector<double> a2_self, a2_edge;      // n, E
    std::vector<double> agg2, v2;              // n*h
  };
  std::vector<Head> heads;

  std::vector<double> out_z1, out_a1;  // ncand*h
  std::vector<double> logits;          // ncand
};

}  // namespace limip

#include "limip/gat.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace limip {
namespace {

constexpr int kVarDim = kVarFeatDim;
constexpr int kConDim = kConFeatDim;
constexpr double kLeak = 0.2;

inline double lrelu(double x) { return x > 0 ? x : kLeak * x; }
inline double dlrelu(double x) { return x > 0 ? 1.0 : kLeak; }

inline double dot(const double* a, const double* b, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// y = W x + b with W row-major (rows x cols).
inline void affine(const double* W, const double* b, const double* x, int rows, int cols,
                   double* y) {
  for (int r = 0; r < rows; ++r) y[r] = b[r] + dot(W + static_cast<size_t>(r) * cols, x, cols);
}

inline void matvec(const double* W, const double* x, int rows, int cols, double* y) {
  for (int r = 0; r < rows; ++r) y[r] = dot(W + static_cast<size_t>(r) * cols, x, cols);
}

// y += W' g  (accumulates the transpose product)
inline void matTvec_acc(const double* W, const double* g, int rows, int cols, double* y) {
  for (int r = 0; r < rows; ++r) {
    double gr = g[r];
    if (gr == 0.0) continue;
    const double* Wr = W + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) y[c] += Wr[c] * gr;
  }
}

// dW += g x'
inline void outer_acc(double* dW, const double* g, const double* x, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    double gr = g[r];
    if (gr == 0.0) continue;
    double* Wr = dW + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) Wr[c] += gr * x[c];
  }
}

inline void axpy(double a, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

struct HeadOffs {
  size_t cs_theta, cs_ew, cs_eb, cs_att;
  size_t vs_theta, vs_ew, vs_eb, vs_att;
};

struct Offs {
  size_t ve_w1, ve_b1, ve_w2, ve_b2;
  size_t ce_w1, ce_b1, ce_w2, ce_b2;
  std::vector<HeadOffs> heads;
  size_t out_w1, out_b1, out_w2, out_b2;
  size_t total;
};

Offs make_offsets(const GatConfig& cfg) {
  const size_t h = static_cast<size_t>(cfg.hidden);
  Offs o;
  size_t p = 0;
  auto take = [&p](size_t count) {
    size_t at = p;
    p += count;
    return at;
  };
  o.ve_w1 = take(h * kVarDim);
  o.ve_b1 = take(h);
  o.ve_w2 = take(h * h);
  o.ve_b2 = take(h);
  o.ce_w1 = take(h * kConDim);
  o.ce_b1 = take(h);
  o.ce_w2 = take(h * h);
  o.ce_b2 = take(h);
  for (int k = 0; k < cfg.heads; ++k) {
    HeadOffs ho;
    ho.cs_theta = take(h * h);
    ho.cs_ew = take(h);
    ho.cs_eb = take(h);
    ho.cs_att = take(3 * h);
    ho.vs_theta = take(h * h);
    ho.vs_ew = take(h);
    ho.vs_eb = take(h);
    ho.vs_att = take(3 * h);
    o.heads.push_back(ho);
  }
  o.out_w1 = take(h * h * static_cast<size_t>(cfg.heads));
  o.out_b1 = take(h);
  o.out_w2 = take(h);
  o.out_b2 = take(1);
  o.total = p;
  return o;
}

}  // namespace

std::vector<ParamSeg> param_layout(const GatConfig& cfg) {
  const size_t h = static_cast<size_t>(cfg.hidden);
  std::vector<ParamSeg> segs;
  size_t p = 0;
  auto add = [&](std::string name, size_t rows, size_t cols, size_t fan) {
    segs.push_back({std::move(name), p, rows, cols, fan});
    p += rows * cols;
  };
  add("var_emb.W1", h, kVarDim, kVarDim);
  add("var_emb.b1", h, 1, kVarDim);
  add("var_emb.W2", h, h, h);
  add("var_emb.b2", h, 1, h);
  add("con_emb.W1", h, kConDim, kConDim);
  add("con_emb.b1", h, 1, kConDim);
  add("con_emb.W2", h, h, h);
  add("con_emb.b2", h, 1, h);
  for (int k = 0; k < cfg.heads; ++k) {
    std::string pre = "head" + std::to_string(k);
    add(pre + ".cs.theta", h, h, h);
    add(pre + ".cs.edge_w", h, 1, 1);
    add(pre + ".cs.edge_b", h, 1, 1);
    add(pre + ".cs.att", 3 * h, 1, 3 * h);
    add(pre + ".vs.theta", h, h, h);
    add(pre + ".vs.edge_w", h, 1, 1);
    add(pre + ".vs.edge_b", h, 1, 1);
    add(pre + ".vs.att", 3 * h, 1, 3 * h);
  }
  add("out.W1", h, h * static_cast<size_t>(cfg.heads), h * static_cast<size_t>(cfg.heads));
  add("out.b1", h, 1, h * static_cast<size_t>(cfg.heads));
  add("out.W2", 1, h, h);
  add("out.b2", 1, 1, h);
  return segs;
}

size_t param_count(const GatConfig& cfg) { return make_offsets(cfg).total; }

void GatParams::from_flat(const std::vector<double>& v) {
  if (v.size() != param_count(cfg))
    throw std::invalid_argument("from_flat: size mismatch with layout");
  flat = v;
}

GatParams init_params(const GatConfig& cfg, uint64_t seed) {
  GatParams p;
  p.cfg = cfg;
  p.flat.assign(param_count(cfg), 0.0);
  Rng rng = derive_rng(seed, "gat.init");
  for (const auto& seg : param_layout(cfg)) {
    double s = 1.0 / std::sqrt(static_cast<double>(seg.fan_in));
    for (size_t i = 0; i < seg.rows * seg.cols; ++i)
      p.flat[seg.offset + i] = rng.uniform(-s, s);
  }
  return p;
}

std::vector<double> softmax(const std::vector<double>& z) {
  double mx = -kInf;
  for (double v : z) mx = std::max(mx, v);
  std::vector<double> out(z.size());
  double sum = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double log_sum_exp(const std::vector<double>& z) {
  double mx = -kInf;
  for (double v : z) mx = std::max(mx, v);
  if (mx == -kInf) return -kInf;
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

namespace {

// Stable softmax over one attention row given raw scores; writes coefficients.
void softmax_row(const std::vector<double>& scores, std::vector<double*> slots) {
  double mx = -kInf;
  for (double s : scores) mx = std::max(mx, s);
  double sum = 0.0;
  std::vector<double> e(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    e[i] = std::exp(scores[i] - mx);
    sum += e[i];
  }
  for (size_t i = 0; i < scores.size(); ++i) *slots[i] = e[i] / sum;
}

void embed_all(const double* W1, const double* b1, const double* W2, const double* b2,
               const double* feats, int count, int in_dim, int h, std::vector<double>& z1,
               std::vector<double>& a1, std::vector<double>& out) {
  z1.resize(static_cast<size_t>(count) * h);
  a1.resize(static_cast<size_t>(count) * h);
  out.resize(static_cast<size_t>(count) * h);
  for (int i = 0; i < count; ++i) {
    const double* x = feats + static_cast<size_t>(i) * in_dim;
    double* z = z1.data() + static_cast<size_t>(i) * h;
    double* a = a1.data() + static_cast<size_t>(i) * h;
    double* o = out.data() + static_cast<size_t>(i) * h;
    affine(W1, b1, x, h, in_dim, z);
    for (int d = 0; d < h; ++d) a[d] = z[d] > 0 ? z[d] : 0.0;
    affine(W2, b2, a, h, h, o);
  }
}

}  // namespace

std::vector<double> gat_forward(const GatParams& params, const BranchState& state,
                                EncoderMode mode, ForwardTrace* trace) {
  const GatConfig& cfg = params.cfg;
  const int h = cfg.hidden;
  const int n = state.num_vars;
  const int m = state.num_cons;
  const int E = static_cast<int>(state.edges.size());
  const Offs off = make_offsets(cfg);
  if (params.flat.size() != off.total)
    throw std::invalid_argument("gat_forward: parameter vector does not match config");
  const double* P = params.flat.data();

  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;
  tr = ForwardTrace{};
  tr.cfg = cfg;
  tr.mode = mode;
  tr.state = &state;
  tr.n = n;
  tr.m = m;
  tr.con_edges.assign(m, {});
  tr.var_edges.assign(n, {});
  for (int e = 0; e < E; ++e) {
    tr.con_edges[state.edges[e].con].push_back(e);
    tr.var_edges[state.edges[e].var].push_back(e);
  }
  for (int j = 0; j < n; ++j)
    if (state.cand_mask[j]) tr.cand_vars.push_back(j);

  embed_all(P + off.ve_w1, P + off.ve_b1, P + off.ve_w2, P + off.ve_b2, state.var_feats.data(),
            n, kVarDim, h, tr.ve_z1, tr.ve_a1, tr.vh);
  embed_all(P + off.ce_w1, P + off.ce_b1, P + off.ce_w2, P + off.ce_b2, state.con_feats.data(),
            m, kConDim, h, tr.ce_z1, tr.ce_a1, tr.ch);

  tr.heads.resize(cfg.heads);
  for (int k = 0; k < cfg.heads; ++k) {
    const HeadOffs& ho = off.heads[k];
    auto& H = tr.heads[k];

    // Constraint-side half aggregation: messages flow variables -> constraints.
    H.tc.assign(static_cast<size_t>(m) * h, 0.0);
    H.tv.assign(static_cast<size_t>(n) * h, 0.0);
    for (int i = 0; i < m; ++i)
      matvec(P + ho.cs_theta, tr.ch.data() + static_cast<size_t>(i) * h, h, h,
             H.tc.data() + static_cast<size_t>(i) * h);
    for (int j = 0; j < n; ++j)
      matvec(P + ho.cs_theta, tr.vh.data() + static_cast<size_t>(j) * h, h, h,
             H.tv.data() + static_cast<size_t>(j) * h);

    H.a_self.assign(m, 0.0);
    H.a_edge.assign(E, 0.0);
    if (mode == EncoderMode::Attention) {
      H.pre_self.assign(m, 0.0);
      H.pre_edge.assign(E, 0.0);
      const double* ac1 = P + ho.cs_att;
      const double* ac2 = ac1 + h;
      const double* ac3 = ac2 + h;
      const double k_ew = dot(ac3, P + ho.cs_ew, h);
      const double k_eb = dot(ac3, P + ho.cs_eb, h);
      std::vector<double> pc1(m), pc2(m), pv2(n);
      for (int i = 0; i < m; ++i) {
        pc1[i] = dot(ac1, H.tc.data() + static_cast<size_t>(i) * h, h);
        pc2[i] = dot(ac2, H.tc.data() + static_cast<size_t>(i) * h, h);
      }
      for (int j = 0; j < n; ++j) pv2[j] = dot(ac2, H.tv.data() + static_cast<size_t>(j) * h, h);
      for (int i = 0; i < m; ++i) H.pre_self[i] = pc1[i] + pc2[i] + k_eb;
      for (int e = 0; e < E; ++e)
        H.pre_edge[e] =
            pc1[state.edges[e].con] + pv2[state.edges[e].var] + k_ew * state.edges[e].feat + k_eb;
      for (int i = 0; i < m; ++i) {
        std::vector<double> scores{lrelu(H.pre_self[i])};
        std::vector<double*> slots{&H.a_self[i]};
        for (int e : tr.con_edges[i]) {
          scores.push_back(lrelu(H.pre_edge[e]));
          slots.push_back(&H.a_edge[e]);
        }
        softmax_row(scores, slots);
      }
    } else {
      for (int i = 0; i < m; ++i) {
        double w = 1.0 / (tr.con_edges[i].size() + 1.0);
        H.a_self[i] = w;
        for (int e : tr.con_edges[i]) H.a_edge[e] = w;
      }
    }

    H.agg.assign(static_cast<size_t>(m) * h, 0.0);
    for (int i = 0; i < m; ++i)
      axpy(H.a_self[i], H.tc.data() + static_cast<size_t>(i) * h,
           H.agg.data() + static_cast<size_t>(i) * h, h);
    for (int e = 0; e < E; ++e)
      axpy(H.a_edge[e], H.tv.data() + static_cast<size_t>(state.edges[e].var) * h,
           H.agg.data() + static_cast<size_t>(state.edges[e].con) * h, h);
    H.c1.resize(static_cast<size_t>(m) * h);
    for (size_t i = 0; i < H.c1.size(); ++i) H.c1[i] = lrelu(H.agg[i]);

    // Variable-side half aggregation: constraints -> variables, consuming this
    // head's freshly updated constraint embeddings.
    H.uv.assign(static_cast<size_t>(n) * h, 0.0);
    H.uc.assign(static_cast<size_t>(m) * h, 0.0);
    for (int j = 0; j < n; ++j)
      matvec(P + ho.vs_theta, tr.vh.data() + static_cast<size_t>(j) * h, h, h,
             H.uv.data() + static_cast<size_t>(j) * h);
    for (int i = 0; i < m; ++i)
      matvec(P + ho.vs_theta, H.c1.data() + static_cast<size_t>(i) * h, h, h,
             H.uc.data() + static_cast<size_t>(i) * h);

    H.a2_self.assign(n, 0.0);
    H.a2_edge.assign(E, 0.0);
    if (mode == EncoderMode::Attention) {
      H.pre2_self.assign(n, 0.0);
      H.pre2_edge.assign(E, 0.0);
      const double* av1 = P + ho.vs_att;
      const double* av2 = av1 + h;
      const double* av3 = av2 + h;
      const double k_vw = dot(av3, P + ho.vs_ew, h);
      const double k_vb = dot(av3, P + ho.vs_eb, h);
      std::vector<double> pv1(n), pv2b(n), pu(m);
      for (int j = 0; j < n; ++j) {
        pv1[j] = dot(av1, H.uv.data() + static_cast<size_t>(j) * h, h);
        pv2b[j] = dot(av2, H.uv.data() + static_cast<size_t>(j) * h, h);
      }
      for (int i = 0; i < m; ++i) pu[i] = dot(av2, H.uc.data() + static_cast<size_t>(i) * h, h);
      for (int j = 0; j < n; ++j) H.pre2_self[j] = pv1[j] + pv2b[j] + k_vb;
      for (int e = 0; e < E; ++e)
        H.pre2_edge[e] =
            pv1[state.edges[e].var] + pu[state.edges[e].con] + k_vw * state.edges[e].feat + k_vb;
      for (int j = 0; j < n; ++j) {
        std::vector<double> scores{lrelu(H.pre2_self[j])};
        std::vector<double*> slots{&H.a2_self[j]};
        for (int e : tr.var_edges[j]) {
          scores.push_back(lrelu(H.pre2_edge[e]));
          slots.push_back(&H.a2_edge[e]);
        }
        softmax_row(scores, slots);
      }
    } else {
      for (int j = 0; j < n; ++j) {
        double w = 1.0 / (tr.var_edges[j].size() + 1.0);
        H.a2_self[j] = w;
        for (int e : tr.var_edges[j]) H.a2_edge[e] = w;
      }
    }

    H.agg2.assign(static_cast<size_t>(n) * h, 0.0);
    for (int j = 0; j < n; ++j)
      axpy(H.a2_self[j], H.uv.data() + static_cast<size_t>(j) * h,
           H.agg2.data() + static_cast<size_t>(j) * h, h);
    for (int e = 0; e < E; ++e)
      axpy(H.a2_edge[e], H.uc.data() + static_cast<size_t>(state.edges[e].con) * h,
           H.agg2.data() + static_cast<size_t>(state.edges[e].var) * h, h);
    H.v2.resize(static_cast<size_t>(n) * h);
    for (size_t i = 0; i < H.v2.size(); ++i) H.v2[i] = lrelu(H.agg2[i]);
  }

  // Output head on candidates only; per-variable embeddings are the
  // concatenation of the per-head variable-side results.
  const int kh = h * cfg.heads;
  const int ncand = static_cast<int>(tr.cand_vars.size());
  tr.out_z1.assign(static_cast<size_t>(ncand) * h, 0.0);
  tr.out_a1.assign(static_cast<size_t>(ncand) * h, 0.0);
  tr.logits.assign(ncand, 0.0);
  std::vector<double> vcat(kh);
  for (int ci = 0; ci < ncand; ++ci) {
    int q = tr.cand_vars[ci];
    for (int k = 0; k < cfg.heads; ++k)
      std::memcpy(vcat.data() + static_cast<size_t>(k) * h,
                  tr.heads[k].v2.data() + static_cast<size_t>(q) * h, sizeof(double) * h);
    double* z = tr.out_z1.data() + static_cast<size_t>(ci) * h;
    double* a = tr.out_a1.data() + static_cast<size_t>(ci) * h;
    affine(P + off.out_w1, P + off.out_b1, vcat.data(), h, kh, z);
    for (int d = 0; d < h; ++d) a[d] = z[d] > 0 ? z[d] : 0.0;
    tr.logits[ci] = P[off.out_b2] + dot(P + off.out_w2, a, h);
  }
  return tr.logits;
}

std::vector<double> gat_backward(const GatParams& params, const ForwardTrace& tr,
                                 const std::vector<double>& dlogits) {
  const GatConfig& cfg = tr.cfg;
  const int h = cfg.hidden;
  const int n = tr.n;
  const int m = tr.m;
  const BranchState& state = *tr.state;
  const int E = static_cast<int>(state.edges.size());
  const Offs off = make_offsets(cfg);
  const double* P = params.flat.data();
  if (dlogits.size() != tr.logits.size())
    throw std::invalid_argument("gat_backward: dlogits size mismatch");

  std::vector<double> grad(off.total, 0.0);
  double* G = grad.data();

  const int kh = h * cfg.heads;
  // Per-head upstream gradient on the final variable embeddings.
  std::vector<std::vector<double>> dv2(cfg.heads,
                                       std::vector<double>(static_cast<size_t>(n) * h, 0.0));
  std::vector<double> vcat(kh), dvcat(kh), dz1(h);
  for (size_t ci = 0; ci < tr.cand_vars.size(); ++ci) {
    double dl = dlogits[ci];
    if (dl == 0.0) continue;
    int q = tr.cand_vars[ci];
    for (int k = 0; k < cfg.heads; ++k)
      std::memcpy(vcat.data() + static_cast<size_t>(k) * h,
                  tr.heads[k].v2.data() + static_cast<size_t>(q) * h, sizeof(double) * h);
    const double* a = tr.out_a1.data() + ci * h;
    const double* z = tr.out_z1.data() + ci * h;
    G[off.out_b2] += dl;
    for (int d = 0; d < h; ++d) G[off.out_w2 + d] += dl * a[d];
    for (int d = 0; d < h; ++d) dz1[d] = z[d] > 0 ? dl * P[off.out_w2 + d] : 0.0;
    for (int d = 0; d < h; ++d) G[off.out_b1 + d] += dz1[d];
    outer_acc(G + off.out_w1, dz1.data(), vcat.data(), h, kh);
    std::fill(dvcat.begin(), dvcat.end(), 0.0);
    matTvec_acc(P + off.out_w1, dz1.data(), h, kh, dvcat.data());
    for (int k = 0; k < cfg.heads; ++k)
      axpy(1.0, dvcat.data() + static_cast<size_t>(k) * h,
           dv2[k].data() + static_cast<size_t>(q) * h, h);
  }

  std::vector<double> dvh(static_cast<size_t>(n) * h, 0.0);
  std::vector<double> dch(static_cast<size_t>(m) * h, 0.0);

  for (int k = 0; k < cfg.heads; ++k) {
    const HeadOffs& ho = off.heads[k];
    const auto& H = tr.heads[k];

    // Variable-side half aggregation, backward.
    std::vector<double> dagg2(static_cast<size_t>(n) * h);
    for (size_t i = 0; i < dagg2.size(); ++i) dagg2[i] = dv2[k][i] * dlrelu(H.agg2[i]);

    std::vector<double> duv(static_cast<size_t>(n) * h, 0.0);
    std::vector<double> duc(static_cast<size_t>(m) * h, 0.0);
    std::vector<double> dal_self(n, 0.0), dal_edge(E, 0.0);
    for (int j = 0; j < n; ++j) {
      const double* dg = dagg2.data() + static_cast<size_t>(j) * h;
      dal_self[j] = dot(dg, H.uv.data() + static_cast<size_t>(j) * h, h);
      axpy(H.a2_self[j], dg, duv.data() + static_cast<size_t>(j) * h, h);
    }
    for (int e = 0; e < E; ++e) {
      int i = state.edges[e].con, j = state.edges[e].var;
      const double* dg = dagg2.data() + static_cast<size_t>(j) * h;
      dal_edge[e] = dot(dg, H.uc.data() + static_cast<size_t>(i) * h, h);
      axpy(H.a2_edge[e], dg, duc.data() + static_cast<size_t>(i) * h, h);
    }

    if (tr.mode == EncoderMode::Attention) {
      const double* av1 = P + ho.vs_att;
      const double* av2 = av1 + h;
      const double* av3 = av2 + h;
      std::vector<double> dpre_self(n, 0.0), dpre_edge(E, 0.0);
      for (int j = 0; j < n; ++j) {
        double sum = H.a2_self[j] * dal_self[j];
        for (int e : tr.var_edges[j]) sum += H.a2_edge[e] * dal_edge[e];
        dpre_self[j] = H.a2_self[j] * (dal_self[j] - sum) * dlrelu(H.pre2_self[j]);
        for (int e : tr.var_edges[j])
          dpre_edge[e] = H.a2_edge[e] * (dal_edge[e] - sum) * dlrelu(H.pre2_edge[e]);
      }
      double S0 = 0.0, S1 = 0.0, Sself = 0.0;
      std::vector<double> Gedge(n, 0.0), Hcon(m, 0.0);
      for (int e = 0; e < E; ++e) {
        S0 += dpre_edge[e];
        S1 += dpre_edge[e] * state.edges[e].feat;
        Gedge[state.edges[e].var] += dpre_edge[e];
        Hcon[state.edges[e].con] += dpre_edge[e];
      }
      for (int j = 0; j < n; ++j) Sself += dpre_self[j];
      double* dav1 = G + ho.vs_att;
      double* dav2 = dav1 + h;
      double* dav3 = dav2 + h;
      for (int j = 0; j < n; ++j) {
        const double* uvj = H.uv.data() + static_cast<size_t>(j) * h;
        axpy(Gedge[j] + dpre_self[j], uvj, dav1, h);
        axpy(dpre_self[j], uvj, dav2, h);
        double* duvj = duv.data() + static_cast<size_t>(j) * h;
        axpy(Gedge[j], av1, duvj, h);
        axpy(dpre_self[j], av1, duvj, h);
        axpy(dpre_self[j], av2, duvj, h);
      }
      for (int i = 0; i < m; ++i) {
        axpy(Hcon[i], H.uc.data() + static_cast<size_t>(i) * h, dav2, h);
        axpy(Hcon[i], av2, duc.data() + static_cast<size_t>(i) * h, h);
      }
      axpy(S1, P + ho.vs_ew, dav3, h);
      axpy(S0 + Sself, P + ho.vs_eb, dav3, h);
      axpy(S1, av3, G + ho.vs_ew, h);
      axpy(S0 + Sself, av3, G + ho.vs_eb, h);
    }

    std::vector<double> dc1(static_cast<size_t>(m) * h, 0.0);
    for (int j = 0; j < n; ++j) {
      const double* duvj = duv.data() + static_cast<size_t>(j) * h;
      outer_acc(G + ho.vs_theta, duvj, tr.vh.data() + static_cast<size_t>(j) * h, h, h);
      matTvec_acc(P + ho.vs_theta, duvj, h, h, dvh.data() + static_cast<size_t>(j) * h);
    }
    for (int i = 0; i < m; ++i) {
      const double* duci = duc.data() + static_cast<size_t>(i) * h;
      outer_acc(G + ho.vs_theta, duci, H.c1.data() + static_cast<size_t>(i) * h, h, h);
      matTvec_acc(P + ho.vs_theta, duci, h, h, dc1.data() + static_cast<size_t>(i) * h);
    }

    // Constraint-side half aggregation, backward.
    std::vector<double> dagg(static_cast<size_t>(m) * h);
    for (size_t i = 0; i < dagg.size(); ++i) dagg[i] = dc1[i] * dlrelu(H.agg[i]);

    std::vector<double> dtc(static_cast<size_t>(m) * h, 0.0);
    std::vector<double> dtv(static_cast<size_t>(n) * h, 0.0);
    std::vector<double> dbl_self(m, 0.0), dbl_edge(E, 0.0);
    for (int i = 0; i < m; ++i) {
      const double* dg = dagg.data() + static_cast<size_t>(i) * h;
      dbl_self[i] = dot(dg, H.tc.data() + static_cast<size_t>(i) * h, h);
      axpy(H.a_self[i], dg, dtc.data() + static_cast<size_t>(i) * h, h);
    }
    for (int e = 0; e < E; ++e) {
      int i = state.edges[e].con, j = state.edges[e].var;
      const double* dg = dagg.data() + static_cast<size_t>(i) * h;
      dbl_edge[e] = dot(dg, H.tv.data() + static_cast<size_t>(j) * h, h);
      axpy(H.a_edge[e], dg, dtv.data() + static_cast<size_t>(j) * h, h);
    }

    if (tr.mode == EncoderMode::Attention) {
      const double* ac1 = P + ho.cs_att;
      const double* ac2 = ac1 + h;
      const double* ac3 = ac2 + h;
      std::vector<double> dpre_self(m, 0.0), dpre_edge(E, 0.0);
      for (int i = 0; i < m; ++i) {
        double sum = H.a_self[i] * dbl_self[i];
        for (int e : tr.con_edges[i]) sum += H.a_edge[e] * dbl_edge[e];
        dpre_self[i] = H.a_self[i] * (dbl_self[i] - sum) * dlrelu(H.pre_self[i]);
        for (int e : tr.con_edges[i])
          dpre_edge[e] = H.a_edge[e] * (dbl_edge[e] - sum) * dlrelu(H.pre_edge[e]);
      }
      double S0 = 0.0, S1 = 0.0, Sself = 0.0;
      std::vector<double> Gcon(m, 0.0), Hvar(n, 0.0);
      for (int e = 0; e < E; ++e) {
        S0 += dpre_edge[e];
        S1 += dpre_edge[e] * state.edges[e].feat;
        Gcon[state.edges[e].con] += dpre_edge[e];
        Hvar[state.edges[e].var] += dpre_edge[e];
      }
      for (int i = 0; i < m; ++i) Sself += dpre_self[i];
      double* dac1 = G + ho.cs_att;
      double* dac2 = dac1 + h;
      double* dac3 = dac2 + h;
      for (int i = 0; i < m; ++i) {
        const double* tci = H.tc.data() + static_cast<size_t>(i) * h;
        axpy(Gcon[i] + dpre_self[i], tci, dac1, h);
        axpy(dpre_self[i], tci, dac2, h);
        double* dtci = dtc.data() + static_cast<size_t>(i) * h;
        axpy(Gcon[i], ac1, dtci, h);
        axpy(dpre_self[i], ac1, dtci, h);
        axpy(dpre_self[i], ac2, dtci, h);
      }
      for (int j = 0; j < n; ++j) {
        axpy(Hvar[j], H.tv.data() + static_cast<size_t>(j) * h, dac2, h);
        axpy(Hvar[j], ac2, dtv.data() + static_cast<size_t>(j) * h, h);
      }
      axpy(S1, P + ho.cs_ew, dac3, h);
      axpy(S0 + Sself, P + ho.cs_eb, dac3, h);
      axpy(S1, ac3, G + ho.cs_ew, h);
      axpy(S0 + Sself, ac3, G + ho.cs_eb, h);
    }

    for (int i = 0; i < m; ++i) {
      const double* dtci = dtc.data() + static_cast<size_t>(i) * h;
      outer_acc(G + ho.cs_theta, dtci, tr.ch.data() + static_cast<size_t>(i) * h, h, h);
      matTvec_acc(P + ho.cs_theta, dtci, h, h, dch.data() + static_cast<size_t>(i) * h);
    }
    for (int j = 0; j < n; ++j) {
      const double* dtvj = dtv.data() + static_cast<size_t>(j) * h;
      outer_acc(G + ho.cs_theta, dtvj, tr.vh.data() + static_cast<size_t>(j) * h, h, h);
      matTvec_acc(P + ho.cs_theta, dtvj, h, h, dvh.data() + static_cast<size_t>(j) * h);
    }
  }

  // Embedders, backward.
  std::vector<double> da1(h);
  auto embed_back = [&](const std::vector<double>& dout, const std::vector<double>& z1,
                        const std::vector<double>& a1, const double* feats, int count, int in_dim,
                        size_t w1, size_t b1, size_t w2, size_t b2) {
    for (int i = 0; i < count; ++i) {
      const double* do_i = dout.data() + static_cast<size_t>(i) * h;
      const double* zi = z1.data() + static_cast<size_t>(i) * h;
      const double* ai = a1.data() + static_cast<size_t>(i) * h;
      for (int d = 0; d < h; ++d) G[b2 + d] += do_i[d];
      outer_acc(G + w2, do_i, ai, h, h);
      std::fill(da1.begin(), da1.end(), 0.0);
      matTvec_acc(P + w2, do_i, h, h, da1.data());
      for (int d = 0; d < h; ++d) dz1[d] = zi[d] > 0 ? da1[d] : 0.0;
      for (int d = 0; d < h; ++d) G[b1 + d] += dz1[d];
      outer_acc(G + w1, dz1.data(), feats + static_cast<size_t>(i) * in_dim, h, in_dim);
    }
  };
  embed_back(dvh, tr.ve_z1, tr.ve_a1, state.var_feats.data(), n, kVarDim, off.ve_w1, off.ve_b1,
             off.ve_w2, off.ve_b2);
  embed_back(dch, tr.ce_z1, tr.ce_a1, state.con_feats.data(), m, kConDim, off.ce_w1, off.ce_b1,
             off.ce_w2, off.ce_b2);

  return grad;
}

std::vector<double> policy_probs(const GatParams& params, const BranchState& state,
                                 EncoderMode mode) {
  return softmax(gat_forward(params, state, mode, nullptr));
}

void adam_step(GatParams& params, const std::vector<double>& grad, AdamState& st,
               const AdamConfig& cfg) {
  size_t N = params.flat.size();
  if (grad.size() != N) throw std::invalid_argument("adam_step: gradient size mismatch");
  if (st.m.size() != N) {
    st.m.assign(N, 0.0);
    st.v.assign(N, 0.0);
    st.t = 0;
  }
  ++st.t;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (size_t i = 0; i < N; ++i) {
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * grad[i];
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    double mhat = st.m[i] / bc1;
    double vhat = st.v[i] / bc2;
    params.flat[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

int LearnedPolicy::choose(const BranchContext& ctx) {
  BranchState st = featurize(ctx.lp, ctx.sol, ctx.stats);
  std::vector<double> logits = gat_forward(*params_, st, mode_, nullptr);
  int best = 0;
  for (size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = static_cast<int>(i);
  return best;
}

namespace {

constexpr char kCkptMagic[8] = {'L', 'I', 'M', 'I', 'P', 'C', 'K', '1'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const GatParams& params, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(kCkptMagic, 8);
  put<uint32_t>(f, 1);
  put<int32_t>(f, params.cfg.hidden);
  put<int32_t>(f, params.cfg.heads);
  put<int32_t>(f, kVarDim);
  put<int32_t>(f, kConDim);
  auto segs = param_layout(params.cfg);
  put<uint64_t>(f, segs.size());
  for (const auto& s : segs) {
    put<uint32_t>(f, static_cast<uint32_t>(s.name.size()));
    f.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    put<uint64_t>(f, s.offset);
    put<uint64_t>(f, s.rows * s.cols);
  }
  put<uint64_t>(f, params.flat.size());
  f.write(reinterpret_cast<const char*>(params.flat.data()),
          static_cast<std::streamsize>(params.flat.size() * sizeof(double)));
  if (!f) throw std::runtime_error("write failed: " + path);
}

GatParams load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kCkptMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  if (get<uint32_t>(f) != 1) throw std::runtime_error("checkpoint: unsupported version");
  GatParams p;
  p.cfg.hidden = get<int32_t>(f);
  p.cfg.heads = get<int32_t>(f);
  if (get<int32_t>(f) != kVarDim || get<int32_t>(f) != kConDim)
    throw std::runtime_error("checkpoint: feature layout mismatch");
  auto segs = param_layout(p.cfg);
  uint64_t nsegs = get<uint64_t>(f);
  if (nsegs != segs.size()) throw std::runtime_error("checkpoint: segment count mismatch");
  for (const auto& s : segs) {
    uint32_t len = get<uint32_t>(f);
    std::string name(len, '\0');
    f.read(name.data(), len);
    if (!f || name != s.name) throw std::runtime_error("checkpoint: segment name mismatch");
    if (get<uint64_t>(f) != s.offset || get<uint64_t>(f) != s.rows * s.cols)
      throw std::runtime_error("checkpoint: segment geometry mismatch");
  }
  uint64_t total = get<uint64_t>(f);
  if (total != param_count(p.cfg)) throw std::runtime_error("checkpoint: parameter count mismatch");
  p.flat.resize(total);
  f.read(reinterpret_cast<char*>(p.flat.data()),
         static_cast<std::streamsize>(total * sizeof(double)));
  if (!f) throw std::runtime_error("checkpoint: truncated parameter block");
  return p;
}

}  // namespace limip

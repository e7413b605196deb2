#include "limip/simplex.hpp"

#include <algorithm>
#include <cmath>

namespace limip {
namespace {

constexpr int kRefactorEvery = 100;
constexpr int kBlandAfterDegen = 1000;
constexpr double kRatioTie = 1e-12;
constexpr double kDegenStep = 1e-10;

// Bounded-variable two-phase primal simplex over the equality form
// Ax + s = b. Columns 0..n-1 are structural, n..n+m-1 slacks. The basis is
// held as a dense LU with an eta file between refactorizations; the working
// point is recomputed from the basis each iteration, which trades a little
// work for drift-free primal values.
class Simplex {
 public:
  explicit Simplex(const LpProblem& lp) : lp_(lp) {
    n_ = lp.num_vars();
    m_ = lp.num_rows();
    N_ = n_ + m_;
    const MilpInstance& inst = *lp.inst;
    col_ptr_.assign(n_ + 1, 0);
    for (const auto& row : inst.rows)
      for (const auto& e : row) col_ptr_[e.col + 1]++;
    for (int j = 0; j < n_; ++j) col_ptr_[j + 1] += col_ptr_[j];
    col_row_.resize(col_ptr_[n_]);
    col_val_.resize(col_ptr_[n_]);
    std::vector<int> fill(col_ptr_.begin(), col_ptr_.end() - 1);
    for (int i = 0; i < m_; ++i)
      for (const auto& e : inst.rows[i]) {
        col_row_[fill[e.col]] = i;
        col_val_[fill[e.col]] = e.coef;
        ++fill[e.col];
      }
    lb_.resize(N_);
    ub_.resize(N_);
    cost_.assign(N_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lb_[j] = lp.lower[j];
      ub_[j] = lp.upper[j];
      cost_[j] = inst.obj[j];
    }
    for (int i = 0; i < m_; ++i) {
      lb_[n_ + i] = 0.0;
      ub_[n_ + i] = kInf;
    }
  }

  LpSolution run(const Basis* warm) {
    LpSolution sol;
    sol.x.assign(n_, 0.0);
    sol.duals.assign(m_, 0.0);
    sol.reduced_costs.assign(n_, 0.0);
    sol.basis_status.assign(n_, VarStatus::AtLower);
    sol.row_tight.assign(m_, 0);

    for (int j = 0; j < N_; ++j)
      if (lb_[j] > ub_[j]) {
        sol.status = LpStatus::Infeasible;
        return sol;
      }

    if (!init_basis(warm)) {
      // Singular warm basis: restart cold.
      init_basis(nullptr);
    }

    const int iter_cap = 50 * (N_ > 0 ? N_ : 1);
    LpStatus status = LpStatus::IterLimit;
    while (true) {
      if (iters_ >= iter_cap) {
        status = LpStatus::IterLimit;
        break;
      }
      ++iters_;
      compute_xb();

      bool infeasible_basis = false;
      for (int s = 0; s < m_; ++s) {
        int i = basic_[s];
        if (xb_[s] < lb_[i] - kFeasTol || xb_[s] > ub_[i] + kFeasTol) {
          infeasible_basis = true;
          break;
        }
      }

      // Phase-dependent basic costs; nonbasic columns cost 0 in phase 1.
      std::vector<double> cb(m_, 0.0);
      for (int s = 0; s < m_; ++s) {
        int i = basic_[s];
        if (infeasible_basis) {
          if (xb_[s] < lb_[i] - kFeasTol)
            cb[s] = -1.0;
          else if (xb_[s] > ub_[i] + kFeasTol)
            cb[s] = 1.0;
        } else {
          cb[s] = cost_[i];
        }
      }
      std::vector<double> y = cb;
      btran(y);

      int q = -1;
      double best_score = -kOptTol;
      int dir = 0;
      for (int j = 0; j < N_; ++j) {
        VarStatus st = stat_[j];
        if (st == VarStatus::Basic) continue;
        if (lb_[j] == ub_[j]) continue;  // fixed, cannot move
        double d = (infeasible_basis ? 0.0 : cost_[j]) - dot_col(j, y);
        double score;
        int sigma;
        if (st == VarStatus::AtLower) {
          score = d;
          sigma = 1;
        } else if (st == VarStatus::AtUpper) {
          score = -d;
          sigma = -1;
        } else {  // FixedZero, free in both directions
          score = -std::abs(d);
          sigma = d < 0 ? 1 : -1;
        }
        if (score >= -kOptTol) continue;
        if (bland_) {
          q = j;
          dir = sigma;
          break;  // lowest eligible index
        }
        if (score < best_score) {
          best_score = score;
          q = j;
          dir = sigma;
        }
      }

      if (q < 0) {
        status = infeasible_basis ? LpStatus::Infeasible : LpStatus::Optimal;
        break;
      }

      std::vector<double> w(m_, 0.0);
      add_col(q, 1.0, w);
      ftran(w);

      // Bounded ratio test. delta_s is the rate of change of basic s per unit
      // increase of the entering displacement t >= 0.
      double t_best = kInf;
      int r = -1;
      VarStatus leave_to = VarStatus::AtLower;
      double best_piv = 0.0;
      for (int s = 0; s < m_; ++s) {
        double ws = w[s];
        if (std::abs(ws) <= kZeroPivotTol) continue;
        double delta = -dir * ws;
        int i = basic_[s];
        double xi = xb_[s];
        double t;
        VarStatus target;
        if (xi < lb_[i] - kFeasTol) {
          // Violated below: blocks only when moving up, at its lower bound.
          if (delta <= 0) continue;
          t = (lb_[i] - xi) / delta;
          target = VarStatus::AtLower;
        } else if (xi > ub_[i] + kFeasTol) {
          if (delta >= 0) continue;
          t = (xi - ub_[i]) / (-delta);
          target = VarStatus::AtUpper;
        } else if (delta < 0) {
          if (lb_[i] == -kInf) continue;
          t = (xi - lb_[i]) / (-delta);
          target = VarStatus::AtLower;
        } else {
          if (ub_[i] == kInf) continue;
          t = (ub_[i] - xi) / delta;
          target = VarStatus::AtUpper;
        }
        if (t < 0) t = 0;  // basic sitting just past its bound within tolerance
        bool take = false;
        if (t < t_best - kRatioTie) {
          take = true;
        } else if (t <= t_best + kRatioTie && r >= 0) {
          if (bland_)
            take = i < basic_[r];
          else
            take = std::abs(ws) > best_piv + kRatioTie ||
                   (std::abs(ws) >= best_piv - kRatioTie && i < basic_[r]);
        } else if (r < 0 && t < kInf) {
          take = true;
        }
        if (take) {
          t_best = t;
          r = s;
          leave_to = target;
          best_piv = std::abs(ws);
        }
      }

      double span = ub_[q] - lb_[q];  // inf for one-sided or free columns
      if (stat_[q] == VarStatus::FixedZero) span = kInf;
      if (span < t_best - kRatioTie) {
        // Bound flip, no basis change.
        stat_[q] = stat_[q] == VarStatus::AtLower ? VarStatus::AtUpper : VarStatus::AtLower;
        continue;
      }
      if (r < 0) {
        // Nothing blocks. With a feasible basis this is genuine unboundedness;
        // in phase 1 it can only be a numerical stall.
        status = infeasible_basis ? LpStatus::IterLimit : LpStatus::Unbounded;
        break;
      }

      if (t_best <= kDegenStep) {
        if (++degen_ >= kBlandAfterDegen) bland_ = true;
      }
      int leaving = basic_[r];
      stat_[leaving] = leave_to;
      stat_[q] = VarStatus::Basic;
      basic_[r] = q;
      etas_.push_back({r, w});
      if (static_cast<int>(etas_.size()) >= kRefactorEvery) {
        if (!factorize()) {
          init_basis(nullptr);  // numerical breakdown: restart cold
        }
      }
    }

    finalize(sol, status);
    return sol;
  }

 private:
  bool init_basis(const Basis* warm) {
    stat_.assign(N_, VarStatus::AtLower);
    basic_.assign(m_, 0);
    if (warm && !warm->empty() &&
        static_cast<int>(warm->status.size()) == N_ &&
        static_cast<int>(warm->basic.size()) == m_) {
      std::vector<uint8_t> in_basis(N_, 0);
      bool ok = true;
      for (int s = 0; s < m_ && ok; ++s) {
        int j = warm->basic[s];
        if (j < 0 || j >= N_ || in_basis[j]) ok = false;
        else in_basis[j] = 1;
      }
      if (ok) {
        basic_ = warm->basic;
        for (int j = 0; j < N_; ++j) {
          if (in_basis[j]) {
            stat_[j] = VarStatus::Basic;
          } else {
            VarStatus st = warm->status[j];
            if (st == VarStatus::Basic) st = VarStatus::AtLower;
            // Reconcile the stored status with the current bounds.
            if (st == VarStatus::AtLower && lb_[j] == -kInf)
              st = ub_[j] < kInf ? VarStatus::AtUpper : VarStatus::FixedZero;
            if (st == VarStatus::AtUpper && ub_[j] == kInf)
              st = lb_[j] > -kInf ? VarStatus::AtLower : VarStatus::FixedZero;
            if (st == VarStatus::FixedZero && (lb_[j] > -kInf || ub_[j] < kInf))
              st = lb_[j] > -kInf ? VarStatus::AtLower : VarStatus::AtUpper;
            stat_[j] = st;
          }
        }
        if (factorize()) return true;
        return false;
      }
    }
    for (int j = 0; j < n_; ++j) {
      if (lb_[j] > -kInf)
        stat_[j] = VarStatus::AtLower;
      else if (ub_[j] < kInf)
        stat_[j] = VarStatus::AtUpper;
      else
        stat_[j] = VarStatus::FixedZero;
    }
    for (int i = 0; i < m_; ++i) {
      basic_[i] = n_ + i;
      stat_[n_ + i] = VarStatus::Basic;
    }
    bool ok = factorize();
    return ok;  // identity basis, always factorizable
  }

  // Dense LU with partial pivoting of the current basis matrix.
  bool factorize() {
    lu_.assign(static_cast<size_t>(m_) * m_, 0.0);
    perm_.resize(m_);
    etas_.clear();
    for (int s = 0; s < m_; ++s) {
      std::vector<double> col(m_, 0.0);
      add_col(basic_[s], 1.0, col);
      for (int i = 0; i < m_; ++i) lu_[static_cast<size_t>(i) * m_ + s] = col[i];
    }
    for (int i = 0; i < m_; ++i) perm_[i] = i;
    for (int k = 0; k < m_; ++k) {
      int p = k;
      double best = std::abs(lu_[static_cast<size_t>(k) * m_ + k]);
      for (int i = k + 1; i < m_; ++i) {
        double v = std::abs(lu_[static_cast<size_t>(i) * m_ + k]);
        if (v > best) {
          best = v;
          p = i;
        }
      }
      if (best <= kZeroPivotTol) return false;
      if (p != k) {
        for (int c = 0; c < m_; ++c)
          std::swap(lu_[static_cast<size_t>(p) * m_ + c], lu_[static_cast<size_t>(k) * m_ + c]);
        std::swap(perm_[p], perm_[k]);
      }
      double piv = lu_[static_cast<size_t>(k) * m_ + k];
      for (int i = k + 1; i < m_; ++i) {
        double f = lu_[static_cast<size_t>(i) * m_ + k] / piv;
        lu_[static_cast<size_t>(i) * m_ + k] = f;
        if (f != 0.0)
          for (int c = k + 1; c < m_; ++c)
            lu_[static_cast<size_t>(i) * m_ + c] -= f * lu_[static_cast<size_t>(k) * m_ + c];
      }
    }
    return true;
  }

  // Solve B z = v in place.
  void ftran(std::vector<double>& v) const {
    std::vector<double> z(m_);
    for (int k = 0; k < m_; ++k) z[k] = v[perm_[k]];
    for (int k = 0; k < m_; ++k) {
      double zk = z[k];
      if (zk != 0.0)
        for (int i = k + 1; i < m_; ++i) z[i] -= lu_[static_cast<size_t>(i) * m_ + k] * zk;
    }
    for (int k = m_ - 1; k >= 0; --k) {
      double zk = z[k] / lu_[static_cast<size_t>(k) * m_ + k];
      z[k] = zk;
      if (zk != 0.0)
        for (int i = 0; i < k; ++i) z[i] -= lu_[static_cast<size_t>(i) * m_ + k] * zk;
    }
    for (const auto& e : etas_) {
      double zr = z[e.r] / e.w[e.r];
      for (int i = 0; i < m_; ++i) z[i] -= e.w[i] * zr;
      z[e.r] = zr;
    }
    v = std::move(z);
  }

  // Solve y'B = v' in place.
  void btran(std::vector<double>& v) const {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double acc = 0.0;
      for (int i = 0; i < m_; ++i)
        if (i != it->r) acc += v[i] * it->w[i];
      v[it->r] = (v[it->r] - acc) / it->w[it->r];
    }
    std::vector<double> s(m_);
    for (int k = 0; k < m_; ++k) {
      double acc = v[k];
      for (int i = 0; i < k; ++i) acc -= lu_[static_cast<size_t>(i) * m_ + k] * s[i];
      s[k] = acc / lu_[static_cast<size_t>(k) * m_ + k];
    }
    std::vector<double> t(m_);
    for (int k = m_ - 1; k >= 0; --k) {
      double acc = s[k];
      for (int i = k + 1; i < m_; ++i) acc -= lu_[static_cast<size_t>(i) * m_ + k] * t[i];
      t[k] = acc;
    }
    for (int k = 0; k < m_; ++k) v[perm_[k]] = t[k];
  }

  void add_col(int j, double mult, std::vector<double>& out) const {
    if (j < n_) {
      for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) out[col_row_[k]] += mult * col_val_[k];
    } else {
      out[j - n_] += mult;
    }
  }

  double dot_col(int j, const std::vector<double>& y) const {
    if (j >= n_) return y[j - n_];
    double acc = 0.0;
    for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) acc += y[col_row_[k]] * col_val_[k];
    return acc;
  }

  double nb_value(int j) const {
    switch (stat_[j]) {
      case VarStatus::AtLower: return lb_[j];
      case VarStatus::AtUpper: return ub_[j];
      default: return 0.0;
    }
  }

  void compute_xb() {
    std::vector<double> rhs = lp_.inst->rhs;
    for (int j = 0; j < n_; ++j) {
      if (stat_[j] == VarStatus::Basic) continue;
      double v = nb_value(j);
      if (v != 0.0) add_col(j, -v, rhs);
    }
    // Nonbasic slacks sit at zero and contribute nothing.
    ftran(rhs);
    xb_ = std::move(rhs);
  }

  void finalize(LpSolution& sol, LpStatus status) {
    sol.status = status;
    sol.iterations = iters_;
    for (int j = 0; j < n_; ++j) sol.x[j] = nb_value(j);
    for (int s = 0; s < m_; ++s)
      if (basic_[s] < n_) sol.x[basic_[s]] = xb_[s];
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) obj += cost_[j] * sol.x[j];
    sol.objective = obj;

    std::vector<double> cb(m_);
    for (int s = 0; s < m_; ++s) cb[s] = cost_[basic_[s]];
    btran(cb);
    sol.duals = cb;
    for (int j = 0; j < n_; ++j) sol.reduced_costs[j] = cost_[j] - dot_col(j, sol.duals);
    for (int j = 0; j < n_; ++j) sol.basis_status[j] = stat_[j];
    for (int i = 0; i < m_; ++i) {
      double ax = 0.0;
      for (const auto& e : lp_.inst->rows[i]) ax += e.coef * sol.x[e.col];
      sol.row_tight[i] = lp_.inst->rhs[i] - ax <= kFeasTol ? 1 : 0;
    }
    sol.basis.status = stat_;
    sol.basis.basic = basic_;
  }

  const LpProblem& lp_;
  int n_ = 0, m_ = 0, N_ = 0;
  std::vector<int> col_ptr_, col_row_;
  std::vector<double> col_val_;
  std::vector<double> lb_, ub_, cost_;
  std::vector<VarStatus> stat_;
  std::vector<int> basic_;
  std::vector<double> lu_;
  std::vector<int> perm_;
  struct Eta {
    int r;
    std::vector<double> w;
  };
  std::vector<Eta> etas_;
  std::vector<double> xb_;
  int iters_ = 0;
  int degen_ = 0;
  bool bland_ = false;
};

}  // namespace

LpSolution solve_lp(const LpProblem& lp, const Basis* warm) {
  if (lp.infeasible_by_bounds) {
    LpSolution sol;
    sol.status = LpStatus::Infeasible;
    sol.x.assign(lp.num_vars(), 0.0);
    sol.duals.assign(lp.num_rows(), 0.0);
    sol.reduced_costs.assign(lp.num_vars(), 0.0);
    sol.basis_status.assign(lp.num_vars(), VarStatus::AtLower);
    sol.row_tight.assign(lp.num_rows(), 0);
    return sol;
  }
  Simplex s(lp);
  return s.run(warm);
}

LpSolution solve_child(const LpProblem& lp, const VarDomainPatch& patch, const Basis* warm) {
  LpProblem child = lp;
  child.lower[patch.var] = std::max(child.lower[patch.var], patch.new_lower);
  child.upper[patch.var] = std::min(child.upper[patch.var], patch.new_upper);
  if (child.lower[patch.var] > child.upper[patch.var]) child.infeasible_by_bounds = true;
  return solve_lp(child, warm);
}

double dual_objective(const LpProblem& lp, const LpSolution& sol) {
  double acc = 0.0;
  for (int i = 0; i < lp.num_rows(); ++i) acc += sol.duals[i] * lp.inst->rhs[i];
  for (int j = 0; j < lp.num_vars(); ++j) {
    double d = sol.reduced_costs[j];
    if (d > kOptTol && lp.lower[j] > -kInf)
      acc += d * lp.lower[j];
    else if (d < -kOptTol && lp.upper[j] < kInf)
      acc += d * lp.upper[j];
  }
  return acc;
}

}  // namespace limip

// Built-in conic solver: homogeneous self-dual interior-point method for
//   min c'x  s.t.  A x = b,  G x + s = h,  s in K,
// K a product of a nonnegative orthant and second-order cones, with
// Nesterov-Todd scaling and Mehrotra predictor-corrector steps. The
// embedding carries (x, y, z, s, tau, kappa); tau -> 0 with kappa > 0
// yields infeasibility certificates instead of a solution.

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "rdnr/conic.hpp"

namespace rdnr::conic {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using VecX = Eigen::VectorXd;

struct StdForm {
  int n = 0, p = 0, m = 0;  // vars, eq rows, cone rows
  SpMat A, G;
  VecX b, h, c;
  double c0 = 0.0;
  int nnl = 0;                  // leading nonnegative rows of the cone
  std::vector<int> soc_dims;    // then SOC blocks
  // provenance of cone rows: [le rows][lb rows][ub rows][soc blocks]
  int n_le = 0;
  std::vector<int> lb_vars, ub_vars;
  // fixed-variable elimination
  std::vector<int> keep;   // reduced col -> original var
  Vec fixed;               // original var -> value (NaN when kept)
  bool trivially_infeasible = false;
};

bool is_fixed(const ConicProgram& P, int j) {
  return P.lb[j] > -kInf && P.ub[j] < kInf && P.ub[j] - P.lb[j] < 1e-12;
}

StdForm build_std(const ConicProgram& P) {
  StdForm S;
  S.c0 = P.c0;
  S.fixed.assign(P.n, std::numeric_limits<double>::quiet_NaN());
  std::vector<int> col(P.n, -1);
  for (int j = 0; j < P.n; ++j) {
    if (P.lb[j] > P.ub[j] + 1e-12) S.trivially_infeasible = true;
    if (is_fixed(P, j)) {
      S.fixed[j] = 0.5 * (P.lb[j] + P.ub[j]);
    } else {
      col[j] = static_cast<int>(S.keep.size());
      S.keep.push_back(j);
    }
  }
  S.n = static_cast<int>(S.keep.size());
  S.c = VecX::Zero(S.n);
  for (int j = 0; j < P.n; ++j) {
    if (col[j] >= 0)
      S.c[col[j]] = P.c[j];
    else
      S.c0 += P.c[j] * S.fixed[j];
  }

  std::vector<Triplet> ta, tg;
  std::vector<double> bb, hh;
  auto reduce = [&](const SpRow& row, double rhs, std::vector<Triplet>& out,
                    int irow) {
    for (auto [j, v] : row) {
      if (col[j] >= 0)
        out.push_back({irow, col[j], v});
      else
        rhs -= v * S.fixed[j];
    }
    return rhs;
  };

  for (std::size_t i = 0; i < P.eq_rows.size(); ++i) {
    double rhs = reduce(P.eq_rows[i], P.eq_rhs[i], ta, static_cast<int>(bb.size()));
    bool empty = true;
    for (auto [j, v] : P.eq_rows[i])
      if (col[j] >= 0 && v != 0.0) empty = false;
    if (empty && std::abs(rhs) > 1e-9) S.trivially_infeasible = true;
    bb.push_back(rhs);
  }
  S.p = static_cast<int>(bb.size());

  auto add_cone_row = [&](const SpRow& row, double rhs) {
    int irow = static_cast<int>(hh.size());
    rhs = reduce(row, rhs, tg, irow);
    hh.push_back(rhs);
    return rhs;
  };
  for (std::size_t i = 0; i < P.le_rows.size(); ++i) {
    double rhs = add_cone_row(P.le_rows[i], P.le_rhs[i]);
    bool empty = true;
    for (auto [j, v] : P.le_rows[i])
      if (col[j] >= 0 && v != 0.0) empty = false;
    if (empty && rhs < -1e-9) S.trivially_infeasible = true;
  }
  S.n_le = static_cast<int>(hh.size());
  for (int j = 0; j < P.n; ++j) {
    if (col[j] < 0) continue;
    if (P.lb[j] > -kInf) {
      add_cone_row({{j, -1.0}}, -P.lb[j]);
      S.lb_vars.push_back(j);
    }
  }
  for (int j = 0; j < P.n; ++j) {
    if (col[j] < 0) continue;
    if (P.ub[j] < kInf) {
      add_cone_row({{j, 1.0}}, P.ub[j]);
      S.ub_vars.push_back(j);
    }
  }
  S.nnl = static_cast<int>(hh.size());
  if (S.nnl == 0 && P.socs.empty()) {
    // keep the cone nonempty so the embedding is well defined
    hh.push_back(1.0);
    S.nnl = 1;
  }
  for (const auto& blk : P.socs) {
    S.soc_dims.push_back(static_cast<int>(blk.rows.size()));
    for (std::size_t r = 0; r < blk.rows.size(); ++r) {
      // s_row = offset + row'x  =>  G row = -row, h = offset
      int irow = static_cast<int>(hh.size());
      double rhs = blk.offsets[r];
      for (auto [j, v] : blk.rows[r]) {
        if (col[j] >= 0)
          tg.push_back({irow, col[j], -v});
        else
          rhs += v * S.fixed[j];
      }
      hh.push_back(rhs);
    }
  }
  S.m = static_cast<int>(hh.size());

  S.A.resize(S.p, S.n);
  S.A.setFromTriplets(ta.begin(), ta.end());
  S.G.resize(S.m, S.n);
  S.G.setFromTriplets(tg.begin(), tg.end());
  S.b = Eigen::Map<VecX>(bb.data(), S.p);
  S.h = Eigen::Map<VecX>(hh.data(), S.m);
  return S;
}

// ---- cone algebra ------------------------------------------------------

struct Scaling {
  // nonneg part
  VecX w2_nn;   // s_i / z_i
  VecX lam_nn;  // sqrt(s_i z_i)
  // soc part
  std::vector<double> eta;          // per block
  std::vector<VecX> wbar;           // per block, unit-hyperbolic point
  std::vector<VecX> lam_soc;        // per block
};

double soc_res(const double* u, int d) {
  double t = 0;
  for (int i = 1; i < d; ++i) t += u[i] * u[i];
  return u[0] * u[0] - t;
}

// W v for one SOC block (W = eta * M(wbar), symmetric)
void soc_W(const VecX& wbar, double eta, const double* v, double* out) {
  int d = static_cast<int>(wbar.size());
  double dot = 0;
  for (int i = 1; i < d; ++i) dot += wbar[i] * v[i];
  out[0] = eta * (wbar[0] * v[0] + dot);
  double f = v[0] + dot / (1.0 + wbar[0]);
  for (int i = 1; i < d; ++i) out[i] = eta * (v[i] + wbar[i] * f);
}

// W^{-1} v for one SOC block
void soc_Winv(const VecX& wbar, double eta, const double* v, double* out) {
  int d = static_cast<int>(wbar.size());
  double dot = 0;
  for (int i = 1; i < d; ++i) dot += wbar[i] * v[i];
  out[0] = (wbar[0] * v[0] - dot) / eta;
  double f = -v[0] + dot / (1.0 + wbar[0]);
  for (int i = 1; i < d; ++i) out[i] = (v[i] + wbar[i] * f) / eta;
}

// jordan product u o v
void soc_prod(const double* u, const double* v, int d, double* out) {
  double dot = 0;
  for (int i = 0; i < d; ++i) dot += u[i] * v[i];
  out[0] = dot;
  for (int i = 1; i < d; ++i) out[i] = u[0] * v[i] + v[0] * u[i];
}

// solve lam o q = r
void soc_div(const double* lam, const double* r, int d, double* q) {
  double det = soc_res(lam, d);
  double dot = 0;
  for (int i = 1; i < d; ++i) dot += lam[i] * r[i];
  q[0] = (lam[0] * r[0] - dot) / det;
  for (int i = 1; i < d; ++i) q[i] = (r[i] - q[0] * lam[i]) / lam[0];
}

// largest step a with u + a du staying in the cone (returns kInf if always)
double soc_step(const double* u, const double* du, int d) {
  double a = soc_res(du, d);
  double b = 0;
  for (int i = 0; i < d; ++i) b += u[i] * du[i] * (i == 0 ? 1.0 : -1.0);
  b *= 2.0;
  double c = soc_res(u, d);
  double best = kInf;
  // roots of a t^2 + b t + c = 0
  double disc = b * b - 4 * a * c;
  if (disc >= 0) {
    double sq = std::sqrt(disc);
    for (double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
      if (std::isfinite(t) && t > 1e-14) best = std::min(best, t);
    }
    if (a == 0.0 && b < 0) best = std::min(best, -c / b);
  }
  if (du[0] < 0) best = std::min(best, -u[0] / du[0]);
  return best;
}

struct Point {
  VecX x, y, z, s;
  double tau = 1.0, kap = 1.0;
};

// Sparse LDL' for the symmetric quasidefinite KKT matrix, up-looking with
// an AMD ordering.  Unlike a plain Cholesky this knows the expected pivot
// sign of every row (+ for primal columns, - for the multiplier rows), so a
// pivot destroyed by cancellation is replaced in place by a small value of
// the right sign instead of aborting the factorization.  The outer solve
// runs iterative refinement, which absorbs the perturbation.
class SqdLdl {
 public:
  // pattern-only pass; n_plus leading rows of K expect positive pivots
  void analyze(const SpMat& K, int n_plus) {
    N_ = static_cast<int>(K.rows());
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pv;
    Eigen::AMDOrdering<int> amd;
    amd(K, pv);
    post_.assign(N_, 0);
    for (int k = 0; k < N_; ++k) post_[pv.indices()[k]] = k;
    sign_.assign(N_, -1.0);
    for (int i = 0; i < n_plus; ++i) sign_[post_[i]] = 1.0;

    // permuted upper-triangular pattern in CSC plus a value scatter map
    srcmap_.assign(K.nonZeros(), -1);
    std::vector<int> cnt(N_, 0);
    int idx = 0;
    for (int c = 0; c < K.outerSize(); ++c)
      for (SpMat::InnerIterator it(K, c); it; ++it, ++idx) {
        int pr = post_[it.row()], pc = post_[it.col()];
        if (pr <= pc) cnt[pc]++;
      }
    Up_.assign(N_ + 1, 0);
    for (int c = 0; c < N_; ++c) Up_[c + 1] = Up_[c] + cnt[c];
    Ui_.assign(Up_[N_], 0);
    Ux_.assign(Up_[N_], 0.0);
    std::vector<int> head(Up_.begin(), Up_.end() - 1);
    idx = 0;
    for (int c = 0; c < K.outerSize(); ++c)
      for (SpMat::InnerIterator it(K, c); it; ++it, ++idx) {
        int pr = post_[it.row()], pc = post_[it.col()];
        if (pr > pc) continue;
        int slot = head[pc]++;
        Ui_[slot] = pr;
        srcmap_[idx] = slot;
      }

    // elimination tree and column counts of L
    parent_.assign(N_, -1);
    std::vector<int> lnz(N_, 0), flag(N_, -1);
    for (int k = 0; k < N_; ++k) {
      flag[k] = k;
      for (int p = Up_[k]; p < Up_[k + 1]; ++p) {
        int i = Ui_[p];
        while (i < k && flag[i] != k) {
          if (parent_[i] == -1) parent_[i] = k;
          lnz[i]++;
          flag[i] = k;
          i = parent_[i];
        }
      }
    }
    Lp_.assign(N_ + 1, 0);
    for (int c = 0; c < N_; ++c) Lp_[c + 1] = Lp_[c] + lnz[c];
    Li_.assign(Lp_[N_], 0);
    Lx_.assign(Lp_[N_], 0.0);
    D_.assign(N_, 0.0);
    lnz_.assign(N_, 0);
    flag_.assign(N_, -1);
    pat_.assign(N_, 0);
    y_.assign(N_, 0.0);
  }

  // refresh values from K (same pattern as analyze) and factor; returns the
  // number of repaired pivots, or -1 when the factor turned non-finite.
  // dyn detects a bad pivot, rep replaces it: rep has to sit well above dyn
  // or the 1/d column scaling poisons every later column of L
  int factor(const SpMat& K, double dyn, double rep) {
    int idx = 0;
    for (int c = 0; c < K.outerSize(); ++c)
      for (SpMat::InnerIterator it(K, c); it; ++it, ++idx)
        if (srcmap_[idx] >= 0) Ux_[srcmap_[idx]] = it.value();
    std::fill(lnz_.begin(), lnz_.end(), 0);
    std::fill(flag_.begin(), flag_.end(), -1);
    int repairs = 0;
    for (int k = 0; k < N_; ++k) {
      int top = N_;
      flag_[k] = k;
      y_[k] = 0.0;
      for (int p = Up_[k]; p < Up_[k + 1]; ++p) {
        int i = Ui_[p];
        y_[i] += Ux_[p];
        int len = 0;
        while (i < k && flag_[i] != k) {
          pat_[len++] = i;
          flag_[i] = k;
          i = parent_[i];
        }
        while (len > 0) pat_[--top] = pat_[--len];
      }
      double d = y_[k];
      y_[k] = 0.0;
      for (int s = top; s < N_; ++s) {
        int i = pat_[s];
        double yi = y_[i];
        y_[i] = 0.0;
        double lki = yi / D_[i];
        int p2 = Lp_[i] + lnz_[i];
        for (int p = Lp_[i]; p < p2; ++p) y_[Li_[p]] -= Lx_[p] * yi;
        d -= lki * yi;
        Li_[p2] = k;
        Lx_[p2] = lki;
        lnz_[i]++;
      }
      if (!std::isfinite(d)) return -1;
      if (sign_[k] * d <= dyn) {  // zero, wrong sign, or dangerously small
        d = sign_[k] * rep;
        ++repairs;
      }
      D_[k] = d;
    }
    return repairs;
  }

  VecX solve(const VecX& b) const {
    VecX x(N_);
    for (int i = 0; i < N_; ++i) x[post_[i]] = b[i];
    for (int k = 0; k < N_; ++k) {
      int p2 = Lp_[k] + lnz_[k];
      for (int p = Lp_[k]; p < p2; ++p) x[Li_[p]] -= Lx_[p] * x[k];
    }
    for (int k = 0; k < N_; ++k) x[k] /= D_[k];
    for (int k = N_ - 1; k >= 0; --k) {
      int p2 = Lp_[k] + lnz_[k];
      for (int p = Lp_[k]; p < p2; ++p) x[k] -= Lx_[p] * x[Li_[p]];
    }
    VecX out(N_);
    for (int i = 0; i < N_; ++i) out[i] = x[post_[i]];
    return out;
  }

 private:
  int N_ = 0;
  std::vector<int> post_;      // original row -> permuted position
  std::vector<double> sign_;   // expected pivot sign per permuted row
  std::vector<int> Up_, Ui_, srcmap_;
  std::vector<double> Ux_;
  std::vector<int> parent_, Lp_, Li_, lnz_, flag_, pat_;
  std::vector<double> Lx_, D_, y_;
};

class Solver {
 public:
  Solver(const StdForm& S, const SolveOptions& o) : S_(S), o_(o) {}

  ConicSolution run();

 private:
  const StdForm& S_;
  const SolveOptions& o_;
  SqdLdl ldl_;
  SpMat K_;          // regularized
  SpMat Ks_;         // equilibrated copy, same pattern
  VecX equil_;       // diagonal of the equilibration
  const Scaling* Wcur_ = nullptr;
  bool analyzed_ = false;
  bool ldl_analyzed_ = false;
  double reg_ = 1e-10;
  double built_reg_ = -1.0;  // reg baked into the x/y diagonal triplets

  void compute_scaling(const Point& P, Scaling& W) const;
  void assemble(const Scaling& W);
  int factorize();  // repaired-pivot count, -1 when the factor turned non-finite
  // one triangular solve through the equilibrated factors
  VecX raw_solve(const VecX& r) const;
  // solves K u = r with iterative refinement; r packed (n+p+m)
  VecX solve_kkt(const VecX& r) const;
  VecX apply_W(const Scaling& W, const VecX& v) const;
  VecX apply_Winv(const Scaling& W, const VecX& v) const;
  VecX jordan_prod(const Scaling&, const VecX& u, const VecX& v) const;
  VecX jordan_div_lam(const Scaling& W, const VecX& r) const;
  VecX lam_vec(const Scaling& W) const;
  double cone_step(const VecX& u, const VecX& du) const;
};

void Solver::compute_scaling(const Point& P, Scaling& W) const {
  W.w2_nn.resize(S_.nnl);
  W.lam_nn.resize(S_.nnl);
  for (int i = 0; i < S_.nnl; ++i) {
    W.w2_nn[i] = P.s[i] / P.z[i];
    W.lam_nn[i] = std::sqrt(P.s[i] * P.z[i]);
  }
  W.eta.clear();
  W.wbar.clear();
  W.lam_soc.clear();
  int off = S_.nnl;
  for (int d : S_.soc_dims) {
    const double* s = P.s.data() + off;
    const double* z = P.z.data() + off;
    double sres = soc_res(s, d), zres = soc_res(z, d);
    if (o_.verbose && (!(sres > 0) || !(zres > 0)))
      std::fprintf(stderr, "scaling: nonpositive cone residual s %.3e z %.3e\n",
                   sres, zres);
    double eta = std::pow(sres / zres, 0.25);
    VecX sb(d), zb(d);
    for (int i = 0; i < d; ++i) {
      sb[i] = s[i] / std::sqrt(sres);
      zb[i] = z[i] / std::sqrt(zres);
    }
    double dot = sb.dot(zb);
    VecX wb(d);
    double denom = std::sqrt(2.0 * (1.0 + dot));
    wb[0] = (sb[0] + zb[0]) / denom;
    for (int i = 1; i < d; ++i) wb[i] = (sb[i] - zb[i]) / denom;
    W.eta.push_back(eta);
    W.wbar.push_back(wb);
    VecX lam(d);
    soc_W(wb, eta, z, lam.data());
    W.lam_soc.push_back(lam);
    off += d;
  }
}

void Solver::assemble(const Scaling& W) {
  const int n = S_.n, p = S_.p, m = S_.m;
  if (built_reg_ != reg_) analyzed_ = false;
  if (!analyzed_) {
    std::vector<Triplet> t;
    for (int j = 0; j < n; ++j) t.push_back({j, j, reg_});
    for (int k = 0; k < S_.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(S_.A, k); it; ++it) {
        t.push_back({n + static_cast<int>(it.row()), static_cast<int>(it.col()),
                     it.value()});
        t.push_back({static_cast<int>(it.col()), n + static_cast<int>(it.row()),
                     it.value()});
      }
    for (int k = 0; k < S_.G.outerSize(); ++k)
      for (SpMat::InnerIterator it(S_.G, k); it; ++it) {
        t.push_back({n + p + static_cast<int>(it.row()),
                     static_cast<int>(it.col()), it.value()});
        t.push_back({static_cast<int>(it.col()),
                     n + p + static_cast<int>(it.row()), it.value()});
      }
    for (int i = 0; i < p; ++i) t.push_back({n + i, n + i, -reg_});
    for (int i = 0; i < S_.nnl; ++i)
      t.push_back({n + p + i, n + p + i, -1.0});
    int off = S_.nnl;
    for (int d : S_.soc_dims) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          t.push_back({n + p + off + i, n + p + off + j, (i == j) ? -1.0 : 0.0});
      off += d;
    }
    K_.resize(n + p + m, n + p + m);
    K_.setFromTriplets(t.begin(), t.end());
    analyzed_ = true;
    built_reg_ = reg_;
  }
  Wcur_ = &W;
  // refresh -W^2 - reg block values
  for (int i = 0; i < S_.nnl; ++i)
    K_.coeffRef(n + p + i, n + p + i) = -W.w2_nn[i] - reg_;
  int off = S_.nnl;
  for (std::size_t k = 0; k < S_.soc_dims.size(); ++k) {
    int d = S_.soc_dims[k];
    const VecX& wb = W.wbar[k];
    double e2 = W.eta[k] * W.eta[k];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double Jij = (i == j) ? (i == 0 ? 1.0 : -1.0) : 0.0;
        double v = -e2 * (2.0 * wb[i] * wb[j] - Jij);
        K_.coeffRef(n + p + off + i, n + p + off + j) =
            v - (i == j ? reg_ : 0.0);
      }
    off += d;
  }
}

int Solver::factorize() {
  // Ruiz equilibration first: near convergence the scaling block spans ~20
  // orders of magnitude, which both starves the pivots and distorts the
  // dynamic-repair threshold.  D K D has unit row maxima, the solve is
  // unscaled again in raw_solve.
  const int N = static_cast<int>(K_.rows());
  equil_ = VecX::Ones(N);
  for (int pass = 0; pass < 3; ++pass) {
    VecX mx = VecX::Zero(N);
    for (int k = 0; k < K_.outerSize(); ++k)
      for (SpMat::InnerIterator it(K_, k); it; ++it) {
        double v = std::abs(it.value()) * equil_[it.row()] * equil_[it.col()];
        if (v > mx[it.row()]) mx[it.row()] = v;
      }
    for (int i = 0; i < N; ++i)
      if (mx[i] > 0) equil_[i] /= std::sqrt(mx[i]);
  }
  Ks_ = K_;
  for (int k = 0; k < Ks_.outerSize(); ++k)
    for (SpMat::InnerIterator it(Ks_, k); it; ++it)
      it.valueRef() *= equil_[it.row()] * equil_[it.col()];
  if (!ldl_analyzed_) {
    ldl_.analyze(Ks_, S_.n);
    ldl_analyzed_ = true;
  }
  int repairs = ldl_.factor(Ks_, 1e-12, 1e-7);
  if (o_.verbose && repairs > 0)
    std::fprintf(stderr, "  factorization repaired %d pivots\n", repairs);
  return repairs;
}

VecX Solver::raw_solve(const VecX& r) const {
  return equil_.cwiseProduct(ldl_.solve(equil_.cwiseProduct(r).eval()));
}

VecX Solver::solve_kkt(const VecX& r) const {
  const int n = S_.n, p = S_.p, m = S_.m;
  // refine against the proximally regularized operator: that is the system
  // we intend to solve, so refinement converges at any regularization level
  // (the factorization itself carries rounding at the equilibrated scale)
  auto apply_true = [&](const VecX& u) {
    VecX out(n + p + m);
    VecX ux = u.head(n), uy = u.segment(n, p), uz = u.tail(m);
    out.head(n) = S_.A.transpose() * uy + S_.G.transpose() * uz + reg_ * ux;
    out.segment(n, p) = S_.A * ux - reg_ * uy;
    out.tail(m) =
        S_.G * ux - apply_W(*Wcur_, apply_W(*Wcur_, uz)) - reg_ * uz;
    return out;
  };
  // keep the best iterate; repaired pivots can make a refinement pass
  // overshoot, in which case further passes only amplify the error
  VecX u = raw_solve(r);
  VecX best = u;
  double best_res = kInf;
  for (int pass = 0; pass < 4; ++pass) {
    VecX res = r - apply_true(u);
    double rn = res.norm();
    if (rn < best_res) {
      best_res = rn;
      best = u;
    }
    if (pass == 3 || rn <= 1e-14 * (1.0 + r.norm())) break;
    u += raw_solve(res);
  }
  return best;
}

VecX Solver::apply_W(const Scaling& W, const VecX& v) const {
  VecX out(S_.m);
  for (int i = 0; i < S_.nnl; ++i) out[i] = std::sqrt(W.w2_nn[i]) * v[i];
  int off = S_.nnl;
  for (std::size_t k = 0; k < S_.soc_dims.size(); ++k) {
    soc_W(W.wbar[k], W.eta[k], v.data() + off, out.data() + off);
    off += S_.soc_dims[k];
  }
  return out;
}

VecX Solver::apply_Winv(const Scaling& W, const VecX& v) const {
  VecX out(S_.m);
  for (int i = 0; i < S_.nnl; ++i) out[i] = v[i] / std::sqrt(W.w2_nn[i]);
  int off = S_.nnl;
  for (std::size_t k = 0; k < S_.soc_dims.size(); ++k) {
    soc_Winv(W.wbar[k], W.eta[k], v.data() + off, out.data() + off);
    off += S_.soc_dims[k];
  }
  return out;
}

VecX Solver::jordan_prod(const Scaling&, const VecX& u, const VecX& v) const {
  VecX out(S_.m);
  for (int i = 0; i < S_.nnl; ++i) out[i] = u[i] * v[i];
  int off = S_.nnl;
  for (int d : S_.soc_dims) {
    soc_prod(u.data() + off, v.data() + off, d, out.data() + off);
    off += d;
  }
  return out;
}

VecX Solver::jordan_div_lam(const Scaling& W, const VecX& r) const {
  VecX out(S_.m);
  for (int i = 0; i < S_.nnl; ++i) out[i] = r[i] / W.lam_nn[i];
  int off = S_.nnl;
  for (std::size_t k = 0; k < S_.soc_dims.size(); ++k) {
    soc_div(W.lam_soc[k].data(), r.data() + off, S_.soc_dims[k],
            out.data() + off);
    off += S_.soc_dims[k];
  }
  return out;
}

VecX Solver::lam_vec(const Scaling& W) const {
  VecX lam(S_.m);
  for (int i = 0; i < S_.nnl; ++i) lam[i] = W.lam_nn[i];
  int off = S_.nnl;
  for (std::size_t k = 0; k < S_.soc_dims.size(); ++k) {
    lam.segment(off, S_.soc_dims[k]) = W.lam_soc[k];
    off += S_.soc_dims[k];
  }
  return lam;
}

double Solver::cone_step(const VecX& u, const VecX& du) const {
  double a = kInf;
  for (int i = 0; i < S_.nnl; ++i)
    if (du[i] < 0) a = std::min(a, -u[i] / du[i]);
  int off = S_.nnl;
  for (int d : S_.soc_dims) {
    a = std::min(a, soc_step(u.data() + off, du.data() + off, d));
    off += d;
  }
  return a;
}

ConicSolution Solver::run() {
  const int n = S_.n, p = S_.p, m = S_.m;
  ConicSolution out;

  Point P;
  P.x = VecX::Zero(n);
  P.y = VecX::Zero(p);
  P.s = VecX::Zero(m);
  P.z = VecX::Zero(m);
  for (int i = 0; i < S_.nnl; ++i) P.s[i] = P.z[i] = 1.0;
  int off = S_.nnl;
  for (int d : S_.soc_dims) {
    P.s[off] = P.z[off] = 1.0;
    off += d;
  }
  P.tau = P.kap = 1.0;

  const double nu = S_.nnl + static_cast<int>(S_.soc_dims.size()) + 1;
  const double normb = 1.0 + S_.b.lpNorm<Eigen::Infinity>();
  const double normh = 1.0 + S_.h.lpNorm<Eigen::Infinity>();
  const double normc = 1.0 + S_.c.lpNorm<Eigen::Infinity>();

  auto pack_optimal = [&](const Point& Q, double pres, double dres,
                          double gap, double pobj) {
    out.status = SolveStatus::Optimal;
    out.pres = pres;
    out.dres = dres;
    out.gap = gap;
    out.x = Vec(n);
    Eigen::Map<VecX>(out.x.data(), n) = Q.x / Q.tau;
    out.y_eq = Vec(p);
    Eigen::Map<VecX>(out.y_eq.data(), p) = Q.y / Q.tau;
    out.lam_le = Vec(m);
    Eigen::Map<VecX>(out.lam_le.data(), m) = Q.z / Q.tau;  // repacked by caller
    out.obj = pobj + S_.c0;
  };

  // best iterate so far, for a near-optimal exit on numerical breakdown:
  // degenerate endgames can destroy the next step after the point has
  // already converged to within a whisker of the tolerances
  Point best;
  double best_score = kInf, best_pres = kInf, best_dres = kInf;
  double best_gap = kInf, best_pobj = 0.0;
  auto breakdown = [&](const char* why) {
    double relgap = best_gap / std::max(1.0, std::abs(best_pobj));
    bool near = best_pres <= 100.0 * o_.feas_tol &&
                best_dres <= 100.0 * o_.feas_tol &&
                (best_gap <= 100.0 * o_.gap_tol ||
                 relgap <= 100.0 * o_.gap_tol);
    if (o_.verbose)
      std::fprintf(stderr,
                   "%s: %s (best pres %.2e dres %.2e gap %.2e)\n",
                   near ? "near-optimal exit" : "trouble", why, best_pres,
                   best_dres, best_gap);
    if (near)
      pack_optimal(best, best_pres, best_dres, best_gap, best_pobj);
    else
      out.status = SolveStatus::NumericalTrouble;
  };

  Scaling W;
  for (int it = 0; it < o_.max_iters; ++it) {
    out.iters = it;
    VecX r1 = S_.A.transpose() * P.y + S_.G.transpose() * P.z + S_.c * P.tau;
    VecX r2 = -(S_.A * P.x) + S_.b * P.tau;
    VecX r3 = -(S_.G * P.x) + S_.h * P.tau - P.s;
    double r4 = -S_.c.dot(P.x) - S_.b.dot(P.y) - S_.h.dot(P.z) - P.kap;
    double mu = (P.s.dot(P.z) + P.tau * P.kap) / nu;

    // stopping tests on the de-homogenized point
    {
      double t = P.tau;
      double pres = std::max((S_.A * P.x - S_.b * t).lpNorm<Eigen::Infinity>() / normb,
                             (S_.G * P.x + P.s - S_.h * t).lpNorm<Eigen::Infinity>() / normh) / t;
      double dres = (S_.A.transpose() * P.y + S_.G.transpose() * P.z + S_.c * t)
                        .lpNorm<Eigen::Infinity>() / normc / t;
      double pobj = S_.c.dot(P.x) / t;
      double gap = P.s.dot(P.z) / (t * t);
      double relgap = gap / std::max(1.0, std::abs(pobj));
      out.pres = pres;
      out.dres = dres;
      out.gap = gap;
      if (o_.verbose)
        std::fprintf(stderr,
                     "it %3d  mu %9.2e  tau %9.2e  kap %9.2e  pres %9.2e  "
                     "dres %9.2e  gap %9.2e\n",
                     out.iters, mu, P.tau, P.kap, pres, dres, gap);
      double score = std::max({pres, dres, std::min(gap, relgap)});
      if (score < best_score) {
        best_score = score;
        best = P;
        best_pres = pres;
        best_dres = dres;
        best_gap = gap;
        best_pobj = pobj;
      }
      if (pres <= o_.feas_tol && dres <= o_.feas_tol &&
          (gap <= o_.gap_tol || relgap <= o_.gap_tol)) {
        pack_optimal(P, pres, dres, gap, pobj);
        return out;
      }
      // infeasibility certificates
      double by_hz = S_.b.dot(P.y) + S_.h.dot(P.z);
      if (by_hz < -1e-10) {
        double cert_res =
            (S_.A.transpose() * P.y + S_.G.transpose() * P.z).lpNorm<Eigen::Infinity>();
        if (cert_res / std::max(normc, 1.0) <= o_.feas_tol * (-by_hz)) {
          out.status = SolveStatus::PrimalInfeasible;
          out.y_eq = Vec(p);
          Eigen::Map<VecX>(out.y_eq.data(), p) = P.y / (-by_hz);
          out.lam_le = Vec(m);
          Eigen::Map<VecX>(out.lam_le.data(), m) = P.z / (-by_hz);
          return out;
        }
      }
      double cx = S_.c.dot(P.x);
      if (cx < -1e-10) {
        double res1 = (S_.A * P.x).lpNorm<Eigen::Infinity>();
        double res2 = (S_.G * P.x + P.s).lpNorm<Eigen::Infinity>();
        if (std::max(res1 / normb, res2 / normh) <= o_.feas_tol * (-cx)) {
          out.status = SolveStatus::DualInfeasible;
          out.x = Vec(n);
          Eigen::Map<VecX>(out.x.data(), n) = P.x / (-cx);
          return out;
        }
      }
      if (P.tau < 1e-12 && P.kap > 1e-9) {
        out.status = by_hz < 0 ? SolveStatus::PrimalInfeasible
                               : SolveStatus::DualInfeasible;
        return out;
      }
      if (mu < 1e-16) {
        breakdown("mu underflow");
        return out;
      }
    }

    // repairing a pivot means the proximal terms were too weak to keep the
    // quasidefinite signs at this scaling; a boundary iterate means the NT
    // scaling itself is gone. Bail to the best iterate rather than iterate
    // on poisoned directions.
    {
      bool interior = P.tau > 0 && P.kap > 0;
      if (S_.nnl > 0)
        interior = interior && P.s.head(S_.nnl).minCoeff() > 0 &&
                   P.z.head(S_.nnl).minCoeff() > 0;
      int boff = S_.nnl;
      for (int d : S_.soc_dims) {
        interior = interior && soc_res(P.s.data() + boff, d) > 0 &&
                   soc_res(P.z.data() + boff, d) > 0;
        boff += d;
      }
      if (!interior) {
        breakdown("cone boundary");
        return out;
      }
    }
    compute_scaling(P, W);
    reg_ = 1e-10;  // fresh per iteration; escalate while the factor degrades
    assemble(W);
    for (;;) {
      int repairs = factorize();
      if (repairs == 0) break;
      if (repairs > 0 && reg_ >= 1e-6) break;  // refined solves absorb the rest
      reg_ *= 100.0;
      if (reg_ > 1e-4) {
        breakdown("regularization cap");
        return out;
      }
      if (o_.verbose)
        std::fprintf(stderr, "  %s, reg -> %.1e\n",
                     repairs < 0 ? "factorization failed"
                                 : "factorization repaired",
                     reg_);
      assemble(W);
    }
    VecX lam = lam_vec(W);

    // static rhs for the tau column
    VecX rtau(n + p + m);
    rtau << -S_.c, S_.b, S_.h;
    VecX u1 = solve_kkt(rtau);
    double cu1 = S_.c.dot(u1.head(n)) + S_.b.dot(u1.segment(n, p)) +
                 S_.h.dot(u1.tail(m));

    auto direction = [&](const VecX& rs, double rc, double f1, double f4,
                         VecX& dx, VecX& dy, VecX& dz, VecX& ds, double& dtau,
                         double& dkap) {
      // rs: complementarity rhs in scaled space; rc: tau*kappa rhs
      // f1 scales residuals r1..r3, f4 scales r4
      VecX rho = jordan_div_lam(W, rs);
      VecX rhs(n + p + m);
      rhs.head(n) = -f1 * r1;
      rhs.segment(n, p) = f1 * r2;
      rhs.tail(m) = f1 * r3 - apply_W(W, rho);
      VecX u2 = solve_kkt(rhs);
      double cu2 = S_.c.dot(u2.head(n)) + S_.b.dot(u2.segment(n, p)) +
                   S_.h.dot(u2.tail(m));
      dtau = (f4 * r4 * -1.0 + cu2 + rc / P.tau) /
             (P.kap / P.tau - cu1);
      dx = u2.head(n) + dtau * u1.head(n);
      dy = u2.segment(n, p) + dtau * u1.segment(n, p);
      dz = u2.tail(m) + dtau * u1.tail(m);
      ds = apply_W(W, rho - apply_W(W, dz));
      dkap = (rc - P.kap * dtau) / P.tau;
    };

    // affine direction
    VecX lam2 = jordan_prod(W, lam, lam);
    VecX dxa, dya, dza, dsa;
    double dtaua, dkapa;
    direction(-lam2, -P.tau * P.kap, 1.0, 1.0, dxa, dya, dza, dsa, dtaua,
              dkapa);

    double amax = std::min({cone_step(P.s, dsa), cone_step(P.z, dza),
                            dtaua < 0 ? -P.tau / dtaua : kInf,
                            dkapa < 0 ? -P.kap / dkapa : kInf});
    double alpha_aff = std::min(1.0, 0.99 * amax);
    double mu_aff = ((P.s + alpha_aff * dsa).dot(P.z + alpha_aff * dza) +
                     (P.tau + alpha_aff * dtaua) * (P.kap + alpha_aff * dkapa)) /
                    nu;
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
    sigma = std::min(1.0, sigma);

    // combined direction with Mehrotra correction
    VecX corr = jordan_prod(W, apply_Winv(W, dsa), apply_W(W, dza));
    VecX rs = -lam2 - corr;
    for (int i = 0; i < S_.nnl; ++i) rs[i] += sigma * mu;
    off = S_.nnl;
    for (int d : S_.soc_dims) {
      rs[off] += sigma * mu;
      off += d;
    }
    double rc = sigma * mu - P.tau * P.kap - dtaua * dkapa;
    VecX dx, dy, dz, ds;
    double dtau, dkap;
    direction(rs, rc, 1.0 - sigma, 1.0 - sigma, dx, dy, dz, ds, dtau, dkap);

    if (!(dx.allFinite() && dy.allFinite() && dz.allFinite() &&
          ds.allFinite() && std::isfinite(dtau) && std::isfinite(dkap))) {
      breakdown("non-finite direction");
      return out;
    }

    amax = std::min({cone_step(P.s, ds), cone_step(P.z, dz),
                     dtau < 0 ? -P.tau / dtau : kInf,
                     dkap < 0 ? -P.kap / dkap : kInf});
    double alpha = std::min(1.0, 0.99 * amax);
    if (alpha < 1e-11) {
      breakdown("step collapse");
      return out;
    }

    P.x += alpha * dx;
    P.y += alpha * dy;
    P.z += alpha * dz;
    P.s += alpha * ds;
    P.tau += alpha * dtau;
    P.kap += alpha * dkap;

    // the embedding is scale-invariant; renormalize when tau drifts small
    // so the homogeneous mu stays commensurate with the real gap
    if (P.tau < 1e-2) {
      double sc = 1.0 / P.tau;
      P.x *= sc;
      P.y *= sc;
      P.z *= sc;
      P.s *= sc;
      P.kap *= sc;
      P.tau = 1.0;
    }
  }
  breakdown("iteration limit");
  if (out.status != SolveStatus::Optimal)
    out.status = SolveStatus::IterationLimit;
  return out;
}

}  // namespace

ConicSolution solve_conic(const ConicProgram& P, const SolveOptions& o) {
  StdForm S = build_std(P);
  ConicSolution sol;
  if (S.trivially_infeasible) {
    sol.status = SolveStatus::PrimalInfeasible;
    return sol;
  }
  if (S.n == 0) {
    // everything fixed; check rows
    sol.status = SolveStatus::Optimal;
    sol.obj = S.c0;
    for (int i = 0; i < S.p; ++i)
      if (std::abs(S.b[i]) > 1e-9) sol.status = SolveStatus::PrimalInfeasible;
    for (int i = 0; i < S.n_le; ++i)
      if (S.h[i] < -1e-9) sol.status = SolveStatus::PrimalInfeasible;
    // SOC blocks reduce to constant membership checks
    int off = S.nnl;
    for (int d : S.soc_dims) {
      double head = S.h[off], t = 0;
      for (int i = 1; i < d; ++i) t += S.h[off + i] * S.h[off + i];
      if (head < std::sqrt(t) - 1e-9) sol.status = SolveStatus::PrimalInfeasible;
      off += d;
    }
    sol.x.assign(P.n, 0.0);
    for (int j = 0; j < P.n; ++j) sol.x[j] = S.fixed[j];
    sol.y_eq.assign(P.eq_rows.size(), 0.0);
    sol.lam_le.assign(P.le_rows.size(), 0.0);
    sol.lam_lb.assign(P.n, 0.0);
    sol.lam_ub.assign(P.n, 0.0);
    for (const auto& blk : P.socs) sol.soc_dual.push_back(Vec(blk.rows.size(), 0.0));
    return sol;
  }

  Solver ip(S, o);
  ConicSolution raw = ip.run();
  sol.status = raw.status;
  sol.iters = raw.iters;
  sol.pres = raw.pres;
  sol.dres = raw.dres;
  sol.gap = raw.gap;

  auto unpack_duals = [&](const Vec& zfull) {
    sol.lam_le.assign(P.le_rows.size(), 0.0);
    sol.lam_lb.assign(P.n, 0.0);
    sol.lam_ub.assign(P.n, 0.0);
    sol.soc_dual.clear();
    int idx = 0;
    for (std::size_t i = 0; i < P.le_rows.size(); ++i) sol.lam_le[i] = zfull[idx++];
    for (int j : S.lb_vars) sol.lam_lb[j] = zfull[idx++];
    for (int j : S.ub_vars) sol.lam_ub[j] = zfull[idx++];
    if (S.nnl > static_cast<int>(P.le_rows.size() + S.lb_vars.size() + S.ub_vars.size()))
      ++idx;  // dummy row
    for (const auto& blk : P.socs) {
      Vec d(blk.rows.size());
      for (std::size_t r = 0; r < blk.rows.size(); ++r) d[r] = zfull[idx++];
      sol.soc_dual.push_back(std::move(d));
    }
  };

  if (raw.status == SolveStatus::Optimal) {
    sol.obj = raw.obj;
    sol.x.assign(P.n, 0.0);
    for (int j = 0; j < P.n; ++j)
      sol.x[j] = std::isnan(S.fixed[j]) ? 0.0 : S.fixed[j];
    for (int r = 0; r < S.n; ++r) sol.x[S.keep[r]] = raw.x[r];
    sol.y_eq = raw.y_eq;
    unpack_duals(raw.lam_le);
  } else if (raw.status == SolveStatus::PrimalInfeasible && !raw.lam_le.empty()) {
    sol.y_eq = raw.y_eq;
    unpack_duals(raw.lam_le);
  } else if (raw.status == SolveStatus::DualInfeasible && !raw.x.empty()) {
    sol.x.assign(P.n, 0.0);
    for (int r = 0; r < S.n; ++r) sol.x[S.keep[r]] = raw.x[r];
  }
  return sol;
}

}  // namespace rdnr::conic

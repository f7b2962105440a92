#include "rdnr/benders.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "rdnr/conic.hpp"

namespace rdnr::benders {

namespace {

using conic::ConicProgram;
using conic::SolveStatus;
using conic::SpRow;

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

struct Cut {
  Vec lambda;             // recourse multipliers, fixed
  Vec pi, theta, sigma;   // inner multipliers at the expansion point, fixed
};

Vec flat_cxi(const NetworkCase& nc) {
  int T = nc.horizon;
  Vec c(nc.renewables.size() * T, 0.0);
  for (std::size_t rg = 0; rg < nc.renewables.size(); ++rg)
    for (int t = 0; t < T; ++t) c[rg * T + t] = nc.costs.c_xi[rg][t];
  return c;
}

}  // namespace

Result run_benders(const NetworkCase& nc, const model::CompactStage2& m,
                   const unc::UncSet& u, const Options& opt) {
  const int ne = static_cast<int>(nc.branches.size());
  RadialityRows rad = radiality_rows(nc);
  Vec cxi = flat_cxi(nc);
  std::vector<Cut> cuts;
  Result res;
  Vec xi_hat;
  Topology alpha_hat;

  for (int it = 1; it <= opt.max_iters; ++it) {
    double t0 = now_seconds();
    ConicProgram P;
    int alpha0 = P.n;
    for (int e = 0; e < ne; ++e) {
      double lo = nc.branches[e].switchable ? 0.0 : 1.0;
      P.add_var(lo, 1.0, nc.costs.c_alpha[e], true, "alpha" + std::to_string(e));
    }
    int xi0 = P.n;
    for (int c = 0; c < m.n_w; ++c) {
      double lo = u.w_min[c], hi = u.w_max[c];
      if (!opt.fixed_xi.empty()) lo = hi = opt.fixed_xi[c];
      P.add_var(lo, hi, -cxi[c], false, "xi" + std::to_string(c));
    }
    int L = P.add_var(model::q_lower_bound(m), kInf, 1.0, false, "L");
    {
      SpRow row;
      for (int e = 0; e < ne; ++e) row.push_back({alpha0 + e, 1.0});
      P.add_eq(std::move(row), static_cast<double>(rad.closed_count));
    }
    for (const auto& loop : rad.loops) {
      SpRow row;
      for (int e : loop.first) row.push_back({alpha0 + e, 1.0});
      P.add_le(std::move(row), loop.second);
    }
    if (opt.fixed_xi.empty()) ccg::add_sizing_rows(P, u, xi0);

    for (const Cut& ct : cuts) {
      // L >= lambda'(A alpha + gamma) + f'pi + xi'theta + (C xi - beta)'sigma
      SpRow row = {{L, -1.0}};
      Vec coefA(ne, 0.0);
      for (int r = 0; r < m.n_rows; ++r)
        if (ct.lambda[r] != 0.0)
          for (auto [e, v] : m.A[r]) coefA[e] += ct.lambda[r] * v;
      for (int e = 0; e < ne; ++e)
        if (coefA[e] != 0.0) row.push_back({alpha0 + e, coefA[e]});
      double rhs = 0.0;
      for (int r = 0; r < m.n_rows; ++r) rhs -= ct.lambda[r] * m.gamma[r];
      for (std::size_t r = 0; r < u.F.size(); ++r) rhs -= ct.pi[r] * u.f[r];
      Vec coefXi(m.n_w, 0.0);
      for (int c = 0; c < m.n_w; ++c) coefXi[c] += ct.theta[c];
      for (std::size_t r = 0; r < u.ext_H.size(); ++r) {
        rhs += ct.sigma[r] * u.ext_beta[r];
        for (int c = 0; c < m.n_w; ++c)
          coefXi[c] += ct.sigma[r] * u.ext_C[r][c];
      }
      for (int c = 0; c < m.n_w; ++c)
        if (coefXi[c] != 0.0) row.push_back({xi0 + c, coefXi[c]});
      P.add_le(std::move(row), rhs);
    }

    conic::SolveOptions mo;
    mo.abs_gap = opt.eps / 10.0;
    auto sol = conic::solve_mi_conic(P, mo);
    if (sol.status != SolveStatus::Optimal)
      throw std::runtime_error("cutting-plane master failed: " +
                               conic::to_string(sol.status));
    res.lb = std::max(res.lb, sol.bound);
    alpha_hat.assign(ne, 0);
    for (int e = 0; e < ne; ++e) alpha_hat[e] = sol.x[alpha0 + e] > 0.5;
    if (!is_radial(nc, alpha_hat))
      throw std::runtime_error("cutting-plane master produced a non-tree");
    xi_hat.assign(sol.x.begin() + xi0, sol.x.begin() + xi0 + m.n_w);
    double mp_sec = now_seconds() - t0;

    t0 = now_seconds();
    auto sp = ccg::solve_subproblem(m, u, alpha_hat, xi_hat, opt.sp,
                                    opt.policy, opt.max_vertices);
    double cand = model::first_stage_cost(nc, alpha_hat, xi_hat) + sp.value;
    if (cand < res.ub) {
      res.ub = cand;
      res.alpha = alpha_hat;
      res.xi = xi_hat;
      res.objective = cand;
    }
    auto inner = unc::solve_inner_max(u, xi_hat, sp.ghat);
    cuts.push_back({sp.lambda, inner.pi, inner.theta, inner.sigma});
    double sp_sec = now_seconds() - t0;

    res.iters = it;
    res.log.push_back({it, res.lb, res.ub, res.ub - res.lb, mp_sec, sp_sec,
                       static_cast<long>(P.num_int()),
                       static_cast<long>(P.eq_rows.size() + P.le_rows.size())});
    if (res.ub - res.lb <= opt.eps) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace rdnr::benders

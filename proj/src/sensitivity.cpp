#include "rdnr/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rdnr/conic.hpp"

namespace rdnr::sens {

namespace {

using conic::ConicProgram;
using conic::SolveStatus;
using conic::SpRow;

double inner_value(const unc::UncSet& u, const Vec& xi, const Vec& g) {
  return unc::solve_inner_max(u, xi, g).value;
}

// min or max one multiplier over the dual-optimal face
double range_end(const unc::UncSet& u, const Vec& xi, const Vec& g,
                 double vstar, int target, bool maximize) {
  const int n = u.n;
  const int nf = static_cast<int>(u.F.size());
  const int nx = static_cast<int>(u.ext_H.size());
  ConicProgram P;
  std::vector<int> pi(nf), th(n), sg(nx);
  for (int r = 0; r < nf; ++r) pi[r] = P.add_var(0.0, kInf, 0.0);
  for (int c = 0; c < n; ++c) th[c] = P.add_var(0.0, kInf, 0.0);
  for (int r = 0; r < nx; ++r) sg[r] = P.add_var(0.0, kInf, 0.0);
  double sgn = maximize ? -1.0 : 1.0;
  P.c[target] = sgn;
  for (int c = 0; c < n; ++c) {
    SpRow row;
    for (int r = 0; r < nf; ++r)
      if (u.F[r][c] != 0.0) row.push_back({pi[r], u.F[r][c]});
    row.push_back({th[c], 1.0});
    for (int r = 0; r < nx; ++r)
      if (u.ext_H[r][c] != 0.0) row.push_back({sg[r], -u.ext_H[r][c]});
    P.add_eq(std::move(row), g[c]);
  }
  // pin the dual objective to the optimal value
  SpRow obj;
  for (int r = 0; r < nf; ++r) obj.push_back({pi[r], u.f[r]});
  for (int c = 0; c < n; ++c)
    obj.push_back({th[c], std::min(xi[c], u.w_max[c])});
  for (int r = 0; r < nx; ++r) {
    double coef = -u.ext_beta[r];
    for (int c = 0; c < n; ++c) coef += u.ext_C[r][c] * xi[c];
    obj.push_back({sg[r], coef});
  }
  SpRow neg;
  for (auto [j, v] : obj) neg.push_back({j, -v});
  double tol = 1e-7 * (1.0 + std::abs(vstar));
  P.add_le(std::move(obj), vstar + tol);
  P.add_le(std::move(neg), -vstar + tol);
  auto s = conic::solve_conic(P);
  if (s.status != SolveStatus::Optimal)
    throw std::runtime_error("multiplier range solve failed: " +
                             conic::to_string(s.status));
  return sgn * s.obj;
}

}  // namespace

Report analyze(const NetworkCase& nc, const model::CompactStage2& m,
               const unc::UncSet& u, const Topology& alpha, const Vec& xi,
               double fd_step) {
  Report rep;
  auto sp = ccg::solve_subproblem(m, u, alpha, xi, ccg::SpStrategy::VertexEnum);
  rep.ghat = sp.ghat;
  auto inner = unc::solve_inner_max(u, xi, rep.ghat);
  rep.primal_value = inner.value;
  rep.w_star = inner.w;
  rep.theta = inner.theta;
  rep.dual_value = 0.0;
  for (std::size_t r = 0; r < u.F.size(); ++r)
    rep.dual_value += inner.pi[r] * u.f[r];
  for (int c = 0; c < u.n; ++c)
    rep.dual_value += inner.theta[c] * std::min(xi[c], u.w_max[c]);
  for (std::size_t r = 0; r < u.ext_H.size(); ++r) {
    double coef = -u.ext_beta[r];
    for (int c = 0; c < u.n; ++c) coef += u.ext_C[r][c] * xi[c];
    rep.dual_value += inner.sigma[r] * coef;
  }

  Vec cxi(u.n, 0.0);
  for (int rg = 0; rg < u.n_rg; ++rg)
    for (int t = 0; t < u.horizon; ++t)
      cxi[u.idx(rg, t)] = nc.costs.c_xi[rg][t];
  rep.marginal.resize(u.n);
  for (int c = 0; c < u.n; ++c)
    rep.marginal[c] = std::min(rep.theta[c], cxi[c]);

  const int nf = static_cast<int>(u.F.size());
  const int nx = static_cast<int>(u.ext_H.size());
  auto act = [](double lhs, double rhs) {
    return std::abs(lhs - rhs) <= 1e-6 * (1.0 + std::abs(rhs));
  };

  for (int r = 0; r < nf; ++r) {
    RowInfo ri;
    ri.label = u.f_labels[r];
    ri.multiplier = inner.pi[r];
    double lhs = 0.0;
    for (int c = 0; c < u.n; ++c) lhs += u.F[r][c] * rep.w_star[c];
    ri.active = act(lhs, u.f[r]);
    double h = fd_step * (1.0 + std::abs(u.f[r]));
    unc::UncSet up = u, dn = u;
    up.f[r] += h;
    dn.f[r] -= h;
    ri.fd = (inner_value(up, xi, rep.ghat) - inner_value(dn, xi, rep.ghat)) /
            (2.0 * h);
    ri.lo = range_end(u, xi, rep.ghat, rep.primal_value, r, false);
    ri.hi = range_end(u, xi, rep.ghat, rep.primal_value, r, true);
    rep.rows.push_back(std::move(ri));
  }
  for (int c = 0; c < u.n; ++c) {
    RowInfo ri;
    ri.label = "cap_w" + std::to_string(c);
    ri.multiplier = inner.theta[c];
    double cap = std::min(xi[c], u.w_max[c]);
    ri.active = act(rep.w_star[c], cap);
    double h = fd_step * (1.0 + std::abs(xi[c]));
    // sample inside the coordinate's linearity cell: the cap saturates at
    // w_max and the set empties below the sizing feasibility boundary
    Vec xup = xi, xdn = xi;
    xup[c] = std::min(xi[c] + h, u.w_max[c]);
    xdn[c] = xi[c] - h;
    double vu = inner_value(u, xup, rep.ghat);
    double vd = inner_value(u, xdn, rep.ghat);
    ri.fd = (vu - vd) / (xup[c] - xdn[c]);
    ri.lo = range_end(u, xi, rep.ghat, rep.primal_value, nf + c, false);
    ri.hi = range_end(u, xi, rep.ghat, rep.primal_value, nf + c, true);
    rep.rows.push_back(std::move(ri));
  }
  for (int r = 0; r < nx; ++r) {
    RowInfo ri;
    ri.label = "ext" + std::to_string(r);
    ri.multiplier = inner.sigma[r];
    double lhs = 0.0, rhs = u.ext_beta[r];
    for (int c = 0; c < u.n; ++c) {
      lhs += u.ext_H[r][c] * rep.w_star[c];
      rhs -= u.ext_C[r][c] * xi[c];
    }
    ri.active = act(lhs, rhs);
    double h = fd_step * (1.0 + std::abs(u.ext_beta[r]));
    unc::UncSet up = u, dn = u;
    up.ext_beta[r] -= h;  // lowering the floor relaxes the row
    dn.ext_beta[r] += h;
    ri.fd = (inner_value(up, xi, rep.ghat) - inner_value(dn, xi, rep.ghat)) /
            (2.0 * h);
    ri.lo = range_end(u, xi, rep.ghat, rep.primal_value, nf + u.n + r, false);
    ri.hi = range_end(u, xi, rep.ghat, rep.primal_value, nf + u.n + r, true);
    rep.rows.push_back(std::move(ri));
  }
  return rep;
}

std::string report_csv(const Report& rep) {
  std::ostringstream os;
  os.precision(9);
  os << "label,multiplier,active,fd_check,range_lo,range_hi\n";
  for (const auto& ri : rep.rows)
    os << ri.label << ',' << ri.multiplier << ',' << (ri.active ? 1 : 0) << ','
       << ri.fd << ',' << ri.lo << ',' << ri.hi << '\n';
  return os.str();
}

StabilityScan topology_stability_scan(const NetworkCase& nc,
                                      const model::CompactStage2& m,
                                      const unc::UncSet& u, double rel,
                                      ExecPolicy policy) {
  StabilityScan scan;
  ccg::Options base_opt;
  base_opt.policy = ExecPolicy::Serial;  // samples already run in parallel
  auto base = ccg::run_mapping_ccg(nc, m, u, base_opt);
  scan.base = base.alpha;
  const int nf = static_cast<int>(u.F.size());
  scan.samples = 2 * nf;
  std::vector<int> result(scan.samples, 0);  // 0 same, 1 changed, 2 failed
  parallel_for(scan.samples, policy, [&](std::size_t k) {
    int r = static_cast<int>(k) / 2;
    double sgn = (k % 2 == 0) ? 1.0 : -1.0;
    unc::UncSet pert = u;
    pert.f[r] += sgn * rel * std::max(1.0, std::abs(pert.f[r]));
    try {
      auto res = ccg::run_mapping_ccg(nc, m, pert, base_opt);
      result[k] = res.alpha == base.alpha ? 0 : 1;
    } catch (const std::exception&) {
      result[k] = 2;
    }
  });
  for (int v : result) {
    if (v == 1) ++scan.changed;
    if (v == 2) ++scan.failures;
  }
  scan.stable = scan.changed == 0;
  return scan;
}

}  // namespace rdnr::sens

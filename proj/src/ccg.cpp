#include "rdnr/ccg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rdnr/conic.hpp"

namespace rdnr::ccg {

namespace {

using conic::ConicProgram;
using conic::SolveStatus;
using conic::SpRow;

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

struct Block {
  BlockMode mode = BlockMode::Full;
  Vec ghat;     // reduced scenario weight -G'lambda
  Vec lambda;   // multipliers that spawned the block
  Vec w_fixed;  // FixedScenario only
};

struct MpLayout {
  int alpha0 = 0, xi0 = 0, L = 0;
  std::vector<int> w0;  // per block, -1 for fixed scenarios
};

Vec flat_cxi(const NetworkCase& nc) {
  int T = nc.horizon;
  Vec c(nc.renewables.size() * T, 0.0);
  for (std::size_t rg = 0; rg < nc.renewables.size(); ++rg)
    for (int t = 0; t < T; ++t) c[rg * T + t] = nc.costs.c_xi[rg][t];
  return c;
}

// max of row . w over the box, for exact complementarity slack caps
double box_max(const Vec& row, const Vec& lo, const Vec& hi) {
  double v = 0;
  for (std::size_t c = 0; c < row.size(); ++c)
    v += std::max(row[c] * lo[c], row[c] * hi[c]);
  return v;
}
double box_min(const Vec& row, const Vec& lo, const Vec& hi) {
  double v = 0;
  for (std::size_t c = 0; c < row.size(); ++c)
    v += std::min(row[c] * lo[c], row[c] * hi[c]);
  return v;
}

}  // namespace

void add_sizing_rows(ConicProgram& P, const unc::UncSet& u, int xi0) {
  auto expand = [&](const std::vector<int>& coords, double gamma) {
    int k = static_cast<int>(coords.size());
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
      SpRow row;
      double rhs = gamma;
      for (int i = 0; i < k; ++i)
        if (mask & (1u << i)) {
          int c = coords[i];
          row.push_back({xi0 + c, -1.0 / u.w_dev[c]});
          rhs -= u.w_nom[c] / u.w_dev[c];
        }
      P.add_le(std::move(row), rhs);
    }
  };
  for (int t = 0; t < u.horizon; ++t) {
    std::vector<int> coords;
    for (int i = 0; i < u.n_rg; ++i) coords.push_back(u.idx(i, t));
    expand(coords, u.gamma_t);
  }
  if (u.horizon > 1)
    for (int i = 0; i < u.n_rg; ++i) {
      std::vector<int> coords;
      for (int t = 0; t < u.horizon; ++t) coords.push_back(u.idx(i, t));
      expand(coords, u.gamma_i);
    }
}

namespace {

void add_mapping_block(ConicProgram& P, const unc::UncSet& u, const Block& blk,
                       int w0, int xi0, const std::string& tag) {
  int n = u.n;
  double mult_cap = 1.0;
  for (double g : blk.ghat) mult_cap += std::abs(g);
  double dev_scale = 1.0;
  for (int c = 0; c < n; ++c)
    dev_scale = std::max({dev_scale, u.w_dev[c], 1.0 / u.w_dev[c]});
  mult_cap *= 4.0 * dev_scale;

  bool coupled = blk.mode == BlockMode::Full;
  std::vector<int> pi(u.F.size()), th(coupled ? n : 0), sig(u.ext_H.size());
  for (std::size_t r = 0; r < u.F.size(); ++r)
    pi[r] = P.add_var(0.0, mult_cap, 0.0, false, tag + "_pi" + std::to_string(r));
  if (coupled)
    for (int c = 0; c < n; ++c)
      th[c] = P.add_var(0.0, mult_cap, 0.0, false, tag + "_th" + std::to_string(c));
  for (std::size_t r = 0; r < u.ext_H.size(); ++r)
    sig[r] = P.add_var(0.0, mult_cap, 0.0, false, tag + "_sg" + std::to_string(r));

  // stationarity: F'pi + theta - H'sigma = ghat
  for (int c = 0; c < n; ++c) {
    SpRow row;
    for (std::size_t r = 0; r < u.F.size(); ++r)
      if (u.F[r][c] != 0.0) row.push_back({pi[r], u.F[r][c]});
    if (coupled) row.push_back({th[c], 1.0});
    for (std::size_t r = 0; r < u.ext_H.size(); ++r)
      if (u.ext_H[r][c] != 0.0) row.push_back({sig[r], -u.ext_H[r][c]});
    P.add_eq(std::move(row), blk.ghat[c]);
  }
  // primal feasibility + complementarity
  for (std::size_t r = 0; r < u.F.size(); ++r) {
    SpRow expr;
    for (int c = 0; c < n; ++c)
      if (u.F[r][c] != 0.0) expr.push_back({w0 + c, u.F[r][c]});
    P.add_le(expr, u.f[r]);
    double slack_cap = u.f[r] - box_min(u.F[r], u.w_min, u.w_max) + 1.0;
    conic::add_complementarity(P, pi[r], expr, u.f[r], mult_cap, slack_cap,
                               tag + "_zpi" + std::to_string(r));
  }
  if (coupled)
    for (int c = 0; c < n; ++c) {
      SpRow expr = {{w0 + c, 1.0}, {xi0 + c, -1.0}};
      P.add_le(expr, 0.0);
      double slack_cap = u.w_max[c] - u.w_min[c] + 1.0;
      conic::add_complementarity(P, th[c], expr, 0.0, mult_cap, slack_cap,
                                 tag + "_zth" + std::to_string(c));
    }
  for (std::size_t r = 0; r < u.ext_H.size(); ++r) {
    SpRow expr;
    for (int c = 0; c < n; ++c) {
      if (u.ext_H[r][c] != 0.0) expr.push_back({w0 + c, -u.ext_H[r][c]});
      if (u.ext_C[r][c] != 0.0) expr.push_back({xi0 + c, -u.ext_C[r][c]});
    }
    double rhs = -u.ext_beta[r];
    P.add_le(expr, rhs);
    double slack_cap = rhs + box_max(u.ext_H[r], u.w_min, u.w_max) +
                       box_max(u.ext_C[r], u.w_min, u.w_max) + 1.0;
    conic::add_complementarity(P, sig[r], expr, rhs, mult_cap, slack_cap,
                               tag + "_zsg" + std::to_string(r));
  }
}

ConicProgram build_master(const NetworkCase& nc, const model::CompactStage2& m,
                          const unc::UncSet& u, const std::vector<Block>& blocks,
                          const Options& opt, MpLayout& lay) {
  ConicProgram P;
  int ne = m.n_alpha;
  lay.alpha0 = P.n;
  for (int e = 0; e < ne; ++e) {
    double lo = nc.branches[e].switchable ? 0.0 : 1.0;
    P.add_var(lo, 1.0, nc.costs.c_alpha[e], true, "alpha" + std::to_string(e));
  }
  Vec cxi = flat_cxi(nc);
  lay.xi0 = P.n;
  for (int c = 0; c < m.n_w; ++c) {
    double lo = u.w_min[c], hi = u.w_max[c];
    if (!opt.fixed_xi.empty()) lo = hi = opt.fixed_xi[c];
    P.add_var(lo, hi, -cxi[c], false, "xi" + std::to_string(c));
  }
  lay.L = P.add_var(model::q_lower_bound(m), kInf, 1.0, false, "L");

  RadialityRows rad = radiality_rows(nc);
  {
    SpRow row;
    for (int e = 0; e < ne; ++e) row.push_back({lay.alpha0 + e, 1.0});
    P.add_eq(std::move(row), static_cast<double>(rad.closed_count));
  }
  for (const auto& loop : rad.loops) {
    SpRow row;
    for (int e : loop.first) row.push_back({lay.alpha0 + e, 1.0});
    P.add_le(std::move(row), loop.second);
  }
  if (opt.fixed_xi.empty()) add_sizing_rows(P, u, lay.xi0);

  lay.w0.assign(blocks.size(), -1);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const Block& blk = blocks[k];
    std::string tag = "b" + std::to_string(k);
    bool has_w = blk.mode != BlockMode::FixedScenario;
    if (has_w) {
      lay.w0[k] = P.n;
      for (int c = 0; c < u.n; ++c)
        P.add_var(u.w_min[c], u.w_max[c], 0.0, false,
                  tag + "_w" + std::to_string(c));
      add_mapping_block(P, u, blk, lay.w0[k], lay.xi0, tag);
    }
    // recourse copy at this scenario
    int y0 = P.n;
    for (int j = 0; j < m.vm.n_y; ++j)
      P.add_var(-kInf, kInf, 0.0, false, tag + "_y" + std::to_string(j));
    int s0 = P.n;
    for (int j = 0; j < m.vm.n_slack; ++j)
      P.add_var(0.0, kInf, 0.0, false, tag + "_s" + std::to_string(j));
    for (int r = 0; r < m.n_rows; ++r) {
      SpRow row;
      for (auto [e, v] : m.A[r]) row.push_back({lay.alpha0 + e, v});
      for (auto [j, v] : m.B[r]) row.push_back({y0 + j, v});
      if (m.slack_col[r] >= 0)
        row.push_back({s0 + (m.slack_col[r] - m.vm.n_y), -1.0});
      double rhs = -m.gamma[r];
      for (auto [c, v] : m.G[r]) {
        if (has_w)
          row.push_back({lay.w0[k] + c, -v});
        else
          rhs += v * blk.w_fixed[c];
      }
      P.add_le(std::move(row), rhs);
    }
    for (const auto& blk_c : m.cones) {
      conic::SocBlock sb;
      for (const auto& crow : blk_c.rows) {
        SpRow shifted;
        for (auto [j, v] : crow) shifted.push_back({y0 + j, v});
        sb.rows.push_back(std::move(shifted));
      }
      sb.offsets = blk_c.offsets;
      P.add_soc(sb);
    }
    {  // epigraph L >= b'y + m_s 1's
      SpRow row = {{lay.L, -1.0}};
      for (int j = 0; j < m.vm.n_y; ++j)
        if (m.b[j] != 0.0) row.push_back({y0 + j, m.b[j]});
      for (int j = 0; j < m.vm.n_slack; ++j) row.push_back({s0 + j, m.m_s});
      P.add_le(std::move(row), 0.0);
    }
    {  // weak duality: L >= lambda'(A alpha + gamma) + ghat'w
      SpRow row = {{lay.L, -1.0}};
      Vec acoef(ne, 0.0);
      double lg = 0.0;
      for (int r = 0; r < m.n_rows; ++r) {
        for (auto [e, v] : m.A[r]) acoef[e] += blk.lambda[r] * v;
        lg += blk.lambda[r] * m.gamma[r];
      }
      for (int e = 0; e < ne; ++e)
        if (acoef[e] != 0.0) row.push_back({lay.alpha0 + e, acoef[e]});
      double rhs = -lg;
      for (int c = 0; c < u.n; ++c) {
        if (has_w)
          row.push_back({lay.w0[k] + c, blk.ghat[c]});
        else
          rhs -= blk.ghat[c] * blk.w_fixed[c];
      }
      P.add_le(std::move(row), rhs);
    }
  }
  return P;
}

// value of max g'w over W(xi) (coupling optional), for big-M verification
double inner_value(const unc::UncSet& u, const Vec& xi, const Vec& g,
                   bool coupled) {
  ConicProgram P;
  for (int c = 0; c < u.n; ++c)
    P.add_var(-kInf, coupled ? std::min(xi[c], u.w_max[c]) : kInf, -g[c]);
  for (std::size_t r = 0; r < u.F.size(); ++r) {
    SpRow row;
    for (int c = 0; c < u.n; ++c)
      if (u.F[r][c] != 0.0) row.push_back({c, u.F[r][c]});
    P.add_le(std::move(row), u.f[r]);
  }
  for (std::size_t r = 0; r < u.ext_H.size(); ++r) {
    SpRow row;
    double rhs = -u.ext_beta[r];
    for (int c = 0; c < u.n; ++c) {
      if (u.ext_H[r][c] != 0.0) row.push_back({c, -u.ext_H[r][c]});
      rhs += u.ext_C[r][c] * xi[c];
    }
    P.add_le(std::move(row), rhs);
  }
  auto s = conic::solve_conic(P);
  if (s.status != SolveStatus::Optimal)
    throw std::runtime_error("mapping verification solve failed: " +
                             conic::to_string(s.status));
  return -s.obj;
}

Vec reduced_weight(const model::CompactStage2& m, const Vec& lambda) {
  Vec g(m.n_w, 0.0);
  for (int r = 0; r < m.n_rows; ++r)
    for (auto [c, v] : m.G[r]) g[c] -= v * lambda[r];
  return g;
}

}  // namespace

SubproblemResult solve_subproblem(const model::CompactStage2& m,
                                  const unc::UncSet& u, const Topology& alpha,
                                  const Vec& xi, SpStrategy strategy,
                                  ExecPolicy policy,
                                  std::size_t max_vertices) {
  if (unc::set_empty(u, xi))
    throw std::runtime_error("availability set is empty at this sizing");
  auto verts = unc::enumerate_vertices(u, xi, max_vertices);
  if (verts.empty())
    throw std::runtime_error("availability set has no vertices");

  std::size_t best = verts.size();
  if (strategy == SpStrategy::VertexEnum) {
    std::vector<double> vals(verts.size());
    std::vector<int> bad(verts.size(), 0);
    parallel_for(verts.size(), policy, [&](std::size_t k) {
      auto q = model::evaluate_Q(m, alpha, verts[k], true);
      vals[k] = q.value;
      bad[k] = q.status != SolveStatus::Optimal;
    });
    for (std::size_t k = 0; k < verts.size(); ++k)
      if (bad[k])
        throw std::runtime_error("recourse solve failed at a vertex");
    for (std::size_t k = 0; k < verts.size(); ++k) {
      if (best == verts.size() || vals[k] > vals[best] + 1e-9 ||
          (std::abs(vals[k] - vals[best]) <= 1e-9 && verts[k] < verts[best]))
        best = k;
    }
  } else {
    double rt = std::round(u.gamma_t), ri = std::round(u.gamma_i);
    if (std::abs(u.gamma_t - rt) > 1e-9 ||
        (u.horizon > 1 && std::abs(u.gamma_i - ri) > 1e-9))
      throw std::invalid_argument(
          "bigM strategy needs integer deviation budgets");
    // one MISOCP over the dual of the recourse with vertex selectors
    ConicProgram P;
    for (int r = 0; r < m.n_rows; ++r) {
      double coef = m.gamma[r];
      for (auto [e, v] : m.A[r]) coef += v * (alpha[e] ? 1.0 : 0.0);
      P.add_var(0.0, kInf, -coef);
    }
    int cone0 = P.n;
    for (std::size_t k = 0; k < m.cones.size(); ++k) {
      conic::SocBlock blk;
      for (std::size_t i = 0; i < m.cones[k].rows.size(); ++i) {
        int var = P.add_var(-kInf, kInf, 0.0);
        blk.rows.push_back({{var, 1.0}});
        blk.offsets.push_back(0.0);
      }
      P.add_soc(blk);
    }
    int rho = P.add_var(-kInf, kInf, 1.0);
    std::vector<SpRow> st(m.vm.n_y);
    for (int r = 0; r < m.n_rows; ++r)
      for (auto [j, v] : m.B[r]) st[j].push_back({r, v});
    {
      int var = cone0;
      for (std::size_t k = 0; k < m.cones.size(); ++k)
        for (std::size_t i = 0; i < m.cones[k].rows.size(); ++i, ++var)
          for (auto [j, v] : m.cones[k].rows[i]) st[j].push_back({var, -v});
    }
    for (int j = 0; j < m.vm.n_y; ++j) P.add_eq(std::move(st[j]), -m.b[j]);
    for (int r = 0; r < m.n_rows; ++r)
      if (m.slack_col[r] >= 0) P.add_le({{r, 1.0}}, m.m_s);

    std::vector<Vec> gw(verts.size(), Vec(m.n_rows, 0.0));
    double gw_norm_max = 0.0;
    Vec gw_norm(verts.size(), 0.0);
    for (std::size_t v = 0; v < verts.size(); ++v) {
      for (int r = 0; r < m.n_rows; ++r)
        for (auto [c, cv] : m.G[r]) gw[v][r] += cv * verts[v][c];
      for (int r = 0; r < m.n_rows; ++r) gw_norm[v] += std::abs(gw[v][r]);
      gw_norm_max = std::max(gw_norm_max, gw_norm[v]);
    }
    SpRow pick;
    std::vector<int> zsel(verts.size());
    for (std::size_t v = 0; v < verts.size(); ++v) {
      zsel[v] = P.add_var(0.0, 1.0, 0.0, true, "z" + std::to_string(v));
      pick.push_back({zsel[v], 1.0});
      double M = m.m_s * (gw_norm[v] + gw_norm_max) + 1.0;
      SpRow row = {{rho, -1.0}, {zsel[v], M}};
      for (int r = 0; r < m.n_rows; ++r)
        if (gw[v][r] != 0.0) row.push_back({r, gw[v][r]});
      P.add_le(std::move(row), M);
    }
    P.add_eq(std::move(pick), 1.0);
    auto s = conic::solve_mi_conic(P);
    if (s.status != SolveStatus::Optimal)
      throw std::runtime_error("bigM subproblem failed: " +
                               conic::to_string(s.status));
    for (std::size_t v = 0; v < verts.size(); ++v)
      if (s.x[zsel[v]] > 0.5) best = v;
  }
  if (best == verts.size())
    throw std::runtime_error("subproblem found no worst vertex");

  auto q = model::evaluate_Q(m, alpha, verts[best], true);
  if (q.status != SolveStatus::Optimal)
    throw std::runtime_error("recourse re-solve failed at the worst vertex");
  SubproblemResult out;
  out.value = q.value;
  out.w_star = verts[best];
  out.lambda = q.lambda;
  out.ghat = reduced_weight(m, q.lambda);
  return out;
}

Result run_mapping_ccg(const NetworkCase& nc, const model::CompactStage2& m,
                       const unc::UncSet& u, const Options& opt) {
  Result res;
  std::vector<Block> blocks;
  Vec all_w, all_lambda;

  conic::SolveOptions mp_opts;
  mp_opts.abs_gap = opt.eps / 10.0;

  for (int it = 0; it < opt.max_iters; ++it) {
    MpLayout lay;
    ConicProgram mp = build_master(nc, m, u, blocks, opt, lay);
    double t0 = now_seconds();
    auto sol = conic::solve_mi_conic(mp, mp_opts);
    double mp_sec = now_seconds() - t0;
    if (sol.status != SolveStatus::Optimal)
      throw std::runtime_error("master solve failed: " +
                               conic::to_string(sol.status));
    res.lb = std::max(res.lb, sol.bound);

    Topology alpha(m.n_alpha, 0);
    for (int e = 0; e < m.n_alpha; ++e)
      alpha[e] = sol.x[lay.alpha0 + e] > 0.5;
    if (!is_radial(nc, alpha))
      throw std::runtime_error("master produced a non-radial topology");
    Vec xi(m.n_w);
    for (int c = 0; c < m.n_w; ++c) xi[c] = sol.x[lay.xi0 + c];

    // verify the mapping blocks picked true inner maxima (big-M audit)
    res.scenarios.clear();
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      if (lay.w0[k] < 0) {
        res.scenarios.push_back(blocks[k].w_fixed);
        continue;
      }
      Vec wk(u.n);
      for (int c = 0; c < u.n; ++c) wk[c] = sol.x[lay.w0[k] + c];
      res.scenarios.push_back(wk);
      double got = 0;
      for (int c = 0; c < u.n; ++c) got += blocks[k].ghat[c] * wk[c];
      double want = inner_value(u, xi, blocks[k].ghat,
                                blocks[k].mode == BlockMode::Full);
      if (std::abs(got - want) > 1e-5 * std::max(1.0, std::abs(want)))
        throw std::runtime_error("mapping block lost optimality (big-M audit)");
    }
    res.xi_mp = xi;

    double t1 = now_seconds();
    auto sp = solve_subproblem(m, u, alpha, xi, opt.sp, opt.policy,
                               opt.max_vertices);
    double sp_sec = now_seconds() - t1;
    double cand = model::first_stage_cost(nc, alpha, xi) + sp.value;
    if (cand < res.ub) {
      res.ub = cand;
      res.alpha = alpha;
      res.xi = xi;
      res.worst_w = sp.w_star;
    }

    IterRow row;
    row.iter = it;
    row.lb = res.lb;
    row.ub = res.ub;
    row.gap = res.ub - res.lb;
    row.mp_seconds = mp_sec;
    row.sp_seconds = sp_sec;
    row.n_binaries = mp.num_int();
    row.n_rows = static_cast<long>(mp.eq_rows.size() + mp.le_rows.size());
    res.log.push_back(row);
    res.iters = it + 1;

    for (double v : sp.w_star) all_w.push_back(v);
    for (double v : sp.lambda) all_lambda.push_back(v);
    res.lambdas.push_back(sp.lambda);

    if (res.ub - res.lb <= opt.eps) {
      res.converged = true;
      break;
    }

    Block nb;
    nb.mode = opt.block;
    nb.lambda = sp.lambda;
    nb.ghat = sp.ghat;
    nb.w_fixed = sp.w_star;
    for (const auto& old : blocks) {
      if (old.mode == BlockMode::FixedScenario) continue;
      double d = 0;
      for (int c = 0; c < u.n; ++c)
        d = std::max(d, std::abs(old.ghat[c] - nb.ghat[c]));
      if (d <= 1e-12) {  // degenerate multiplier repeat, nudge the weight
        for (int c = 0; c < u.n; ++c) nb.ghat[c] += 1e-9 * (c + 1);
        break;
      }
    }
    blocks.push_back(std::move(nb));
  }
  res.objective = res.ub;
  res.w_fingerprint = fingerprint(all_w);
  res.lambda_fingerprint = fingerprint(all_lambda);
  return res;
}

std::string log_csv(const std::vector<IterRow>& log, bool with_timing) {
  std::ostringstream os;
  os << "iter,lb,ub,gap";
  if (with_timing) os << ",mp_seconds,sp_seconds";
  os << ",n_binaries,n_rows\n";
  os.setf(std::ios::fmtflags(0), std::ios::floatfield);
  os.precision(12);
  for (const auto& r : log) {
    os << r.iter << ',' << r.lb << ',' << r.ub << ',' << r.gap;
    if (with_timing) {
      os.precision(3);
      os << ',' << r.mp_seconds << ',' << r.sp_seconds;
      os.precision(12);
    }
    os << ',' << r.n_binaries << ',' << r.n_rows << '\n';
  }
  return os.str();
}

}  // namespace rdnr::ccg

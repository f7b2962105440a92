#include "rdnr/compact_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdnr::model {

namespace {

double branch_big_m(const NetworkCase& nc, const Branch& br) {
  if (nc.big_m && *nc.big_m > 0) return *nc.big_m;
  const Bus& bi = nc.buses[nc.bus_index(br.from)];
  const Bus& bj = nc.buses[nc.bus_index(br.to)];
  double spread = std::max(bi.v_max - bj.v_min, bj.v_max - bi.v_min);
  double drop = 2.0 * (br.r * std::max(br.p_max, br.p_min) +
                       br.x * std::max(br.q_max, br.q_min)) +
                (br.r * br.r + br.x * br.x) * br.l_max;
  return spread + drop;
}

}  // namespace

CompactStage2 build_stage2(const NetworkCase& nc, double m_s) {
  CompactStage2 m;
  VarMap& vm = m.vm;
  vm.T = nc.horizon;
  vm.nb = static_cast<int>(nc.buses.size());
  vm.ne = static_cast<int>(nc.branches.size());
  vm.ng = static_cast<int>(nc.thermals.size());
  vm.ns = static_cast<int>(nc.storages.size());
  vm.per_t = vm.nb + 3 * vm.ne + 2 * vm.ng + vm.ns;
  vm.n_y = vm.T * vm.per_t;
  vm.n_slack = 2 * vm.nb * vm.T;
  m.n_alpha = vm.ne;
  m.n_w = static_cast<int>(nc.renewables.size()) * vm.T;

  m.b.assign(vm.n_y, 0.0);
  m.y_lo.assign(vm.n_y, -kInf);
  m.y_hi.assign(vm.n_y, kInf);
  double max_cost = 1.0;
  for (int t = 0; t < vm.T; ++t) {
    for (int g = 0; g < vm.ng; ++g) {
      m.b[vm.pg(g, t)] = nc.costs.b_p[g];
      m.b[vm.qg(g, t)] = nc.costs.b_q[g];
      max_cost = std::max({max_cost, std::abs(nc.costs.b_p[g]),
                           std::abs(nc.costs.b_q[g])});
    }
    for (int s = 0; s < vm.ns; ++s) {
      m.b[vm.pb(s, t)] = nc.costs.b_bes[s];
      max_cost = std::max(max_cost, std::abs(nc.costs.b_bes[s]));
    }
  }
  m.m_s = m_s > 0 ? m_s : 1e3 * max_cost;

  // renewable coordinate -> bus, matching the uncertainty-set flattening
  int n_rg = static_cast<int>(nc.renewables.size());
  auto w_col = [&](int rg, int t) { return rg * vm.T + t; };

  auto add_row = [&](conic::SpRow brow, double gam, const std::string& label,
                     conic::SpRow arow = {}, conic::SpRow grow = {},
                     int slack = -1) {
    m.B.push_back(std::move(brow));
    m.A.push_back(std::move(arow));
    m.G.push_back(std::move(grow));
    m.gamma.push_back(gam);
    m.slack_col.push_back(slack);
    m.row_labels.push_back(label);
    return m.n_rows++;
  };

  int sub = nc.substation_index();
  for (int t = 0; t < vm.T; ++t) {
    std::string ts = "_t" + std::to_string(t);
    // active power balance pairs
    for (int b = 0; b < vm.nb; ++b) {
      conic::SpRow flow;
      for (int e = 0; e < vm.ne; ++e) {
        const Branch& br = nc.branches[e];
        int fi = nc.bus_index(br.from), ti = nc.bus_index(br.to);
        if (ti == b) {
          flow.push_back({vm.p(e, t), 1.0});
          flow.push_back({vm.l(e, t), -br.r});
        }
        if (fi == b) flow.push_back({vm.p(e, t), -1.0});
      }
      for (int g = 0; g < vm.ng; ++g)
        if (nc.bus_index(nc.thermals[g].bus) == b)
          flow.push_back({vm.pg(g, t), 1.0});
      for (int s = 0; s < vm.ns; ++s)
        if (nc.bus_index(nc.storages[s].bus) == b)
          flow.push_back({vm.pb(s, t), 1.0});
      conic::SpRow gplus, gminus;
      for (int rg = 0; rg < n_rg; ++rg)
        if (nc.bus_index(nc.renewables[rg].bus) == b) {
          gplus.push_back({w_col(rg, t), -1.0});
          gminus.push_back({w_col(rg, t), 1.0});
        }
      double pl = nc.buses[b].load_p[t];
      conic::SpRow neg;
      for (auto [j, v] : flow) neg.push_back({j, -v});
      std::string bs = "bus" + std::to_string(nc.buses[b].id);
      m.balance_row_plus.push_back(static_cast<int>(m.n_rows));
      add_row(flow, -pl, "p_bal+_" + bs + ts, {}, gplus, vm.s_plus(b, t));
      add_row(std::move(neg), pl, "p_bal-_" + bs + ts, {}, gminus,
              vm.s_minus(b, t));
    }
    // reactive power balance pairs
    for (int b = 0; b < vm.nb; ++b) {
      conic::SpRow flow;
      for (int e = 0; e < vm.ne; ++e) {
        const Branch& br = nc.branches[e];
        int fi = nc.bus_index(br.from), ti = nc.bus_index(br.to);
        if (ti == b) {
          flow.push_back({vm.q(e, t), 1.0});
          flow.push_back({vm.l(e, t), -br.x});
        }
        if (fi == b) flow.push_back({vm.q(e, t), -1.0});
      }
      for (int g = 0; g < vm.ng; ++g)
        if (nc.bus_index(nc.thermals[g].bus) == b)
          flow.push_back({vm.qg(g, t), 1.0});
      double ql = nc.buses[b].load_q[t];
      conic::SpRow neg;
      for (auto [j, v] : flow) neg.push_back({j, -v});
      std::string bs = "bus" + std::to_string(nc.buses[b].id);
      add_row(flow, -ql, "q_bal+_" + bs + ts);
      add_row(std::move(neg), ql, "q_bal-_" + bs + ts);
    }
    // substation voltage pin
    add_row({{vm.v(sub, t), 1.0}}, -1.0, "v_sub+" + ts);
    add_row({{vm.v(sub, t), -1.0}}, 1.0, "v_sub-" + ts);
    // switchable voltage drop and cap rows
    for (int e = 0; e < vm.ne; ++e) {
      const Branch& br = nc.branches[e];
      int fi = nc.bus_index(br.from), ti = nc.bus_index(br.to);
      double r2x2 = br.r * br.r + br.x * br.x;
      double M = branch_big_m(nc, br);
      conic::SpRow drop = {{vm.v(ti, t), 1.0},  {vm.v(fi, t), -1.0},
                           {vm.p(e, t), 2 * br.r}, {vm.q(e, t), 2 * br.x},
                           {vm.l(e, t), -r2x2}};
      conic::SpRow ndrop;
      for (auto [j, v] : drop) ndrop.push_back({j, -v});
      std::string es = "br" + std::to_string(br.id);
      add_row(drop, -M, "vdrop+_" + es + ts, {{e, M}});
      add_row(std::move(ndrop), -M, "vdrop-_" + es + ts, {{e, M}});
      add_row({{vm.p(e, t), 1.0}}, 0.0, "pcap+_" + es + ts, {{e, -br.p_max}});
      add_row({{vm.p(e, t), -1.0}}, 0.0, "pcap-_" + es + ts, {{e, -br.p_min}});
      add_row({{vm.q(e, t), 1.0}}, 0.0, "qcap+_" + es + ts, {{e, -br.q_max}});
      add_row({{vm.q(e, t), -1.0}}, 0.0, "qcap-_" + es + ts, {{e, -br.q_min}});
      add_row({{vm.l(e, t), 1.0}}, 0.0, "lcap_" + es + ts, {{e, -br.l_max}});
      add_row({{vm.l(e, t), -1.0}}, 0.0, "lfloor_" + es + ts);
      m.y_lo[vm.l(e, t)] = 0.0;
      m.y_hi[vm.l(e, t)] = br.l_max;
      m.y_lo[vm.p(e, t)] = -br.p_min;
      m.y_hi[vm.p(e, t)] = br.p_max;
      m.y_lo[vm.q(e, t)] = -br.q_min;
      m.y_hi[vm.q(e, t)] = br.q_max;
    }
    // voltage boxes
    for (int b = 0; b < vm.nb; ++b) {
      const Bus& bus = nc.buses[b];
      std::string bs = "bus" + std::to_string(bus.id);
      add_row({{vm.v(b, t), 1.0}}, -bus.v_max, "vmax_" + bs + ts);
      add_row({{vm.v(b, t), -1.0}}, bus.v_min, "vmin_" + bs + ts);
      m.y_lo[vm.v(b, t)] = bus.v_min;
      m.y_hi[vm.v(b, t)] = bus.v_max;
    }
    // device caps
    for (int g = 0; g < vm.ng; ++g) {
      const Thermal& th = nc.thermals[g];
      std::string gs = "gen" + std::to_string(g);
      add_row({{vm.pg(g, t), 1.0}}, -th.p_max, "pgmax_" + gs + ts);
      add_row({{vm.pg(g, t), -1.0}}, th.p_min, "pgmin_" + gs + ts);
      add_row({{vm.qg(g, t), 1.0}}, -th.q_max, "qgmax_" + gs + ts);
      add_row({{vm.qg(g, t), -1.0}}, th.q_min, "qgmin_" + gs + ts);
      m.y_lo[vm.pg(g, t)] = th.p_min;
      m.y_hi[vm.pg(g, t)] = th.p_max;
      m.y_lo[vm.qg(g, t)] = th.q_min;
      m.y_hi[vm.qg(g, t)] = th.q_max;
    }
    for (int s = 0; s < vm.ns; ++s) {
      const Storage& st = nc.storages[s];
      std::string ss = "bes" + std::to_string(s);
      add_row({{vm.pb(s, t), 1.0}}, -st.p_max, "pbmax_" + ss + ts);
      add_row({{vm.pb(s, t), -1.0}}, st.p_min, "pbmin_" + ss + ts);
      m.y_lo[vm.pb(s, t)] = st.p_min;
      m.y_hi[vm.pb(s, t)] = st.p_max;
      // cumulative state of charge window up to t
      conic::SpRow win;
      for (int tau = 0; tau <= t; ++tau)
        win.push_back({vm.pb(s, tau), st.delta_t});
      conic::SpRow nwin;
      for (auto [j, v] : win) nwin.push_back({j, -v});
      add_row(win, st.soc_min - st.soc_init, "soc_lo_" + ss + ts);
      add_row(std::move(nwin), st.soc_init - st.soc_max, "soc_hi_" + ss + ts);
    }
    // branch flow cones
    for (int e = 0; e < vm.ne; ++e) {
      const Branch& br = nc.branches[e];
      int fi = nc.bus_index(br.from);
      conic::SocBlock blk;
      blk.rows = {{{vm.l(e, t), 1.0}, {vm.v(fi, t), 1.0}},
                  {{vm.p(e, t), 2.0}},
                  {{vm.q(e, t), 2.0}},
                  {{vm.l(e, t), 1.0}, {vm.v(fi, t), -1.0}}};
      blk.offsets = {0, 0, 0, 0};
      m.cones.push_back(std::move(blk));
    }
  }
  return m;
}

namespace {

conic::ConicProgram q_program(const CompactStage2& m, const Topology& alpha,
                              const Vec& w, bool relaxed) {
  conic::ConicProgram P;
  for (int j = 0; j < m.vm.n_y; ++j) P.add_var(-kInf, kInf, m.b[j]);
  if (relaxed)
    for (int j = 0; j < m.vm.n_slack; ++j) P.add_var(0.0, kInf, m.m_s);
  for (int r = 0; r < m.n_rows; ++r) {
    conic::SpRow row = m.B[r];
    if (relaxed && m.slack_col[r] >= 0) row.push_back({m.slack_col[r], -1.0});
    double rhs = -m.gamma[r];
    for (auto [e, v] : m.A[r]) rhs -= v * (alpha[e] ? 1.0 : 0.0);
    for (auto [c, v] : m.G[r]) rhs += v * w[c];
    P.add_le(std::move(row), rhs);
  }
  for (const auto& blk : m.cones) P.add_soc(blk);
  return P;
}

}  // namespace

QResult evaluate_Q(const CompactStage2& m, const Topology& alpha, const Vec& w,
                   bool relaxed) {
  conic::ConicProgram P = q_program(m, alpha, w, relaxed);
  auto s = conic::solve_conic(P);
  QResult out;
  out.status = s.status;
  if (s.status != conic::SolveStatus::Optimal) return out;
  out.value = s.obj;
  out.y = s.x;
  out.lambda = s.lam_le;
  out.cone_duals = s.soc_dual;
  if (relaxed)
    for (int j = 0; j < m.vm.n_slack; ++j)
      out.slack_total += s.x[m.vm.n_y + j];
  return out;
}

double stationarity_residual(const CompactStage2& m, const QResult& r) {
  Vec grad(m.vm.n_y, 0.0);
  for (int j = 0; j < m.vm.n_y; ++j) grad[j] = m.b[j];
  for (int row = 0; row < m.n_rows; ++row)
    for (auto [j, v] : m.B[row]) grad[j] += v * r.lambda[row];
  for (std::size_t k = 0; k < m.cones.size(); ++k)
    for (std::size_t i = 0; i < m.cones[k].rows.size(); ++i)
      for (auto [j, v] : m.cones[k].rows[i]) grad[j] -= v * r.cone_duals[k][i];
  double res = 0.0;
  for (int j = 0; j < m.vm.n_y; ++j) res = std::max(res, std::abs(grad[j]));
  // slack columns: m_s - lambda_row >= 0
  for (int row = 0; row < m.n_rows; ++row)
    if (m.slack_col[row] >= 0)
      res = std::max(res, std::max(0.0, r.lambda[row] - m.m_s));
  return res;
}

conic::ConicProgram dual_program(const CompactStage2& m, const Topology& alpha,
                                 const Vec& w) {
  conic::ConicProgram D;
  // lambda per row, objective max lambda'(A alpha + gamma - G w)
  for (int r = 0; r < m.n_rows; ++r) {
    double coef = m.gamma[r];
    for (auto [e, v] : m.A[r]) coef += v * (alpha[e] ? 1.0 : 0.0);
    for (auto [c, v] : m.G[r]) coef -= v * w[c];
    D.add_var(0.0, kInf, -coef, false, "lam_" + m.row_labels[r]);
  }
  int cone0 = D.n;
  for (std::size_t k = 0; k < m.cones.size(); ++k) {
    conic::SocBlock blk;
    for (std::size_t i = 0; i < m.cones[k].rows.size(); ++i) {
      int var = D.add_var(-kInf, kInf, 0.0);
      blk.rows.push_back({{var, 1.0}});
      blk.offsets.push_back(0.0);
    }
    D.add_soc(blk);
  }
  // stationarity per free column: b_j + B'lambda - cone'duals = 0
  std::vector<conic::SpRow> st(m.vm.n_y);
  for (int r = 0; r < m.n_rows; ++r)
    for (auto [j, v] : m.B[r]) st[j].push_back({r, v});
  {
    int var = cone0;
    for (std::size_t k = 0; k < m.cones.size(); ++k)
      for (std::size_t i = 0; i < m.cones[k].rows.size(); ++i, ++var)
        for (auto [j, v] : m.cones[k].rows[i]) st[j].push_back({var, -v});
  }
  for (int j = 0; j < m.vm.n_y; ++j) D.add_eq(std::move(st[j]), -m.b[j]);
  // slack columns give lambda_row <= m_s
  for (int r = 0; r < m.n_rows; ++r)
    if (m.slack_col[r] >= 0) D.add_le({{r, 1.0}}, m.m_s);
  return D;
}

double check_robust_feasibility(const CompactStage2& m, const unc::UncSet& u,
                                const Vec& xi,
                                const std::vector<Topology>& topologies) {
  auto verts = unc::enumerate_vertices(u, xi);
  double worst = 0.0;
  for (const auto& alpha : topologies) {
    for (const auto& w : verts) {
      conic::ConicProgram P;
      for (int j = 0; j < m.vm.n_y; ++j) P.add_var(-kInf, kInf, 0.0);
      for (int r = 0; r < m.n_rows; ++r) {
        conic::SpRow row = m.B[r];
        int eta = P.add_var(0.0, kInf, 1.0);
        row.push_back({eta, -1.0});
        double rhs = -m.gamma[r];
        for (auto [e, v] : m.A[r]) rhs -= v * (alpha[e] ? 1.0 : 0.0);
        for (auto [c, v] : m.G[r]) rhs += v * w[c];
        P.add_le(std::move(row), rhs);
      }
      for (const auto& blk : m.cones) P.add_soc(blk);
      auto s = conic::solve_conic(P);
      if (s.status != conic::SolveStatus::Optimal)
        throw std::runtime_error("feasibility probe failed: " +
                                 conic::to_string(s.status));
      worst = std::max(worst, s.obj);
    }
  }
  return worst;
}

double q_lower_bound(const CompactStage2& m) {
  double lo = 0.0;
  for (int j = 0; j < m.vm.n_y; ++j) {
    if (m.b[j] == 0.0) continue;
    double a = m.b[j] * m.y_lo[j], bb = m.b[j] * m.y_hi[j];
    lo += std::min(a, bb);
  }
  return std::min(lo, 0.0);
}

double first_stage_cost(const NetworkCase& nc, const Topology& alpha,
                        const Vec& xi) {
  double c = 0.0;
  for (std::size_t e = 0; e < nc.branches.size(); ++e)
    if (alpha[e]) c += nc.costs.c_alpha[e];
  int T = nc.horizon;
  for (std::size_t rg = 0; rg < nc.renewables.size(); ++rg)
    for (int t = 0; t < T; ++t)
      c -= nc.costs.c_xi[rg][t] * xi[rg * T + t];
  return c;
}

}  // namespace rdnr::model

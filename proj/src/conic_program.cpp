#include "rdnr/conic.hpp"

#include <algorithm>
#include <stdexcept>

namespace rdnr::conic {

int ConicProgram::add_var(double lo, double hi, double cost, bool integer,
                          const std::string& name) {
  lb.push_back(lo);
  ub.push_back(hi);
  c.push_back(cost);
  is_int.push_back(integer ? 1 : 0);
  names.push_back(name.empty() ? "x" + std::to_string(n) : name);
  return n++;
}

void ConicProgram::add_eq(SpRow row, double rhs) {
  eq_rows.push_back(std::move(row));
  eq_rhs.push_back(rhs);
}

void ConicProgram::add_le(SpRow row, double rhs) {
  le_rows.push_back(std::move(row));
  le_rhs.push_back(rhs);
}

void ConicProgram::add_soc(SocBlock blk) {
  if (blk.offsets.empty()) blk.offsets.assign(blk.rows.size(), 0.0);
  if (blk.rows.size() < 2 || blk.offsets.size() != blk.rows.size())
    throw std::invalid_argument("soc block needs head + tail rows");
  socs.push_back(std::move(blk));
}

int ConicProgram::num_int() const {
  int k = 0;
  for (auto b : is_int) k += b;
  return k;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::IterationLimit: return "iteration_limit";
    case SolveStatus::NodeLimit: return "node_limit";
    case SolveStatus::NumericalTrouble: return "numerical_trouble";
  }
  return "?";
}

ConicProgram dualize(const ConicProgram& p) {
  if (p.num_int() > 0)
    throw std::invalid_argument("dualize requires a continuous program");

  // fold bounds into le rows so the dual has one multiplier family
  ConicProgram q = p;
  for (int j = 0; j < q.n; ++j) {
    if (q.lb[j] > -kInf) q.add_le({{j, -1.0}}, -q.lb[j]);
    if (q.ub[j] < kInf) q.add_le({{j, 1.0}}, q.ub[j]);
    q.lb[j] = -kInf;
    q.ub[j] = kInf;
  }

  // dual vars: y (free) per eq row, lam >= 0 per le row, soc dual per block
  ConicProgram d;
  std::vector<int> yi, li;
  for (std::size_t i = 0; i < q.eq_rows.size(); ++i)
    yi.push_back(d.add_var(-kInf, kInf, q.eq_rhs[i], false,
                           "y" + std::to_string(i)));
  for (std::size_t i = 0; i < q.le_rows.size(); ++i)
    li.push_back(
        d.add_var(0.0, kInf, q.le_rhs[i], false, "lam" + std::to_string(i)));
  std::vector<std::vector<int>> si;
  for (std::size_t k = 0; k < q.socs.size(); ++k) {
    std::vector<int> blk;
    for (std::size_t r = 0; r < q.socs[k].rows.size(); ++r)
      blk.push_back(d.add_var(-kInf, kInf, q.socs[k].offsets[r], false,
                              "sd" + std::to_string(k) + "_" +
                                  std::to_string(r)));
    si.push_back(std::move(blk));
  }

  // stationarity: A'y + G'lam - sum_k soc_k' dual_k = -c  (n equality rows)
  std::vector<SpRow> st(q.n);
  for (std::size_t i = 0; i < q.eq_rows.size(); ++i)
    for (auto [j, v] : q.eq_rows[i]) st[j].push_back({yi[i], v});
  for (std::size_t i = 0; i < q.le_rows.size(); ++i)
    for (auto [j, v] : q.le_rows[i]) st[j].push_back({li[i], v});
  for (std::size_t k = 0; k < q.socs.size(); ++k)
    for (std::size_t r = 0; r < q.socs[k].rows.size(); ++r)
      for (auto [j, v] : q.socs[k].rows[r]) st[j].push_back({si[k][r], -v});
  for (int j = 0; j < q.n; ++j) d.add_eq(std::move(st[j]), -q.c[j]);

  // cone membership of soc duals
  for (auto& blk : si) {
    SocBlock sb;
    for (int v : blk) sb.rows.push_back({{v, 1.0}});
    sb.offsets.assign(blk.size(), 0.0);
    d.add_soc(std::move(sb));
  }

  // dual value = -(b'y + h'lam + offsets'duals); we minimize the negation,
  // so solve(d).obj == -solve(p).obj.
  d.c0 = -q.c0;
  return d;
}

int add_complementarity(ConicProgram& p, int mult_var, SpRow expr, double rhs,
                        double m_mult, double m_slack, const std::string& tag) {
  int z = p.add_var(0.0, 1.0, 0.0, true, tag);
  p.add_le({{mult_var, 1.0}, {z, -m_mult}}, 0.0);
  // rhs - expr <= m_slack*(1-z)   <=>   -expr + m_slack*z <= m_slack - rhs
  SpRow row;
  for (auto [j, v] : expr) row.push_back({j, -v});
  row.push_back({z, m_slack});
  p.add_le(std::move(row), m_slack - rhs);
  return z;
}

}  // namespace rdnr::conic

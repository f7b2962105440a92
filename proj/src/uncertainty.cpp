#include "rdnr/uncertainty.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rdnr/conic.hpp"

namespace rdnr::unc {

namespace {

constexpr double kFeasTol = 1e-8;
constexpr std::size_t kRowGuard = 8192;

std::string sign_bits(unsigned mask, int k) {
  std::string s(k, '+');
  for (int i = 0; i < k; ++i)
    if (mask & (1u << i)) s[i] = '-';
  return s;
}

void expand_budget(UncSet& u, const std::vector<int>& coords, double gamma,
                   const std::string& tag) {
  int k = static_cast<int>(coords.size());
  if (k > 12)
    throw ValidationError("budget sign expansion too large (" + tag + ": " +
                          std::to_string(k) + " coordinates)");
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    Vec row(u.n, 0.0);
    double rhs = gamma;
    for (int i = 0; i < k; ++i) {
      double s = (mask & (1u << i)) ? -1.0 : 1.0;
      int c = coords[i];
      row[c] = s / u.w_dev[c];
      rhs += s * u.w_nom[c] / u.w_dev[c];
    }
    u.F.push_back(std::move(row));
    u.f.push_back(rhs);
    u.f_labels.push_back(tag + "_s" + sign_bits(mask, k));
    if (u.F.size() > kRowGuard)
      throw ValidationError("uncertainty row guard exceeded");
  }
}

void finish_set(UncSet& u) {
  for (int c = 0; c < u.n; ++c) {
    Vec row(u.n, 0.0);
    row[c] = -1.0;
    u.F.push_back(std::move(row));
    u.f.push_back(-u.w_min[c]);
    u.f_labels.push_back("floor_w" + std::to_string(c));
  }
}

void build_rows(UncSet& u) {
  for (int c = 0; c < u.n; ++c) {
    u.w_nom[c] = 0.5 * (u.w_min[c] + u.w_max[c]);
    u.w_dev[c] = 0.5 * (u.w_max[c] - u.w_min[c]);
    if (u.w_dev[c] <= 1e-12)
      throw ValidationError("renewable band has zero width at coordinate " +
                            std::to_string(c));
  }
  for (int t = 0; t < u.horizon; ++t) {
    std::vector<int> coords;
    for (int i = 0; i < u.n_rg; ++i) coords.push_back(u.idx(i, t));
    expand_budget(u, coords, u.gamma_t, "budget_t" + std::to_string(t));
  }
  if (u.horizon > 1) {
    for (int i = 0; i < u.n_rg; ++i) {
      std::vector<int> coords;
      for (int t = 0; t < u.horizon; ++t) coords.push_back(u.idx(i, t));
      expand_budget(u, coords, u.gamma_i, "budget_rg" + std::to_string(i));
    }
  }
  finish_set(u);
}

using Mat = Eigen::MatrixXd;

int active_rank(const std::vector<Vec>& normals, int n) {
  if (static_cast<int>(normals.size()) < n) return 0;
  Mat M(normals.size(), n);
  for (std::size_t r = 0; r < normals.size(); ++r)
    for (int c = 0; c < n; ++c) M(r, c) = normals[r][c];
  Eigen::FullPivLU<Mat> lu(M);
  lu.setThreshold(1e-9);
  return static_cast<int>(lu.rank());
}

struct RowSystem {
  std::vector<Vec> rows;  // row . w <= rhs
  Vec rhs;
};

RowSystem all_rows(const UncSet& u, const Vec& xi) {
  RowSystem rs;
  rs.rows = u.F;
  rs.rhs = u.f;
  for (int c = 0; c < u.n; ++c) {
    Vec row(u.n, 0.0);
    row[c] = 1.0;
    rs.rows.push_back(std::move(row));
    rs.rhs.push_back(std::min(xi[c], u.w_max[c]));
  }
  for (std::size_t r = 0; r < u.ext_H.size(); ++r) {
    Vec row(u.n, 0.0);
    double rhs = -u.ext_beta[r];
    for (int c = 0; c < u.n; ++c) {
      row[c] = -u.ext_H[r][c];
      rhs += u.ext_C[r][c] * xi[c];
    }
    rs.rows.push_back(std::move(row));
    rs.rhs.push_back(rhs);
  }
  return rs;
}

bool feasible_point(const RowSystem& rs, const Vec& w) {
  for (std::size_t r = 0; r < rs.rows.size(); ++r) {
    double lhs = 0;
    for (std::size_t c = 0; c < w.size(); ++c) lhs += rs.rows[r][c] * w[c];
    if (lhs > rs.rhs[r] + kFeasTol) return false;
  }
  return true;
}

bool is_vertex(const RowSystem& rs, const Vec& w, int n) {
  std::vector<Vec> act;
  for (std::size_t r = 0; r < rs.rows.size(); ++r) {
    double lhs = 0;
    for (int c = 0; c < n; ++c) lhs += rs.rows[r][c] * w[c];
    if (std::abs(lhs - rs.rhs[r]) <= 1e-7) act.push_back(rs.rows[r]);
  }
  return active_rank(act, n) == n;
}

void push_dedup(std::vector<Vec>& out, const Vec& w) {
  Vec r(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    r[i] = std::round(w[i] * 1e9) / 1e9 + 0.0;  // normalize -0
  out.push_back(std::move(r));
}

std::vector<Vec> finalize(std::vector<Vec> verts, std::size_t max_vertices) {
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end(),
                          [](const Vec& a, const Vec& b) {
                            for (std::size_t i = 0; i < a.size(); ++i)
                              if (std::abs(a[i] - b[i]) > 1e-7) return false;
                            return true;
                          }),
              verts.end());
  if (verts.size() > max_vertices)
    throw std::runtime_error("vertex guard exceeded (" +
                             std::to_string(verts.size()) + " vertices)");
  return verts;
}

// T == 1, no extension rows: a vertex holds every coordinate at its floor,
// its cap, or the band midpoint, except at most one coordinate that closes
// the per-period budget exactly.
std::vector<Vec> vertices_structured(const UncSet& u, const Vec& xi,
                                     std::size_t max_vertices) {
  RowSystem rs = all_rows(u, xi);
  int n = u.n;
  std::vector<Vec> out;
  std::vector<double> lo(u.w_min.begin(), u.w_min.end());
  std::vector<double> hi(n), mid(u.w_nom.begin(), u.w_nom.end());
  for (int c = 0; c < n; ++c) hi[c] = std::min(xi[c], u.w_max[c]);

  std::vector<int> levels(n, 0);
  std::vector<double> w(n);
  auto value_at = [&](int c, int lv) {
    return lv == 0 ? lo[c] : (lv == 1 ? hi[c] : mid[c]);
  };
  // plain assignments and one-residual assignments in a single scan
  long total = 1;
  for (int c = 0; c < n; ++c) total *= 3;
  for (long code = 0; code < total; ++code) {
    long rem = code;
    for (int c = 0; c < n; ++c) {
      levels[c] = rem % 3;
      rem /= 3;
      w[c] = value_at(c, levels[c]);
    }
    if (feasible_point(rs, w) && is_vertex(rs, w, n)) push_dedup(out, w);
    for (int free_c = 0; free_c < n; ++free_c) {
      double used = 0;
      for (int c = 0; c < n; ++c)
        if (c != free_c) used += std::abs(w[c] - u.w_nom[c]) / u.w_dev[c];
      double r = u.gamma_t - used;
      if (r < -1e-12) continue;
      r = std::max(r, 0.0);
      double keep = w[free_c];
      for (double s : {1.0, -1.0}) {
        w[free_c] = u.w_nom[free_c] + s * r * u.w_dev[free_c];
        if (feasible_point(rs, w) && is_vertex(rs, w, n)) push_dedup(out, w);
      }
      w[free_c] = keep;
    }
  }
  return finalize(std::move(out), max_vertices);
}

std::vector<Vec> vertices_basis(const UncSet& u, const Vec& xi,
                                std::size_t max_vertices) {
  RowSystem rs = all_rows(u, xi);
  int n = u.n;
  int m = static_cast<int>(rs.rows.size());
  // combination count guard
  double combos = 1;
  for (int i = 0; i < n; ++i) combos *= double(m - i) / double(i + 1);
  if (combos > 5e6)
    throw std::runtime_error("vertex guard exceeded (basis combinations)");

  std::vector<Vec> out;
  std::vector<int> pick(n);
  for (int i = 0; i < n; ++i) pick[i] = i;
  Mat M(n, n);
  Eigen::VectorXd rhs(n), w(n);
  Vec wv(n);
  while (true) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) M(r, c) = rs.rows[pick[r]][c];
      rhs[r] = rs.rhs[pick[r]];
    }
    Eigen::FullPivLU<Mat> lu(M);
    lu.setThreshold(1e-9);
    if (lu.rank() == n) {
      w = lu.solve(rhs);
      for (int c = 0; c < n; ++c) wv[c] = w[c];
      if (feasible_point(rs, wv)) push_dedup(out, wv);
    }
    // next combination
    int i = n - 1;
    while (i >= 0 && pick[i] == m - n + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return finalize(std::move(out), max_vertices);
}

}  // namespace

UncSet make_unc_set(const NetworkCase& nc, double gamma_t, double gamma_i) {
  UncSet u;
  u.n_rg = static_cast<int>(nc.renewables.size());
  u.horizon = nc.horizon;
  u.n = u.n_rg * u.horizon;
  if (u.n == 0) throw ValidationError("case has no renewable units");
  u.gamma_t = gamma_t < 0 ? 0.5 * u.n_rg : gamma_t;
  u.gamma_i = gamma_i < 0 ? 0.5 * u.horizon : gamma_i;
  u.w_min.resize(u.n);
  u.w_max.resize(u.n);
  u.w_nom.resize(u.n);
  u.w_dev.resize(u.n);
  for (int i = 0; i < u.n_rg; ++i)
    for (int t = 0; t < u.horizon; ++t) {
      u.w_min[u.idx(i, t)] = nc.renewables[i].w_min[t];
      u.w_max[u.idx(i, t)] = nc.renewables[i].w_max[t];
    }
  build_rows(u);
  return u;
}

UncSet make_box_budget(const Vec& w_min, const Vec& w_max, double gamma_t,
                       int n_rg, int horizon, double gamma_i) {
  UncSet u;
  u.n_rg = n_rg;
  u.horizon = horizon;
  u.n = n_rg * horizon;
  u.gamma_t = gamma_t;
  u.gamma_i = gamma_i < 0 ? 0.5 * horizon : gamma_i;
  u.w_min = w_min;
  u.w_max = w_max;
  u.w_nom.resize(u.n);
  u.w_dev.resize(u.n);
  build_rows(u);
  return u;
}

void add_floor_row(UncSet& u, const Vec& h, double beta, const Vec& c_xi) {
  u.ext_H.push_back(h);
  u.ext_beta.push_back(beta);
  u.ext_C.push_back(c_xi);
}

bool set_empty(const UncSet& u, const Vec& xi) {
  conic::ConicProgram P;
  for (int c = 0; c < u.n; ++c)
    P.add_var(u.w_min[c], std::min(xi[c], u.w_max[c]), 0.0);
  for (std::size_t r = 0; r < u.F.size(); ++r) {
    conic::SpRow row;
    for (int c = 0; c < u.n; ++c)
      if (u.F[r][c] != 0.0) row.push_back({c, u.F[r][c]});
    P.add_le(row, u.f[r]);
  }
  for (std::size_t r = 0; r < u.ext_H.size(); ++r) {
    conic::SpRow row;
    double rhs = -u.ext_beta[r];
    for (int c = 0; c < u.n; ++c) {
      if (u.ext_H[r][c] != 0.0) row.push_back({c, -u.ext_H[r][c]});
      rhs += u.ext_C[r][c] * xi[c];
    }
    P.add_le(row, rhs);
  }
  auto s = conic::solve_conic(P);
  return s.status == conic::SolveStatus::PrimalInfeasible;
}

std::vector<Vec> enumerate_vertices(const UncSet& u, const Vec& xi,
                                    std::size_t max_vertices) {
  if (u.horizon == 1 && u.ext_H.empty() && u.n_rg <= 10)
    return vertices_structured(u, xi, max_vertices);
  return vertices_basis(u, xi, max_vertices);
}

InnerOpt solve_inner_max(const UncSet& u, const Vec& xi, const Vec& g) {
  conic::ConicProgram P;
  for (int c = 0; c < u.n; ++c)
    P.add_var(-kInf, std::min(xi[c], u.w_max[c]), -g[c]);
  for (std::size_t r = 0; r < u.F.size(); ++r) {
    conic::SpRow row;
    for (int c = 0; c < u.n; ++c)
      if (u.F[r][c] != 0.0) row.push_back({c, u.F[r][c]});
    P.add_le(row, u.f[r]);
  }
  for (std::size_t r = 0; r < u.ext_H.size(); ++r) {
    conic::SpRow row;
    double rhs = -u.ext_beta[r];
    for (int c = 0; c < u.n; ++c) {
      if (u.ext_H[r][c] != 0.0) row.push_back({c, -u.ext_H[r][c]});
      rhs += u.ext_C[r][c] * xi[c];
    }
    P.add_le(row, rhs);
  }
  auto s = conic::solve_conic(P);
  if (s.status != conic::SolveStatus::Optimal)
    throw std::runtime_error("inner maximization failed: " +
                             conic::to_string(s.status));
  InnerOpt out;
  out.value = -s.obj;
  out.w = s.x;
  out.pi.assign(u.F.size(), 0.0);
  for (std::size_t r = 0; r < u.F.size(); ++r) out.pi[r] = s.lam_le[r];
  out.theta.assign(u.n, 0.0);
  for (int c = 0; c < u.n; ++c) out.theta[c] = s.lam_ub[c];
  out.sigma.assign(u.ext_H.size(), 0.0);
  for (std::size_t r = 0; r < u.ext_H.size(); ++r)
    out.sigma[r] = s.lam_le[u.F.size() + r];
  return out;
}

}  // namespace rdnr::unc

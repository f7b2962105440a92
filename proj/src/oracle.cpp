#include "rdnr/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rdnr::oracle {

std::vector<Vec> vertices_by_basis(const std::vector<Vec>& rows, const Vec& rhs,
                                   int dim) {
  if (dim > 12) throw std::runtime_error("oracle vertex dimension guard");
  int m = static_cast<int>(rows.size());
  std::vector<Vec> out;
  std::vector<int> pick(dim);
  std::iota(pick.begin(), pick.end(), 0);
  if (m < dim) return out;
  while (true) {
    Eigen::MatrixXd M(dim, dim);
    Eigen::VectorXd r(dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) M(i, j) = rows[pick[i]][j];
      r[i] = rhs[pick[i]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-9);
    if (lu.rank() == dim) {
      Eigen::VectorXd w = lu.solve(r);
      bool ok = true;
      for (int rr = 0; rr < m && ok; ++rr) {
        double lhs = 0;
        for (int j = 0; j < dim; ++j) lhs += rows[rr][j] * w[j];
        if (lhs > rhs[rr] + 1e-8) ok = false;
      }
      if (ok) {
        Vec v(dim);
        for (int j = 0; j < dim; ++j) v[j] = std::round(w[j] * 1e9) / 1e9 + 0.0;
        out.push_back(std::move(v));
      }
    }
    int i = dim - 1;
    while (i >= 0 && pick[i] == m - dim + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < dim; ++j) pick[j] = pick[j - 1] + 1;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Vec& a, const Vec& b) {
                          for (std::size_t i = 0; i < a.size(); ++i)
                            if (std::abs(a[i] - b[i]) > 1e-7) return false;
                          return true;
                        }),
            out.end());
  return out;
}

std::vector<Vec> unc_vertices(const unc::UncSet& u, const Vec& xi) {
  std::vector<Vec> rows = u.F;
  Vec rhs = u.f;
  for (int c = 0; c < u.n; ++c) {
    Vec row(u.n, 0.0);
    row[c] = 1.0;
    rows.push_back(std::move(row));
    rhs.push_back(std::min(xi[c], u.w_max[c]));
  }
  for (std::size_t r = 0; r < u.ext_H.size(); ++r) {
    Vec row(u.n, 0.0);
    double b = -u.ext_beta[r];
    for (int c = 0; c < u.n; ++c) {
      row[c] = -u.ext_H[r][c];
      b += u.ext_C[r][c] * xi[c];
    }
    rows.push_back(std::move(row));
    rhs.push_back(b);
  }
  return vertices_by_basis(rows, rhs, u.n);
}

std::vector<Topology> radial_topologies(const NetworkCase& nc,
                                        std::size_t guard) {
  int ne = static_cast<int>(nc.branches.size());
  int nb = static_cast<int>(nc.buses.size());
  if (ne > 24) throw std::runtime_error("oracle topology guard (branches)");
  std::vector<Topology> out;
  for (unsigned long mask = 0; mask < (1ul << ne); ++mask) {
    if (__builtin_popcountl(mask) != nb - 1) continue;
    Topology a(ne, 0);
    for (int e = 0; e < ne; ++e) a[e] = (mask >> e) & 1u;
    if (is_radial(nc, a)) {
      out.push_back(std::move(a));
      if (out.size() > guard)
        throw std::runtime_error("oracle topology guard (count)");
    }
  }
  return out;
}

long spanning_tree_count(const NetworkCase& nc) {
  int nb = static_cast<int>(nc.buses.size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(nb, nb);
  for (const auto& br : nc.branches) {
    int i = nc.bus_index(br.from), j = nc.bus_index(br.to);
    L(i, i) += 1;
    L(j, j) += 1;
    L(i, j) -= 1;
    L(j, i) -= 1;
  }
  Eigen::MatrixXd minor = L.block(1, 1, nb - 1, nb - 1);
  return std::lround(minor.determinant());
}

WorstCase worst_case_Q(const model::CompactStage2& m, const unc::UncSet& u,
                       const Topology& alpha, const Vec& xi) {
  auto verts = unc_vertices(u, xi);
  if (verts.empty()) throw std::runtime_error("availability set is empty");
  WorstCase wc;
  for (std::size_t k = 0; k < verts.size(); ++k) {
    auto q = model::evaluate_Q(m, alpha, verts[k], true);
    if (q.status != conic::SolveStatus::Optimal)
      throw std::runtime_error("oracle recourse solve failed: " +
                               conic::to_string(q.status));
    if (q.value > wc.value + 1e-9 ||
        (std::abs(q.value - wc.value) <= 1e-9 && !wc.w.empty() &&
         verts[k] < wc.w)) {
      wc.value = q.value;
      wc.w = verts[k];
      wc.vertex_index = k;
    }
  }
  return wc;
}

Vec finite_diff(const std::function<double(const Vec&)>& f, const Vec& x,
                double h) {
  Vec g(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vec hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (f(hi) - f(lo)) / (2 * h);
  }
  return g;
}

}  // namespace rdnr::oracle

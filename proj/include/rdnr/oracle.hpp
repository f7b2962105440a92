#pragma once

#include <functional>
#include <vector>

#include "rdnr/common.hpp"
#include "rdnr/compact_model.hpp"
#include "rdnr/network.hpp"
#include "rdnr/uncertainty.hpp"

// Desk-scale reference implementations, deliberately plain. Production code
// is validated against these in tests; none of this is on the solve path.
namespace rdnr::oracle {

// vertices of { w : rows[r] . w <= rhs[r] } by trying every row basis
std::vector<Vec> vertices_by_basis(const std::vector<Vec>& rows, const Vec& rhs,
                                   int dim);

// same availability polytope the production enumerator sees
std::vector<Vec> unc_vertices(const unc::UncSet& u, const Vec& xi);

// every radial (spanning tree) topology, by scanning branch subsets
std::vector<Topology> radial_topologies(const NetworkCase& nc,
                                        std::size_t guard = 4096);

// matrix-tree count for cross-checking the scan
long spanning_tree_count(const NetworkCase& nc);

struct WorstCase {
  double value = -kInf;
  Vec w;
  std::size_t vertex_index = 0;
};

// max_w Q(alpha, w) over the vertices of W(xi), relaxed recourse
WorstCase worst_case_Q(const model::CompactStage2& m, const unc::UncSet& u,
                       const Topology& alpha, const Vec& xi);

// central finite differences of f around x
Vec finite_diff(const std::function<double(const Vec&)>& f, const Vec& x,
                double h);

}  // namespace rdnr::oracle

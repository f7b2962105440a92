#pragma once

#include <string>
#include <vector>

#include "rdnr/ccg.hpp"
#include "rdnr/compact_model.hpp"
#include "rdnr/network.hpp"
#include "rdnr/parallel.hpp"
#include "rdnr/uncertainty.hpp"

namespace rdnr::sens {

// One row of the availability polytope, priced at the worst-case scenario.
// `multiplier` is the shadow value of one unit of slack on the row
// (increasing f_r, raising the cap xi_c, lowering a floor beta_r), and
// `fd` is the matching central finite difference of the inner value, so
// the two columns agree up to degeneracy. At a dual-degenerate row the
// subgradient is an interval; [lo, hi] is that interval, computed by
// re-optimizing each multiplier at fixed inner optimum.
struct RowInfo {
  std::string label;
  double multiplier = 0.0;
  bool active = false;
  double fd = 0.0;
  double lo = 0.0, hi = 0.0;
};

struct Report {
  double primal_value = 0.0;  // max g'w over W(xi)
  double dual_value = 0.0;    // f'pi + xi'theta + (C xi - beta)'sigma
  Vec w_star;
  Vec ghat;
  Vec theta;     // coupling multipliers, one per sizing coordinate
  Vec marginal;  // min(theta_c, c_xi_c): value of one more unit of sizing
  std::vector<RowInfo> rows;  // F rows, then caps, then extension rows
};

Report analyze(const NetworkCase& nc, const model::CompactStage2& m,
               const unc::UncSet& u, const Topology& alpha, const Vec& xi,
               double fd_step = 1e-5);

// "label,multiplier,active,fd_check,range_lo,range_hi" per row
std::string report_csv(const Report& rep);

// Re-solves the full problem under +-rel perturbations of every budget rhs
// (two samples per row) and reports whether the optimal topology moves.
// Solver failures on perturbed instances are counted, not fatal.
struct StabilityScan {
  int samples = 0;
  int failures = 0;
  int changed = 0;
  bool stable = true;  // no sample moved the topology
  Topology base;
};

StabilityScan topology_stability_scan(const NetworkCase& nc,
                                      const model::CompactStage2& m,
                                      const unc::UncSet& u, double rel = 0.01,
                                      ExecPolicy policy = ExecPolicy::Parallel);

}  // namespace rdnr::sens

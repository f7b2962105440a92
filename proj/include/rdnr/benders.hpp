#pragma once

#include "rdnr/ccg.hpp"

namespace rdnr::benders {

// Baseline cutting-plane scheme: the master keeps only (alpha, xi, L) and
// accumulates fixed-multiplier cuts
//   L >= lambda'(A alpha + gamma) + f'pi + xi'theta + (C xi - beta)'sigma
// with (pi, theta, sigma) re-priced at the candidate sizing each iteration.
// Exact under decision-independent uncertainty; under decision-dependent
// caps the xi'theta piece majorizes the concave inner value away from the
// expansion point, so cuts can overconstrain. Kept as the comparison
// baseline, not the production path.
struct Options {
  double eps = 1e-4;
  int max_iters = 100;
  ccg::SpStrategy sp = ccg::SpStrategy::VertexEnum;
  Vec fixed_xi;
  ExecPolicy policy = ExecPolicy::Parallel;
  std::size_t max_vertices = 4096;
};

struct Result {
  bool converged = false;
  int iters = 0;
  double lb = -kInf, ub = kInf;
  double objective = kInf;
  Topology alpha;
  Vec xi;
  std::vector<ccg::IterRow> log;
};

Result run_benders(const NetworkCase& nc, const model::CompactStage2& m,
                   const unc::UncSet& u, const Options& opt = {});

}  // namespace rdnr::benders

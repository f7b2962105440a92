#pragma once

#include <string>
#include <vector>

#include "rdnr/common.hpp"
#include "rdnr/compact_model.hpp"
#include "rdnr/conic.hpp"
#include "rdnr/network.hpp"
#include "rdnr/parallel.hpp"
#include "rdnr/uncertainty.hpp"

namespace rdnr::ccg {

// Rows on the sizing variables keeping the availability set nonempty: the
// minimum-deviation point min(xi, nom) must satisfy every budget, which
// expands to one row per coordinate subset per budget.
void add_sizing_rows(conic::ConicProgram& P, const unc::UncSet& u, int xi0);

enum class SpStrategy { VertexEnum, BigMMilp };

// How a generated scenario enters the master:
//   Full          KKT mapping block, w^i tied to xi (decision-dependent)
//   CapFree       KKT block without the w <= xi coupling
//   FixedScenario constant w^i column (classical column-and-constraint)
enum class BlockMode { Full, CapFree, FixedScenario };

struct Options {
  double eps = 1e-4;
  int max_iters = 50;
  SpStrategy sp = SpStrategy::VertexEnum;
  BlockMode block = BlockMode::Full;
  Vec fixed_xi;  // nonempty pins the sizing decision
  ExecPolicy policy = ExecPolicy::Parallel;
  std::size_t max_vertices = 4096;
  bool verbose = false;
};

struct SubproblemResult {
  double value = 0.0;  // worst-case relaxed recourse cost
  Vec w_star;
  Vec lambda;
  Vec ghat;  // -G'lambda, the reduced scenario weight
};

SubproblemResult solve_subproblem(const model::CompactStage2& m,
                                  const unc::UncSet& u, const Topology& alpha,
                                  const Vec& xi, SpStrategy strategy,
                                  ExecPolicy policy = ExecPolicy::Parallel,
                                  std::size_t max_vertices = 4096);

struct IterRow {
  int iter = 0;
  double lb = 0, ub = 0, gap = 0;
  double mp_seconds = 0, sp_seconds = 0;
  long n_binaries = 0, n_rows = 0;
};

struct Result {
  bool converged = false;
  int iters = 0;
  double lb = -kInf, ub = kInf;
  double objective = kInf;  // = ub of the incumbent
  Topology alpha;
  Vec xi;
  Vec worst_w;
  std::vector<IterRow> log;
  Vec xi_mp;                   // sizing decision at the final master solve
  std::vector<Vec> scenarios;  // w^i at the final master solution
  std::vector<Vec> lambdas;    // multiplier iterates that spawned the blocks
  std::string w_fingerprint, lambda_fingerprint;
};

Result run_mapping_ccg(const NetworkCase& nc, const model::CompactStage2& m,
                       const unc::UncSet& u, const Options& opt = {});

std::string log_csv(const std::vector<IterRow>& log, bool with_timing = true);

}  // namespace rdnr::ccg

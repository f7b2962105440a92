#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdnr/common.hpp"

namespace rdnr::conic {

// Sparse affine expression: sum coeff * x[var].
using SpRow = std::vector<std::pair<int, double>>;

// (head; tail) in SOC, i.e. head_expr >= || tail_exprs ||_2.
// rows[0] is the head; offsets are added to each row's expression.
struct SocBlock {
  std::vector<SpRow> rows;
  Vec offsets;
};

// min c'x + c0
// s.t. eq rows:  a'x  = rhs      (dual y, free)
//      le rows:  a'x <= rhs      (dual lam >= 0)
//      lb <= x <= ub             (duals lam_lb, lam_ub >= 0)
//      SOC blocks                (dual (eta; mu) in SOC)
// Sign convention, with the Lagrangian
//   c'x + y'(Ax-b) + lam'(Gx-h) + lam_lb'(lb-x) + lam_ub'(x-ub)
//     - sum_k <(eta_k; mu_k), soc_k(x)>,
// stationarity reads c + A'y + G'lam - lam_lb + lam_ub
//   - sum_k (d_k eta_k + C_k' mu_k) = 0
// and the dual value is
//   -b'y - h'lam + lb'lam_lb - ub'lam_ub - sum_k <dual_k, soc offsets>.
struct ConicProgram {
  int n = 0;
  Vec c;
  double c0 = 0.0;
  Vec lb, ub;
  std::vector<std::uint8_t> is_int;
  std::vector<std::string> names;

  std::vector<SpRow> eq_rows;
  Vec eq_rhs;
  std::vector<SpRow> le_rows;
  Vec le_rhs;
  std::vector<SocBlock> socs;

  int add_var(double lo, double hi, double cost, bool integer = false,
              const std::string& name = "");
  void add_eq(SpRow row, double rhs);
  void add_le(SpRow row, double rhs);
  void add_soc(SocBlock blk);
  int num_int() const;
};

enum class SolveStatus {
  Optimal,
  PrimalInfeasible,
  DualInfeasible,  // primal unbounded when primal feasible
  IterationLimit,
  NodeLimit,
  NumericalTrouble,
};

std::string to_string(SolveStatus s);

struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalTrouble;
  double obj = 0.0;
  Vec x;
  // duals (meaningful when status == Optimal)
  Vec y_eq;
  Vec lam_le;
  Vec lam_lb, lam_ub;
  std::vector<Vec> soc_dual;
  int iters = 0;
  double pres = kInf, dres = kInf, gap = kInf;
  // branch & bound extras
  long nodes = 0;
  double bound = -kInf;
};

struct SolveOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iters = 200;
  double int_tol = 1e-6;
  double abs_gap = 1e-6;  // B&B absolute optimality gap
  long node_limit = 1000000;
  bool verbose = false;
};

// Continuous solve; integrality marks are ignored (callers relax explicitly).
ConicSolution solve_conic(const ConicProgram& p, const SolveOptions& o = {});

// Branch & bound over the binary/integer variables: best-bound node
// selection, most-fractional branching, ties by lowest variable index.
// Equals solve_conic when nothing is marked integer.
ConicSolution solve_mi_conic(const ConicProgram& p, const SolveOptions& o = {});

// Explicit conic dual of a continuous program (bounds are folded into le
// rows first). Objective is written as a minimization of the negated dual,
// so solve(dualize(p)).obj == -solve(p).obj for solvable p.
ConicProgram dualize(const ConicProgram& p);

// Big-M linearization of mult * (rhs - expr) = 0 with mult >= 0 and
// expr <= rhs: adds binary z, rows mult <= m_mult*z and
// rhs - expr <= m_slack*(1-z). Returns the index of z.
int add_complementarity(ConicProgram& p, int mult_var, SpRow expr, double rhs,
                        double m_mult, double m_slack,
                        const std::string& tag = "z");

}  // namespace rdnr::conic

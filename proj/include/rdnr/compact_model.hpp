#pragma once

#include <string>
#include <vector>

#include "rdnr/common.hpp"
#include "rdnr/conic.hpp"
#include "rdnr/network.hpp"
#include "rdnr/uncertainty.hpp"

namespace rdnr::model {

// Second-stage index map. Continuous recourse variables live in one flat
// vector with a fixed block per period; relaxation slacks are appended
// after all periods, one (surplus, deficit) pair per bus and period.
struct VarMap {
  int T = 1, nb = 0, ne = 0, ng = 0, ns = 0;
  int per_t = 0, n_y = 0, n_slack = 0;
  int v(int b, int t) const { return t * per_t + b; }
  int l(int e, int t) const { return t * per_t + nb + e; }
  int p(int e, int t) const { return t * per_t + nb + ne + e; }
  int q(int e, int t) const { return t * per_t + nb + 2 * ne + e; }
  int pg(int g, int t) const { return t * per_t + nb + 3 * ne + g; }
  int qg(int g, int t) const { return t * per_t + nb + 3 * ne + ng + g; }
  int pb(int s, int t) const { return t * per_t + nb + 3 * ne + 2 * ng + s; }
  int s_plus(int b, int t) const { return n_y + 2 * (t * nb + b); }
  int s_minus(int b, int t) const { return n_y + 2 * (t * nb + b) + 1; }
};

// min b'y + m_s 1's  subject to
//   A alpha + B y + gamma <= G w + E s      (all rows <=, multipliers lambda)
//   ||C_k y|| <= d_k'y                      (branch flow cones)
//   s >= 0
// E has a +1 on each active-power balance row and nowhere else; G is
// supported on the same rows. Everything else about the recourse variables
// (voltage boxes, device caps, switch big-M coupling) is an ordinary row.
struct CompactStage2 {
  VarMap vm;
  int n_alpha = 0, n_w = 0, n_rows = 0;
  std::vector<conic::SpRow> A, B, G;  // per row; E tracked via slack_col
  std::vector<int> slack_col;         // -1 when the row has no slack
  Vec gamma;
  Vec b;        // cost over y (slack cost is m_s, stored separately)
  double m_s = 0.0;
  std::vector<conic::SocBlock> cones;  // indices into y
  std::vector<std::string> row_labels;
  std::vector<int> balance_row_plus;   // row index of the <= balance row per (bus,t)
  Vec y_lo, y_hi;  // ranges implied by the cap rows, for bound computation
};

CompactStage2 build_stage2(const NetworkCase& nc, double m_s = -1.0);

struct QResult {
  conic::SolveStatus status = conic::SolveStatus::NumericalTrouble;
  double value = 0.0;
  Vec y;            // length n_y (+ slacks when relaxed)
  Vec lambda;       // one multiplier per compact row
  std::vector<Vec> cone_duals;
  double slack_total = 0.0;
};

// Recourse value at fixed topology and availability. relaxed=true adds the
// penalized slacks (complete recourse); relaxed=false solves the plain
// second stage, which may be infeasible.
QResult evaluate_Q(const CompactStage2& m, const Topology& alpha, const Vec& w,
                   bool relaxed = true);

// max |b_j + B'lambda - C'mu - d eta| over free recourse columns, plus
// slack-column sign checks; small at any optimal primal/dual pair
double stationarity_residual(const CompactStage2& m, const QResult& r);

// dual of the relaxed second stage as an explicit program (for strong
// duality checks): max lambda'(A alpha + gamma - G w) over the dual cone
conic::ConicProgram dual_program(const CompactStage2& m, const Topology& alpha,
                                 const Vec& w);

// worst slack mass needed over the given topologies and the vertices of
// W(xi); zero means robust feasibility over that sample
double check_robust_feasibility(const CompactStage2& m, const unc::UncSet& u,
                                const Vec& xi,
                                const std::vector<Topology>& topologies);

// safe lower bound on Q from variable ranges (initial epigraph bound)
double q_lower_bound(const CompactStage2& m);

// first-stage cost c_alpha'alpha - c_xi'xi
double first_stage_cost(const NetworkCase& nc, const Topology& alpha,
                        const Vec& xi);

}  // namespace rdnr::model

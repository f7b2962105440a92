#pragma once

#include <string>
#include <vector>

#include "rdnr/common.hpp"
#include "rdnr/network.hpp"

namespace rdnr::unc {

// Renewable availability set with decision-dependent caps:
//   W(xi) = { w : F w <= f,  w <= xi }
// F carries the lower box and the l1 budget rows (expanded over sign
// patterns); the upper bound enters only through the coupling w <= xi.
// Optional extension rows  H_r' w >= beta_r - C_r' xi  tie w floors to the
// sizing decision and get their own multipliers downstream.
struct UncSet {
  int n_rg = 0;
  int horizon = 1;
  int n = 0;  // n_rg * horizon, index rg * horizon + t
  Vec w_min, w_max;
  Vec w_nom, w_dev;  // midpoint and half-width per coordinate
  double gamma_t = 0.0;  // per-period budget across units
  double gamma_i = 0.0;  // per-unit budget across periods (inactive at T == 1)
  std::vector<Vec> F;    // dense rows, F[r] . w <= f[r]
  Vec f;
  std::vector<std::string> f_labels;
  std::vector<Vec> ext_H;   // extension: ext_H[r] . w >= ext_beta[r] - ext_C[r] . xi
  Vec ext_beta;
  std::vector<Vec> ext_C;

  int idx(int rg, int t) const { return rg * horizon + t; }
};

// gamma_t < 0 or gamma_i < 0 pick the defaults (half the units, half the
// horizon). Throws ValidationError when a renewable has zero band width or
// the sign-pattern expansion would exceed the row guard.
UncSet make_unc_set(const NetworkCase& nc, double gamma_t = -1.0,
                    double gamma_i = -1.0);

// toy constructor for tests: plain box + per-period budget, no network
UncSet make_box_budget(const Vec& w_min, const Vec& w_max, double gamma_t,
                       int n_rg, int horizon, double gamma_i = -1.0);

void add_floor_row(UncSet& u, const Vec& h, double beta, const Vec& c_xi);

// nominal sizing domain: xi between w_min and w_max componentwise
inline Vec xi_upper(const UncSet& u) { return u.w_max; }
inline Vec xi_lower(const UncSet& u) { return u.w_min; }

bool set_empty(const UncSet& u, const Vec& xi);

// All vertices of W(xi), deduplicated and lexicographically sorted.
// Structured path for T == 1 without extension rows, basis enumeration
// otherwise. Throws when the combination guard trips.
std::vector<Vec> enumerate_vertices(const UncSet& u, const Vec& xi,
                                    std::size_t max_vertices = 4096);

// mapping-LP data: max g'w over W(xi) and its dual
//   min f'pi + xi'theta + (C xi - beta)'sigma
//   s.t. F'pi + theta - H'sigma = g,  pi, theta, sigma >= 0
struct InnerOpt {
  double value = 0.0;
  Vec w;
  Vec pi, theta, sigma;
};
InnerOpt solve_inner_max(const UncSet& u, const Vec& xi, const Vec& g);

}  // namespace rdnr::unc

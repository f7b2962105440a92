// Deterministic branch and bound over the conic relaxation. Best-bound
// node selection with node-id tie break, most-fractional branching with
// lowest-index tie break, incumbent polish by re-solving with all integer
// variables fixed. Node bound overrides live in a parent chain so memory
// stays proportional to the tree, not to nodes * variables.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <queue>
#include <stdexcept>
#include <vector>

#include "rdnr/conic.hpp"

namespace rdnr::conic {

namespace {

struct NodeRec {
  long parent = -1;
  int var = -1;         // integer-var index overridden vs parent (-1 at root)
  double lo = 0, hi = 0;
  double bound = -kInf; // valid lower bound inherited from parent relaxation
};

}  // namespace

ConicSolution solve_mi_conic(const ConicProgram& P, const SolveOptions& o) {
  std::vector<int> ints;
  for (int j = 0; j < P.n; ++j)
    if (P.is_int[j]) ints.push_back(j);
  if (ints.empty()) return solve_conic(P, o);

  std::deque<NodeRec> tree;
  tree.push_back({});
  using QE = std::pair<double, long>;  // (bound, node id)
  std::priority_queue<QE, std::vector<QE>, std::greater<QE>> open;
  open.push({-kInf, 0});

  ConicProgram work = P;
  auto restore_bounds = [&]() {
    for (int j : ints) {
      work.lb[j] = P.lb[j];
      work.ub[j] = P.ub[j];
    }
  };
  auto load_node = [&](long id) {
    restore_bounds();
    for (long cur = id; cur >= 0; cur = tree[cur].parent) {
      const NodeRec& nr = tree[cur];
      if (nr.var >= 0) {
        work.lb[nr.var] = std::max(work.lb[nr.var], nr.lo);
        work.ub[nr.var] = std::min(work.ub[nr.var], nr.hi);
      }
    }
  };

  auto relax = [&](const ConicProgram& q) {
    ConicSolution s = solve_conic(q, o);
    if (s.status == SolveStatus::IterationLimit ||
        s.status == SolveStatus::NumericalTrouble) {
      SolveOptions o2 = o;
      o2.max_iters = 2 * o.max_iters;
      o2.feas_tol = 10 * o.feas_tol;
      o2.gap_tol = 10 * o.gap_tol;
      s = solve_conic(q, o2);
    }
    return s;
  };

  ConicSolution incumbent;
  incumbent.status = SolveStatus::PrimalInfeasible;
  double inc_obj = kInf;
  long nodes = 0;
  double best_bound = -kInf;
  bool exhausted = true;

  while (!open.empty()) {
    auto [bound, id] = open.top();
    open.pop();
    // best-bound order makes popped bounds nondecreasing, so best_bound is
    // the bound of the node in hand; it stays a valid floor for everything
    // still unexplored
    best_bound = std::max(best_bound, bound);
    if (inc_obj < kInf && bound >= inc_obj - o.abs_gap) {
      exhausted = false;
      break;
    }
    if (++nodes > o.node_limit) {
      ConicSolution out = incumbent;
      out.status = SolveStatus::NodeLimit;
      out.nodes = nodes - 1;
      out.bound = std::min(inc_obj, best_bound);
      return out;
    }

    load_node(id);
    ConicSolution rel = relax(work);
    if (rel.status == SolveStatus::PrimalInfeasible) continue;
    if (rel.status == SolveStatus::DualInfeasible) {
      ConicSolution out = rel;
      out.nodes = nodes;
      out.bound = -kInf;
      return out;
    }
    if (rel.status != SolveStatus::Optimal) {
      if (o.verbose) {
        std::fprintf(stderr, "bnb: node %ld (%s) fixes", id,
                     to_string(rel.status).c_str());
        for (long cur = id; cur >= 0; cur = tree[cur].parent)
          if (tree[cur].var >= 0)
            std::fprintf(stderr, " x%d in [%g,%g]", tree[cur].var,
                         work.lb[tree[cur].var], work.ub[tree[cur].var]);
        std::fprintf(stderr, "\n");
      }
      ConicSolution out = rel;
      out.status = SolveStatus::NumericalTrouble;
      out.nodes = nodes;
      out.bound = std::min(inc_obj, best_bound);
      return out;
    }
    if (inc_obj < kInf && rel.obj >= inc_obj - o.abs_gap) continue;

    int branch_var = -1;
    double best_frac = o.int_tol;
    for (int j : ints) {
      double f = rel.x[j] - std::floor(rel.x[j]);
      double dist = std::min(f, 1.0 - f);
      if (dist > best_frac) {
        best_frac = dist;
        branch_var = j;
      }
    }

    if (branch_var < 0) {
      // integral: polish with everything fixed for a crisp solution
      for (int j : ints) {
        double r = std::round(rel.x[j]);
        work.lb[j] = r;
        work.ub[j] = r;
      }
      ConicSolution pol = relax(work);
      bool polished = pol.status == SolveStatus::Optimal;
      const ConicSolution& cand = polished ? pol : rel;
      if (cand.status == SolveStatus::Optimal && cand.obj < inc_obj) {
        incumbent = cand;
        if (!polished)
          for (int j : ints) incumbent.x[j] = std::round(incumbent.x[j]);
        inc_obj = cand.obj;
      }
      continue;
    }

    double xv = rel.x[branch_var];
    long pid = id;
    tree.push_back({pid, branch_var, -kInf, std::floor(xv), rel.obj});
    tree.back().lo = P.lb[branch_var];
    open.push({rel.obj, static_cast<long>(tree.size()) - 1});
    tree.push_back({pid, branch_var, std::ceil(xv), P.ub[branch_var], rel.obj});
    open.push({rel.obj, static_cast<long>(tree.size()) - 1});
  }

  if (inc_obj == kInf) {
    ConicSolution out;
    out.status = SolveStatus::PrimalInfeasible;
    out.nodes = nodes;
    return out;
  }
  ConicSolution out = incumbent;
  out.status = SolveStatus::Optimal;
  out.nodes = nodes;
  // an exhausted tree proves the incumbent optimal; an early stop leaves the
  // node in hand unexplored, so the floor is its bound. Either way the bound
  // may not exceed the incumbent value, which itself caps the optimum.
  out.bound = exhausted ? inc_obj : std::min(inc_obj, best_bound);
  return out;
}

}  // namespace rdnr::conic

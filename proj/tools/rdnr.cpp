#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "rdnr/io.hpp"
#include "rdnr/oracle.hpp"

namespace fs = std::filesystem;
using namespace rdnr;

namespace {

struct Common {
  std::string case_path, out, sp = "vertex";
  double eps = 1e-4, gamma_t = -1.0, gamma_i = -1.0, ms = -1.0;
  int max_iter = 50, horizon = 0;
};

void add_common(CLI::App* cmd, Common& o, bool solver_flags) {
  cmd->add_option("--case", o.case_path, "case file (JSON)")->required();
  cmd->add_option("--out", o.out, "output directory");
  if (!solver_flags) return;
  cmd->add_option("--eps", o.eps, "convergence gap");
  cmd->add_option("--max-iter", o.max_iter, "outer iteration cap");
  cmd->add_option("--sp-strategy", o.sp, "subproblem strategy")
      ->check(CLI::IsMember({"vertex", "milp"}));
  cmd->add_option("--gamma-t", o.gamma_t, "per-period deviation budget");
  cmd->add_option("--gamma-i", o.gamma_i, "per-unit deviation budget");
  cmd->add_option("--ms", o.ms, "load-shedding slack penalty");
  cmd->add_option("--horizon", o.horizon,
                  "keep only the leading periods of the case");
}

struct Loaded {
  NetworkCase nc;
  model::CompactStage2 m;
  unc::UncSet u;
};

Loaded load(const Common& o) {
  NetworkCase nc = net::load_case(o.case_path);
  if (o.horizon > 0) io::truncate_horizon(nc, o.horizon);
  unc::UncSet u = unc::make_unc_set(nc, o.gamma_t, o.gamma_i);
  model::CompactStage2 m = model::build_stage2(nc, o.ms);
  return {std::move(nc), std::move(m), std::move(u)};
}

ccg::Options ccg_options(const Common& o) {
  ccg::Options co;
  co.eps = o.eps;
  co.max_iters = o.max_iter;
  co.sp = o.sp == "milp" ? ccg::SpStrategy::BigMMilp : ccg::SpStrategy::VertexEnum;
  return co;
}

void write_solution(const Common& o, const Loaded& L, const ccg::Result& res,
                    const std::string& summary) {
  if (o.out.empty()) return;
  fs::create_directories(o.out);
  io::write_file(o.out + "/summary.json", summary);
  io::write_file(o.out + "/topology.json", io::topology_json(L.nc, res.alpha));
  io::write_file(o.out + "/topology.dot", io::topology_dot(L.nc, res.alpha));
  io::write_file(o.out + "/convergence.csv", ccg::log_csv(res.log));
}

int cmd_solve(const Common& o) {
  Loaded L = load(o);
  auto res = ccg::run_mapping_ccg(L.nc, L.m, L.u, ccg_options(o));
  std::string summary = io::summary_json(L.nc, res, "mapping-ccg");
  write_solution(o, L, res, summary);
  std::cout << summary;
  return res.converged ? 0 : 3;
}

int cmd_compare(const Common& o) {
  Loaded L = load(o);
  auto res = ccg::run_mapping_ccg(L.nc, L.m, L.u, ccg_options(o));
  benders::Options bo;
  bo.eps = o.eps;
  bo.sp = ccg_options(o).sp;
  auto bres = benders::run_benders(L.nc, L.m, L.u, bo);
  nlohmann::ordered_json j;
  j["mapping-ccg"] =
      nlohmann::ordered_json::parse(io::summary_json(L.nc, res, "mapping-ccg"));
  j["benders"] =
      nlohmann::ordered_json::parse(io::summary_json(L.nc, bres, "benders"));
  std::string combined = j.dump(2) + "\n";
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    io::write_file(o.out + "/summary.json",
                   io::summary_json(L.nc, res, "mapping-ccg"));
    io::write_file(o.out + "/compare.json", combined);
    io::write_file(o.out + "/topology.json", io::topology_json(L.nc, res.alpha));
    io::write_file(o.out + "/topology.dot", io::topology_dot(L.nc, res.alpha));
    io::write_file(o.out + "/convergence_mapping.csv", ccg::log_csv(res.log));
    io::write_file(o.out + "/convergence_benders.csv", ccg::log_csv(bres.log));
  }
  std::cout << combined;
  return 0;
}

int cmd_sensitivity(const Common& o, bool do_solve) {
  Loaded L = load(o);
  Topology alpha;
  Vec xi;
  if (do_solve) {
    auto res = ccg::run_mapping_ccg(L.nc, L.m, L.u, ccg_options(o));
    write_solution(o, L, res, io::summary_json(L.nc, res, "mapping-ccg"));
    alpha = res.alpha;
    xi = res.xi;
  } else {
    std::string path = o.out + "/summary.json";
    if (o.out.empty() || !fs::exists(path)) {
      std::cout << io::error_json("no-solution", "solve first or pass --solve");
      return 2;
    }
    auto snap = io::parse_summary(L.nc, io::read_file(path));
    alpha = snap.alpha;
    xi = snap.xi;
  }
  auto rep = sens::analyze(L.nc, L.m, L.u, alpha, xi);
  std::string csv = sens::report_csv(rep);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    io::write_file(o.out + "/sensitivity.csv", csv);
  }
  std::cout << csv;
  return 0;
}

int cmd_oracle_check(const Common& o, unsigned seed) {
  Loaded L = load(o);
  const NetworkCase& nc = L.nc;
  bool all_ok = true;
  auto check = [&](bool ok, const std::string& what) {
    std::printf("%s %s\n", ok ? "ok  " : "FAIL", what.c_str());
    all_ok = all_ok && ok;
  };

  {
    auto toy = unc::make_box_budget({0.25, 0.25}, {0.75, 0.75}, 1.0, 2, 1);
    check(unc::enumerate_vertices(toy, {0.75, 0.75}).size() == 4,
          "toy scenario polytope has 4 vertices at full sizing");
    check(unc::enumerate_vertices(toy, {0.75, 0.4}).size() == 3,
          "toy scenario polytope has 3 vertices at reduced sizing");
  }

  std::vector<Topology> trees;
  if (nc.branches.size() <= 16) {
    trees = oracle::radial_topologies(nc);
    long mt = oracle::spanning_tree_count(nc);
    check(static_cast<long>(trees.size()) == mt,
          "radial scan count matches matrix-tree count");
    bool rad = true;
    for (const auto& t : trees) rad = rad && is_radial(nc, t);
    check(rad, "every scanned topology is a spanning tree");
  } else {
    auto one = net::complete_to_spanning_tree(nc, {}, {});
    check(one.has_value(), "case admits a spanning tree");
    if (one) trees.push_back(*one);
    std::printf("skip radial scan (case too large)\n");
  }
  if (trees.empty()) {
    std::printf("FAIL no radial topology available, aborting\n");
    return 1;
  }

  std::mt19937 rng(seed);
  auto rand_w = [&]() {
    Vec w(L.u.n);
    for (int c = 0; c < L.u.n; ++c) {
      std::uniform_real_distribution<double> d(L.u.w_min[c], L.u.w_max[c]);
      w[c] = d(rng);
    }
    return w;
  };
  auto rand_tree = [&]() -> const Topology& {
    return trees[rng() % trees.size()];
  };

  {
    bool convex = true;
    for (int k = 0; k < 20 && convex; ++k) {
      const Topology& a = rand_tree();
      Vec w1 = rand_w(), w2 = rand_w(), mid(L.u.n);
      for (int c = 0; c < L.u.n; ++c) mid[c] = 0.5 * (w1[c] + w2[c]);
      double q1 = model::evaluate_Q(L.m, a, w1).value;
      double q2 = model::evaluate_Q(L.m, a, w2).value;
      double qm = model::evaluate_Q(L.m, a, mid).value;
      convex = qm <= 0.5 * (q1 + q2) + 1e-7 * (1.0 + std::abs(q1) + std::abs(q2));
    }
    check(convex, "recourse cost is midpoint-convex in the scenario");
  }

  {
    bool strong = true;
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const Topology& a = rand_tree();
      Vec w = rand_w();
      auto q = model::evaluate_Q(L.m, a, w);
      auto d = conic::solve_conic(model::dual_program(L.m, a, w));
      if (q.status != conic::SolveStatus::Optimal ||
          d.status != conic::SolveStatus::Optimal) {
        strong = false;
        break;
      }
      double resid = std::abs(q.value - (-d.obj)) / (1.0 + std::abs(q.value));
      worst = std::max(worst, resid);
      strong = strong && resid <= 1e-6;
    }
    check(strong, "strong duality residual <= 1e-6 on sampled recourse LPs");
  }

  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage robust reconfiguration with renewable sizing"};
  app.require_subcommand(1);

  Common so, co, xo, oo;
  unsigned seed = 1;
  bool do_solve = false;

  auto* solve = app.add_subcommand("solve", "run the mapping-based algorithm");
  add_common(solve, so, true);
  auto* compare =
      app.add_subcommand("compare", "mapping-based vs cutting-plane baseline");
  add_common(compare, co, true);
  auto* sensitivity =
      app.add_subcommand("sensitivity", "price the scenario polytope rows");
  add_common(sensitivity, xo, true);
  sensitivity->add_flag("--solve", do_solve, "solve before pricing");
  auto* oracle_check =
      app.add_subcommand("oracle-check", "self-checks against reference code");
  add_common(oracle_check, oo, false);
  oracle_check->add_option("--seed", seed, "sampling seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(so);
    if (compare->parsed()) return cmd_compare(co);
    if (sensitivity->parsed()) return cmd_sensitivity(xo, do_solve);
    if (oracle_check->parsed()) return cmd_oracle_check(oo, seed);
  } catch (const ValidationError& e) {
    std::cout << io::error_json("invalid-case", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::cout << io::error_json("error", e.what());
    return 2;
  }
  return 0;
}

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "rdnr/compact_model.hpp"
#include "rdnr/network.hpp"
#include "rdnr/parallel.hpp"
#include "rdnr/uncertainty.hpp"

// Times the scenario-vertex sweep (the hot kernel of the vertex-enumeration
// subproblem) with the serial reference path and the OpenMP path. The two
// must agree bit-for-bit on the reduced values; the sweep writes into
// index-addressed slots and reduces serially.

using namespace rdnr;

namespace {

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  const char* path = argc > 1 ? argv[1] : "data/case6.json";
  int reps = argc > 2 ? std::atoi(argv[2]) : 5;

  NetworkCase nc = net::load_case(path);
  unc::UncSet u = unc::make_unc_set(nc);
  model::CompactStage2 m = model::build_stage2(nc);
  auto tree = net::complete_to_spanning_tree(nc, {}, {});
  if (!tree) {
    std::fprintf(stderr, "case admits no spanning tree\n");
    return 1;
  }
  Topology alpha = *tree;
  std::vector<Vec> verts = unc::enumerate_vertices(u, u.w_max);

  auto sweep = [&](ExecPolicy pol, std::vector<double>& vals) {
    vals.assign(verts.size(), 0.0);
    parallel_for(verts.size(), pol, [&](std::size_t k) {
      vals[k] = model::evaluate_Q(m, alpha, verts[k]).value;
    });
    double best = -1e300;
    for (double v : vals) best = std::max(best, v);
    return best;
  };

  std::vector<double> vs, vp;
  sweep(ExecPolicy::Serial, vs);  // warm-up and allocation touch

  double t_serial = 1e300, t_parallel = 1e300;
  double r_serial = 0, r_parallel = 0;
  for (int k = 0; k < reps; ++k) {
    double t0 = now_ms();
    r_serial = sweep(ExecPolicy::Serial, vs);
    t_serial = std::min(t_serial, now_ms() - t0);
    t0 = now_ms();
    r_parallel = sweep(ExecPolicy::Parallel, vp);
    t_parallel = std::min(t_parallel, now_ms() - t0);
  }

  bool agree = vs.size() == vp.size();
  for (std::size_t i = 0; agree && i < vs.size(); ++i)
    agree = vs[i] == vp[i];

  std::printf("vertex sweep: %zu scenarios, case %s, best of %d\n",
              verts.size(), nc.name.c_str(), reps);
  std::printf("  serial    %9.3f ms   worst Q %.9g\n", t_serial, r_serial);
  std::printf("  parallel  %9.3f ms   worst Q %.9g  (thread cap %d)\n",
              t_parallel, r_parallel, worker_thread_cap());
  std::printf("  speedup   %.2fx\n", t_serial / t_parallel);
  std::printf("  identical results: %s\n", agree ? "yes" : "NO");
  return agree ? 0 : 1;
}

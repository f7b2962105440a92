#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rdnr/common.hpp"

namespace rdnr::net {

enum class BusKind { Substation, Load };

struct Bus {
  int id = 0;
  BusKind kind = BusKind::Load;
  double v_min = 0.81;  // per-unit voltage squared
  double v_max = 1.21;
  Vec load_p;  // one entry per period
  Vec load_q;
};

struct Branch {
  int id = 0;
  int from = 0;  // reference direction: file order, from -> to
  int to = 0;
  double r = 0.0;
  double x = 0.0;
  double l_max = 0.0;  // squared-current cap
  double p_max = 0.0;  // forward active flow cap; reverse cap is p_min
  double p_min = 0.0;
  double q_max = 0.0;
  double q_min = 0.0;
  bool switchable = true;
};

struct Thermal {
  int bus = 0;
  double p_min = 0.0, p_max = 0.0;
  double q_min = 0.0, q_max = 0.0;
};

struct Renewable {
  int bus = 0;
  Vec w_min;  // per period
  Vec w_max;
};

struct Storage {
  int bus = 0;
  double p_min = 0.0, p_max = 0.0;  // discharge positive
  double soc_min = 0.0, soc_max = 0.0, soc_init = 0.0;
  double delta_t = 1.0;
};

struct CostVectors {
  Vec c_alpha;               // per branch
  std::vector<Vec> c_xi;     // [renewable][period]
  Vec b_p, b_q;              // per thermal
  Vec b_bes;                 // per storage
};

struct NetworkCase {
  std::string name;
  double base_mva = 1.0;
  int horizon = 1;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Thermal> thermals;
  std::vector<Renewable> renewables;
  std::vector<Storage> storages;
  CostVectors costs;
  std::optional<double> big_m;  // voltage-coupling big-M override
  std::size_t cycle_cap = 100000;

  int bus_index(int id) const;     // -1 if unknown
  int branch_index(int id) const;  // -1 if unknown
  int substation_index() const;
};

// alpha per branch, file order. 1 = closed.
using Topology = std::vector<std::uint8_t>;

// Parses and validates; throws ValidationError (all violations listed) or
// std::runtime_error on unreadable/unparsable input.
NetworkCase load_case(const std::string& path);
NetworkCase case_from_json_text(const std::string& text);

// Returns every violated invariant; empty means valid.
std::vector<std::string> validate(const NetworkCase& nc);

// All simple cycles (vertex-simple; a pair of parallel branches is a
// 2-cycle). Each cycle is a sorted list of branch indices. Output order:
// smallest contained branch id, then length, then lexicographic.
// Throws if more than `cap` cycles exist.
std::vector<std::vector<int>> enumerate_cycles(const NetworkCase& nc,
                                               std::size_t cap = 100000);

struct RadialityRows {
  int closed_count = 0;                                  // sum alpha == this
  std::vector<std::pair<std::vector<int>, int>> loops;   // (branch idxs, rhs)
};

RadialityRows radiality_rows(const NetworkCase& nc,
                             const std::vector<std::vector<int>>& cycles);
RadialityRows radiality_rows(const NetworkCase& nc);  // enumerates cycles

// Spanning-tree test: exactly N-1 closed branches connecting every bus.
bool is_radial(const NetworkCase& nc, const Topology& alpha);

// Grows `include` into a spanning tree avoiding `exclude`; nullopt if the
// remaining graph cannot span. Used to show loop rows are implied-tight.
std::optional<Topology> complete_to_spanning_tree(
    const NetworkCase& nc, const std::vector<int>& include,
    const std::vector<int>& exclude);

}  // namespace rdnr::net

namespace rdnr {
using net::Branch;
using net::Bus;
using net::NetworkCase;
using net::RadialityRows;
using net::Storage;
using net::Thermal;
using net::Topology;
}  // namespace rdnr

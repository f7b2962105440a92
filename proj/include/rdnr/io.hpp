#pragma once

#include <string>

#include "rdnr/benders.hpp"
#include "rdnr/ccg.hpp"
#include "rdnr/network.hpp"
#include "rdnr/sensitivity.hpp"

namespace rdnr::io {

std::string read_file(const std::string& path);  // throws on unreadable
void write_file(const std::string& path, const std::string& content);

// {"branch_id": 0|1, ...} keyed by branch id, file order preserved
std::string topology_json(const NetworkCase& nc, const Topology& alpha);
std::string topology_dot(const NetworkCase& nc, const Topology& alpha);

std::string summary_json(const NetworkCase& nc, const ccg::Result& res,
                         const std::string& method);
std::string summary_json(const NetworkCase& nc, const benders::Result& res,
                         const std::string& method);

// topology + sizing recovered from a summary.json written by `solve`
struct Snapshot {
  Topology alpha;
  Vec xi;
};
Snapshot parse_summary(const NetworkCase& nc, const std::string& text);

std::string error_json(const std::string& code, const std::string& message);

// keeps the leading H periods of every per-period series
void truncate_horizon(NetworkCase& nc, int horizon);

}  // namespace rdnr::io

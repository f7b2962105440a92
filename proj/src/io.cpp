#include "rdnr/io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "rdnr/benders.hpp"

namespace rdnr::io {

using json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("short write to " + path);
}

std::string topology_json(const NetworkCase& nc, const Topology& alpha) {
  json j = json::object();
  for (std::size_t e = 0; e < nc.branches.size(); ++e)
    j[std::to_string(nc.branches[e].id)] = alpha[e] ? 1 : 0;
  return j.dump(2) + "\n";
}

std::string topology_dot(const NetworkCase& nc, const Topology& alpha) {
  std::ostringstream os;
  std::string gname;
  for (char c : nc.name)
    gname += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  if (gname.empty()) gname = "g";
  os << "graph " << gname << " {\n  node [shape=circle];\n";
  for (const auto& b : nc.buses)
    if (b.kind == net::BusKind::Substation)
      os << "  \"" << b.id << "\" [shape=box];\n";
  for (std::size_t e = 0; e < nc.branches.size(); ++e) {
    const auto& br = nc.branches[e];
    os << "  \"" << br.from << "\" -- \"" << br.to << "\" [label=\"" << br.id
       << '"';
    if (!alpha[e]) os << ", style=dashed";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

static json result_common(const NetworkCase& nc, const std::string& method,
                          bool converged, int iters, double lb, double ub,
                          double objective, const Topology& alpha,
                          const Vec& xi) {
  json j;
  j["case"] = nc.name;
  j["method"] = method;
  j["objective"] = objective;
  j["lb"] = lb;
  j["ub"] = ub;
  j["gap"] = ub - lb;
  j["iterations"] = iters;
  j["converged"] = converged;
  json topo = json::object();
  for (std::size_t e = 0; e < nc.branches.size(); ++e)
    topo[std::to_string(nc.branches[e].id)] = alpha[e] ? 1 : 0;
  j["topology"] = topo;
  j["xi"] = xi;
  return j;
}

std::string summary_json(const NetworkCase& nc, const ccg::Result& res,
                         const std::string& method) {
  json j = result_common(nc, method, res.converged, res.iters, res.lb, res.ub,
                         res.objective, res.alpha, res.xi);
  j["worst_w"] = res.worst_w;
  j["scenarios"] = res.scenarios.size();
  j["w_fingerprint"] = res.w_fingerprint;
  j["lambda_fingerprint"] = res.lambda_fingerprint;
  return j.dump(2) + "\n";
}

std::string summary_json(const NetworkCase& nc, const benders::Result& res,
                         const std::string& method) {
  json j = result_common(nc, method, res.converged, res.iters, res.lb, res.ub,
                         res.objective, res.alpha, res.xi);
  return j.dump(2) + "\n";
}

Snapshot parse_summary(const NetworkCase& nc, const std::string& text) {
  json j = json::parse(text);
  Snapshot s;
  s.alpha.assign(nc.branches.size(), 0);
  for (auto& [key, val] : j.at("topology").items()) {
    int e = nc.branch_index(std::stoi(key));
    if (e < 0) throw std::runtime_error("summary names unknown branch " + key);
    s.alpha[e] = val.get<int>() ? 1 : 0;
  }
  s.xi = j.at("xi").get<Vec>();
  return s;
}

std::string error_json(const std::string& code, const std::string& message) {
  json j;
  j["error"]["code"] = code;
  j["error"]["message"] = message;
  return j.dump(2) + "\n";
}

void truncate_horizon(NetworkCase& nc, int horizon) {
  if (horizon < 1 || horizon > nc.horizon)
    throw std::invalid_argument("horizon must be in [1, " +
                                std::to_string(nc.horizon) + "]");
  for (auto& b : nc.buses) {
    b.load_p.resize(horizon);
    b.load_q.resize(horizon);
  }
  for (auto& rg : nc.renewables) {
    rg.w_min.resize(horizon);
    rg.w_max.resize(horizon);
  }
  for (auto& c : nc.costs.c_xi) c.resize(horizon);
  nc.horizon = horizon;
}

}  // namespace rdnr::io

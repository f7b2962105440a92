#include "rdnr/network.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

using nlohmann::json;

namespace rdnr::net {

int NetworkCase::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<int>(i);
  return -1;
}

int NetworkCase::branch_index(int id) const {
  for (std::size_t i = 0; i < branches.size(); ++i)
    if (branches[i].id == id) return static_cast<int>(i);
  return -1;
}

int NetworkCase::substation_index() const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].kind == BusKind::Substation) return static_cast<int>(i);
  return -1;
}

namespace {

Vec series(const json& j, const char* key, int T, double fallback) {
  if (!j.contains(key)) return Vec(T, fallback);
  const auto& v = j.at(key);
  if (v.is_number()) return Vec(T, v.get<double>());
  Vec out = v.get<Vec>();
  return out;
}

// cost entry: scalar broadcast or explicit array
Vec cost_vec(const json& costs, const char* key, std::size_t n, double dflt) {
  if (!costs.contains(key)) return Vec(n, dflt);
  const auto& v = costs.at(key);
  if (v.is_number()) return Vec(n, v.get<double>());
  return v.get<Vec>();
}

}  // namespace

NetworkCase case_from_json_text(const std::string& text) {
  json j = json::parse(text);
  NetworkCase nc;
  if (j.value("schema", std::string()) != "rdnr-case/1")
    throw std::runtime_error("unsupported case schema (want rdnr-case/1)");
  nc.name = j.value("name", std::string("unnamed"));
  nc.base_mva = j.value("base", json::object()).value("mva", 1.0);
  nc.horizon = j.value("horizon", 1);
  nc.cycle_cap = j.value("cycle_cap", static_cast<std::size_t>(100000));
  if (j.contains("bigM") && j.at("bigM").is_number())
    nc.big_m = j.at("bigM").get<double>();

  const int T = nc.horizon;
  for (const auto& b : j.at("buses")) {
    Bus bus;
    bus.id = b.at("id").get<int>();
    bus.kind = b.value("kind", std::string("load")) == "substation"
                   ? BusKind::Substation
                   : BusKind::Load;
    bus.v_min = b.value("v_min", 0.81);
    bus.v_max = b.value("v_max", 1.21);
    bus.load_p = series(b, "load_p", T, 0.0);
    bus.load_q = series(b, "load_q", T, 0.0);
    nc.buses.push_back(std::move(bus));
  }
  for (const auto& e : j.at("branches")) {
    Branch br;
    br.id = e.at("id").get<int>();
    br.from = e.at("from").get<int>();
    br.to = e.at("to").get<int>();
    br.r = e.at("r").get<double>();
    br.x = e.at("x").get<double>();
    br.l_max = e.at("l_max").get<double>();
    br.p_max = e.at("p_max").get<double>();
    br.p_min = e.value("p_min", br.p_max);
    br.q_max = e.at("q_max").get<double>();
    br.q_min = e.value("q_min", br.q_max);
    br.switchable = e.value("switchable", true);
    nc.branches.push_back(std::move(br));
  }
  for (const auto& d : j.value("devices", json::array())) {
    const std::string kind = d.at("kind").get<std::string>();
    if (kind == "thermal") {
      Thermal t;
      t.bus = d.at("bus").get<int>();
      t.p_min = d.value("p_min", 0.0);
      t.p_max = d.at("p_max").get<double>();
      t.q_min = d.value("q_min", 0.0);
      t.q_max = d.value("q_max", 0.0);
      nc.thermals.push_back(t);
    } else if (kind == "renewable") {
      Renewable r;
      r.bus = d.at("bus").get<int>();
      if (d.contains("w_min") || d.contains("w_max")) {
        r.w_min = series(d, "w_min", T, 0.0);
        r.w_max = series(d, "w_max", T, 0.0);
      } else {
        Vec fc = series(d, "forecast", T, 0.0);
        double lo = 0.5, hi = 1.5;
        if (d.contains("band")) {
          lo = d.at("band").at(0).get<double>();
          hi = d.at("band").at(1).get<double>();
        }
        r.w_min.resize(fc.size());
        r.w_max.resize(fc.size());
        for (std::size_t t = 0; t < fc.size(); ++t) {
          r.w_min[t] = lo * fc[t];
          r.w_max[t] = hi * fc[t];
        }
      }
      nc.renewables.push_back(std::move(r));
    } else if (kind == "storage") {
      Storage s;
      s.bus = d.at("bus").get<int>();
      s.p_min = d.value("p_min", 0.0);
      s.p_max = d.at("p_max").get<double>();
      s.soc_min = d.at("soc_min").get<double>();
      s.soc_max = d.at("soc_max").get<double>();
      s.soc_init = d.at("soc_init").get<double>();
      s.delta_t = d.value("delta_t", 1.0);
      nc.storages.push_back(s);
    } else {
      throw std::runtime_error("unknown device kind: " + kind);
    }
  }

  json costs = j.value("costs", json::object());
  nc.costs.c_alpha = cost_vec(costs, "c_alpha", nc.branches.size(), 1.0);
  nc.costs.b_p = cost_vec(costs, "b_p", nc.thermals.size(), 1.0);
  nc.costs.b_q = cost_vec(costs, "b_q", nc.thermals.size(), 0.0);
  nc.costs.b_bes = cost_vec(costs, "b_bes", nc.storages.size(), 0.0);
  nc.costs.c_xi.assign(nc.renewables.size(), Vec(T, 0.0));
  if (costs.contains("c_xi")) {
    const auto& cx = costs.at("c_xi");
    if (cx.is_number()) {
      for (auto& row : nc.costs.c_xi) row.assign(T, cx.get<double>());
    } else {
      for (std::size_t i = 0; i < nc.costs.c_xi.size() && i < cx.size(); ++i) {
        if (cx.at(i).is_number())
          nc.costs.c_xi[i].assign(T, cx.at(i).get<double>());
        else
          nc.costs.c_xi[i] = cx.at(i).get<Vec>();
      }
    }
  }

  auto issues = validate(nc);
  if (!issues.empty()) throw ValidationError(std::move(issues));
  return nc;
}

NetworkCase load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open case file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return case_from_json_text(ss.str());
}

std::vector<std::string> validate(const NetworkCase& nc) {
  std::vector<std::string> bad;
  auto add = [&](const std::string& s) { bad.push_back(s); };
  const int T = nc.horizon;
  if (T < 1) add("horizon must be >= 1");
  if (nc.buses.empty()) add("no buses");
  if (nc.base_mva <= 0) add("base mva must be positive");

  {
    std::set<int> ids;
    int subs = 0;
    for (const auto& b : nc.buses) {
      if (!ids.insert(b.id).second)
        add("duplicate bus id " + std::to_string(b.id));
      if (b.kind == BusKind::Substation) ++subs;
      if (!(b.v_min < b.v_max))
        add("bus " + std::to_string(b.id) + ": v_min < v_max violated");
      if (b.v_min <= 0)
        add("bus " + std::to_string(b.id) + ": v_min must be positive");
      if ((int)b.load_p.size() != T || (int)b.load_q.size() != T)
        add("bus " + std::to_string(b.id) + ": load series length != horizon");
    }
    if (subs != 1) add("exactly one substation bus required, found " +
                       std::to_string(subs));
  }
  {
    std::set<int> ids;
    for (const auto& e : nc.branches) {
      std::string tag = "branch " + std::to_string(e.id);
      if (!ids.insert(e.id).second) add("duplicate branch id " + std::to_string(e.id));
      if (nc.bus_index(e.from) < 0) add(tag + ": unknown from-bus");
      if (nc.bus_index(e.to) < 0) add(tag + ": unknown to-bus");
      if (e.from == e.to) add(tag + ": self-loop");
      if (e.r < 0 || e.x < 0) add(tag + ": negative impedance");
      if (e.r == 0 && e.x == 0) add(tag + ": r and x both zero");
      if (e.l_max <= 0) add(tag + ": l_max must be positive");
      if (e.p_max < 0 || e.p_min < 0 || e.q_max < 0 || e.q_min < 0)
        add(tag + ": flow caps must be nonnegative");
    }
  }
  for (const auto& d : nc.thermals) {
    if (nc.bus_index(d.bus) < 0)
      add("thermal at unknown bus " + std::to_string(d.bus));
    if (d.p_min > d.p_max || d.q_min > d.q_max)
      add("thermal at bus " + std::to_string(d.bus) + ": empty output range");
  }
  for (std::size_t i = 0; i < nc.renewables.size(); ++i) {
    const auto& r = nc.renewables[i];
    std::string tag = "renewable " + std::to_string(i);
    if (nc.bus_index(r.bus) < 0) add(tag + ": unknown bus");
    if ((int)r.w_min.size() != T || (int)r.w_max.size() != T) {
      add(tag + ": bound series length != horizon");
      continue;
    }
    for (int t = 0; t < T; ++t)
      if (!(r.w_min[t] < r.w_max[t]))
        add(tag + ": w_min < w_max violated at period " + std::to_string(t));
  }
  for (const auto& s : nc.storages) {
    std::string tag = "storage at bus " + std::to_string(s.bus);
    if (nc.bus_index(s.bus) < 0) add(tag + ": unknown bus");
    if (s.p_min > s.p_max) add(tag + ": empty power range");
    if (!(s.soc_min <= s.soc_init && s.soc_init <= s.soc_max))
      add(tag + ": initial SoC outside window");
    if (s.delta_t <= 0) add(tag + ": delta_t must be positive");
  }
  if (nc.costs.c_alpha.size() != nc.branches.size())
    add("c_alpha length != branch count");
  if (nc.costs.b_p.size() != nc.thermals.size() ||
      nc.costs.b_q.size() != nc.thermals.size())
    add("b_p/b_q length != thermal count");
  if (nc.costs.b_bes.size() != nc.storages.size())
    add("b_bes length != storage count");
  if (nc.costs.c_xi.size() != nc.renewables.size())
    add("c_xi length != renewable count");
  else
    for (const auto& row : nc.costs.c_xi)
      if ((int)row.size() != T) add("c_xi series length != horizon");

  // connectivity with every branch closed
  if (bad.empty() && !nc.buses.empty()) {
    std::vector<int> comp(nc.buses.size());
    std::iota(comp.begin(), comp.end(), 0);
    std::function<int(int)> find = [&](int a) {
      while (comp[a] != a) a = comp[a] = comp[comp[a]];
      return a;
    };
    for (const auto& e : nc.branches)
      comp[find(nc.bus_index(e.from))] = find(nc.bus_index(e.to));
    int root = find(0);
    for (std::size_t i = 1; i < nc.buses.size(); ++i)
      if (find(static_cast<int>(i)) != root) {
        add("graph not connected with all branches closed");
        break;
      }
  }
  return bad;
}

std::vector<std::vector<int>> enumerate_cycles(const NetworkCase& nc,
                                               std::size_t cap) {
  const int nb = static_cast<int>(nc.buses.size());
  // adjacency as (branch idx, neighbor bus idx)
  std::vector<std::vector<std::pair<int, int>>> adj(nb);
  for (std::size_t k = 0; k < nc.branches.size(); ++k) {
    int a = nc.bus_index(nc.branches[k].from);
    int b = nc.bus_index(nc.branches[k].to);
    adj[a].push_back({static_cast<int>(k), b});
    adj[b].push_back({static_cast<int>(k), a});
  }
  for (auto& v : adj) std::sort(v.begin(), v.end());

  std::vector<std::vector<int>> cycles;
  std::vector<char> on_path(nb, 0);
  std::vector<int> edges;

  // anchor = smallest bus index in the cycle; closing branch idx must exceed
  // the first branch idx so each cycle is reported once.
  std::function<void(int, int, int)> dfs = [&](int anchor, int v, int first) {
    for (const auto& [e, u] : adj[v]) {
      if (u < anchor) continue;
      if (!edges.empty() && e == edges.back()) continue;
      if (u == anchor) {
        if (!edges.empty() && e != first && first < e) {
          std::vector<int> cyc = edges;
          cyc.push_back(e);
          std::sort(cyc.begin(), cyc.end());
          cycles.push_back(std::move(cyc));
          if (cycles.size() > cap)
            throw std::runtime_error("cycle-count guard exceeded (cap " +
                                     std::to_string(cap) + ")");
        }
        continue;
      }
      if (on_path[u]) continue;
      on_path[u] = 1;
      edges.push_back(e);
      dfs(anchor, u, first < 0 ? e : first);
      edges.pop_back();
      on_path[u] = 0;
    }
  };

  for (int a = 0; a < nb; ++a) {
    on_path[a] = 1;
    // expand one level manually so `first` is pinned per starting edge
    for (const auto& [e, u] : adj[a]) {
      if (u < a) continue;
      if (u == a) continue;
      if (on_path[u]) continue;
      on_path[u] = 1;
      edges.push_back(e);
      dfs(a, u, e);
      edges.pop_back();
      on_path[u] = 0;
    }
    // 2-cycles from parallel branches anchored at a
    for (std::size_t i = 0; i < adj[a].size(); ++i)
      for (std::size_t j = i + 1; j < adj[a].size(); ++j)
        if (adj[a][i].second == adj[a][j].second && adj[a][i].second > a) {
          cycles.push_back({adj[a][i].first, adj[a][j].first});
          std::sort(cycles.back().begin(), cycles.back().end());
        }
    on_path[a] = 0;
  }

  // dedup (2-cycles can also be found by the dfs path of length 2? no:
  // dfs skips e == edges.back(), so parallel pairs come only from the loop
  // above) and order deterministically by (smallest branch id, length, lex).
  std::sort(cycles.begin(), cycles.end());
  cycles.erase(std::unique(cycles.begin(), cycles.end()), cycles.end());
  auto key = [&](const std::vector<int>& c) {
    int min_id = nc.branches[c.front()].id;
    for (int k : c) min_id = std::min(min_id, nc.branches[k].id);
    return std::tuple<int, std::size_t>(min_id, c.size());
  };
  std::stable_sort(cycles.begin(), cycles.end(),
                   [&](const auto& a, const auto& b) {
                     auto ka = key(a), kb = key(b);
                     if (ka != kb) return ka < kb;
                     return a < b;
                   });
  if (cycles.size() > cap)
    throw std::runtime_error("cycle-count guard exceeded (cap " +
                             std::to_string(cap) + ")");
  return cycles;
}

RadialityRows radiality_rows(const NetworkCase& nc,
                             const std::vector<std::vector<int>>& cycles) {
  RadialityRows rows;
  rows.closed_count = static_cast<int>(nc.buses.size()) - 1;
  for (const auto& c : cycles)
    rows.loops.push_back({c, static_cast<int>(c.size()) - 1});
  return rows;
}

RadialityRows radiality_rows(const NetworkCase& nc) {
  return radiality_rows(nc, enumerate_cycles(nc, nc.cycle_cap));
}

bool is_radial(const NetworkCase& nc, const Topology& alpha) {
  if (alpha.size() != nc.branches.size()) return false;
  const int nb = static_cast<int>(nc.buses.size());
  int closed = 0;
  std::vector<int> comp(nb);
  std::iota(comp.begin(), comp.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (comp[a] != a) a = comp[a] = comp[comp[a]];
    return a;
  };
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (!alpha[k]) continue;
    ++closed;
    comp[find(nc.bus_index(nc.branches[k].from))] =
        find(nc.bus_index(nc.branches[k].to));
  }
  if (closed != nb - 1) return false;
  int root = find(0);
  for (int i = 1; i < nb; ++i)
    if (find(i) != root) return false;
  return true;
}

std::optional<Topology> complete_to_spanning_tree(
    const NetworkCase& nc, const std::vector<int>& include,
    const std::vector<int>& exclude) {
  const int nb = static_cast<int>(nc.buses.size());
  std::vector<int> comp(nb);
  std::iota(comp.begin(), comp.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (comp[a] != a) a = comp[a] = comp[comp[a]];
    return a;
  };
  Topology alpha(nc.branches.size(), 0);
  std::vector<char> banned(nc.branches.size(), 0);
  for (int k : exclude) banned[k] = 1;
  auto join = [&](int k) {
    int a = find(nc.bus_index(nc.branches[k].from));
    int b = find(nc.bus_index(nc.branches[k].to));
    if (a == b) return false;
    comp[a] = b;
    alpha[k] = 1;
    return true;
  };
  for (int k : include)
    if (banned[k] || !join(k)) return std::nullopt;
  for (std::size_t k = 0; k < nc.branches.size(); ++k)
    if (!alpha[k] && !banned[k]) join(static_cast<int>(k));
  return is_radial(nc, alpha) ? std::optional<Topology>(alpha) : std::nullopt;
}

}  // namespace rdnr::net

#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "olc/common.hpp"

namespace olc {

enum class BusKind { Generator, Load, ZeroInjection };

struct Bus {
  int id = 0;           // external id from the case file
  BusKind kind = BusKind::Load;
  double inertia = 0.0;    // M_i, > 0 iff generator (pu*s^2)
  double damping = 0.0;    // D_i, > 0 for generator/load buses (pu per rad/s)
  double injection = 0.0;  // P_in_i (pu on the case base)
};

struct Line {
  int id = 0;
  int from = 0;  // bus index (0-based, after normalization)
  int to = 0;
  double susceptance = 0.0;  // B_ij > 0 (pu)
  std::optional<double> p_min;  // thermal limits, absent = unconstrained
  std::optional<double> p_max;
};

struct Area {
  int id = 0;
  std::vector<int> buses;  // bus indices
  std::optional<double> scheduled_export;  // Phat_k; computed pre-fault when absent
};

/// A static problem instance: buses, lines and control areas. Immutable after
/// construction; all vectors are indexed positionally (external ids are kept
/// only for I/O).
struct NetworkCase {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Area> areas;

  std::vector<int> generators;      // bus indices by kind
  std::vector<int> load_buses;
  std::vector<int> zero_injection;

  int n_buses() const { return static_cast<int>(buses.size()); }
  int n_lines() const { return static_cast<int>(lines.size()); }
  int n_areas() const { return static_cast<int>(areas.size()); }

  int bus_index(int external_id) const {
    for (int i = 0; i < n_buses(); ++i)
      if (buses[i].id == external_id) return i;
    throw ValidationError("unknown bus id " + std::to_string(external_id));
  }
  int line_index(int external_id) const {
    for (int e = 0; e < n_lines(); ++e)
      if (lines[e].id == external_id) return e;
    throw ValidationError("unknown line id " + std::to_string(external_id));
  }

  void rebuild_kind_sets() {
    generators.clear();
    load_buses.clear();
    zero_injection.clear();
    for (int i = 0; i < n_buses(); ++i) {
      switch (buses[i].kind) {
        case BusKind::Generator: generators.push_back(i); break;
        case BusKind::Load: load_buses.push_back(i); break;
        case BusKind::ZeroInjection: zero_injection.push_back(i); break;
      }
    }
  }
};

namespace detail {

inline BusKind parse_kind(const std::string& s) {
  if (s == "generator") return BusKind::Generator;
  if (s == "load") return BusKind::Load;
  if (s == "zero") return BusKind::ZeroInjection;
  throw ValidationError("bus kind must be generator|load|zero, got '" + s + "'");
}

inline void check_connected(const NetworkCase& c) {
  const int n = c.n_buses();
  if (n == 0) throw ValidationError("case has no buses");
  std::vector<std::vector<int>> adj(n);
  for (const Line& l : c.lines) {
    adj[l.from].push_back(l.to);
    adj[l.to].push_back(l.from);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
  }
  if (count != n) throw ValidationError("network graph is not connected");
}

inline void validate(const NetworkCase& c) {
  std::set<int> bus_ids;
  for (const Bus& b : c.buses) {
    if (!bus_ids.insert(b.id).second)
      throw ValidationError("duplicate bus id " + std::to_string(b.id));
    switch (b.kind) {
      case BusKind::Generator:
        if (!(b.inertia > 0.0))
          throw ValidationError("generator bus " + std::to_string(b.id) + " needs M > 0");
        if (!(b.damping > 0.0))
          throw ValidationError("generator bus " + std::to_string(b.id) + " needs D > 0");
        break;
      case BusKind::Load:
        if (b.inertia != 0.0)
          throw ValidationError("load bus " + std::to_string(b.id) + " must have M = 0");
        if (!(b.damping > 0.0))
          throw ValidationError("load bus " + std::to_string(b.id) + " needs D > 0");
        break;
      case BusKind::ZeroInjection:
        if (b.inertia != 0.0 || b.damping != 0.0 || b.injection != 0.0)
          throw ValidationError("zero-injection bus " + std::to_string(b.id) +
                                " must have M = D = Pin = 0");
        break;
    }
  }
  std::set<int> line_ids;
  std::set<std::pair<int, int>> pairs;
  for (const Line& l : c.lines) {
    if (!line_ids.insert(l.id).second)
      throw ValidationError("duplicate line id " + std::to_string(l.id));
    if (l.from == l.to) throw ValidationError("self-loop on bus index " + std::to_string(l.from));
    if (!(l.susceptance > 0.0))
      throw ValidationError("line " + std::to_string(l.id) + " needs B > 0");
    if (!pairs.insert({l.from, l.to}).second)
      throw ValidationError("duplicate edge on line " + std::to_string(l.id));
    if (pairs.count({l.to, l.from}))
      throw ValidationError("antiparallel edge on line " + std::to_string(l.id));
    if (l.p_min && l.p_max && !(*l.p_min <= *l.p_max))
      throw ValidationError("line " + std::to_string(l.id) + " has Pmin > Pmax");
  }
  // areas must partition the non-zero-injection buses
  if (!c.areas.empty()) {
    std::vector<int> covered(c.n_buses(), 0);
    for (const Area& a : c.areas)
      for (int i : a.buses) {
        if (i < 0 || i >= c.n_buses()) throw ValidationError("area references unknown bus");
        ++covered[i];
      }
    for (int i = 0; i < c.n_buses(); ++i) {
      const bool in_partition = c.buses[i].kind != BusKind::ZeroInjection;
      if (in_partition && covered[i] != 1)
        throw ValidationError("areas must partition the generator/load buses (bus id " +
                              std::to_string(c.buses[i].id) + ")");
      if (!in_partition && covered[i] != 0)
        throw ValidationError("zero-injection bus " + std::to_string(c.buses[i].id) +
                              " cannot belong to an area");
    }
  }
  check_connected(c);
}

}  // namespace detail

/// Parses a case from its JSON representation (see the schema in the README).
/// Bus/line ids are normalized to 0-based dense positional indices; external
/// ids are kept for reporting.
inline NetworkCase case_from_json(const nlohmann::json& j) {
  NetworkCase c;
  c.base_mva = j.value("baseMVA", 100.0);
  if (!j.contains("buses") || !j.contains("lines"))
    throw ValidationError("case file needs 'buses' and 'lines' arrays");

  std::map<int, int> index_of;
  for (const auto& jb : j.at("buses")) {
    Bus b;
    b.id = jb.at("id").get<int>();
    b.kind = detail::parse_kind(jb.at("kind").get<std::string>());
    b.inertia = jb.value("M", 0.0);
    b.damping = jb.value("D", 0.0);
    b.injection = jb.value("Pin", 0.0);
    index_of[b.id] = c.n_buses();
    c.buses.push_back(b);
  }
  for (const auto& jl : j.at("lines")) {
    Line l;
    l.id = jl.at("id").get<int>();
    const int from_id = jl.at("from").get<int>();
    const int to_id = jl.at("to").get<int>();
    if (!index_of.count(from_id) || !index_of.count(to_id))
      throw ValidationError("line " + std::to_string(l.id) + " references unknown bus");
    l.from = index_of.at(from_id);
    l.to = index_of.at(to_id);
    l.susceptance = jl.at("B").get<double>();
    if (jl.contains("Pmin")) l.p_min = jl.at("Pmin").get<double>();
    if (jl.contains("Pmax")) l.p_max = jl.at("Pmax").get<double>();
    c.lines.push_back(l);
  }
  if (j.contains("areas")) {
    for (const auto& ja : j.at("areas")) {
      Area a;
      a.id = ja.at("id").get<int>();
      for (const auto& jb : ja.at("buses")) {
        const int id = jb.get<int>();
        if (!index_of.count(id))
          throw ValidationError("area " + std::to_string(a.id) + " references unknown bus");
        a.buses.push_back(index_of.at(id));
      }
      if (ja.contains("Phat")) a.scheduled_export = ja.at("Phat").get<double>();
      c.areas.push_back(a);
    }
  }
  c.rebuild_kind_sets();
  detail::validate(c);
  return c;
}

/// Loads and validates a case file.
inline NetworkCase load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open case file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("case file " + path + " is not valid JSON: " + e.what());
  }
  try {
    return case_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("case file " + path + " violates the schema: " + e.what());
  }
}

/// Serializes a case back to the schema (external ids, optional keys only
/// when set).
inline nlohmann::json case_to_json(const NetworkCase& c) {
  nlohmann::json j;
  j["baseMVA"] = c.base_mva;
  j["buses"] = nlohmann::json::array();
  for (const Bus& b : c.buses) {
    nlohmann::json jb;
    jb["id"] = b.id;
    jb["kind"] = b.kind == BusKind::Generator ? "generator"
                 : b.kind == BusKind::Load    ? "load"
                                              : "zero";
    if (b.kind == BusKind::Generator) jb["M"] = b.inertia;
    if (b.kind != BusKind::ZeroInjection) {
      jb["D"] = b.damping;
      jb["Pin"] = b.injection;
    }
    j["buses"].push_back(jb);
  }
  j["lines"] = nlohmann::json::array();
  for (const Line& l : c.lines) {
    nlohmann::json jl;
    jl["id"] = l.id;
    jl["from"] = c.buses[l.from].id;
    jl["to"] = c.buses[l.to].id;
    jl["B"] = l.susceptance;
    if (l.p_min) jl["Pmin"] = *l.p_min;
    if (l.p_max) jl["Pmax"] = *l.p_max;
    j["lines"].push_back(jl);
  }
  if (!c.areas.empty()) {
    j["areas"] = nlohmann::json::array();
    for (const Area& a : c.areas) {
      nlohmann::json ja;
      ja["id"] = a.id;
      ja["buses"] = nlohmann::json::array();
      for (int i : a.buses) ja["buses"].push_back(c.buses[i].id);
      if (a.scheduled_export) ja["Phat"] = *a.scheduled_export;
      j["areas"].push_back(ja);
    }
  }
  return j;
}

/// Zeroes the total injection by spreading the mismatch evenly over the load
/// buses, the same correction the pre-fault stationary point assumes.
inline NetworkCase balance_injections(NetworkCase c) {
  if (c.load_buses.empty()) throw ValidationError("balance_injections: no load buses");
  double mismatch = 0.0;
  for (const Bus& b : c.buses) mismatch += b.injection;
  const double share = mismatch / static_cast<double>(c.load_buses.size());
  for (int i : c.load_buses) c.buses[i].injection -= share;
  return c;
}

/// Injection vector in bus order.
inline Vec injections(const NetworkCase& c) {
  Vec p(c.n_buses());
  for (int i = 0; i < c.n_buses(); ++i) p[i] = c.buses[i].injection;
  return p;
}

}  // namespace olc

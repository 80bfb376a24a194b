#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "olc/common.hpp"
#include "olc/integrator.hpp"
#include "olc/model.hpp"

namespace olc {

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Column names of the trajectory CSV, in contract order:
/// t, omega_<busid>..., P_<lineid>..., lambda_<busid>..., pi_<areaid>...,
/// rhoP_<lineid>..., rhoM_<lineid>..., phi_<busid>..., d_<busid>..., U.
/// The distributed-area variant writes per-boundary-edge multiplier columns
/// pi_<areaid>_<lineid> plus gamma_<areaid>_<lineid> in the pi slot.
inline std::vector<std::string> trajectory_columns(const SystemModel& m) {
  std::vector<std::string> cols;
  cols.push_back("t");
  for (const Bus& b : m.net.buses) cols.push_back("omega_" + std::to_string(b.id));
  for (const Line& l : m.net.lines) cols.push_back("P_" + std::to_string(l.id));
  for (const Bus& b : m.net.buses) cols.push_back("lambda_" + std::to_string(b.id));
  if (m.variant == Variant::DistributedArea) {
    for (int k = 0; k < m.n_area(); ++k)
      for (int e : m.boundary[k])
        cols.push_back("pi_" + std::to_string(m.net.areas[k].id) + "_" +
                       std::to_string(m.cons_lines[e].id));
    for (int k = 0; k < m.n_area(); ++k)
      for (int e : m.boundary[k])
        cols.push_back("gamma_" + std::to_string(m.net.areas[k].id) + "_" +
                       std::to_string(m.cons_lines[e].id));
  } else {
    for (const Area& a : m.net.areas) cols.push_back("pi_" + std::to_string(a.id));
  }
  for (const Line& l : m.cons_lines) cols.push_back("rhoP_" + std::to_string(l.id));
  for (const Line& l : m.cons_lines) cols.push_back("rhoM_" + std::to_string(l.id));
  for (const Bus& b : m.net.buses) cols.push_back("phi_" + std::to_string(b.id));
  for (const Bus& b : m.net.buses) cols.push_back("d_" + std::to_string(b.id));
  cols.push_back("U");
  return cols;
}

/// Writes the recorded trajectory with 17 significant digits per value, so
/// doubles survive a round trip bit-exactly.
inline void write_trajectory_csv(const std::string& path, const SystemModel& m,
                                 const Trajectory& traj, const std::vector<double>& lyapunov) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write trajectory file: " + path);
  const auto cols = trajectory_columns(m);
  for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (size_t s = 0; s < traj.states.size(); ++s) {
    const Vec& z = traj.states[s];
    std::string row = detail::fmt17(traj.times[s]);
    auto push = [&](double v) { row += ',' + detail::fmt17(v); };
    for (int i = 0; i < m.n_bus(); ++i) push(traj.omega[s][i]);
    for (int e = 0; e < m.n_edge(); ++e) push(m.p(z)[e]);
    for (int i = 0; i < m.n_bus(); ++i) push(m.lambda(z)[i]);
    for (int r = 0; r < m.layout.n_pi; ++r) push(m.pi(z)[r]);
    for (int r = 0; r < m.layout.n_gamma; ++r) push(m.gamma(z)[r]);
    for (int e = 0; e < m.n_cons(); ++e) push(m.rho_p(z)[e]);
    for (int e = 0; e < m.n_cons(); ++e) push(m.rho_m(z)[e]);
    for (int i = 0; i < m.n_bus(); ++i) push(m.phi(z)[i]);
    for (int i = 0; i < m.n_bus(); ++i) push(traj.d[s][i]);
    push(s < lyapunov.size() ? lyapunov[s] : 0.0);
    out << row << "\n";
  }
}

struct TrajectoryTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    throw ValidationError("trajectory CSV is missing column " + name);
  }
};

inline TrajectoryTable read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trajectory file: " + path);
  TrajectoryTable t;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("trajectory file is empty: " + path);
  std::stringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) t.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != t.columns.size())
      throw ValidationError("trajectory row width does not match the header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Reconstructs the packed state at a recorded sample.
inline Vec state_from_table(const SystemModel& m, const TrajectoryTable& t, int row_index) {
  const auto& row = t.rows.at(row_index);
  Vec z = Vec::Zero(m.layout.total);
  auto get = [&](const std::string& name) { return row[t.column(name)]; };
  for (int gi = 0; gi < m.n_gen(); ++gi)
    m.omega_g(z)[gi] = get("omega_" + std::to_string(m.net.buses[m.net.generators[gi]].id));
  for (int e = 0; e < m.n_edge(); ++e)
    m.p(z)[e] = get("P_" + std::to_string(m.net.lines[e].id));
  for (int i = 0; i < m.n_bus(); ++i)
    m.lambda(z)[i] = get("lambda_" + std::to_string(m.net.buses[i].id));
  if (m.variant == Variant::DistributedArea) {
    int off = 0;
    for (int k = 0; k < m.n_area(); ++k)
      for (int e : m.boundary[k]) {
        const std::string suffix = std::to_string(m.net.areas[k].id) + "_" +
                                   std::to_string(m.cons_lines[e].id);
        m.pi(z)[off] = get("pi_" + suffix);
        m.gamma(z)[off] = get("gamma_" + suffix);
        ++off;
      }
  } else {
    for (int k = 0; k < m.n_area(); ++k)
      m.pi(z)[k] = get("pi_" + std::to_string(m.net.areas[k].id));
  }
  for (int e = 0; e < m.n_cons(); ++e) {
    m.rho_p(z)[e] = get("rhoP_" + std::to_string(m.cons_lines[e].id));
    m.rho_m(z)[e] = get("rhoM_" + std::to_string(m.cons_lines[e].id));
  }
  for (int i = 0; i < m.n_bus(); ++i)
    m.phi(z)[i] = get("phi_" + std::to_string(m.net.buses[i].id));
  return z;
}

}  // namespace olc

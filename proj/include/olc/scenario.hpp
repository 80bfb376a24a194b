#pragma once

#include <fstream>
#include <future>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "olc/common.hpp"
#include "olc/controller.hpp"
#include "olc/csv.hpp"
#include "olc/integrator.hpp"
#include "olc/model.hpp"
#include "olc/oracle.hpp"

namespace olc {

struct CostSpec {
  std::string family = "quadratic";
  double b = 1.0;
  double d_max = 1.0;
  double m = 1.0;

  CostModel make() const {
    if (family == "quadratic") return CostModel::quadratic(b);
    if (family == "tanh") return CostModel::saturating_tanh(d_max, m);
    throw ValidationError("cost family must be quadratic|tanh, got '" + family + "'");
  }
};

/// A runnable experiment: case reference, disturbance, per-bus costs,
/// controller variant and gains, constraint toggles and integrator settings.
struct Scenario {
  std::string case_path;  // may be overridden by --case
  std::map<int, double> disturbance;  // external bus id -> delta Pin
  CostSpec default_cost;
  std::map<int, CostSpec> cost_per_bus;  // external bus id
  Variant variant = Variant::Base;
  double delta_a = 0.0;
  GainSpec gains;
  bool inter_area = true;
  std::map<int, std::pair<double, double>> thermal_limits;  // external line id
  IntegratorConfig integ;
};

inline Variant parse_variant(const std::string& s) {
  if (s == "base") return Variant::Base;
  if (s == "swing-only") return Variant::SwingOnly;
  if (s == "perturbed") return Variant::Perturbed;
  if (s == "reduced") return Variant::Reduced;
  if (s == "distributed-area") return Variant::DistributedArea;
  throw ValidationError("unknown variant '" + s + "'");
}

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Base: return "base";
    case Variant::SwingOnly: return "swing-only";
    case Variant::Perturbed: return "perturbed";
    case Variant::Reduced: return "reduced";
    case Variant::DistributedArea: return "distributed-area";
  }
  return "base";
}

inline CostSpec cost_spec_from_json(const nlohmann::json& j) {
  CostSpec s;
  s.family = j.value("family", "quadratic");
  s.b = j.value("b", 1.0);
  s.d_max = j.value("dmax", 1.0);
  s.m = j.value("m", 1.0);
  s.make();  // validate early
  return s;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  s.case_path = j.value("case", "");
  if (j.contains("disturbance"))
    for (auto& [key, val] : j.at("disturbance").items())
      s.disturbance[std::stoi(key)] = val.get<double>();
  if (j.contains("cost")) s.default_cost = cost_spec_from_json(j.at("cost"));
  if (j.contains("costPerBus"))
    for (auto& [key, val] : j.at("costPerBus").items())
      s.cost_per_bus[std::stoi(key)] = cost_spec_from_json(val);
  if (j.contains("variant")) s.variant = parse_variant(j.at("variant").get<std::string>());
  s.delta_a = j.value("deltaA", 0.0);
  if (j.contains("gains")) {
    const auto& g = j.at("gains");
    s.gains.lambda = g.value("lambda", 1.0);
    s.gains.pi = g.value("pi", 1.0);
    s.gains.rho_plus = g.value("rhoPlus", 1.0);
    s.gains.rho_minus = g.value("rhoMinus", 1.0);
    s.gains.phi = g.value("phi", 1.0);
    s.gains.gamma = g.value("gamma", 1.0);
  }
  s.inter_area = j.value("interArea", true);
  if (j.contains("thermalLimits"))
    for (auto& [key, val] : j.at("thermalLimits").items()) {
      if (!val.is_array() || val.size() != 2)
        throw ValidationError("thermalLimits entries must be [min, max]");
      s.thermal_limits[std::stoi(key)] = {val[0].get<double>(), val[1].get<double>()};
    }
  if (j.contains("integrator")) {
    const auto& g = j.at("integrator");
    s.integ.dt = g.value("dt", 1e-3);
    s.integ.t_end = g.value("tEnd", 40.0);
    s.integ.eq_tol = g.value("tol", 1e-8);
    s.integ.stride = g.value("stride", 10);
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("scenario file " + path + " is not valid JSON: " + e.what());
  }
  return scenario_from_json(j);
}

/// A built simulation: balanced case, pre-fault flow, the closed-loop model
/// with the disturbance applied, and the initial state (phases and flows at
/// the pre-fault stationary point, controller states at zero).
struct Simulation {
  NetworkCase balanced;  // original case, balanced, before the disturbance
  DcFlow prefault;       // dc solution of `balanced`
  SystemModel model;
  Vec z0;
  double phi_gauge = 0.0;
  IntegratorConfig integ;
};

inline Simulation build_simulation(const NetworkCase& raw, const Scenario& sc) {
  Simulation sim;
  sim.integ = sc.integ;
  sim.balanced = balance_injections(raw);
  const GraphMatrices g0 = graph_matrices(sim.balanced);
  sim.prefault = dc_power_flow(sim.balanced, g0);

  // scheduled exports: case value if present, otherwise the pre-fault flow
  Vec p_hat(sim.balanced.n_areas());
  for (int k = 0; k < sim.balanced.n_areas(); ++k) {
    const Area& a = sim.balanced.areas[k];
    p_hat[k] = a.scheduled_export ? *a.scheduled_export
                                  : (g0.area_boundary.row(k) * sim.prefault.flows)(0);
  }

  NetworkCase disturbed = sim.balanced;
  for (auto& [bus_id, dp] : sc.disturbance)
    disturbed.buses[disturbed.bus_index(bus_id)].injection += dp;

  std::vector<CostModel> costs;
  for (const Bus& b : disturbed.buses) {
    auto it = sc.cost_per_bus.find(b.id);
    costs.push_back(it != sc.cost_per_bus.end() ? it->second.make() : sc.default_cost.make());
  }

  ModelOptions opt;
  opt.variant = sc.variant;
  opt.gains = sc.gains;
  opt.delta_a = sc.delta_a;
  opt.inter_area = sc.inter_area;
  opt.thermal_limits = sc.thermal_limits;
  sim.model = build_model(disturbed, std::move(costs), p_hat, opt);

  const SystemModel& m = sim.model;
  sim.z0 = Vec::Zero(m.layout.total);
  if (sc.variant == Variant::Reduced) {
    Vec theta_r(m.n_bus());
    for (int a = 0; a < m.n_bus(); ++a) theta_r[a] = sim.prefault.theta[m.reduction->retained[a]];
    m.phi(sim.z0) = theta_r;
    m.p(sim.z0) = m.gm.susceptance.asDiagonal() * (m.gm.incidence.transpose() * theta_r);
  } else {
    m.phi(sim.z0) = sim.prefault.theta;
    m.p(sim.z0) = sim.prefault.flows;
  }
  sim.phi_gauge = m.chi_phi.cwiseInverse().dot(m.phi(sim.z0));
  return sim;
}

inline Simulation build_simulation(const Scenario& sc, const std::string& case_override = "") {
  const std::string path = case_override.empty() ? sc.case_path : case_override;
  if (path.empty()) throw ValidationError("no case file given (scenario 'case' key or --case)");
  return build_simulation(load_case(path), sc);
}

inline nlohmann::json to_json(const KktReport& r) {
  return {{"statLoadResponse", r.stat_load_response},
          {"statNu", r.stat_nu},
          {"statOmegaNu", r.stat_omega_nu},
          {"statPhi", r.stat_phi},
          {"primalBalance", r.primal_balance},
          {"primalVirtual", r.primal_virtual},
          {"primalArea", r.primal_area},
          {"primalThermal", r.primal_thermal},
          {"dualFeasibility", r.dual_feasibility},
          {"complementarySlackness", r.complementary_slackness},
          {"maxResidual", r.max_residual}};
}

inline nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline nlohmann::json to_json(const SystemModel& m, const OptimalSolution& s) {
  nlohmann::json ids_bus = nlohmann::json::array();
  for (const Bus& b : m.net.buses) ids_bus.push_back(b.id);
  nlohmann::json ids_line = nlohmann::json::array();
  for (const Line& l : m.net.lines) ids_line.push_back(l.id);
  return {{"d", vec_to_json(s.d)},
          {"omega", vec_to_json(s.omega)},
          {"phi", vec_to_json(s.phi)},
          {"P", vec_to_json(s.p)},
          {"lambda", vec_to_json(s.sig.lambda)},
          {"nu", vec_to_json(s.sig.nu)},
          {"pi", vec_to_json(s.sig.pi)},
          {"rhoPlus", vec_to_json(s.sig.rho_plus)},
          {"rhoMinus", vec_to_json(s.sig.rho_minus)},
          {"objective", s.objective},
          {"maxKktResidual", s.max_kkt_residual},
          {"busIds", ids_bus},
          {"lineIds", ids_line}};
}

/// Post-run summary: convergence flags, the final frequency deviation, the
/// physical flows on the tie lines and the optimality residual of the final
/// state.
inline nlohmann::json make_summary(const SystemModel& m, const Trajectory& traj) {
  nlohmann::json j;
  j["variant"] = variant_name(m.variant);
  j["converged"] = traj.converged;
  j["diverged"] = traj.diverged;
  j["tFinal"] = traj.times.back();
  j["finalFieldNorm"] = traj.final_field_norm;
  j["finalMaxAbsOmega"] = traj.omega.back().cwiseAbs().maxCoeff();

  const Vec& zf = traj.states.back();
  const Vec cons_flows = m.flow_map * Vec(m.p(zf));
  // a tie line joins two areas; edges into area-less interior buses carry a
  // Chat entry but cancel by flow conservation and are not reported
  nlohmann::json ties = nlohmann::json::object();
  for (int e = 0; e < m.n_cons(); ++e) {
    int touched = 0;
    for (int k = 0; k < m.n_area(); ++k)
      if (m.chat(k, e) != 0.0) ++touched;
    if (touched >= 2) ties[std::to_string(m.cons_lines[e].id)] = cons_flows[e];
  }
  j["finalTieFlows"] = ties;
  if (m.n_area() > 0) {
    const Vec mismatch = m.chat * cons_flows - m.p_hat;
    j["finalInterAreaMismatch"] = mismatch.cwiseAbs().maxCoeff();
  }
  if (m.variant != Variant::SwingOnly && !traj.diverged) {
    const KktReport rep = kkt_residuals(m, candidate_from_state(m, zf));
    j["finalKktResidual"] = rep.max_residual;
    j["kkt"] = to_json(rep);
  }
  return j;
}

/// Certification of a recorded trajectory: optimality residuals at the final
/// sample, the inter-area and thermal properties, and Lyapunov monotonicity
/// along the samples. Mirrors what the convergence theory promises for the
/// base law.
struct CheckReport {
  bool pass = false;
  bool converged = false;
  KktReport kkt;
  double area_mismatch = 0.0;
  double thermal_violation = 0.0;
  double worst_lyapunov_increase = 0.0;  // per-step normalized
  nlohmann::json to_json_report(double kkt_tol, double area_tol, double thermal_tol,
                                double lyapunov_slack) const {
    return {{"pass", pass},
            {"converged", converged},
            {"kkt", olc::to_json(kkt)},
            {"kktTolerance", kkt_tol},
            {"areaMismatch", area_mismatch},
            {"areaTolerance", area_tol},
            {"thermalViolation", thermal_violation},
            {"thermalTolerance", thermal_tol},
            {"worstLyapunovIncreasePerStep", worst_lyapunov_increase},
            {"lyapunovSlackPerStep", lyapunov_slack}};
  }
};

inline CheckReport run_check(const SystemModel& m, const TrajectoryTable& table,
                             bool converged_flag, double dt, double kkt_tol = 1e-6,
                             double area_tol = 1e-5, double thermal_tol = 1e-6,
                             double lyapunov_slack = 1e-7) {
  if (m.variant == Variant::SwingOnly)
    throw ValidationError("check: the swing-only baseline has no optimality certificate");
  if (table.rows.empty()) throw ValidationError("check: empty trajectory");
  CheckReport rep;
  rep.converged = converged_flag;

  const int last = static_cast<int>(table.rows.size()) - 1;
  const Vec zf = state_from_table(m, table, last);
  rep.kkt = kkt_residuals(m, candidate_from_state(m, zf));

  const Vec cons_flows = m.flow_map * Vec(m.p(zf));
  if (m.inter_area_enabled && m.n_area() > 0)
    rep.area_mismatch = (m.chat * cons_flows - m.p_hat).cwiseAbs().maxCoeff();
  for (int e = 0; e < m.n_cons(); ++e) {
    if (m.has_upper(e))
      rep.thermal_violation = std::max(rep.thermal_violation, cons_flows[e] - m.upper(e));
    if (m.has_lower(e))
      rep.thermal_violation = std::max(rep.thermal_violation, m.lower(e) - cons_flows[e]);
  }
  rep.thermal_violation = std::max(rep.thermal_violation, 0.0);

  // Lyapunov non-increase within the per-step integration slack
  const int t_col = table.column("t");
  double prev_u = 0.0;
  for (int s = 0; s <= last; ++s) {
    const Vec z = state_from_table(m, table, s);
    const double u = lyapunov(m, z, zf);
    if (s > 0) {
      const double dt_rows = table.rows[s][t_col] - table.rows[s - 1][t_col];
      const double steps = std::max(1.0, std::round(dt_rows / dt));
      rep.worst_lyapunov_increase =
          std::max(rep.worst_lyapunov_increase, (u - prev_u) / steps);
    }
    prev_u = u;
  }

  rep.pass = rep.converged && rep.kkt.max_residual < kkt_tol &&
             (!m.inter_area_enabled || rep.area_mismatch < area_tol) &&
             rep.thermal_violation < thermal_tol &&
             rep.worst_lyapunov_increase < lyapunov_slack;
  return rep;
}

/// One robustness-sweep entry.
struct SweepEntry {
  double delta_a = 0.0;
  bool converged = false;
  bool diverged = false;
  bool frequency_restored = false;
  double final_max_omega = 0.0;
  double final_field_norm = 0.0;
};

/// Runs the perturbed law for each mismatch value; entries are independent
/// and run concurrently.
inline std::vector<SweepEntry> run_sweep(const NetworkCase& raw, Scenario sc,
                                         const std::vector<double>& delta_as) {
  sc.variant = Variant::Perturbed;
  std::vector<std::future<SweepEntry>> futures;
  for (double da : delta_as) {
    futures.push_back(std::async(std::launch::async, [&, da] {
      Scenario s = sc;
      s.delta_a = da;
      Simulation sim = build_simulation(raw, s);
      const Trajectory traj = integrate(sim.model, sim.z0, sim.integ);
      SweepEntry e;
      e.delta_a = da;
      e.converged = traj.converged;
      e.diverged = traj.diverged;
      e.final_max_omega = traj.omega.back().cwiseAbs().maxCoeff();
      e.frequency_restored = traj.converged && e.final_max_omega < 1e-4;
      e.final_field_norm = traj.final_field_norm;
      return e;
    }));
  }
  std::vector<SweepEntry> out;
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

inline nlohmann::json sweep_to_json(const SystemModel& m, const std::vector<SweepEntry>& entries) {
  nlohmann::json j;
  double d_slope_min = std::numeric_limits<double>::infinity();
  bool lipschitz = true;
  for (const CostModel& c : m.costs) {
    const auto [alpha, lip] = c.curvature_bounds();
    (void)alpha;
    if (!std::isfinite(lip)) lipschitz = false;
    else d_slope_min = std::min(d_slope_min, 1.0 / lip);
  }
  const double d_min = m.damping.minCoeff();
  if (lipschitz) {
    const StabilityInterval iv = stability_bound(d_min, d_slope_min);
    j["stabilityInterval"] = {iv.lo, iv.hi};
  } else {
    j["stabilityInterval"] = nullptr;  // empty: d' is not bounded away from zero
  }
  j["dMin"] = d_min;
  nlohmann::json arr = nlohmann::json::array();
  for (const SweepEntry& e : entries)
    arr.push_back({{"deltaA", e.delta_a},
                   {"converged", e.converged},
                   {"diverged", e.diverged},
                   {"frequencyRestored", e.frequency_restored},
                   {"finalMaxAbsOmega", e.final_max_omega},
                   {"finalFieldNorm", e.final_field_norm}});
  j["entries"] = arr;
  return j;
}

}  // namespace olc

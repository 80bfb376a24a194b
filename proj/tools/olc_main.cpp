// Command-line front end: every subcommand is a thin wrapper over the
// library. Exit codes: 0 ok, 1 input error, 2 numerical failure,
// 3 certification/property failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "olc/csv.hpp"
#include "olc/integrator.hpp"
#include "olc/kron.hpp"
#include "olc/oracle.hpp"
#include "olc/scenario.hpp"
#include "olc/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitCertification = 3;

struct CommonArgs {
  std::string case_path;
  std::string scenario_path;
  std::string out_path;
  std::string variant;
  double dt = -1.0;
  double t_end = -1.0;
  double tol = -1.0;
  long seed = 1;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool needs_out = true) {
  cmd->add_option("--case", a.case_path, "case JSON file");
  cmd->add_option("--scenario", a.scenario_path, "scenario JSON file");
  if (needs_out) cmd->add_option("--out", a.out_path, "output path")->required();
  cmd->add_option("--variant", a.variant, "controller variant override");
  cmd->add_option("--dt", a.dt, "integrator step override (s)");
  cmd->add_option("--t-end", a.t_end, "horizon override (s)");
  cmd->add_option("--tol", a.tol, "equilibrium tolerance override");
  cmd->add_option("--seed", a.seed, "RNG seed for sampled properties");
}

olc::Scenario make_scenario(const CommonArgs& a) {
  olc::Scenario sc;
  if (!a.scenario_path.empty()) sc = olc::load_scenario(a.scenario_path);
  if (!a.variant.empty()) sc.variant = olc::parse_variant(a.variant);
  if (a.dt > 0) sc.integ.dt = a.dt;
  if (a.t_end > 0) sc.integ.t_end = a.t_end;
  if (a.tol > 0) sc.integ.eq_tol = a.tol;
  return sc;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw olc::ValidationError("cannot write output file: " + path);
  out << j.dump(2) << "\n";
}

std::pair<std::string, std::string> simulate_paths(const std::string& out) {
  if (out.size() > 4 && out.substr(out.size() - 4) == ".csv")
    return {out, out.substr(0, out.size() - 4) + ".summary.json"};
  return {out + ".csv", out + ".summary.json"};
}

int cmd_simulate(const CommonArgs& a) {
  const olc::Scenario sc = make_scenario(a);
  olc::Simulation sim = olc::build_simulation(sc, a.case_path);
  const olc::Trajectory traj = olc::integrate(sim.model, sim.z0, sim.integ);
  const std::vector<double> u = olc::trajectory_lyapunov(sim.model, traj);
  const auto [csv_path, summary_path] = simulate_paths(a.out_path);
  olc::write_trajectory_csv(csv_path, sim.model, traj, u);
  write_json(summary_path, olc::make_summary(sim.model, traj));
  if (traj.diverged) {
    std::cerr << "simulate: " << traj.diagnostic << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_oracle(const CommonArgs& a) {
  const olc::Scenario sc = make_scenario(a);
  olc::Simulation sim = olc::build_simulation(sc, a.case_path);
  const olc::OptimalSolution sol = olc::solve_olc(sim.model, sim.phi_gauge);
  write_json(a.out_path, olc::to_json(sim.model, sol));
  return kExitOk;
}

int cmd_check(const CommonArgs& a, const std::string& trajectory_path) {
  const olc::Scenario sc = make_scenario(a);
  olc::Simulation sim = olc::build_simulation(sc, a.case_path);
  const olc::TrajectoryTable table = olc::read_trajectory_csv(trajectory_path);
  const olc::Vec zf = olc::state_from_table(sim.model, table,
                                            static_cast<int>(table.rows.size()) - 1);
  const bool converged =
      olc::closed_loop_rhs(sim.model, zf).cwiseAbs().maxCoeff() < sim.integ.eq_tol;
  const olc::CheckReport rep = olc::run_check(sim.model, table, converged, sim.integ.dt);
  const nlohmann::json j = rep.to_json_report(1e-6, 1e-5, 1e-6, 1e-7);
  if (!a.out_path.empty())
    write_json(a.out_path, j);
  else
    std::cout << j.dump(2) << "\n";
  return rep.pass ? kExitOk : kExitCertification;
}

int cmd_reduce(const CommonArgs& a) {
  if (a.case_path.empty()) throw olc::ValidationError("reduce: --case is required");
  const olc::NetworkCase c = olc::load_case(a.case_path);
  const olc::ReducedNetwork red = olc::kron_reduce(c);
  nlohmann::json j;
  j["case"] = olc::case_to_json(red.reduced);
  j["retainedBusIds"] = nlohmann::json::array();
  for (int i : red.retained) j["retainedBusIds"].push_back(c.buses[i].id);
  j["originalLineIds"] = nlohmann::json::array();
  for (const olc::Line& l : red.original_lines) j["originalLineIds"].push_back(l.id);
  j["reducedLineIds"] = nlohmann::json::array();
  for (const olc::Line& l : red.reduced.lines) j["reducedLineIds"].push_back(l.id);
  j["Asharp"] = nlohmann::json::array();
  for (Eigen::Index r = 0; r < red.a_sharp.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index col = 0; col < red.a_sharp.cols(); ++col)
      row.push_back(red.a_sharp(r, col));
    j["Asharp"].push_back(row);
  }
  write_json(a.out_path, j);
  return kExitOk;
}

int cmd_sweep(const CommonArgs& a, const std::string& da_list) {
  const olc::Scenario sc = make_scenario(a);
  std::vector<double> das;
  std::stringstream ss(da_list);
  std::string tok;
  while (std::getline(ss, tok, ',')) das.push_back(std::stod(tok));
  if (das.empty()) throw olc::ValidationError("sweep-da: --da list is empty");
  const std::string path = a.case_path.empty() ? sc.case_path : a.case_path;
  if (path.empty()) throw olc::ValidationError("sweep-da: no case file given");
  const olc::NetworkCase raw = olc::load_case(path);
  const std::vector<olc::SweepEntry> entries = olc::run_sweep(raw, sc, das);
  olc::Scenario probe = sc;
  probe.variant = olc::Variant::Perturbed;
  const olc::Simulation sim = olc::build_simulation(raw, probe);
  write_json(a.out_path, olc::sweep_to_json(sim.model, entries));
  return kExitOk;
}

int cmd_verify(const CommonArgs& a) {
  olc::Scenario sc = make_scenario(a);
  if (sc.variant != olc::Variant::Reduced) sc.variant = olc::Variant::Base;
  olc::Simulation sim = olc::build_simulation(sc, a.case_path);

  olc::Scenario quad = sc;
  quad.default_cost = olc::CostSpec{};  // quadratic b = 1
  quad.cost_per_bus.clear();
  olc::Simulation quad_sim = olc::build_simulation(quad, a.case_path);

  // Kron consistency runs on the loaded case when it has interior buses,
  // otherwise on a minimal path network with one eliminated bus.
  olc::NetworkCase kron_case =
      olc::load_case(a.case_path.empty() ? sc.case_path : a.case_path);
  if (kron_case.zero_injection.empty()) {
    const nlohmann::json j = {
        {"baseMVA", 100},
        {"buses",
         {{{"id", 1}, {"kind", "generator"}, {"M", 1.0}, {"D", 0.2}, {"Pin", 0.5}},
          {{"id", 2}, {"kind", "zero"}},
          {{"id", 3}, {"kind", "load"}, {"D", 0.2}, {"Pin", -0.5}}}},
        {"lines",
         {{{"id", 1}, {"from", 1}, {"to", 2}, {"B", 1.0}},
          {{"id", 2}, {"from", 2}, {"to", 3}, {"B", 1.0}}}}};
    kron_case = olc::case_from_json(j);
  }

  olc::VerifyOptions opt;
  opt.seed = static_cast<uint64_t>(a.seed);
  const std::vector<olc::PropertyResult> results =
      olc::run_property_suite(sim.model, quad_sim.model, kron_case, opt);

  nlohmann::json j;
  j["seed"] = a.seed;
  j["pass"] = olc::all_pass(results);
  j["properties"] = nlohmann::json::array();
  for (const auto& r : results) {
    j["properties"].push_back({{"name", r.name},
                               {"pass", r.pass},
                               {"worst", r.worst},
                               {"tolerance", r.tolerance},
                               {"samples", r.samples},
                               {"detail", r.detail}});
    std::printf("%-32s %s  worst=%.3e tol=%.3e\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                r.worst, r.tolerance);
  }
  if (!a.out_path.empty()) write_json(a.out_path, j);
  return olc::all_pass(results) ? kExitOk : kExitCertification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"load-side frequency control simulator and verifier"};
  app.require_subcommand(1);

  CommonArgs sim_args, oracle_args, check_args, reduce_args, sweep_args, verify_args;
  std::string trajectory_path, da_list;

  CLI::App* c_sim = app.add_subcommand("simulate", "integrate a scenario, write CSV + summary");
  add_common(c_sim, sim_args);
  CLI::App* c_oracle = app.add_subcommand("oracle", "solve the load-control problem");
  add_common(c_oracle, oracle_args);
  CLI::App* c_check = app.add_subcommand("check", "certify a recorded trajectory");
  add_common(c_check, check_args, false);
  c_check->add_option("--out", check_args.out_path, "report path (stdout when omitted)");
  c_check->add_option("--trajectory", trajectory_path, "trajectory CSV")->required();
  CLI::App* c_reduce = app.add_subcommand("reduce", "Kron-reduce a case");
  add_common(c_reduce, reduce_args);
  CLI::App* c_sweep = app.add_subcommand("sweep-da", "robustness sweep over delta_a");
  add_common(c_sweep, sweep_args);
  c_sweep->add_option("--da", da_list, "comma-separated delta_a values")->required();
  CLI::App* c_verify = app.add_subcommand("verify", "run the sampled property suite");
  add_common(c_verify, verify_args, false);
  c_verify->add_option("--out", verify_args.out_path, "report path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_sim->parsed()) return cmd_simulate(sim_args);
    if (c_oracle->parsed()) return cmd_oracle(oracle_args);
    if (c_check->parsed()) return cmd_check(check_args, trajectory_path);
    if (c_reduce->parsed()) return cmd_reduce(reduce_args);
    if (c_sweep->parsed()) return cmd_sweep(sweep_args, da_list);
    if (c_verify->parsed()) return cmd_verify(verify_args);
  } catch (const olc::ValidationError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const olc::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}

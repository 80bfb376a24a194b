#include "catch_amalgamated.hpp"

#include <random>

#include "helpers.hpp"
#include "olc/controller.hpp"
#include "olc/integrator.hpp"
#include "olc/oracle.hpp"

using namespace olc;
using Catch::Approx;

TEST_CASE("positive projection") {
  SECTION("blocks negative drift at the boundary") { REQUIRE(project_positive(-1.0, 0.0) == 0.0); }
  SECTION("passes drift while the multiplier is interior") {
    REQUIRE(project_positive(-1.0, 0.5) == -1.0);
  }
  SECTION("positive drift always passes") { REQUIRE(project_positive(0.3, 0.0) == 0.3); }
  SECTION("vector form respects the mask") {
    Vec a(3), u(3);
    a << -1.0, -1.0, -1.0;
    u << 0.0, 0.0, 0.0;
    const Vec out = project_positive(a, u, std::vector<int>{0, 2});
    REQUIRE(out[0] == 0.0);
    REQUIRE(out[1] == -1.0);  // outside the mask, untouched
    REQUIRE(out[2] == 0.0);
  }
}

TEST_CASE("controller is stationary at a certified optimum") {
  // binding upper limit so the multiplier block is exercised too
  ModelOptions opt;
  opt.inter_area = false;
  opt.thermal_limits[1] = {-2.0, 0.8};
  SystemModel m = testutil::quadratic_model(testutil::case3(), opt);
  const OptimalSolution sol = solve_olc(m);
  REQUIRE(sol.sig.rho_plus[0] > 0.0);

  Vec z = Vec::Zero(m.layout.total);
  m.p(z) = sol.p;
  m.lambda(z) = sol.sig.lambda;
  m.rho_p(z) = sol.sig.rho_plus;
  m.rho_m(z) = sol.sig.rho_minus;
  m.phi(z) = sol.phi;
  const Vec field = closed_loop_rhs(m, z);
  REQUIRE(field.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("price update follows the virtual-flow imbalance") {
  // with a negligible load response the update reduces to
  // zeta * (Pin - L_B phi): (0.5 - 0.5, -0.7 + 0.5) = (0, -0.2)
  NetworkCase c = testutil::case2();
  c.buses[1].injection = -0.7;
  SystemModel m = build_model_uniform(c, CostModel::quadratic(1e-12));
  Vec z = Vec::Zero(m.layout.total);
  m.p(z)[0] = 0.5;
  m.phi(z)[0] = 0.25;
  m.phi(z)[1] = -0.25;
  const Vec omega_l = solve_load_frequency(m, m.lambda(z), m.p(z));
  const Vec omega = assemble_omega(m, Vec::Zero(1), omega_l);
  const ControllerRates r = olc_rhs(m, z, omega);
  REQUIRE(r.lambda_dot[0] == Approx(0.0).margin(1e-9));
  REQUIRE(r.lambda_dot[1] == Approx(-0.2).margin(1e-9));
}

TEST_CASE("thermal multiplier rate respects the projection") {
  ModelOptions opt;
  opt.thermal_limits[1] = {-2.0, 0.9};
  SystemModel m = testutil::quadratic_model(testutil::case3(), opt);
  Vec z = Vec::Zero(m.layout.total);
  m.phi(z) << 0.5, 0.0, -0.5;  // virtual flow on line 1: 0.5
  const Vec omega = Vec::Zero(3);

  SECTION("inactive multiplier with satisfied limit stays put") {
    // drift 0.5 - 0.9 = -0.4 is clipped at rho = 0
    const ControllerRates r = olc_rhs(m, z, omega);
    REQUIRE(r.rho_p_dot[0] == 0.0);
  }
  SECTION("interior multiplier decays") {
    m.rho_p(z)[0] = 0.1;
    const ControllerRates r = olc_rhs(m, z, omega);
    REQUIRE(r.rho_p_dot[0] == Approx(-0.4).epsilon(1e-12));
  }
  SECTION("violating flow drives through the boundary") {
    m.phi(z) << 1.5, 0.0, -1.5;  // flow 1.5 > 0.9
    const ControllerRates r = olc_rhs(m, z, omega);
    REQUIRE(r.rho_p_dot[0] == Approx(0.6).epsilon(1e-12));
  }
}

TEST_CASE("measured-rate price update matches the direct law when a equals D") {
  const NetworkCase c = testutil::case3();
  SystemModel base = testutil::quadratic_model(c);
  ModelOptions opt;
  opt.variant = Variant::Perturbed;
  opt.delta_a = 0.0;
  SystemModel pert = testutil::quadratic_model(c, opt);
  REQUIRE(base.layout.total == pert.layout.total);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    Vec z(base.layout.total);
    for (int i = 0; i < z.size(); ++i) z[i] = sym(rng);
    base.rho_p(z) = base.rho_p(z).cwiseAbs();
    base.rho_m(z) = base.rho_m(z).cwiseAbs();
    const Vec fa = closed_loop_rhs(base, z);
    const Vec fb = closed_loop_rhs(pert, z);
    worst = std::max(worst, (fa - fb).cwiseAbs().maxCoeff());
  }
  REQUIRE(worst < 1e-12);
}

TEST_CASE("damping mismatch adds exactly delta_a times the frequency") {
  const NetworkCase c = testutil::case3();
  SystemModel base = testutil::quadratic_model(c);
  ModelOptions opt;
  opt.variant = Variant::Perturbed;
  opt.delta_a = 0.1;
  SystemModel pert = testutil::quadratic_model(c, opt);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  for (int s = 0; s < 20; ++s) {
    Vec z(base.layout.total);
    for (int i = 0; i < z.size(); ++i) z[i] = sym(rng);
    base.rho_p(z) = base.rho_p(z).cwiseAbs();
    base.rho_m(z) = base.rho_m(z).cwiseAbs();
    Derived derived;
    const Vec fa = closed_loop_rhs(base, z, &derived);
    const Vec fb = closed_loop_rhs(pert, z);
    const Vec diff = pert.lambda(fb) - base.lambda(fa);
    const Vec want = 0.1 * base.zeta_lambda.cwiseProduct(derived.omega);
    REQUIRE((diff - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("admissible mismatch interval") {
  SECTION("numeric endpoints for unit slope and D_min 0.2") {
    const StabilityInterval iv = stability_bound(0.2, 1.0);
    REQUIRE(iv.lo == Approx(2.0 * (1.0 - std::sqrt(1.2))).epsilon(1e-14));
    REQUIRE(iv.hi == Approx(2.0 * (1.0 + std::sqrt(1.2))).epsilon(1e-14));
    REQUIRE(iv.lo == Approx(-0.19089023002066432).epsilon(1e-12));
    REQUIRE(iv.hi == Approx(4.190890230020664).epsilon(1e-12));
  }
  SECTION("always contains the unperturbed law") {
    for (double dp : {0.2, 0.7, 1.3, 3.0})
      for (double dm : {0.05, 0.2, 0.9}) {
        const StabilityInterval iv = stability_bound(dm, dp);
        REQUIRE(iv.contains(0.0));
      }
  }
  SECTION("lower endpoint stays above -D_min") {
    for (double dp : {0.05, 0.2, 0.7, 1.3, 3.0, 10.0})
      for (double dm : {0.01, 0.05, 0.2, 0.9, 2.0}) {
        REQUIRE(stability_bound(dm, dp).lo > -dm);
      }
  }
  SECTION("nonpositive inputs are rejected") {
    REQUIRE_THROWS_AS(stability_bound(0.0, 1.0), ValidationError);
    REQUIRE_THROWS_AS(stability_bound(0.2, -1.0), ValidationError);
  }
}

TEST_CASE("degenerate reduction reproduces the base law") {
  const NetworkCase c = testutil::case3();
  SystemModel base = testutil::quadratic_model(c);
  ModelOptions opt;
  opt.variant = Variant::Reduced;
  SystemModel red = testutil::quadratic_model(c, opt);
  REQUIRE(red.flow_map.isIdentity(1e-15));
  REQUIRE(base.layout.total == red.layout.total);

  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  for (int s = 0; s < 50; ++s) {
    Vec z(base.layout.total);
    for (int i = 0; i < z.size(); ++i) z[i] = sym(rng);
    base.rho_p(z) = base.rho_p(z).cwiseAbs();
    base.rho_m(z) = base.rho_m(z).cwiseAbs();
    REQUIRE((closed_loop_rhs(base, z) - closed_loop_rhs(red, z)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("reduced law drives original-line multipliers through recovered flows") {
  // path with interior bus: the recovered flow on each original line equals
  // the single reduced virtual flow, so with an upper limit on line 1 the
  // multiplier rate is B_sharp (phi_1 - phi_3) - Pmax
  ModelOptions opt;
  opt.variant = Variant::Reduced;
  opt.thermal_limits[1] = {-2.0, 0.3};
  SystemModel m = testutil::quadratic_model(testutil::case3_zero(), opt);
  REQUIRE(m.n_bus() == 2);
  REQUIRE(m.n_cons() == 2);  // both original lines carry constraints

  Vec z = Vec::Zero(m.layout.total);
  m.phi(z) << 1.0, -1.0;  // reduced virtual flow: 0.5 * 2.0 = 1.0
  m.rho_p(z).setConstant(0.01);
  const ControllerRates r = reduced_rhs(m, z, Vec::Zero(2));
  REQUIRE(r.rho_p_dot[0] == Approx(1.0 - 0.3).epsilon(1e-12));
  REQUIRE(r.rho_p_dot[1] == 0.0);  // line 2 has no limit
}

TEST_CASE("single boundary edge degenerates to the area constraint") {
  ModelOptions opt;
  opt.variant = Variant::DistributedArea;
  SystemModel m = testutil::quadratic_model(testutil::case3(), opt);
  REQUIRE(m.layout.n_pi == 2);    // one boundary edge per area
  REQUIRE(m.layout.n_gamma == 2);

  Vec z = Vec::Zero(m.layout.total);
  m.phi(z) << 0.6, 0.0, -0.6;  // flow on the single tie: 0.6
  const ControllerRates r = distributed_area_rhs(m, z, Vec::Zero(3));
  // area 1 exports through line 1 with sign +1, target Phat_1 / |B_1| with a
  // single boundary edge; the gamma-coupling sum is empty
  REQUIRE(r.pi_dot[0] == Approx(0.6 - m.p_hat[0]).epsilon(1e-12));
  REQUIRE(r.gamma_dot.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("per-edge multiplier rates telescope to the aggregate constraint") {
  Scenario sc;
  sc.disturbance[29] = -2.0;
  sc.variant = Variant::DistributedArea;
  Simulation sim = build_simulation(load_case(testutil::data_path("ieee39.json")), sc);
  const SystemModel& m = sim.model;

  Scenario sc_base = sc;
  sc_base.variant = Variant::Base;
  Simulation base = build_simulation(load_case(testutil::data_path("ieee39.json")), sc_base);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  for (int s = 0; s < 20; ++s) {
    Vec z(m.layout.total);
    for (int i = 0; i < z.size(); ++i) z[i] = sym(rng);
    Vec zb = Vec::Zero(base.model.layout.total);
    base.model.omega_g(zb) = m.omega_g(z);
    base.model.p(zb) = m.p(z);
    base.model.lambda(zb) = m.lambda(z);
    base.model.phi(zb) = m.phi(z);

    const Vec omega = Vec::Zero(m.n_bus());
    const ControllerRates rd = distributed_area_rhs(m, z, omega);
    const ControllerRates rb = olc_rhs(base.model, zb, omega);
    int off = 0;
    for (int k = 0; k < m.n_area(); ++k) {
      const int nb = static_cast<int>(m.boundary[k].size());
      const double sum = rd.pi_dot.segment(off, nb).sum();
      REQUIRE(sum == Approx(rb.pi_dot[k]).margin(1e-10));
      off += nb;
    }
  }
}

TEST_CASE("consistent gamma exists at the oracle optimum") {
  // at an optimum the per-edge targets Phat_k / |B_k| are met up to gamma
  // differences over the ring; the decomposed system is solvable because the
  // per-area residuals sum to zero
  Scenario sc;
  sc.disturbance[29] = -2.0;
  Simulation sim = build_simulation(load_case(testutil::data_path("ieee39.json")), sc);
  const SystemModel& m = sim.model;
  const OptimalSolution sol = solve_olc(m, sim.phi_gauge);

  const Vec flows = m.virtual_flows(sol.phi);
  int off = 0;
  for (int k = 0; k < m.n_area(); ++k) {
    const auto& edges = m.boundary[k];
    const int nb = static_cast<int>(edges.size());
    Vec rhs(nb);
    for (int r = 0; r < nb; ++r)
      rhs[r] = m.chat(k, edges[r]) * flows[edges[r]] - m.p_hat[k] / nb;
    REQUIRE(rhs.sum() == Approx(0.0).margin(1e-9));
    // solve L_comm gamma = rhs on the ring (consistent: rhs sums to zero)
    const Mat lap = detail::ring_laplacian(nb);
    const Vec gamma = laplacian_solve(lap, rhs);
    REQUIRE((lap * gamma - rhs).cwiseAbs().maxCoeff() < 1e-10);
    off += nb;
  }
}

TEST_CASE("multipliers remain nonnegative along a constrained trajectory") {
  Scenario sc;
  sc.disturbance[3] = -0.3;
  sc.thermal_limits[1] = {-2.0, 0.85};
  sc.integ.dt = 5e-3;
  sc.integ.t_end = 200.0;
  sc.integ.eq_tol = 1e-9;
  Simulation sim = build_simulation(testutil::case3(), sc);
  const Trajectory traj = integrate(sim.model, sim.z0, sim.integ);
  for (const Vec& z : traj.states) {
    REQUIRE(sim.model.rho_p(z).minCoeff() >= 0.0);
    REQUIRE(sim.model.rho_m(z).minCoeff() >= 0.0);
  }
}

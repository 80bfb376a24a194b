#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "olc/common.hpp"
#include "olc/controller.hpp"
#include "olc/dynamics.hpp"
#include "olc/model.hpp"

namespace olc {

struct IntegratorConfig {
  double dt = 1e-3;        // s
  double t_end = 40.0;     // s
  double eq_tol = 1e-8;    // inf-norm of the closed-loop field
  int stride = 10;         // record every N steps
};

struct Derived {
  Vec omega;  // all buses
  Vec d;      // all buses
};

/// One evaluation of the projected closed-loop field: resolve the load-bus
/// algebraic balance, apply the load response, then the swing equations and
/// the controller law.
inline Vec closed_loop_rhs(const SystemModel& m, const Vec& z, Derived* derived = nullptr) {
  const bool controllable = m.variant != Variant::SwingOnly;
  const Vec lambda = m.lambda(z);
  const Vec p = m.p(z);
  const Vec omega_l = solve_load_frequency(m, lambda, p, controllable);
  const Vec omega = assemble_omega(m, m.omega_g(z), omega_l);

  Vec d = Vec::Zero(m.n_bus());
  if (controllable)
    for (int i = 0; i < m.n_bus(); ++i) d[i] = m.costs[i].load_response(lambda[i] + omega[i]);

  const SwingRates swing = swing_rhs(m, omega, d, p);
  const ControllerRates ctrl = controller_rhs(m, z, omega, swing.omega_dot_g);

  Vec dz(m.layout.total);
  m.omega_g(dz) = swing.omega_dot_g;
  m.p(dz) = swing.p_dot;
  m.lambda(dz) = ctrl.lambda_dot;
  m.pi(dz) = ctrl.pi_dot;
  m.rho_p(dz) = ctrl.rho_p_dot;
  m.rho_m(dz) = ctrl.rho_m_dot;
  m.phi(dz) = ctrl.phi_dot;
  m.gamma(dz) = ctrl.gamma_dot;

  if (derived) {
    derived->omega = omega;
    derived->d = d;
  }
  return dz;
}

/// Fixed-step RK4 update evaluating the projected field at each stage, then
/// clamping the inequality multipliers back onto the nonnegative orthant.
/// The first stage can be supplied when the caller already evaluated it.
inline Vec rk4_step(const SystemModel& m, const Vec& z, double dt, const Vec& k1) {
  const Vec k2 = closed_loop_rhs(m, z + 0.5 * dt * k1);
  const Vec k3 = closed_loop_rhs(m, z + 0.5 * dt * k2);
  const Vec k4 = closed_loop_rhs(m, z + dt * k3);
  Vec next = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  m.rho_p(next) = m.rho_p(next).cwiseMax(0.0);
  m.rho_m(next) = m.rho_m(next).cwiseMax(0.0);
  return next;
}

inline Vec rk4_step(const SystemModel& m, const Vec& z, double dt) {
  return rk4_step(m, z, dt, closed_loop_rhs(m, z));
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> omega;     // per sample, all buses
  std::vector<Vec> d;         // per sample, all buses
  std::vector<double> lyapunov;  // filled against the final state, see below
  int stride = 1;
  bool converged = false;
  bool diverged = false;
  double final_field_norm = 0.0;
  std::string diagnostic;
};

/// Integrates until t_end, early-stopping when the field norm drops under
/// eq_tol (flagged converged) and aborting on NaN or blow-up (flagged
/// diverged). The initial state and every stride-th step are recorded.
inline Trajectory integrate(const SystemModel& m, const Vec& z0, const IntegratorConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ValidationError("integrate: dt must be positive");
  Trajectory traj;
  traj.stride = cfg.stride;
  Vec z = z0;
  const long n_steps = static_cast<long>(std::ceil(cfg.t_end / cfg.dt));

  Derived derived;
  auto record = [&](double t, const Vec& state) {
    closed_loop_rhs(m, state, &derived);
    traj.times.push_back(t);
    traj.states.push_back(state);
    traj.omega.push_back(derived.omega);
    traj.d.push_back(derived.d);
  };

  long step = 0;
  double t = 0.0;
  record(t, z);
  while (step < n_steps) {
    const Vec field = closed_loop_rhs(m, z);
    traj.final_field_norm = field.cwiseAbs().maxCoeff();
    if (traj.final_field_norm < cfg.eq_tol) {
      traj.converged = true;
      break;
    }
    z = rk4_step(m, z, cfg.dt, field);
    ++step;
    t = step * cfg.dt;
    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > 1e9) {
      traj.diverged = true;
      traj.diagnostic = "state diverged at t = " + std::to_string(t);
      record(t, z.allFinite() ? z : traj.states.back());
      return traj;
    }
    if (step % cfg.stride == 0 || step == n_steps) record(t, z);
  }
  if (traj.converged && traj.times.back() != t) record(t, z);
  if (!traj.converged) {
    const Vec field = closed_loop_rhs(m, z);
    traj.final_field_norm = field.cwiseAbs().maxCoeff();
    traj.converged = traj.final_field_norm < cfg.eq_tol;
  }
  return traj;
}

}  // namespace olc

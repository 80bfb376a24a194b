#pragma once

#include <cmath>

#include "olc/common.hpp"
#include "olc/model.hpp"

namespace olc {

namespace detail {

/// Root of F(w) = surplus - D*w - d(lambda + w), the algebraic balance at a
/// load bus. F is strictly decreasing, so the root is unique; a geometric
/// bracket expansion followed by safeguarded Newton (bisection fallback) is
/// guaranteed to find it.
inline double load_frequency_root(const CostModel& cost, double damping, double lambda,
                                  double surplus, bool controllable) {
  auto f = [&](double w) {
    const double d = controllable ? cost.load_response(lambda + w) : 0.0;
    return surplus - damping * w - d;
  };
  auto fprime = [&](double w) {
    const double slope = controllable ? cost.response_slope(lambda + w) : 0.0;
    return -damping - slope;
  };

  const double f0 = f(0.0);
  if (f0 == 0.0) return 0.0;
  double lo = 0.0, hi = 0.0;
  double step = std::max(1.0, std::abs(f0) / damping);
  if (f0 > 0.0) {  // root above zero
    hi = step;
    int guard = 0;
    while (f(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
      if (++guard > 200) throw NumericalError("solve_load_frequency: bracket expansion failed");
    }
  } else {
    lo = -step;
    int guard = 0;
    while (f(lo) < 0.0) {
      hi = lo;
      lo *= 2.0;
      if (++guard > 200) throw NumericalError("solve_load_frequency: bracket expansion failed");
    }
  }

  // residual tolerance relative to the balance scale: cancellation bounds
  // the attainable |F| when the surplus is large
  const double f_tol = 1e-13 * std::max({1.0, std::abs(surplus), damping * std::abs(hi),
                                         damping * std::abs(lo)});
  auto polish = [&](double w) {
    for (int i = 0; i < 2; ++i) w -= f(w) / fprime(w);
    return w;
  };
  double w = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fw = f(w);
    if (std::abs(fw) < f_tol) return polish(w);
    if (fw > 0.0)
      lo = w;  // F decreasing: positive means root is above
    else
      hi = w;
    if (hi - lo < 4e-16 * std::max(1.0, std::abs(lo) + std::abs(hi)))
      return polish(0.5 * (lo + hi));
    const double dw = fw / fprime(w);
    double next = w - dw;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    w = next;
  }
  throw NumericalError("solve_load_frequency: root solve did not converge");
}

}  // namespace detail

/// Frequencies at the load buses given the power-balance multipliers
/// lambda_L (full per-bus vector, load entries used) and the current line
/// flows. `controllable` = false drops the load response (swing-only runs).
inline Vec solve_load_frequency(const SystemModel& m, const Vec& lambda, const Vec& line_flows,
                                bool controllable = true) {
  const Vec net_inflow = m.gm.incidence * line_flows;  // C P per bus
  Vec omega_l(m.n_load());
  for (int li = 0; li < m.n_load(); ++li) {
    const int i = m.net.load_buses[li];
    const double surplus = m.pin[i] - net_inflow[i];
    omega_l[li] = detail::load_frequency_root(m.costs[i], m.damping[i], lambda[i], surplus,
                                              controllable);
  }
  return omega_l;
}

/// Assembles the full per-bus frequency vector from generator states and the
/// solved load frequencies.
inline Vec assemble_omega(const SystemModel& m, const Vec& omega_g, const Vec& omega_l) {
  Vec omega(m.n_bus());
  for (int gi = 0; gi < m.n_gen(); ++gi) omega[m.net.generators[gi]] = omega_g[gi];
  for (int li = 0; li < m.n_load(); ++li) omega[m.net.load_buses[li]] = omega_l[li];
  return omega;
}

struct SwingRates {
  Vec omega_dot_g;  // per generator
  Vec p_dot;        // per line
};

/// Swing equation rates: generator accelerations from the local imbalance and
/// line-flow rates B (w_i - w_j). `d` is the controllable load supplied by
/// the controller and `omega` the full per-bus frequency vector.
inline SwingRates swing_rhs(const SystemModel& m, const Vec& omega, const Vec& d, const Vec& p) {
  SwingRates r;
  const Vec net_inflow = m.gm.incidence * p;
  r.omega_dot_g = Vec(m.n_gen());
  for (int gi = 0; gi < m.n_gen(); ++gi) {
    const int i = m.net.generators[gi];
    r.omega_dot_g[gi] =
        (m.pin[i] - d[i] - m.damping[i] * omega[i] - net_inflow[i]) / m.inertia_g[gi];
  }
  r.p_dot = m.gm.susceptance.asDiagonal() * (m.gm.incidence.transpose() * omega);
  return r;
}

}  // namespace olc

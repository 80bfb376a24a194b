#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "olc/common.hpp"
#include "olc/dynamics.hpp"
#include "olc/integrator.hpp"
#include "olc/model.hpp"
#include "olc/projection.hpp"

namespace olc {

/// Full multiplier set sigma = (lambda, nu, pi, rho+, rho-). rho entries for
/// lines without a limit are identically zero (the constraint does not
/// exist).
struct Multipliers {
  Vec lambda;
  Vec nu;
  Vec pi;
  Vec rho_plus;
  Vec rho_minus;
};

struct CandidatePoint {
  Vec d;
  Vec omega;
  Vec phi;
  Vec p;  // net-line flows
  Multipliers sig;
};

struct KktReport {
  double stat_load_response = 0;    // d - c'^{-1}(nu + lambda)
  double stat_nu = 0;               // max |nu_i| (uniform and zero at optimum)
  double stat_omega_nu = 0;         // |omega - nu|
  double stat_phi = 0;              // lambda diffusion vs multiplier pressure
  double primal_balance = 0;        // Pin - (d + D w) - C P
  double primal_virtual = 0;        // Pin - d - L_B phi
  double primal_area = 0;           // Chat F - Phat
  double primal_thermal = 0;        // limit violation of the virtual flows
  double dual_feasibility = 0;      // max(0, -rho)
  double complementary_slackness = 0;
  double max_residual = 0;

  double compute_max() {
    max_residual = std::max({stat_load_response, stat_nu, stat_omega_nu, stat_phi,
                             primal_balance, primal_virtual, primal_area, primal_thermal,
                             dual_feasibility, complementary_slackness});
    return max_residual;
  }
};

struct OptimalSolution {
  Vec d;
  Vec omega;
  Vec phi;
  Vec p;           // net-line flows B C^T phi
  Vec cons_flows;  // flows on the constrained (original) lines
  Multipliers sig;
  double objective = 0;
  double max_kkt_residual = 0;
};

/// Layout of the dual block y = (lambda, nu_G, pi?, rho+ on limited lines,
/// rho- on limited lines). pi is present only while the inter-area
/// constraint is part of the problem.
struct YLayout {
  int lambda = 0, nu_g = 0, pi = 0, rho_p = 0, rho_m = 0, total = 0;
  bool has_pi = false;
  std::vector<int> up;  // constrained-line indices with an upper limit
  std::vector<int> lo;
};

inline YLayout y_layout(const SystemModel& m) {
  YLayout y;
  y.has_pi = m.inter_area_enabled;
  for (int e = 0; e < m.n_cons(); ++e) {
    if (m.has_upper(e)) y.up.push_back(e);
    if (m.has_lower(e)) y.lo.push_back(e);
  }
  y.lambda = 0;
  y.nu_g = m.n_bus();
  y.pi = y.nu_g + m.n_gen();
  y.rho_p = y.pi + (y.has_pi ? m.n_area() : 0);
  y.rho_m = y.rho_p + static_cast<int>(y.up.size());
  y.total = y.rho_m + static_cast<int>(y.lo.size());
  return y;
}

/// x = (phi, P): the primal block of the reduced Lagrangian.
inline int x_size(const SystemModel& m) { return m.n_bus() + m.n_edge(); }

namespace detail {

inline Vec scatter_rho(const std::vector<int>& idx, const Vec& packed, int n_cons) {
  Vec full = Vec::Zero(n_cons);
  for (int r = 0; r < static_cast<int>(idx.size()); ++r) full[idx[r]] = packed[r];
  return full;
}

inline Vec gather(const std::vector<int>& idx, const Vec& full) {
  Vec packed(static_cast<int>(idx.size()));
  for (int r = 0; r < static_cast<int>(idx.size()); ++r) packed[r] = full[idx[r]];
  return packed;
}

}  // namespace detail

/// Value of the VF-OLC Lagrangian at an explicit primal-dual point.
inline double lagrangian(const SystemModel& m, const Vec& d, const Vec& omega, const Vec& phi,
                         const Vec& p, const Multipliers& sig) {
  double value = 0.0;
  for (int i = 0; i < m.n_bus(); ++i)
    value += m.costs[i].cost(d[i]) + 0.5 * m.damping[i] * omega[i] * omega[i];
  const Vec balance = m.pin - d - m.damping.cwiseProduct(omega) - m.gm.incidence * p;
  value += sig.nu.dot(balance);
  value += sig.lambda.dot(m.pin - d - m.gm.laplacian * phi);
  const Vec flows = m.virtual_flows(phi);
  if (m.inter_area_enabled) value += sig.pi.dot(m.chat * flows - m.p_hat);
  for (int e = 0; e < m.n_cons(); ++e) {
    if (m.has_upper(e)) value += sig.rho_plus[e] * (flows[e] - m.upper(e));
    if (m.has_lower(e)) value += sig.rho_minus[e] * (m.lower(e) - flows[e]);
  }
  return value;
}

/// Inner maximizer nu*_L of the Lagrangian over the load-bus nu. Solves the
/// same scalar balance as the network's algebraic constraint, but through an
/// independent bracket-and-bisect route so the two implementations check
/// each other.
inline Vec maximize_nu_L(const SystemModel& m, const Vec& p, const Vec& lambda) {
  const Vec net_inflow = m.gm.incidence * p;
  Vec nu_l(m.n_load());
  for (int li = 0; li < m.n_load(); ++li) {
    const int i = m.net.load_buses[li];
    const double surplus = m.pin[i] - net_inflow[i];
    const CostModel& cost = m.costs[i];
    const double damping = m.damping[i];
    auto f = [&](double w) { return surplus - damping * w - cost.load_response(lambda[i] + w); };
    double lo = 0.0, hi = 0.0;
    const double f0 = f(0.0);
    if (f0 > 0.0) {
      hi = std::max(1.0, std::abs(f0) / damping);
      int guard = 0;
      while (f(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 200) throw NumericalError("maximize_nu_L: bracketing failed");
      }
    } else if (f0 < 0.0) {
      lo = -std::max(1.0, std::abs(f0) / damping);
      int guard = 0;
      while (f(lo) < 0.0) {
        hi = lo;
        lo *= 2.0;
        if (++guard > 200) throw NumericalError("maximize_nu_L: bracketing failed");
      }
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi));
         ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) > 0.0 ? lo : hi) = mid;
    }
    double w = 0.5 * (lo + hi);
    for (int polish = 0; polish < 3; ++polish) {
      const double fw = f(w);
      const double slope = -damping - cost.response_slope(lambda[i] + w);
      w -= fw / slope;
    }
    nu_l[li] = w;
  }
  return nu_l;
}

/// Reduced Lagrangian L(x, y): d and omega minimized out, nu_L maximized
/// out. Used as the finite-difference reference for the analytic gradients.
/// Evaluated through the grouped dual form, which stays finite even where
/// the load response saturates.
inline double reduced_lagrangian(const SystemModel& m, const Vec& x, const Vec& y) {
  const YLayout yl = y_layout(m);
  const Vec phi = x.head(m.n_bus());
  const Vec p = x.tail(m.n_edge());
  const Vec lambda = y.segment(yl.lambda, m.n_bus());
  const Vec nu_g = y.segment(yl.nu_g, m.n_gen());
  const Vec nu_l = maximize_nu_L(m, p, lambda);
  const Vec nu = assemble_omega(m, nu_g, nu_l);
  const Vec pi = yl.has_pi ? Vec(y.segment(yl.pi, m.n_area())) : Vec(Vec::Zero(m.n_area()));
  const Vec rho_p = detail::scatter_rho(yl.up, y.segment(yl.rho_p, yl.up.size()), m.n_cons());
  const Vec rho_m = detail::scatter_rho(yl.lo, y.segment(yl.rho_m, yl.lo.size()), m.n_cons());

  double value = 0.0;
  for (int i = 0; i < m.n_bus(); ++i) {
    const double xi = lambda[i] + nu[i];
    const double d = m.costs[i].load_response(xi);
    value += m.costs[i].cost_at_response(xi) - xi * d - 0.5 * m.damping[i] * nu[i] * nu[i] +
             xi * m.pin[i];
  }
  value -= p.dot(m.gm.incidence.transpose() * nu);
  Vec q = Vec::Zero(m.n_cons());
  if (m.inter_area_enabled) q += m.chat.transpose() * pi;
  q += rho_p - rho_m;
  value -= phi.dot(m.gm.laplacian * lambda -
                   m.gm.incidence * Vec(m.gm.susceptance.asDiagonal() *
                                        Vec(m.flow_map.transpose() * q)));
  if (m.inter_area_enabled) value -= pi.dot(m.p_hat);
  for (int e = 0; e < m.n_cons(); ++e) {
    if (m.has_upper(e)) value -= rho_p[e] * m.upper(e);
    if (m.has_lower(e)) value += rho_m[e] * m.lower(e);
  }
  return value;
}

struct GradXY {
  Vec x;  // dL/d(phi, P)
  Vec y;  // dL/d(lambda, nu_G, pi?, rho+, rho-)
};

/// Analytic gradients of the reduced Lagrangian.
inline GradXY grad_xy(const SystemModel& m, const Vec& x, const Vec& y) {
  const YLayout yl = y_layout(m);
  const int n = m.n_bus();
  const Vec phi = x.head(n);
  const Vec p = x.tail(m.n_edge());
  const Vec lambda = y.segment(yl.lambda, n);
  const Vec nu_g = y.segment(yl.nu_g, m.n_gen());
  const Vec nu_l = maximize_nu_L(m, p, lambda);
  const Vec nu = assemble_omega(m, nu_g, nu_l);
  const Vec pi = yl.has_pi ? Vec(y.segment(yl.pi, m.n_area())) : Vec(Vec::Zero(m.n_area()));
  const Vec rho_p = detail::scatter_rho(yl.up, y.segment(yl.rho_p, yl.up.size()), m.n_cons());
  const Vec rho_m = detail::scatter_rho(yl.lo, y.segment(yl.rho_m, yl.lo.size()), m.n_cons());

  Vec d(n);
  for (int i = 0; i < n; ++i) d[i] = m.costs[i].load_response(lambda[i] + nu[i]);
  const Vec flows = m.virtual_flows(phi);

  GradXY g;
  g.x = Vec(x_size(m));
  const Vec q = (m.inter_area_enabled ? Vec(m.chat.transpose() * pi) : Vec(Vec::Zero(m.n_cons())))
                + rho_p - rho_m;
  g.x.head(n) = -(m.gm.laplacian * lambda -
                  m.gm.incidence * Vec(m.gm.susceptance.asDiagonal() *
                                       Vec(m.flow_map.transpose() * q)));
  g.x.tail(m.n_edge()) = -(m.gm.incidence.transpose() * nu);

  g.y = Vec(yl.total);
  g.y.segment(yl.lambda, n) = m.pin - d - m.gm.laplacian * phi;
  for (int gi = 0; gi < m.n_gen(); ++gi) {
    const int i = m.net.generators[gi];
    g.y[yl.nu_g + gi] = m.pin[i] - d[i] - m.damping[i] * nu[i] - (m.gm.incidence.row(i) * p)(0);
  }
  if (yl.has_pi) g.y.segment(yl.pi, m.n_area()) = m.chat * flows - m.p_hat;
  for (int r = 0; r < static_cast<int>(yl.up.size()); ++r)
    g.y[yl.rho_p + r] = flows[yl.up[r]] - m.upper(yl.up[r]);
  for (int r = 0; r < static_cast<int>(yl.lo.size()); ++r)
    g.y[yl.rho_m + r] = m.lower(yl.lo[r]) - flows[yl.lo[r]];
  return g;
}

struct Hessians {
  Mat xx;  // d2L/dx2 >= 0
  Mat yy;  // d2L/dy2 <= 0
};

/// Analytic second derivatives of the reduced Lagrangian. Only the (P,P)
/// block of the x Hessian and the (lambda, nu_G) blocks of the y Hessian are
/// nonzero.
inline Hessians hessians(const SystemModel& m, const Vec& x, const Vec& y) {
  const YLayout yl = y_layout(m);
  const int n = m.n_bus();
  const Vec p = x.tail(m.n_edge());
  const Vec lambda = y.segment(yl.lambda, n);
  const Vec nu_g = y.segment(yl.nu_g, m.n_gen());
  const Vec nu_l = maximize_nu_L(m, p, lambda);

  Hessians h;
  h.xx = Mat::Zero(x_size(m), x_size(m));
  h.yy = Mat::Zero(yl.total, yl.total);

  // C_L^T (D_L + d'_L)^{-1} C_L on the P block
  Mat c_l(m.n_load(), m.n_edge());
  Vec weight(m.n_load());
  for (int li = 0; li < m.n_load(); ++li) {
    const int i = m.net.load_buses[li];
    c_l.row(li) = m.gm.incidence.row(i);
    const double slope = m.costs[i].response_slope(lambda[i] + nu_l[li]);
    weight[li] = 1.0 / (m.damping[i] + slope);
    h.yy(yl.lambda + i, yl.lambda + i) = -m.damping[i] * slope * weight[li];
  }
  h.xx.block(n, n, m.n_edge(), m.n_edge()) = c_l.transpose() * weight.asDiagonal() * c_l;

  for (int gi = 0; gi < m.n_gen(); ++gi) {
    const int i = m.net.generators[gi];
    const double slope = m.costs[i].response_slope(lambda[i] + nu_g[gi]);
    h.yy(yl.lambda + i, yl.lambda + i) = -slope;
    h.yy(yl.lambda + i, yl.nu_g + gi) = -slope;
    h.yy(yl.nu_g + gi, yl.lambda + i) = -slope;
    h.yy(yl.nu_g + gi, yl.nu_g + gi) = -(m.damping[i] + slope);
  }
  return h;
}

/// The symmetric comparison matrix H(z) of the perturbed law, over
/// z = (x, y). Negative semidefinite throughout the admissible delta_a
/// interval; the sampling check rests on this.
inline Mat h_matrix(const SystemModel& m, const Vec& x, const Vec& y, const Vec& delta_a) {
  const YLayout yl = y_layout(m);
  const int n = m.n_bus();
  const int nx = x_size(m);
  const Vec p = x.tail(m.n_edge());
  const Vec lambda = y.segment(yl.lambda, n);
  const Vec nu_l = maximize_nu_L(m, p, lambda);
  const Hessians h = hessians(m, x, y);

  Mat big = Mat::Zero(nx + yl.total, nx + yl.total);
  big.topLeftCorner(nx, nx) = -h.xx;
  big.bottomRightCorner(yl.total, yl.total) = h.yy;

  for (int li = 0; li < m.n_load(); ++li) {
    const int i = m.net.load_buses[li];
    const double slope = m.costs[i].response_slope(lambda[i] + nu_l[li]);
    const double w = 1.0 / (m.damping[i] + slope);
    // coupling between P and lambda_L rows
    for (int e = 0; e < m.n_edge(); ++e) {
      const double c = m.gm.incidence(i, e);
      if (c == 0.0) continue;
      const double v = -0.5 * c * w * delta_a[i];
      big(n + e, nx + yl.lambda + i) += v;
      big(nx + yl.lambda + i, n + e) += v;
    }
    big(nx + yl.lambda + i, nx + yl.lambda + i) += -delta_a[i] * w * slope;
  }
  for (int gi = 0; gi < m.n_gen(); ++gi) {
    const int i = m.net.generators[gi];
    big(nx + yl.lambda + i, nx + yl.nu_g + gi) += 0.5 * delta_a[i];
    big(nx + yl.nu_g + gi, nx + yl.lambda + i) += 0.5 * delta_a[i];
  }
  return big;
}

/// Maps an integrator state onto the oracle's (x, y) coordinates
/// (nu_G := omega_G).
inline void state_to_xy(const SystemModel& m, const Vec& z, Vec& x, Vec& y) {
  const YLayout yl = y_layout(m);
  x = Vec(x_size(m));
  x.head(m.n_bus()) = m.phi(z);
  x.tail(m.n_edge()) = m.p(z);
  y = Vec(yl.total);
  y.segment(yl.lambda, m.n_bus()) = m.lambda(z);
  y.segment(yl.nu_g, m.n_gen()) = m.omega_g(z);
  if (yl.has_pi) y.segment(yl.pi, m.n_area()) = m.pi(z);
  y.segment(yl.rho_p, yl.up.size()) = detail::gather(yl.up, m.rho_p(z));
  y.segment(yl.rho_m, yl.lo.size()) = detail::gather(yl.lo, m.rho_m(z));
}

/// The primal-dual gradient field in integrator layout, built from the
/// analytic gradients with the physical gains (zeta_nu = 1/M, chi_P = B).
/// This is the reference side of the equivalence between the closed loop and
/// the saddle flow.
inline Vec gradient_field(const SystemModel& m, const Vec& z) {
  Vec x, y;
  state_to_xy(m, z, x, y);
  const YLayout yl = y_layout(m);
  const GradXY g = grad_xy(m, x, y);

  Vec dz = Vec::Zero(m.layout.total);
  m.phi(dz) = -m.chi_phi.cwiseProduct(g.x.head(m.n_bus()));
  m.p(dz) = -m.gm.susceptance.cwiseProduct(g.x.tail(m.n_edge()));
  m.lambda(dz) = m.zeta_lambda.cwiseProduct(g.y.segment(yl.lambda, m.n_bus()));
  for (int gi = 0; gi < m.n_gen(); ++gi)
    m.omega_g(dz)[gi] = g.y[yl.nu_g + gi] / m.inertia_g[gi];
  if (yl.has_pi && m.variant != Variant::DistributedArea)
    m.pi(dz) = m.zeta_pi.cwiseProduct(g.y.segment(yl.pi, m.n_area()));
  for (int r = 0; r < static_cast<int>(yl.up.size()); ++r) {
    const int e = yl.up[r];
    m.rho_p(dz)[e] =
        m.zeta_rho_plus[e] * project_positive(g.y[yl.rho_p + r], m.rho_p(z)[e]);
  }
  for (int r = 0; r < static_cast<int>(yl.lo.size()); ++r) {
    const int e = yl.lo[r];
    m.rho_m(dz)[e] =
        m.zeta_rho_minus[e] * project_positive(g.y[yl.rho_m + r], m.rho_m(z)[e]);
  }
  return dz;
}

/// Gain-weighted distance to a reference equilibrium, the Lyapunov function
/// of the saddle flow. Zero exactly at the reference.
inline double lyapunov(const SystemModel& m, const Vec& z, const Vec& z_ref) {
  const Vec dz = z - z_ref;
  double u = 0.0;
  auto quad = [&](const auto& seg, const Vec& gain_inv) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < seg.size(); ++i) s += seg[i] * seg[i] * gain_inv[i];
    return 0.5 * s;
  };
  u += quad(m.phi(dz), m.chi_phi.cwiseInverse());
  u += quad(m.p(dz), m.gm.susceptance.cwiseInverse());
  u += quad(m.omega_g(dz), m.inertia_g);  // zeta_nu = 1/M
  u += quad(m.lambda(dz), m.zeta_lambda.cwiseInverse());
  if (m.layout.n_pi > 0) u += quad(m.pi(dz), m.zeta_pi.cwiseInverse());
  u += quad(m.rho_p(dz), m.zeta_rho_plus.cwiseInverse());
  u += quad(m.rho_m(dz), m.zeta_rho_minus.cwiseInverse());
  if (m.layout.n_gamma > 0) u += quad(m.gamma(dz), m.chi_gamma.cwiseInverse());
  return u;
}

/// Lyapunov values of a recorded trajectory against its own final state.
inline std::vector<double> trajectory_lyapunov(const SystemModel& m, const Trajectory& traj) {
  std::vector<double> u;
  u.reserve(traj.states.size());
  for (const Vec& z : traj.states) u.push_back(lyapunov(m, z, traj.states.back()));
  return u;
}

/// Residuals of the optimality conditions at a candidate point: load-response
/// stationarity, zero frequency multipliers, the lambda diffusion identity,
/// primal feasibility, dual feasibility and complementary slackness.
inline KktReport kkt_residuals(const SystemModel& m, const CandidatePoint& c) {
  KktReport r;
  for (int i = 0; i < m.n_bus(); ++i) {
    const double want = m.costs[i].load_response(c.sig.nu[i] + c.sig.lambda[i]);
    r.stat_load_response = std::max(r.stat_load_response, std::abs(c.d[i] - want));
  }
  r.stat_nu = c.sig.nu.cwiseAbs().maxCoeff();
  r.stat_omega_nu = (c.omega - c.sig.nu).cwiseAbs().maxCoeff();

  Vec q = m.inter_area_enabled ? Vec(m.chat.transpose() * c.sig.pi)
                               : Vec(Vec::Zero(m.n_cons()));
  for (int e = 0; e < m.n_cons(); ++e) {
    if (m.has_upper(e)) q[e] += c.sig.rho_plus[e];
    if (m.has_lower(e)) q[e] -= c.sig.rho_minus[e];
  }
  const Vec stat_phi = -(m.gm.laplacian * c.sig.lambda) +
                       m.gm.incidence * Vec(m.gm.susceptance.asDiagonal() *
                                            Vec(m.flow_map.transpose() * q));
  r.stat_phi = stat_phi.cwiseAbs().maxCoeff();

  const Vec balance = m.pin - c.d - m.damping.cwiseProduct(c.omega) - m.gm.incidence * c.p;
  r.primal_balance = balance.cwiseAbs().maxCoeff();
  const Vec virt = m.pin - c.d - m.gm.laplacian * c.phi;
  r.primal_virtual = virt.cwiseAbs().maxCoeff();

  const Vec flows = m.virtual_flows(c.phi);
  if (m.inter_area_enabled && m.n_area() > 0)
    r.primal_area = (m.chat * flows - m.p_hat).cwiseAbs().maxCoeff();
  for (int e = 0; e < m.n_cons(); ++e) {
    if (m.has_upper(e)) {
      r.primal_thermal = std::max(r.primal_thermal, flows[e] - m.upper(e));
      r.dual_feasibility = std::max(r.dual_feasibility, -c.sig.rho_plus[e]);
      r.complementary_slackness = std::max(
          r.complementary_slackness, std::abs(c.sig.rho_plus[e] * (flows[e] - m.upper(e))));
    }
    if (m.has_lower(e)) {
      r.primal_thermal = std::max(r.primal_thermal, m.lower(e) - flows[e]);
      r.dual_feasibility = std::max(r.dual_feasibility, -c.sig.rho_minus[e]);
      r.complementary_slackness = std::max(
          r.complementary_slackness, std::abs(c.sig.rho_minus[e] * (m.lower(e) - flows[e])));
    }
  }
  r.primal_thermal = std::max(r.primal_thermal, 0.0);
  r.dual_feasibility = std::max(r.dual_feasibility, 0.0);
  r.compute_max();
  return r;
}

/// Candidate point assembled from an integrator state (nu := omega), ready
/// for certification against the optimality conditions.
inline CandidatePoint candidate_from_state(const SystemModel& m, const Vec& z) {
  CandidatePoint c;
  const Vec lambda = m.lambda(z);
  const Vec p = m.p(z);
  const Vec omega_l = solve_load_frequency(m, lambda, p, m.variant != Variant::SwingOnly);
  c.omega = assemble_omega(m, m.omega_g(z), omega_l);
  c.d = Vec(m.n_bus());
  for (int i = 0; i < m.n_bus(); ++i) c.d[i] = m.costs[i].load_response(lambda[i] + c.omega[i]);
  c.phi = m.phi(z);
  c.p = p;
  c.sig.lambda = lambda;
  c.sig.nu = c.omega;
  c.sig.rho_plus = m.rho_p(z);
  c.sig.rho_minus = m.rho_m(z);
  if (m.variant == Variant::DistributedArea) {
    // per-edge multipliers agree across each area's communication graph at
    // equilibrium; their mean is the area multiplier
    c.sig.pi = Vec::Zero(m.n_area());
    int off = 0;
    for (int k = 0; k < m.n_area(); ++k) {
      const int nb = static_cast<int>(m.boundary[k].size());
      c.sig.pi[k] = m.pi(z).segment(off, nb).mean();
      off += nb;
    }
  } else {
    c.sig.pi = m.pi(z);
  }
  return c;
}

namespace detail {

struct ActiveConstraint {
  int line = 0;   // index into cons_lines
  bool upper = true;
};

}  // namespace detail

/// Solves the load-control problem by an active-set Newton method on the
/// optimality system: enumerate binding flow limits, solve the resulting
/// equality-constrained problem for (phi, lambda, pi, rho), and repair the
/// active set until primal feasibility and dual nonnegativity hold. Entirely
/// independent of the closed-loop dynamics, so equilibrium certification is
/// not self-referential.
///
/// `phi_gauge` pins the free additive constant of phi: sum_i phi_i / chi_i =
/// phi_gauge (the quantity the closed loop conserves).
inline OptimalSolution solve_olc(const SystemModel& m, double phi_gauge = 0.0) {
  const int n = m.n_bus();
  const int n_pi = m.inter_area_enabled ? m.n_area() : 0;
  const Mat w_map = m.flow_map * m.gm.susceptance.asDiagonal() * m.gm.incidence.transpose();
  const Vec chi_inv = m.chi_phi.cwiseInverse();

  // warm start: uniform lambda balancing total injection, dc-style phi
  double lam0 = 0.0;
  {
    const double target = m.pin.sum();
    auto total_response = [&](double lam) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += m.costs[i].load_response(lam);
      return s - target;
    };
    double lo = -1.0, hi = 1.0;
    int guard = 0;
    while (total_response(lo) > 0.0 && ++guard < 200) lo *= 2.0;
    guard = 0;
    while (total_response(hi) < 0.0 && ++guard < 200) hi *= 2.0;
    if (total_response(lo) > 0.0 || total_response(hi) < 0.0)
      throw ValidationError("solve_olc: infeasible, total load capacity cannot absorb the imbalance");
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (total_response(mid) < 0.0 ? lo : hi) = mid;
    }
    lam0 = 0.5 * (lo + hi);
  }

  std::vector<detail::ActiveConstraint> active;
  Vec phi, lambda, pi, rho_active;
  {
    Vec d0(n);
    for (int i = 0; i < n; ++i) d0[i] = m.costs[i].load_response(lam0);
    Vec rhs = m.pin - d0;
    rhs.array() -= rhs.mean();
    phi = laplacian_solve(m.gm.laplacian, rhs);
    lambda = Vec::Constant(n, lam0);
    pi = Vec::Zero(n_pi);
  }

  constexpr double kResidTol = 1e-11;
  constexpr double kPrimalTol = 1e-10;
  constexpr double kDualTol = 1e-10;
  const int n_up = [&] {
    int c = 0;
    for (int e = 0; e < m.n_cons(); ++e) c += m.has_upper(e) + m.has_lower(e);
    return c;
  }();
  const int max_outer = 2 * n_up + 8;

  for (int outer = 0; outer < max_outer; ++outer) {
    const int na = static_cast<int>(active.size());
    rho_active = Vec::Zero(na);

    // Newton on the equality-constrained optimality system
    auto residual = [&](const Vec& phi_v, const Vec& lambda_v, const Vec& pi_v,
                        const Vec& rho_v) {
      Vec d(n);
      for (int i = 0; i < n; ++i) d[i] = m.costs[i].load_response(lambda_v[i]);
      Vec q = Vec::Zero(m.n_cons());
      if (n_pi > 0) q += m.chat.transpose() * pi_v;
      for (int a = 0; a < na; ++a)
        q[active[a].line] += active[a].upper ? rho_v[a] : -rho_v[a];
      const Vec flows = w_map * phi_v;
      Vec r(2 * n + n_pi + na + 1);
      r.head(n) = m.pin - d - m.gm.laplacian * phi_v;
      r.segment(n, n) = -(m.gm.laplacian * lambda_v) +
                        m.gm.incidence * Vec(m.gm.susceptance.asDiagonal() *
                                             Vec(m.flow_map.transpose() * q));
      if (n_pi > 0) r.segment(2 * n, n_pi) = m.chat * flows - m.p_hat;
      for (int a = 0; a < na; ++a) {
        const auto& ac = active[a];
        r[2 * n + n_pi + a] =
            flows[ac.line] - (ac.upper ? m.upper(ac.line) : m.lower(ac.line));
      }
      r[2 * n + n_pi + na] = chi_inv.dot(phi_v) - phi_gauge;
      return r;
    };

    bool newton_ok = false;
    for (int it = 0; it < 80; ++it) {
      const Vec r = residual(phi, lambda, pi, rho_active);
      if (r.cwiseAbs().maxCoeff() < kResidTol) {
        newton_ok = true;
        break;
      }
      const int rows = static_cast<int>(r.size());
      const int cols = 2 * n + n_pi + na;
      Mat jac = Mat::Zero(rows, cols);
      Vec dprime(n);
      for (int i = 0; i < n; ++i) dprime[i] = m.costs[i].response_slope(lambda[i]);
      jac.block(0, 0, n, n) = -m.gm.laplacian;                    // dR1/dphi
      jac.block(0, n, n, n) = -Mat(dprime.asDiagonal());          // dR1/dlambda
      jac.block(n, n, n, n) = -m.gm.laplacian;                    // dR2/dlambda
      const Mat cba = m.gm.incidence * m.gm.susceptance.asDiagonal() * m.flow_map.transpose();
      if (n_pi > 0) jac.block(n, 2 * n, n, n_pi) = cba * m.chat.transpose();
      for (int a = 0; a < na; ++a)
        jac.block(n, 2 * n + n_pi + a, n, 1) =
            (active[a].upper ? 1.0 : -1.0) * cba.col(active[a].line);
      if (n_pi > 0) jac.block(2 * n, 0, n_pi, n) = m.chat * w_map;
      for (int a = 0; a < na; ++a) jac.block(2 * n + n_pi + a, 0, 1, n) = w_map.row(active[a].line);
      jac.block(2 * n + n_pi + na, 0, 1, n) = chi_inv.transpose();

      const Vec step = jac.completeOrthogonalDecomposition().solve(-r);
      double alpha = 1.0;
      const double base_norm = r.norm();
      for (int ls = 0; ls < 40; ++ls) {
        const Vec phi_t = phi + alpha * step.head(n);
        const Vec lambda_t = lambda + alpha * step.segment(n, n);
        const Vec pi_t = n_pi > 0 ? Vec(pi + alpha * step.segment(2 * n, n_pi)) : pi;
        const Vec rho_t =
            na > 0 ? Vec(rho_active + alpha * step.tail(na)) : rho_active;
        if (residual(phi_t, lambda_t, pi_t, rho_t).norm() < base_norm * (1.0 - 1e-4 * alpha) ||
            ls == 39) {
          phi = phi_t;
          lambda = lambda_t;
          pi = pi_t;
          rho_active = rho_t;
          break;
        }
        alpha *= 0.5;
      }
    }
    if (!newton_ok)
      throw ValidationError(
          "solve_olc: optimality system did not converge; the instance is "
          "inconsistent or infeasible for the current constraint set");

    // active-set repair: drop the most negative multiplier, else add the
    // most violated limit
    const Vec flows = w_map * phi;
    int drop = -1;
    double worst_dual = -kDualTol;
    for (int a = 0; a < na; ++a)
      if (rho_active[a] < worst_dual) {
        worst_dual = rho_active[a];
        drop = a;
      }
    if (drop >= 0) {
      active.erase(active.begin() + drop);
      continue;
    }
    int add_line = -1;
    bool add_upper = true;
    double worst_violation = kPrimalTol;
    for (int e = 0; e < m.n_cons(); ++e) {
      const bool up_active = std::any_of(active.begin(), active.end(), [&](const auto& a) {
        return a.line == e && a.upper;
      });
      const bool lo_active = std::any_of(active.begin(), active.end(), [&](const auto& a) {
        return a.line == e && !a.upper;
      });
      if (m.has_upper(e) && !up_active && flows[e] - m.upper(e) > worst_violation) {
        worst_violation = flows[e] - m.upper(e);
        add_line = e;
        add_upper = true;
      }
      if (m.has_lower(e) && !lo_active && m.lower(e) - flows[e] > worst_violation) {
        worst_violation = m.lower(e) - flows[e];
        add_line = e;
        add_upper = false;
      }
    }
    if (add_line >= 0) {
      active.push_back({add_line, add_upper});
      continue;
    }

    // feasible and dual-nonnegative: assemble the solution
    OptimalSolution sol;
    sol.phi = phi;
    sol.d = Vec(n);
    for (int i = 0; i < n; ++i) sol.d[i] = m.costs[i].load_response(lambda[i]);
    sol.omega = Vec::Zero(n);
    sol.p = m.gm.susceptance.asDiagonal() * (m.gm.incidence.transpose() * phi);
    sol.cons_flows = m.flow_map * sol.p;
    sol.sig.lambda = lambda;
    sol.sig.nu = Vec::Zero(n);
    sol.sig.pi = m.inter_area_enabled ? pi : Vec(Vec::Zero(m.n_area()));
    sol.sig.rho_plus = Vec::Zero(m.n_cons());
    sol.sig.rho_minus = Vec::Zero(m.n_cons());
    for (int a = 0; a < na; ++a)
      (active[a].upper ? sol.sig.rho_plus : sol.sig.rho_minus)[active[a].line] = rho_active[a];
    sol.objective = 0.0;
    for (int i = 0; i < n; ++i) sol.objective += m.costs[i].cost(sol.d[i]);
    CandidatePoint cand{sol.d, sol.omega, sol.phi, sol.p, sol.sig};
    sol.max_kkt_residual = kkt_residuals(m, cand).max_residual;
    return sol;
  }
  throw NumericalError("solve_olc: active-set iteration cap reached");
}

}  // namespace olc

#pragma once

#include <cmath>

#include "olc/common.hpp"
#include "olc/dynamics.hpp"
#include "olc/model.hpp"
#include "olc/projection.hpp"

namespace olc {

struct ControllerRates {
  Vec lambda_dot;
  Vec pi_dot;
  Vec rho_p_dot;
  Vec rho_m_dot;
  Vec phi_dot;
  Vec gamma_dot;
};

/// Open interval of damping mismatches delta_a for which the perturbed law
/// provably keeps converging: 2*(d' - sqrt(d'^2 + d' Dmin), d' + sqrt(...)),
/// with d' the worst-case (smallest) load-response slope.
struct StabilityInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x > lo && x < hi; }
};

inline StabilityInterval stability_bound(double d_min_damping, double min_response_slope) {
  if (!(d_min_damping > 0.0) || !(min_response_slope > 0.0))
    throw ValidationError("stability_bound: D_min and d' must be positive");
  const double s =
      std::sqrt(min_response_slope * min_response_slope + min_response_slope * d_min_damping);
  return {2.0 * (min_response_slope - s), 2.0 * (min_response_slope + s)};
}

namespace detail {

/// Per-line multiplier pressure Chat^T pi (or its per-edge analogue in the
/// distributed variant), sized over the constrained lines.
inline Vec area_pressure(const SystemModel& m, const Vec& pi_state) {
  Vec q = Vec::Zero(m.n_cons());
  if (!m.inter_area_enabled) return q;
  if (m.variant == Variant::DistributedArea) {
    int off = 0;
    for (int k = 0; k < m.n_area(); ++k) {
      const auto& edges = m.boundary[k];
      for (int r = 0; r < static_cast<int>(edges.size()); ++r)
        q[edges[r]] += m.chat(k, edges[r]) * pi_state[off + r];
      off += static_cast<int>(edges.size());
    }
  } else {
    q = m.chat.transpose() * pi_state;
  }
  return q;
}

}  // namespace detail

/// Controller derivatives for every variant. `omega` is the full per-bus
/// frequency vector (loads already resolved) and `omega_dot_g` the generator
/// accelerations, which only the perturbed law reads.
inline ControllerRates controller_rhs(const SystemModel& m, const Vec& z, const Vec& omega,
                                      const Vec& omega_dot_g) {
  ControllerRates r;
  const auto lay = m.layout;
  r.lambda_dot = Vec::Zero(lay.n_bus);
  r.pi_dot = Vec::Zero(lay.n_pi);
  r.rho_p_dot = Vec::Zero(lay.n_cons);
  r.rho_m_dot = Vec::Zero(lay.n_cons);
  r.phi_dot = Vec::Zero(lay.n_bus);
  r.gamma_dot = Vec::Zero(lay.n_gamma);
  if (m.variant == Variant::SwingOnly) return r;

  const Vec lambda = m.lambda(z);
  const Vec phi = m.phi(z);
  const Vec rho_p = m.rho_p(z);
  const Vec rho_m = m.rho_m(z);
  const Vec flows = m.virtual_flows(phi);         // on constrained lines
  const Vec lphi = m.gm.laplacian * phi;          // sum_j B_ij (phi_i - phi_j)

  Vec d(m.n_bus());
  for (int i = 0; i < m.n_bus(); ++i) d[i] = m.costs[i].load_response(lambda[i] + omega[i]);

  if (m.variant == Variant::Perturbed) {
    // lambda_i' = zeta (M_i w_i' + a_i w_i + (C P)_i - sum_j B_ij(phi_i - phi_j)),
    // the measurable form that avoids knowing D_i; a_i = D_i + delta_a_i.
    const Vec net_inflow = m.gm.incidence * Vec(m.p(z));
    Vec inertia_term = Vec::Zero(m.n_bus());
    for (int gi = 0; gi < m.n_gen(); ++gi)
      inertia_term[m.net.generators[gi]] = m.inertia_g[gi] * omega_dot_g[gi];
    const Vec a = m.damping + m.delta_a;
    r.lambda_dot = m.zeta_lambda.asDiagonal() *
                   Vec(inertia_term + a.cwiseProduct(omega) + net_inflow - lphi);
  } else {
    r.lambda_dot = m.zeta_lambda.asDiagonal() * Vec(m.pin - d - lphi);
  }

  if (m.inter_area_enabled) {
    if (m.variant == Variant::DistributedArea) {
      const Vec pi_state = m.pi(z);
      const Vec gamma = m.gamma(z);
      int off = 0;
      for (int k = 0; k < m.n_area(); ++k) {
        const auto& edges = m.boundary[k];
        const int nb = static_cast<int>(edges.size());
        Vec pi_k = pi_state.segment(off, nb);
        Vec gamma_k = gamma.segment(off, nb);
        const Vec comm_gamma = m.comm_laplacian[k] * gamma_k;
        const Vec comm_pi = m.comm_laplacian[k] * pi_k;
        for (int rr = 0; rr < nb; ++rr) {
          const double target = m.p_hat[k] / static_cast<double>(nb);
          r.pi_dot[off + rr] = m.zeta_pi[off + rr] *
                               (m.chat(k, edges[rr]) * flows[edges[rr]] - target - comm_gamma[rr]);
          r.gamma_dot[off + rr] = m.chi_gamma[off + rr] * comm_pi[rr];
        }
        off += nb;
      }
    } else {
      r.pi_dot = m.zeta_pi.asDiagonal() * Vec(m.chat * flows - m.p_hat);
    }
  }

  for (int e = 0; e < m.n_cons(); ++e) {
    if (m.has_upper(e))
      r.rho_p_dot[e] = m.zeta_rho_plus[e] * project_positive(flows[e] - m.upper(e), rho_p[e]);
    if (m.has_lower(e))
      r.rho_m_dot[e] = m.zeta_rho_minus[e] * project_positive(m.lower(e) - flows[e], rho_m[e]);
  }

  // multipliers exist only where a limit does
  Vec q = detail::area_pressure(m, m.pi(z));
  for (int e = 0; e < m.n_cons(); ++e) {
    if (m.has_upper(e)) q[e] += rho_p[e];
    if (m.has_lower(e)) q[e] -= rho_m[e];
  }
  const Vec lline = m.gm.susceptance.asDiagonal() * Vec(m.flow_map.transpose() * q);
  r.phi_dot = m.chi_phi.asDiagonal() * Vec(m.gm.laplacian * lambda - m.gm.incidence * lline);
  return r;
}

/// Base optimal load-control law (identity flow map).
inline ControllerRates olc_rhs(const SystemModel& m, const Vec& z, const Vec& omega) {
  return controller_rhs(m, z, omega, Vec::Zero(m.n_gen()));
}

/// Kron-reduced law; the model carries A_sharp, so the shared evaluation
/// routes the original-line constraints through the recovered flows.
inline ControllerRates reduced_rhs(const SystemModel& m, const Vec& z, const Vec& omega) {
  return controller_rhs(m, z, omega, Vec::Zero(m.n_gen()));
}

/// Distributed inter-area law with per-boundary-edge multipliers.
inline ControllerRates distributed_area_rhs(const SystemModel& m, const Vec& z,
                                            const Vec& omega) {
  return controller_rhs(m, z, omega, Vec::Zero(m.n_gen()));
}

/// The perturbed lambda update alone (the rest of the law is unchanged).
inline Vec perturbed_lambda_rhs(const SystemModel& m, const Vec& z, const Vec& omega,
                                const Vec& omega_dot_g) {
  return controller_rhs(m, z, omega, omega_dot_g).lambda_dot;
}

}  // namespace olc

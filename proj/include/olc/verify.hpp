#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "olc/common.hpp"
#include "olc/controller.hpp"
#include "olc/integrator.hpp"
#include "olc/kron.hpp"
#include "olc/model.hpp"
#include "olc/oracle.hpp"
#include "olc/projection.hpp"

namespace olc {

struct PropertyResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;   // worst observed residual / violation
  double tolerance = 0.0;
  int samples = 0;
  std::string detail;
};

struct VerifyOptions {
  uint64_t seed = 1;
  int n_grad_states = 20;
  int n_hessian_states = 10;
  int n_equivalence_states = 1000;
  int n_h_states = 100;
  int n_scalar = 1000;
  double hessian_fuzz = 0.0;  // test fixture: perturbs one analytic Hessian entry
};

namespace detail {

inline double rel_err(const Vec& a, const Vec& b) {
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double rel_err(const Mat& a, const Mat& b) {
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double fd_step(double v) { return 1e-6 * std::max(1.0, std::abs(v)); }

/// Random full closed-loop state with nonnegative inequality multipliers.
inline Vec random_state(const SystemModel& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.0, 1.0);
  Vec z(m.layout.total);
  for (int i = 0; i < m.layout.n_gen; ++i) m.omega_g(z)[i] = 0.5 * sym(rng);
  for (int i = 0; i < m.layout.n_edge; ++i) m.p(z)[i] = 2.0 * sym(rng);
  for (int i = 0; i < m.layout.n_bus; ++i) m.lambda(z)[i] = sym(rng);
  for (int i = 0; i < m.layout.n_pi; ++i) m.pi(z)[i] = sym(rng);
  for (int i = 0; i < m.layout.n_cons; ++i) m.rho_p(z)[i] = pos(rng);
  for (int i = 0; i < m.layout.n_cons; ++i) m.rho_m(z)[i] = pos(rng);
  for (int i = 0; i < m.layout.n_bus; ++i) m.phi(z)[i] = sym(rng);
  for (int i = 0; i < m.layout.n_gamma; ++i) m.gamma(z)[i] = sym(rng);
  return z;
}

}  // namespace detail

/// Runs every sampled invariant of the toolkit with a fixed seed. The pass
/// set is a property of the implementation, not of the seed. `quadratic_ref`
/// is the model used for the curvature-sensitive comparison-matrix checks
/// (its costs must have Lipschitz marginals).
inline std::vector<PropertyResult> run_property_suite(const SystemModel& m,
                                                      const SystemModel& quadratic_ref,
                                                      const NetworkCase& kron_case,
                                                      const VerifyOptions& opt = {}) {
  std::vector<PropertyResult> results;
  std::mt19937_64 rng(opt.seed);
  auto report = [&](const std::string& name, double worst, double tol, int samples,
                    const std::string& detail = "") {
    results.push_back({name, worst < tol, worst, tol, samples, detail});
  };

  // --- projection operator -------------------------------------------------
  {
    double worst = 0.0;
    worst = std::max(worst, std::abs(project_positive(-1.0, 0.0) - 0.0));
    worst = std::max(worst, std::abs(project_positive(-1.0, 0.5) - (-1.0)));
    worst = std::max(worst, std::abs(project_positive(0.3, 0.0) - 0.3));
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    for (int s = 0; s < opt.n_scalar; ++s) {
      const double a = sym(rng), u = sym(rng);
      const double got = project_positive(a, u);
      const double want = (a > 0.0 || u > 0.0) ? a : 0.0;
      worst = std::max(worst, std::abs(got - want));
    }
    report("projection-definition", worst, 1e-15, opt.n_scalar + 3);
  }

  // --- graph matrices -------------------------------------------------------
  {
    const Vec colsum = m.gm.incidence.colwise().sum();
    report("incidence-column-sums", colsum.cwiseAbs().maxCoeff(), 1e-14, m.n_edge());
    const Vec ln1 = m.gm.laplacian * Vec::Ones(m.n_bus());
    report("laplacian-nullspace", ln1.cwiseAbs().maxCoeff(), 1e-10, m.n_bus());
    Eigen::SelfAdjointEigenSolver<Mat> eig(m.gm.laplacian);
    report("laplacian-psd", std::max(0.0, -eig.eigenvalues().minCoeff()), 1e-9, m.n_bus());

    // Chat == E_K C entrywise
    double worst = 0.0;
    for (int k = 0; k < m.n_area(); ++k) {
      Vec indicator = Vec::Zero(m.n_bus());
      // chat rows live on the constrained lines; compare on the net lines
      // only when the flow map is the identity
      if (m.flow_map.rows() == m.flow_map.cols() && m.flow_map.isIdentity(1e-14)) {
        for (int i : m.net.areas[k].buses) indicator[i] = 1.0;
        const Vec row = m.gm.incidence.transpose() * indicator;
        worst = std::max(worst, (row.transpose() - m.chat.row(k)).cwiseAbs().maxCoeff());
      }
    }
    report("chat-matches-indicator", worst, 1e-14, m.n_area());
  }

  // --- cost calculus ---------------------------------------------------------
  {
    std::uniform_real_distribution<double> xi_dist(-3.0, 3.0);
    double worst_rt = 0.0, worst_slope = 0.0, worst_mono = 0.0;
    for (int s = 0; s < opt.n_scalar; ++s) {
      const CostModel& c = m.costs[s % m.n_bus()];
      const double xi = xi_dist(rng);
      const double d = c.load_response(xi);
      worst_rt = std::max(worst_rt, std::abs(c.marginal(d) - xi));
      worst_slope = std::max(worst_slope, std::abs(c.response_slope(xi) * c.curvature(d) - 1.0));
      const double d2 = c.load_response(xi + 1e-4);
      worst_mono = std::max(worst_mono, d2 > d ? 0.0 : 1.0);
    }
    report("cost-roundtrip", worst_rt, 1e-12, opt.n_scalar);
    report("cost-slope-identity", worst_slope, 1e-10, opt.n_scalar);
    report("cost-monotone", worst_mono, 0.5, opt.n_scalar);
  }

  // --- inner maximizer and its Jacobians (stationarity + sensitivity) -------
  {
    double worst_stat = 0.0, worst_match = 0.0, worst_jp = 0.0, worst_jl = 0.0;
    for (int s = 0; s < opt.n_grad_states; ++s) {
      const Vec z = detail::random_state(m, rng);
      const Vec lambda = m.lambda(z);
      const Vec p = m.p(z);
      const Vec nu_l = maximize_nu_L(m, p, lambda);
      const Vec net_inflow = m.gm.incidence * p;
      Vec slope(m.n_load());
      for (int li = 0; li < m.n_load(); ++li) {
        const int i = m.net.load_buses[li];
        const double resid = m.pin[i] - m.damping[i] * nu_l[li] -
                             m.costs[i].load_response(lambda[i] + nu_l[li]) - net_inflow[i];
        worst_stat = std::max(worst_stat, std::abs(resid));
        slope[li] = m.costs[i].response_slope(lambda[i] + nu_l[li]);
      }
      const Vec omega_l = solve_load_frequency(m, lambda, p);
      worst_match = std::max(worst_match, (omega_l - nu_l).cwiseAbs().maxCoeff());

      // Jacobian w.r.t. P versus -(D_L + d'_L)^{-1} C_L
      for (int e = 0; e < std::min(m.n_edge(), 6); ++e) {
        const double h = detail::fd_step(p[e]);
        Vec pp = p, pm = p;
        pp[e] += h;
        pm[e] -= h;
        const Vec fd = (maximize_nu_L(m, pp, lambda) - maximize_nu_L(m, pm, lambda)) / (2 * h);
        for (int li = 0; li < m.n_load(); ++li) {
          const int i = m.net.load_buses[li];
          const double want = -m.gm.incidence(i, e) / (m.damping[i] + slope[li]);
          worst_jp = std::max(worst_jp, std::abs(fd[li] - want));
        }
      }
      // Jacobian w.r.t. lambda_L versus -(D_L + d'_L)^{-1} d'_L
      for (int li = 0; li < std::min(m.n_load(), 4); ++li) {
        const int i = m.net.load_buses[li];
        const double h = detail::fd_step(lambda[i]);
        Vec lp = lambda, lm = lambda;
        lp[i] += h;
        lm[i] -= h;
        const Vec fd = (maximize_nu_L(m, p, lp) - maximize_nu_L(m, p, lm)) / (2 * h);
        const double want = -slope[li] / (m.damping[i] + slope[li]);
        worst_jl = std::max(worst_jl, std::abs(fd[li] - want));
      }
    }
    report("nu-star-stationarity", worst_stat, 1e-12, opt.n_grad_states);
    report("nu-matches-load-frequency", worst_match, 1e-12, opt.n_grad_states);
    report("lemma4-jacobian-P", worst_jp, 1e-5, opt.n_grad_states);
    report("lemma4-jacobian-lambda", worst_jl, 1e-5, opt.n_grad_states);
  }

  // --- analytic gradients vs central differences ----------------------------
  {
    double worst = 0.0;
    for (int s = 0; s < opt.n_grad_states; ++s) {
      const Vec z = detail::random_state(m, rng);
      Vec x, y;
      state_to_xy(m, z, x, y);
      const GradXY g = grad_xy(m, x, y);
      Vec fd_x(x.size()), fd_y(y.size());
      for (int i = 0; i < x.size(); ++i) {
        const double h = detail::fd_step(x[i]);
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        fd_x[i] = (reduced_lagrangian(m, xp, y) - reduced_lagrangian(m, xm, y)) / (2 * h);
      }
      for (int i = 0; i < y.size(); ++i) {
        const double h = detail::fd_step(y[i]);
        Vec yp = y, ym = y;
        yp[i] += h;
        ym[i] -= h;
        fd_y[i] = (reduced_lagrangian(m, x, yp) - reduced_lagrangian(m, x, ym)) / (2 * h);
      }
      worst = std::max(worst, detail::rel_err(g.x, fd_x));
      worst = std::max(worst, detail::rel_err(g.y, fd_y));
    }
    report("grad-fd", worst, 1e-6, opt.n_grad_states);
  }

  // --- analytic Hessians vs differentiated gradients ------------------------
  {
    double worst = 0.0, worst_sign = 0.0;
    for (int s = 0; s < opt.n_hessian_states; ++s) {
      const Vec z = detail::random_state(m, rng);
      Vec x, y;
      state_to_xy(m, z, x, y);
      Hessians h = hessians(m, x, y);
      if (opt.hessian_fuzz != 0.0) h.xx(x.size() - 1, x.size() - 1) += opt.hessian_fuzz;
      Mat fd_xx(x.size(), x.size()), fd_yy(y.size(), y.size());
      for (int i = 0; i < x.size(); ++i) {
        const double step = detail::fd_step(x[i]);
        Vec xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        fd_xx.col(i) = (grad_xy(m, xp, y).x - grad_xy(m, xm, y).x) / (2 * step);
      }
      for (int i = 0; i < y.size(); ++i) {
        const double step = detail::fd_step(y[i]);
        Vec yp = y, ym = y;
        yp[i] += step;
        ym[i] -= step;
        fd_yy.col(i) = (grad_xy(m, x, yp).y - grad_xy(m, x, ym).y) / (2 * step);
      }
      worst = std::max(worst, detail::rel_err(h.xx, fd_xx));
      worst = std::max(worst, detail::rel_err(h.yy, fd_yy));
      Eigen::SelfAdjointEigenSolver<Mat> ex(h.xx), ey(h.yy);
      worst_sign = std::max(worst_sign, -ex.eigenvalues().minCoeff());
      worst_sign = std::max(worst_sign, ey.eigenvalues().maxCoeff());
    }
    report("hessian-fd", worst, 1e-5, opt.n_hessian_states);
    report("hessian-signs", worst_sign, 1e-10, opt.n_hessian_states);
  }

  // --- dual-function concavity (per-bus 2x2 Hessian, both families) --------
  {
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    double worst = -1.0;  // most positive "should-be-negative" indicator
    for (int s = 0; s < opt.n_scalar; ++s) {
      const int i = s % m.n_bus();
      const CostModel& c = m.costs[i];
      const double damping = m.damping[i];
      const double pin = m.pin[i];
      auto phi_fn = [&](double lam, double nu) {
        const double xi = lam + nu;
        const double d = c.load_response(xi);
        return c.cost(d) - xi * d - 0.5 * damping * nu * nu + xi * pin;
      };
      const double lam = dist(rng), nu = dist(rng);
      const double h = 1e-4;
      const double f0 = phi_fn(lam, nu);
      const double hll = (phi_fn(lam + h, nu) - 2 * f0 + phi_fn(lam - h, nu)) / (h * h);
      const double hnn = (phi_fn(lam, nu + h) - 2 * f0 + phi_fn(lam, nu - h)) / (h * h);
      const double hln = (phi_fn(lam + h, nu + h) - phi_fn(lam + h, nu - h) -
                          phi_fn(lam - h, nu + h) + phi_fn(lam - h, nu - h)) /
                         (4 * h * h);
      Mat hess(2, 2);
      hess << hll, hln, hln, hnn;
      Eigen::SelfAdjointEigenSolver<Mat> eig(hess);
      worst = std::max(worst, eig.eigenvalues().maxCoeff());
    }
    report("lemma3-phi-concavity", worst, -1e-4, opt.n_scalar,
           "largest eigenvalue of the per-bus dual Hessian (must stay negative)");
  }

  // --- closed loop == projected saddle flow ---------------------------------
  {
    double worst = 0.0;
    for (int s = 0; s < opt.n_equivalence_states; ++s) {
      const Vec z = detail::random_state(m, rng);
      const Vec a = closed_loop_rhs(m, z);
      const Vec b = gradient_field(m, z);
      worst = std::max(worst, detail::rel_err(a, b));
    }
    report("theorem4-equivalence", worst, 1e-9, opt.n_equivalence_states);
  }

  // --- comparison matrix H(z) under damping mismatch ------------------------
  {
    const SystemModel& q = quadratic_ref;
    double slope_min = std::numeric_limits<double>::infinity();
    for (const CostModel& c : q.costs) {
      const auto [alpha, lip] = c.curvature_bounds();
      (void)alpha;
      if (!std::isfinite(lip))
        throw ValidationError("verify: the reference model for H(z) needs Lipschitz marginals");
      slope_min = std::min(slope_min, 1.0 / lip);
    }
    const StabilityInterval iv = stability_bound(q.damping.minCoeff(), slope_min);
    std::uniform_real_distribution<double> inside(iv.lo + 0.05 * (iv.hi - iv.lo),
                                                  iv.hi - 0.05 * (iv.hi - iv.lo));
    double worst = 0.0;
    for (int s = 0; s < opt.n_h_states; ++s) {
      const Vec z = detail::random_state(q, rng);
      Vec x, y;
      state_to_xy(q, z, x, y);
      const Vec da = Vec::Constant(q.n_bus(), inside(rng));
      const Mat h = h_matrix(q, x, y, da);
      Eigen::SelfAdjointEigenSolver<Mat> eig(h);
      worst = std::max(worst, eig.eigenvalues().maxCoeff());
    }
    report("h-matrix-psd-inside", worst, 1e-9, opt.n_h_states,
           "max eigenvalue of H(z) for delta_a inside the admissible interval");

    double best_positive = -1.0;
    for (int s = 0; s < opt.n_h_states; ++s) {
      const Vec z = detail::random_state(q, rng);
      Vec x, y;
      state_to_xy(q, z, x, y);
      const Vec da = Vec::Constant(q.n_bus(), iv.lo - 0.5);
      const Mat h = h_matrix(q, x, y, da);
      Eigen::SelfAdjointEigenSolver<Mat> eig(h);
      best_positive = std::max(best_positive, eig.eigenvalues().maxCoeff());
    }
    report("h-matrix-indefinite-outside", best_positive > 1e-9 ? 0.0 : 1.0, 0.5, opt.n_h_states,
           "a positive eigenvalue must appear for delta_a outside the interval");

    double worst_iv = 0.0;
    for (double dp : {0.1, 0.2, 0.5, 1.0})
      for (double dm : {0.05, 0.2, 0.6, 1.0}) {
        const StabilityInterval b = stability_bound(dm, dp);
        if (!(b.lo < 0.0 && 0.0 < b.hi)) worst_iv = 1.0;
        if (!(b.lo > -dm)) worst_iv = 1.0;
      }
    report("stability-bound-shape", worst_iv, 0.5, 16,
           "interval contains zero and its lower endpoint exceeds -D_min");
  }

  // --- Kron reduction consistency -------------------------------------------
  {
    const ReducedNetwork red = kron_reduce(kron_case);
    const GraphMatrices g = graph_matrices(kron_case);
    const GraphMatrices gr = graph_matrices(red.reduced);
    const int nz = static_cast<int>(kron_case.zero_injection.size());
    double worst = 0.0;
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    Mat l_zz(nz, nz), l_zr(nz, static_cast<int>(red.retained.size()));
    for (int a = 0; a < nz; ++a) {
      for (int b = 0; b < nz; ++b)
        l_zz(a, b) = g.laplacian(kron_case.zero_injection[a], kron_case.zero_injection[b]);
      for (size_t b = 0; b < red.retained.size(); ++b)
        l_zr(a, b) = g.laplacian(kron_case.zero_injection[a], red.retained[b]);
    }
    Eigen::LDLT<Mat> zz(l_zz);
    for (int s = 0; s < opt.n_scalar; ++s) {
      Vec theta_r(static_cast<int>(red.retained.size()));
      for (int i = 0; i < theta_r.size(); ++i) theta_r[i] = sym(rng);
      Vec theta = Vec::Zero(kron_case.n_buses());
      for (size_t i = 0; i < red.retained.size(); ++i) theta[red.retained[i]] = theta_r[i];
      if (nz > 0) {
        const Vec theta_z = -zz.solve(l_zr * theta_r);
        for (int i = 0; i < nz; ++i) theta[kron_case.zero_injection[i]] = theta_z[i];
      }
      const Vec original = g.susceptance.asDiagonal() * (g.incidence.transpose() * theta);
      const Vec reduced_flows =
          gr.susceptance.asDiagonal() * (gr.incidence.transpose() * theta_r);
      const Vec recovered = recover_flows(red, reduced_flows);
      worst = std::max(worst, (original - recovered).cwiseAbs().maxCoeff());
    }
    report("kron-consistency", worst, 1e-10, opt.n_scalar);
  }

  return results;
}

inline bool all_pass(const std::vector<PropertyResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return true;
}

}  // namespace olc

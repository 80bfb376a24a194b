#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "olc/common.hpp"
#include "olc/costs.hpp"
#include "olc/graph.hpp"
#include "olc/kron.hpp"
#include "olc/network.hpp"

namespace olc {

enum class Variant { SwingOnly, Base, Perturbed, Reduced, DistributedArea };

/// Controller gain multipliers. The physical gains are fixed by the
/// equivalence with the network dynamics (zeta_nu = 1/M, chi_P = B) and are
/// not configurable.
struct GainSpec {
  double lambda = 1.0;
  double pi = 1.0;
  double rho_plus = 1.0;
  double rho_minus = 1.0;
  double phi = 1.0;
  double gamma = 1.0;
};

/// Offsets of the state blocks inside the packed state vector:
/// [omega_G | P | lambda | pi | rho+ | rho- | phi | gamma].
/// pi is per area, except in the distributed-area variant where it is per
/// boundary edge (gamma exists only there).
struct StateLayout {
  int n_gen = 0, n_edge = 0, n_bus = 0, n_cons = 0, n_pi = 0, n_gamma = 0;
  int omega_g = 0, p = 0, lambda = 0, pi = 0, rho_p = 0, rho_m = 0, phi = 0, gamma = 0;
  int total = 0;
};

/// Per-case closed-loop description: the simulated network (original or Kron
/// reduced), cost models, gains, the constraint set, and the flow-recovery
/// map tying constraints stated on original lines to the simulated ones.
/// Immutable once built; evaluation functions are pure.
struct SystemModel {
  Variant variant = Variant::Base;
  NetworkCase net;   // the network actually simulated
  GraphMatrices gm;  // matrices of `net`

  // Constraint universe: limits and area rows refer to `cons_lines`, whose
  // virtual flows are flow_map * B * C^T * phi. flow_map is the identity
  // except for the Kron-reduced variant, where it is A_sharp.
  std::vector<Line> cons_lines;
  Mat flow_map;      // |Ec| x |E_net|
  Mat chat;          // |K| x |Ec|
  Vec p_hat;         // |K|
  bool inter_area_enabled = true;
  std::vector<std::vector<int>> boundary;  // per area, indices into cons_lines

  std::vector<CostModel> costs;  // per net bus
  Vec pin;                       // per net bus, post-disturbance
  Vec damping;                   // D_i per net bus
  Vec inertia_g;                 // M_i per generator (net.generators order)
  Vec delta_a;                   // per net bus (Perturbed variant)

  Vec zeta_lambda, chi_phi;              // per bus
  Vec zeta_pi, chi_gamma;                // per pi/gamma state
  Vec zeta_rho_plus, zeta_rho_minus;     // per constrained line

  // distributed-area communication graphs: one Laplacian per area over its
  // boundary edges (ring by default)
  std::vector<Mat> comm_laplacian;

  StateLayout layout;

  std::optional<ReducedNetwork> reduction;  // set for the Reduced variant

  int n_bus() const { return net.n_buses(); }
  int n_edge() const { return net.n_lines(); }
  int n_gen() const { return static_cast<int>(net.generators.size()); }
  int n_load() const { return static_cast<int>(net.load_buses.size()); }
  int n_cons() const { return static_cast<int>(cons_lines.size()); }
  int n_area() const { return net.n_areas(); }

  bool has_upper(int e) const { return cons_lines[e].p_max.has_value(); }
  bool has_lower(int e) const { return cons_lines[e].p_min.has_value(); }
  double upper(int e) const { return *cons_lines[e].p_max; }
  double lower(int e) const { return *cons_lines[e].p_min; }

  /// Virtual flows on the constrained lines induced by phases phi.
  Vec virtual_flows(const Vec& phi) const {
    return flow_map * (gm.susceptance.asDiagonal() * (gm.incidence.transpose() * phi));
  }

  // state block accessors
  auto omega_g(Vec& z) const { return z.segment(layout.omega_g, layout.n_gen); }
  auto omega_g(const Vec& z) const { return z.segment(layout.omega_g, layout.n_gen); }
  auto p(Vec& z) const { return z.segment(layout.p, layout.n_edge); }
  auto p(const Vec& z) const { return z.segment(layout.p, layout.n_edge); }
  auto lambda(Vec& z) const { return z.segment(layout.lambda, layout.n_bus); }
  auto lambda(const Vec& z) const { return z.segment(layout.lambda, layout.n_bus); }
  auto pi(Vec& z) const { return z.segment(layout.pi, layout.n_pi); }
  auto pi(const Vec& z) const { return z.segment(layout.pi, layout.n_pi); }
  auto rho_p(Vec& z) const { return z.segment(layout.rho_p, layout.n_cons); }
  auto rho_p(const Vec& z) const { return z.segment(layout.rho_p, layout.n_cons); }
  auto rho_m(Vec& z) const { return z.segment(layout.rho_m, layout.n_cons); }
  auto rho_m(const Vec& z) const { return z.segment(layout.rho_m, layout.n_cons); }
  auto phi(Vec& z) const { return z.segment(layout.phi, layout.n_bus); }
  auto phi(const Vec& z) const { return z.segment(layout.phi, layout.n_bus); }
  auto gamma(Vec& z) const { return z.segment(layout.gamma, layout.n_gamma); }
  auto gamma(const Vec& z) const { return z.segment(layout.gamma, layout.n_gamma); }
};

struct ModelOptions {
  Variant variant = Variant::Base;
  GainSpec gains;
  double delta_a = 0.0;  // homogeneous a_i - D_i mismatch (Perturbed)
  bool inter_area = true;
  // thermal overrides by external line id; applied on top of the case limits
  std::map<int, std::pair<double, double>> thermal_limits;
};

namespace detail {

/// Ring communication graph Laplacian over n boundary edges.
inline Mat ring_laplacian(int n) {
  Mat lap = Mat::Zero(n, n);
  if (n < 2) return lap;
  if (n == 2) {
    lap << 1, -1, -1, 1;
    return lap;
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    lap(i, i) += 1;
    lap(j, j) += 1;
    lap(i, j) -= 1;
    lap(j, i) -= 1;
  }
  return lap;
}

inline StateLayout make_layout(int n_gen, int n_edge, int n_bus, int n_cons, int n_pi,
                               int n_gamma) {
  StateLayout s;
  s.n_gen = n_gen;
  s.n_edge = n_edge;
  s.n_bus = n_bus;
  s.n_cons = n_cons;
  s.n_pi = n_pi;
  s.n_gamma = n_gamma;
  s.omega_g = 0;
  s.p = s.omega_g + n_gen;
  s.lambda = s.p + n_edge;
  s.pi = s.lambda + n_bus;
  s.rho_p = s.pi + n_pi;
  s.rho_m = s.rho_p + n_cons;
  s.phi = s.rho_m + n_cons;
  s.gamma = s.phi + n_bus;
  s.total = s.gamma + n_gamma;
  return s;
}

}  // namespace detail

/// Assembles the closed-loop model for a balanced, already disturbed case.
/// `p_hat` carries the scheduled inter-area exports (normally the pre-fault
/// tie flows); `costs` is indexed by the bus order of `c`. For the Reduced
/// variant the case is Kron-reduced here and the cost/limit data are carried
/// over to the retained buses and original lines.
inline SystemModel build_model(const NetworkCase& c, std::vector<CostModel> costs,
                               const Vec& p_hat, const ModelOptions& opt) {
  if (static_cast<int>(costs.size()) != c.n_buses())
    throw ValidationError("build_model: one cost model per bus required");

  SystemModel m;
  m.variant = opt.variant;

  NetworkCase base = c;
  // thermal overrides apply to the original (constraint-carrying) lines
  for (auto& [line_id, lim] : opt.thermal_limits) {
    Line& l = base.lines[base.line_index(line_id)];
    l.p_min = lim.first;
    l.p_max = lim.second;
  }

  if (opt.variant == Variant::Reduced) {
    ReducedNetwork red = kron_reduce(base);
    m.net = red.reduced;
    m.cons_lines = red.original_lines;
    for (auto& [line_id, lim] : opt.thermal_limits) {
      for (Line& l : m.cons_lines)
        if (l.id == line_id) {
          l.p_min = lim.first;
          l.p_max = lim.second;
        }
    }
    m.flow_map = red.a_sharp;
    std::vector<CostModel> reduced_costs;
    for (int i : red.retained) reduced_costs.push_back(costs[i]);
    m.costs = std::move(reduced_costs);
    // Chat over original lines, from the original case's areas
    const GraphMatrices gb = graph_matrices(base);
    m.chat = gb.area_boundary;
    m.boundary = gb.boundary_edges;
    m.reduction = std::move(red);
  } else {
    if (!base.zero_injection.empty())
      throw ValidationError(
          "zero-injection buses require the Kron-reduced controller variant");
    m.net = base;
    m.cons_lines = base.lines;
    m.flow_map = Mat::Identity(base.n_lines(), base.n_lines());
    m.costs = std::move(costs);
  }

  m.gm = graph_matrices(m.net);
  if (opt.variant != Variant::Reduced) {
    m.chat = m.gm.area_boundary;
    m.boundary = m.gm.boundary_edges;
  }
  if (p_hat.size() != m.net.n_areas())
    throw ValidationError("build_model: p_hat size must match the area count");
  m.p_hat = p_hat;
  m.inter_area_enabled = opt.inter_area && m.net.n_areas() > 0;

  const int n = m.n_bus();
  m.pin = injections(m.net);
  m.damping = Vec::Zero(n);
  for (int i = 0; i < n; ++i) m.damping[i] = m.net.buses[i].damping;
  m.inertia_g = Vec(m.n_gen());
  for (int gi = 0; gi < m.n_gen(); ++gi) m.inertia_g[gi] = m.net.buses[m.net.generators[gi]].inertia;
  m.delta_a = Vec::Constant(n, opt.delta_a);

  const int n_pi_states = (opt.variant == Variant::DistributedArea)
                              ? [&] {
                                  int tot = 0;
                                  for (const auto& b : m.boundary) tot += static_cast<int>(b.size());
                                  return tot;
                                }()
                              : m.n_area();
  const int n_gamma_states = (opt.variant == Variant::DistributedArea) ? n_pi_states : 0;

  m.zeta_lambda = Vec::Constant(n, opt.gains.lambda);
  m.chi_phi = Vec::Constant(n, opt.gains.phi);
  m.zeta_pi = Vec::Constant(n_pi_states, opt.gains.pi);
  m.chi_gamma = Vec::Constant(n_gamma_states, opt.gains.gamma);
  m.zeta_rho_plus = Vec::Constant(m.n_cons(), opt.gains.rho_plus);
  m.zeta_rho_minus = Vec::Constant(m.n_cons(), opt.gains.rho_minus);

  if (opt.variant == Variant::DistributedArea) {
    for (const auto& edges : m.boundary) {
      if (edges.empty())
        throw ValidationError("distributed-area variant: an area has no boundary edges");
      m.comm_laplacian.push_back(detail::ring_laplacian(static_cast<int>(edges.size())));
    }
  }

  m.layout = detail::make_layout(m.n_gen(), m.n_edge(), n, m.n_cons(), n_pi_states,
                                 n_gamma_states);
  return m;
}

/// Convenience builder for tests: uniform cost model, p_hat from the current
/// dc flow of the (balanced) case.
inline SystemModel build_model_uniform(const NetworkCase& c, const CostModel& cost,
                                       const ModelOptions& opt = {}) {
  std::vector<CostModel> costs(c.n_buses(), cost);
  const GraphMatrices g = graph_matrices(c);
  Vec p_hat = Vec::Zero(c.n_areas());
  if (c.n_areas() > 0) {
    const DcFlow f = dc_power_flow(c, g);
    p_hat = g.area_boundary * f.flows;
  }
  return build_model(c, std::move(costs), p_hat, opt);
}

}  // namespace olc

#pragma once

#include <vector>

#include "olc/common.hpp"
#include "olc/network.hpp"

namespace olc {

/// Incidence, susceptance and Laplacian matrices of a case, plus the
/// area-boundary matrix Chat whose row k carries +-1 on the tie lines of
/// area k (equal to E_K * C, with E_K the area membership indicator).
struct GraphMatrices {
  Mat incidence;       // C, |N| x |E|, entries in {-1, 0, +1}
  Vec susceptance;     // diagonal of B, |E|
  Mat laplacian;       // L_B = C B C^T
  Mat area_boundary;   // Chat, |K| x |E|
  std::vector<std::vector<int>> boundary_edges;  // per area, edge indices in case order
};

inline GraphMatrices graph_matrices(const NetworkCase& c) {
  const int n = c.n_buses();
  const int m = c.n_lines();
  GraphMatrices g;
  g.incidence = Mat::Zero(n, m);
  g.susceptance = Vec(m);
  for (int e = 0; e < m; ++e) {
    g.incidence(c.lines[e].from, e) = 1.0;
    g.incidence(c.lines[e].to, e) = -1.0;
    g.susceptance[e] = c.lines[e].susceptance;
  }
  g.laplacian = g.incidence * g.susceptance.asDiagonal() * g.incidence.transpose();

  const int k = c.n_areas();
  g.area_boundary = Mat::Zero(k, m);
  g.boundary_edges.resize(k);
  for (int a = 0; a < k; ++a) {
    std::vector<char> member(n, 0);
    for (int i : c.areas[a].buses) member[i] = 1;
    for (int e = 0; e < m; ++e) {
      const bool from_in = member[c.lines[e].from];
      const bool to_in = member[c.lines[e].to];
      if (from_in == to_in) continue;
      g.area_boundary(a, e) = from_in ? 1.0 : -1.0;
      g.boundary_edges[a].push_back(e);
    }
  }
  return g;
}

/// Solves L theta = b on the zero-mean subspace via the deflated system
/// (L + (1/n) 1 1^T), which is positive definite for a connected graph.
/// Requires 1^T b = 0.
inline Vec laplacian_solve(const Mat& laplacian, const Vec& b) {
  const int n = static_cast<int>(laplacian.rows());
  if (std::abs(b.sum()) > 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff()))
    throw ValidationError("laplacian_solve: right-hand side does not sum to zero");
  Mat deflated = laplacian;
  deflated.array() += 1.0 / n;
  Eigen::LDLT<Mat> ldlt(deflated);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("laplacian_solve: deflated system is singular");
  Vec theta = ldlt.solve(b);
  theta.array() -= theta.mean();
  return theta;
}

/// Moore-Penrose pseudo-inverse of a connected-graph Laplacian,
/// (L + J/n)^{-1} - J/n.
inline Mat laplacian_pinv(const Mat& laplacian) {
  const int n = static_cast<int>(laplacian.rows());
  Mat deflated = laplacian;
  deflated.array() += 1.0 / n;
  Eigen::LDLT<Mat> ldlt(deflated);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("laplacian_pinv: deflated system is singular");
  Mat inv = ldlt.solve(Mat::Identity(n, n));
  inv.array() -= 1.0 / n;
  return inv;
}

struct DcFlow {
  Vec theta;  // per-bus angles, zero-mean convention
  Vec flows;  // per-line P0 = B C^T theta
};

/// Pre-fault stationary point: angles solving L_B theta = Pin (zero-mean
/// gauge) and the matching line flows. These flows seed P(0), which is what
/// the thermal-limit guarantee at the equilibrium relies on.
inline DcFlow dc_power_flow(const NetworkCase& c, const GraphMatrices& g) {
  DcFlow f;
  f.theta = laplacian_solve(g.laplacian, injections(c));
  f.flows = g.susceptance.asDiagonal() * (g.incidence.transpose() * f.theta);
  return f;
}

inline DcFlow dc_power_flow(const NetworkCase& c) { return dc_power_flow(c, graph_matrices(c)); }

}  // namespace olc

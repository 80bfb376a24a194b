#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "olc/common.hpp"
#include "olc/graph.hpp"
#include "olc/network.hpp"

namespace olc {

/// Kron reduction of a case: zero-injection buses are eliminated through the
/// Schur complement of the susceptance Laplacian, and the dense matrix
/// a_sharp maps reduced-line virtual flows back onto the original lines, so
/// constraints stated on the original network can be enforced on the reduced
/// one.
struct ReducedNetwork {
  NetworkCase reduced;            // buses = G u L (original external ids kept)
  std::vector<int> retained;      // original bus indices, in original order
  Mat a_sharp;                    // |E_original| x |E_reduced|
  std::vector<Line> original_lines;  // the constraint-carrying lines
};

/// Eliminates the zero-injection buses. With Z empty the case is returned
/// unchanged and a_sharp is the identity.
inline ReducedNetwork kron_reduce(const NetworkCase& c) {
  ReducedNetwork r;
  r.original_lines = c.lines;
  if (c.zero_injection.empty()) {
    r.reduced = c;
    r.retained.resize(c.n_buses());
    for (int i = 0; i < c.n_buses(); ++i) r.retained[i] = i;
    r.a_sharp = Mat::Identity(c.n_lines(), c.n_lines());
    return r;
  }
  if (static_cast<int>(c.zero_injection.size()) == c.n_buses())
    throw ValidationError("kron_reduce: every bus is zero-injection, nothing to retain");

  const GraphMatrices g = graph_matrices(c);
  const int n = c.n_buses();
  std::vector<char> is_zero(n, 0);
  for (int i : c.zero_injection) is_zero[i] = 1;
  for (int i = 0; i < n; ++i)
    if (!is_zero[i]) r.retained.push_back(i);
  const int nr = static_cast<int>(r.retained.size());
  const int nz = static_cast<int>(c.zero_injection.size());

  Mat l_rr(nr, nr), l_rz(nr, nz), l_zz(nz, nz);
  for (int a = 0; a < nr; ++a) {
    for (int b = 0; b < nr; ++b) l_rr(a, b) = g.laplacian(r.retained[a], r.retained[b]);
    for (int b = 0; b < nz; ++b) l_rz(a, b) = g.laplacian(r.retained[a], c.zero_injection[b]);
  }
  for (int a = 0; a < nz; ++a)
    for (int b = 0; b < nz; ++b) l_zz(a, b) = g.laplacian(c.zero_injection[a], c.zero_injection[b]);

  Eigen::LDLT<Mat> zz(l_zz);
  if (zz.info() != Eigen::Success)
    throw NumericalError("kron_reduce: interior block is singular");
  const Mat schur = l_rr - l_rz * zz.solve(l_rz.transpose());

  // reduced case: retained buses, edges from Schur off-diagonals
  r.reduced.base_mva = c.base_mva;
  for (int a = 0; a < nr; ++a) r.reduced.buses.push_back(c.buses[r.retained[a]]);

  // reuse orientation and id of a surviving original line when one exists
  std::map<std::pair<int, int>, const Line*> original_between;
  for (const Line& l : c.lines)
    original_between[{std::min(l.from, l.to), std::max(l.from, l.to)}] = &l;
  std::vector<int> retained_pos(n, -1);
  for (int a = 0; a < nr; ++a) retained_pos[r.retained[a]] = a;

  int next_id = 0;
  for (const Line& l : c.lines) next_id = std::max(next_id, l.id + 1);
  constexpr double kFillTol = 1e-12;
  for (int a = 0; a < nr; ++a) {
    for (int b = a + 1; b < nr; ++b) {
      const double w = -schur(a, b);
      if (w <= kFillTol) continue;
      Line edge;
      edge.susceptance = w;
      const int oi = r.retained[a];
      const int oj = r.retained[b];
      const auto it = original_between.find({std::min(oi, oj), std::max(oi, oj)});
      if (it != original_between.end()) {
        edge.id = it->second->id;
        edge.from = retained_pos[it->second->from];
        edge.to = retained_pos[it->second->to];
      } else {
        edge.id = next_id++;
        edge.from = a;
        edge.to = b;
      }
      r.reduced.lines.push_back(edge);
    }
  }

  for (const Area& area : c.areas) {
    Area reduced_area;
    reduced_area.id = area.id;
    reduced_area.scheduled_export = area.scheduled_export;
    for (int i : area.buses)
      if (retained_pos[i] >= 0) reduced_area.buses.push_back(retained_pos[i]);
    r.reduced.areas.push_back(reduced_area);
  }
  r.reduced.rebuild_kind_sets();
  detail::check_connected(r.reduced);

  // A_sharp = B C^T Ldag(:, retained) C_sharp  (flow-recovery map)
  const GraphMatrices gr = graph_matrices(r.reduced);
  const Mat pinv = laplacian_pinv(g.laplacian);
  Mat pinv_retained(n, nr);
  for (int a = 0; a < nr; ++a) pinv_retained.col(a) = pinv.col(r.retained[a]);
  r.a_sharp = g.susceptance.asDiagonal() * g.incidence.transpose() * pinv_retained * gr.incidence;
  return r;
}

/// Maps reduced-line flows to original-line flows through a_sharp.
inline Vec recover_flows(const ReducedNetwork& r, const Vec& reduced_flows) {
  if (reduced_flows.size() != r.a_sharp.cols())
    throw ValidationError("recover_flows: dimension mismatch");
  return r.a_sharp * reduced_flows;
}

}  // namespace olc

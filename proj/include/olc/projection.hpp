#pragma once

#include <span>

#include "olc/common.hpp"

namespace olc {

/// Positive projection for a single multiplier: passes the drift a through
/// while either the drift or the multiplier u is positive, and clamps it to
/// zero once both are at (or below) the boundary. Keeps inequality
/// multipliers inside the nonnegative orthant without a hard constraint.
inline double project_positive(double a, double u) {
  return (a > 0.0 || u > 0.0) ? a : 0.0;
}

/// Vector form: entries listed in `mask` are projected against the matching
/// entry of u, all the others pass through unchanged.
inline Vec project_positive(const Vec& a, const Vec& u, std::span<const int> mask) {
  if (a.size() != u.size()) throw ValidationError("project_positive: size mismatch");
  Vec out = a;
  for (int i : mask) out[i] = project_positive(a[i], u[i]);
  return out;
}

/// Projects every entry (mask = all indices).
inline Vec project_positive(const Vec& a, const Vec& u) {
  if (a.size() != u.size()) throw ValidationError("project_positive: size mismatch");
  Vec out(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out[i] = project_positive(a[i], u[i]);
  return out;
}

}  // namespace olc

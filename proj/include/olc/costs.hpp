#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "olc/common.hpp"

namespace olc {

/// Strongly convex disutility c(d) of shifting a bus load by d, together with
/// the induced load response d(xi) = c'^{-1}(xi) and curvature bounds.
///
/// Two families:
///  - Quadratic(b):       c(d) = d^2 / (2b) on all of R, c'' = 1/b.
///  - SaturatingTanh(d_max, m): d(xi) = d_max*tanh(xi/m), so
///    c'(d) = m*atanh(d/d_max) on (-d_max, d_max) and c(d) -> +inf at the
///    boundary. Strongly convex (c'' >= m/d_max) but c' is not globally
///    Lipschitz, so it is usable with the base controller only.
class CostModel {
 public:
  enum class Family { Quadratic, SaturatingTanh };

  static CostModel quadratic(double b) {
    if (!(b > 0.0)) throw ValidationError("CostModel: quadratic b must be > 0");
    CostModel m;
    m.family_ = Family::Quadratic;
    m.b_ = b;
    return m;
  }

  static CostModel saturating_tanh(double d_max, double m_par) {
    if (!(d_max > 0.0) || !(m_par > 0.0))
      throw ValidationError("CostModel: tanh d_max and m must be > 0");
    CostModel m;
    m.family_ = Family::SaturatingTanh;
    m.d_max_ = d_max;
    m.m_ = m_par;
    return m;
  }

  Family family() const { return family_; }

  /// Disutility c(d). Throws outside the domain.
  double cost(double d) const {
    if (family_ == Family::Quadratic) return d * d / (2.0 * b_);
    if (std::abs(d) >= d_max_)
      throw ValidationError("CostModel: d outside domain (-d_max, d_max)");
    const double r = d / d_max_;
    // antiderivative of m*atanh(d/d_max), normalized so c(0) = 0
    return m_ * (d * std::atanh(r) + 0.5 * d_max_ * std::log1p(-r * r));
  }

  /// Marginal disutility c'(d).
  double marginal(double d) const {
    if (family_ == Family::Quadratic) return d / b_;
    if (std::abs(d) >= d_max_)
      throw ValidationError("CostModel: d outside domain (-d_max, d_max)");
    return m_ * std::atanh(d / d_max_);
  }

  /// Curvature c''(d).
  double curvature(double d) const {
    if (family_ == Family::Quadratic) return 1.0 / b_;
    if (std::abs(d) >= d_max_)
      throw ValidationError("CostModel: d outside domain (-d_max, d_max)");
    return m_ * d_max_ / (d_max_ * d_max_ - d * d);
  }

  /// Load response d(xi) = c'^{-1}(xi). Total on R, strictly increasing.
  double load_response(double xi) const {
    if (family_ == Family::Quadratic) return b_ * xi;
    return d_max_ * std::tanh(xi / m_);
  }

  /// c(d(xi)) evaluated directly from xi. Total on R: stays finite where the
  /// response has saturated to the domain boundary in floating point.
  double cost_at_response(double xi) const {
    if (family_ == Family::Quadratic) return 0.5 * b_ * xi * xi;
    const double u = xi / m_;
    const double logcosh = std::abs(u) + std::log1p(std::exp(-2.0 * std::abs(u))) - std::log(2.0);
    return m_ * d_max_ * (u * std::tanh(u) - logcosh);
  }

  /// Response slope d'(xi) = 1 / c''(d(xi)).
  double response_slope(double xi) const {
    if (family_ == Family::Quadratic) return b_;
    const double s = 1.0 / std::cosh(xi / m_);
    return (d_max_ / m_) * s * s;
  }

  /// (alpha, L): curvature lower bound and Lipschitz constant of c'.
  /// L is +inf for the saturating family.
  std::pair<double, double> curvature_bounds() const {
    if (family_ == Family::Quadratic) return {1.0 / b_, 1.0 / b_};
    return {m_ / d_max_, std::numeric_limits<double>::infinity()};
  }

  /// True when c' is globally Lipschitz (finite L), as the robust
  /// controller analysis requires.
  bool lipschitz_marginal() const { return family_ == Family::Quadratic; }

  double domain_lower() const {
    return family_ == Family::Quadratic ? -std::numeric_limits<double>::infinity() : -d_max_;
  }
  double domain_upper() const {
    return family_ == Family::Quadratic ? std::numeric_limits<double>::infinity() : d_max_;
  }

 private:
  CostModel() = default;
  Family family_ = Family::Quadratic;
  double b_ = 1.0;      // Quadratic
  double d_max_ = 1.0;  // SaturatingTanh
  double m_ = 1.0;
};

}  // namespace olc

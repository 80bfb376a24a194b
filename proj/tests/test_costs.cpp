#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "olc/costs.hpp"

using namespace olc;
using Catch::Approx;

namespace {

// Simpson quadrature of c'(u) = m*atanh(u/dmax) from 0 to d, the independent
// route to the saturating-family cost values.
double tanh_cost_by_quadrature(double d, double d_max, double m) {
  const int n = 2000;  // even
  const double h = d / n;
  auto f = [&](double u) { return m * std::atanh(u / d_max); };
  double acc = f(0.0) + f(d);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("cost values") {
  SECTION("quadratic is d^2/(2b)") {
    REQUIRE(CostModel::quadratic(1.0).cost(0.2) == Approx(0.02).epsilon(1e-14));
  }
  SECTION("normalized at zero") {
    REQUIRE(CostModel::quadratic(2.0).cost(0.0) == 0.0);
    REQUIRE(CostModel::saturating_tanh(1.0, 1.0).cost(0.0) == 0.0);
  }
  SECTION("saturating family against quadrature") {
    const CostModel c = CostModel::saturating_tanh(1.0, 1.0);
    REQUIRE(c.cost(0.5) == Approx(tanh_cost_by_quadrature(0.5, 1.0, 1.0)).epsilon(1e-10));
    REQUIRE(c.cost(-0.8) == Approx(tanh_cost_by_quadrature(-0.8, 1.0, 1.0)).epsilon(1e-10));
  }
  SECTION("outside the domain") {
    REQUIRE_THROWS_AS(CostModel::saturating_tanh(1.0, 1.0).cost(1.0), ValidationError);
    REQUIRE_NOTHROW(CostModel::quadratic(1.0).cost(100.0));
  }
}

TEST_CASE("load response") {
  SECTION("quadratic responds with slope b") {
    REQUIRE(CostModel::quadratic(1.0).load_response(-0.1) == Approx(-0.1));
  }
  SECTION("odd function through zero") {
    REQUIRE(CostModel::saturating_tanh(1.0, 1.0).load_response(0.0) == 0.0);
  }
  SECTION("saturates at d_max") {
    const CostModel c = CostModel::saturating_tanh(1.0, 1.0);
    REQUIRE(c.load_response(10.0) <= 1.0);
    REQUIRE(c.load_response(10.0) > 1.0 - 1e-8);
    REQUIRE(c.load_response(-10.0) >= -1.0);
  }
}

TEST_CASE("response slope") {
  REQUIRE(CostModel::quadratic(1.0).response_slope(3.7) == 1.0);
  REQUIRE(CostModel::saturating_tanh(1.0, 1.0).response_slope(0.0) == Approx(1.0));
  REQUIRE(CostModel::saturating_tanh(1.0, 1.0).response_slope(10.0) < 1e-8);
}

TEST_CASE("curvature bounds") {
  SECTION("quadratic has matching bounds 1/b") {
    auto [alpha, lip] = CostModel::quadratic(0.5).curvature_bounds();
    REQUIRE(alpha == Approx(2.0));
    REQUIRE(lip == Approx(2.0));
    auto [a1, l1] = CostModel::quadratic(1.0).curvature_bounds();
    REQUIRE(a1 == Approx(1.0));
    REQUIRE(l1 == Approx(1.0));
  }
  SECTION("saturating family curves up without bound") {
    auto [alpha, lip] = CostModel::saturating_tanh(1.0, 1.0).curvature_bounds();
    REQUIRE(alpha == Approx(1.0));  // minimum of c'' at d = 0
    REQUIRE(std::isinf(lip));
    REQUIRE_FALSE(CostModel::saturating_tanh(1.0, 1.0).lipschitz_marginal());
  }
}

TEST_CASE("response calculus round trips") {
  std::mt19937_64 rng(5);
  // saturation amplifies the inversion error by cosh^2(xi/m), so the draw
  // range scales with the curvature parameter
  struct Entry {
    CostModel model;
    double range;
  } entries[] = {{CostModel::quadratic(0.7), 3.0},
                 {CostModel::quadratic(1.0), 3.0},
                 {CostModel::saturating_tanh(1.0, 1.0), 3.0},
                 {CostModel::saturating_tanh(2.0, 0.5), 1.5}};
  for (const auto& [c, range] : entries) {
    std::uniform_real_distribution<double> xi_dist(-range, range);
    double worst_rt = 0.0, worst_slope = 0.0, worst_compose = 0.0;
    for (int s = 0; s < 1000; ++s) {
      const double xi = xi_dist(rng);
      const double d = c.load_response(xi);
      worst_rt = std::max(worst_rt, std::abs(c.marginal(d) - xi));
      worst_slope = std::max(worst_slope, std::abs(c.response_slope(xi) * c.curvature(d) - 1.0));
      worst_compose = std::max(worst_compose, std::abs(c.cost_at_response(xi) - c.cost(d)));
    }
    REQUIRE(worst_rt < 1e-12);
    REQUIRE(worst_slope < 1e-10);
    REQUIRE(worst_compose < 1e-12);
  }
}

TEST_CASE("monotone response on a grid") {
  for (const CostModel& c :
       {CostModel::quadratic(2.0), CostModel::saturating_tanh(1.5, 0.8)}) {
    double prev = c.load_response(-5.0);
    for (double xi = -4.9; xi < 5.0; xi += 0.1) {
      const double d = c.load_response(xi);
      REQUIRE(d > prev);
      prev = d;
    }
  }
}

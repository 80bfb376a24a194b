#include "catch_amalgamated.hpp"

#include <random>

#include "helpers.hpp"
#include "olc/kron.hpp"

using namespace olc;
using Catch::Approx;

TEST_CASE("eliminating the middle bus of a path halves the susceptance") {
  // Schur complement of [[1,-1,0],[-1,2,-1],[0,-1,1]] over the middle row:
  // [[1,0],[0,1]] - 1/2 [[1,1],[1,1]] = [[1/2,-1/2],[-1/2,1/2]]
  const ReducedNetwork r = kron_reduce(testutil::case3_zero());
  REQUIRE(r.reduced.n_buses() == 2);
  REQUIRE(r.reduced.n_lines() == 1);
  REQUIRE(r.reduced.lines[0].susceptance == Approx(0.5).epsilon(1e-14));
  REQUIRE(r.reduced.buses[0].id == 1);
  REQUIRE(r.reduced.buses[1].id == 3);

  // both original flows equal the single reduced flow: theta_2 is the
  // midpoint of its neighbours under zero injection
  REQUIRE(r.a_sharp.rows() == 2);
  REQUIRE(r.a_sharp.cols() == 1);
  REQUIRE(r.a_sharp(0, 0) == Approx(1.0).epsilon(1e-12));
  REQUIRE(r.a_sharp(1, 0) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reduction with no interior buses is the identity") {
  const NetworkCase c = testutil::case2();
  const ReducedNetwork r = kron_reduce(c);
  REQUIRE(r.reduced.n_buses() == c.n_buses());
  REQUIRE(r.reduced.n_lines() == c.n_lines());
  REQUIRE(r.a_sharp.isIdentity(1e-15));
  REQUIRE(recover_flows(r, Vec::Constant(1, 0.7))[0] == 0.7);
}

TEST_CASE("recover_flows maps reduced flows to original lines") {
  const ReducedNetwork r = kron_reduce(testutil::case3_zero());
  SECTION("hand value") {
    const Vec f = recover_flows(r, Vec::Constant(1, 0.8));
    REQUIRE(f[0] == Approx(0.8).epsilon(1e-12));
    REQUIRE(f[1] == Approx(0.8).epsilon(1e-12));
  }
  SECTION("linearity at zero") {
    REQUIRE(recover_flows(r, Vec::Zero(1)).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("dimension mismatch") {
    REQUIRE_THROWS_AS(recover_flows(r, Vec::Zero(2)), ValidationError);
  }
}

TEST_CASE("reducing a case with every bus interior is rejected") {
  nlohmann::json j = {{"buses",
                       {{{"id", 1}, {"kind", "zero"}}, {{"id", 2}, {"kind", "zero"}}}},
                      {"lines", {{{"id", 1}, {"from", 1}, {"to", 2}, {"B", 1.0}}}}};
  REQUIRE_THROWS_AS(kron_reduce(case_from_json(j)), ValidationError);
}

TEST_CASE("recovered flows agree with the full network on the feasible subspace") {
  // random retained angles, interior angles implied by zero net injection
  const NetworkCase c = load_case(testutil::data_path("ieee39_zero.json"));
  REQUIRE(c.zero_injection.size() == 3);
  const ReducedNetwork red = kron_reduce(c);
  const GraphMatrices g = graph_matrices(c);
  const GraphMatrices gr = graph_matrices(red.reduced);

  const int nz = static_cast<int>(c.zero_injection.size());
  const int nr = static_cast<int>(red.retained.size());
  Mat l_zz(nz, nz), l_zr(nz, nr);
  for (int a = 0; a < nz; ++a) {
    for (int b = 0; b < nz; ++b)
      l_zz(a, b) = g.laplacian(c.zero_injection[a], c.zero_injection[b]);
    for (int b = 0; b < nr; ++b) l_zr(a, b) = g.laplacian(c.zero_injection[a], red.retained[b]);
  }
  Eigen::LDLT<Mat> zz(l_zz);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    Vec theta_r(nr);
    for (int i = 0; i < nr; ++i) theta_r[i] = sym(rng);
    Vec theta = Vec::Zero(c.n_buses());
    for (int i = 0; i < nr; ++i) theta[red.retained[i]] = theta_r[i];
    const Vec theta_z = -zz.solve(l_zr * theta_r);
    for (int i = 0; i < nz; ++i) theta[c.zero_injection[i]] = theta_z[i];

    const Vec original = g.susceptance.asDiagonal() * (g.incidence.transpose() * theta);
    const Vec reduced = gr.susceptance.asDiagonal() * (gr.incidence.transpose() * theta_r);
    worst = std::max(worst, (original - recover_flows(red, reduced)).cwiseAbs().maxCoeff());
  }
  REQUIRE(worst < 1e-10);
}

TEST_CASE("reduced Laplacian equals the Schur complement") {
  const NetworkCase c = load_case(testutil::data_path("ieee39_zero.json"));
  const ReducedNetwork red = kron_reduce(c);
  const GraphMatrices g = graph_matrices(c);
  const GraphMatrices gr = graph_matrices(red.reduced);

  const int nz = static_cast<int>(c.zero_injection.size());
  const int nr = static_cast<int>(red.retained.size());
  Mat l_rr(nr, nr), l_rz(nr, nz), l_zz(nz, nz);
  for (int a = 0; a < nr; ++a) {
    for (int b = 0; b < nr; ++b) l_rr(a, b) = g.laplacian(red.retained[a], red.retained[b]);
    for (int b = 0; b < nz; ++b) l_rz(a, b) = g.laplacian(red.retained[a], c.zero_injection[b]);
  }
  for (int a = 0; a < nz; ++a)
    for (int b = 0; b < nz; ++b)
      l_zz(a, b) = g.laplacian(c.zero_injection[a], c.zero_injection[b]);
  const Mat schur = l_rr - l_rz * l_zz.ldlt().solve(l_rz.transpose());
  REQUIRE((gr.laplacian - schur).cwiseAbs().maxCoeff() < 1e-10);
}

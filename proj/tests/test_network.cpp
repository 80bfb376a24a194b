#include "catch_amalgamated.hpp"

#include <fstream>

#include "helpers.hpp"
#include "olc/graph.hpp"
#include "olc/network.hpp"

using namespace olc;
using Catch::Approx;

TEST_CASE("load_case accepts a minimal two-bus file") {
  const std::string path = "minimal_case.json";
  {
    std::ofstream out(path);
    out << R"({"baseMVA":100,
               "buses":[{"id":1,"kind":"generator","M":1.0,"D":0.2,"Pin":0.5},
                        {"id":2,"kind":"load","D":0.2,"Pin":-0.5}],
               "lines":[{"id":1,"from":1,"to":2,"B":1.0}]})";
  }
  const NetworkCase c = load_case(path);
  REQUIRE(c.n_buses() == 2);
  REQUIRE(c.n_lines() == 1);
  REQUIRE(c.generators == std::vector<int>{0});
  REQUIRE(c.load_buses == std::vector<int>{1});
  REQUIRE(c.buses[0].id == 1);
  REQUIRE(c.lines[0].from == 0);
  REQUIRE(c.lines[0].to == 1);
}

TEST_CASE("load_case rejects malformed structure") {
  auto from_json = [](const nlohmann::json& j) { return case_from_json(j); };

  SECTION("antiparallel edge") {
    nlohmann::json j = {
        {"buses",
         {{{"id", 1}, {"kind", "generator"}, {"M", 1.0}, {"D", 0.2}, {"Pin", 0.5}},
          {{"id", 2}, {"kind", "load"}, {"D", 0.2}, {"Pin", -0.5}}}},
        {"lines",
         {{{"id", 1}, {"from", 1}, {"to", 2}, {"B", 1.0}},
          {{"id", 2}, {"from", 2}, {"to", 1}, {"B", 1.0}}}}};
    REQUIRE_THROWS_MATCHES(from_json(j), ValidationError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("antiparallel")));
  }
  SECTION("nonpositive susceptance") {
    nlohmann::json j = {
        {"buses",
         {{{"id", 1}, {"kind", "generator"}, {"M", 1.0}, {"D", 0.2}, {"Pin", 0.5}},
          {{"id", 2}, {"kind", "load"}, {"D", 0.2}, {"Pin", -0.5}}}},
        {"lines", {{{"id", 1}, {"from", 1}, {"to", 2}, {"B", -1.0}}}}};
    REQUIRE_THROWS_AS(from_json(j), ValidationError);
  }
  SECTION("disconnected graph") {
    nlohmann::json j = {
        {"buses",
         {{{"id", 1}, {"kind", "generator"}, {"M", 1.0}, {"D", 0.2}, {"Pin", 0.5}},
          {{"id", 2}, {"kind", "load"}, {"D", 0.2}, {"Pin", -0.5}},
          {{"id", 3}, {"kind", "load"}, {"D", 0.2}, {"Pin", 0.0}}}},
        {"lines", {{{"id", 1}, {"from", 1}, {"to", 2}, {"B", 1.0}}}}};
    REQUIRE_THROWS_MATCHES(from_json(j), ValidationError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("connected")));
  }
  SECTION("generator without inertia") {
    nlohmann::json j = {
        {"buses",
         {{{"id", 1}, {"kind", "generator"}, {"D", 0.2}, {"Pin", 0.5}},
          {{"id", 2}, {"kind", "load"}, {"D", 0.2}, {"Pin", -0.5}}}},
        {"lines", {{{"id", 1}, {"from", 1}, {"to", 2}, {"B", 1.0}}}}};
    REQUIRE_THROWS_AS(from_json(j), ValidationError);
  }
}

TEST_CASE("bundled 39-bus case loads with two areas joined by the tie lines") {
  const NetworkCase c = load_case(testutil::data_path("ieee39.json"));
  REQUIRE(c.n_buses() == 39);
  REQUIRE(c.n_lines() == 46);
  REQUIRE(c.n_areas() == 2);
  REQUIRE(c.generators.size() == 10);

  const GraphMatrices g = graph_matrices(c);
  // area rows carry +-1 exactly on lines (1,2), (2,3), (26,27)
  const std::vector<int> tie_ids = {1, 3, 42};
  for (int k = 0; k < 2; ++k) {
    int nonzero = 0;
    for (int e = 0; e < c.n_lines(); ++e) {
      if (g.area_boundary(k, e) != 0.0) {
        ++nonzero;
        REQUIRE(std::abs(g.area_boundary(k, e)) == 1.0);
        REQUIRE(std::find(tie_ids.begin(), tie_ids.end(), c.lines[e].id) != tie_ids.end());
      }
    }
    REQUIRE(nonzero == 3);
  }
}

TEST_CASE("balance_injections spreads the mismatch over the load buses") {
  SECTION("single load bus absorbs everything") {
    NetworkCase c = testutil::case2();
    c.buses[1].injection = -0.3;
    const NetworkCase b = balance_injections(c);
    REQUIRE(b.buses[0].injection == Approx(0.5));
    REQUIRE(b.buses[1].injection == Approx(-0.5));
  }
  SECTION("already balanced is an identity") {
    const NetworkCase b = balance_injections(testutil::case2());
    REQUIRE(b.buses[0].injection == 0.5);
    REQUIRE(b.buses[1].injection == -0.5);
  }
  SECTION("mismatch splits evenly among the loads") {
    NetworkCase c = testutil::case3();
    c.buses[1].injection = -0.4;
    c.buses[2].injection = -0.3;
    const NetworkCase b = balance_injections(c);
    REQUIRE(b.buses[0].injection == Approx(1.0));
    REQUIRE(b.buses[1].injection == Approx(-0.55));
    REQUIRE(b.buses[2].injection == Approx(-0.45));
    REQUIRE(injections(b).sum() == Approx(0.0).margin(1e-15));
  }
  SECTION("no load buses is an error") {
    nlohmann::json j = {
        {"buses",
         {{{"id", 1}, {"kind", "generator"}, {"M", 1.0}, {"D", 0.2}, {"Pin", 0.5}},
          {{"id", 2}, {"kind", "generator"}, {"M", 1.0}, {"D", 0.2}, {"Pin", -0.5}}}},
        {"lines", {{{"id", 1}, {"from", 1}, {"to", 2}, {"B", 1.0}}}}};
    REQUIRE_THROWS_AS(balance_injections(case_from_json(j)), ValidationError);
  }
}

TEST_CASE("graph matrices match their definitions") {
  SECTION("two-bus incidence") {
    const GraphMatrices g = graph_matrices(testutil::case2());
    REQUIRE(g.incidence(0, 0) == 1.0);
    REQUIRE(g.incidence(1, 0) == -1.0);
  }
  SECTION("three-bus path Laplacian, by hand") {
    const GraphMatrices g = graph_matrices(testutil::case3());
    Mat want(3, 3);
    want << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    REQUIRE((g.laplacian - want).cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("column sums vanish and the Laplacian annihilates constants") {
    const GraphMatrices g = graph_matrices(load_case(testutil::data_path("ieee39.json")));
    REQUIRE(g.incidence.colwise().sum().cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((g.laplacian * Vec::Ones(39)).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Mat> eig(g.laplacian);
    REQUIRE(eig.eigenvalues().minCoeff() > -1e-9);
  }
  SECTION("area-boundary rows equal the membership-indicator product") {
    for (const NetworkCase& c :
         {testutil::case3(), load_case(testutil::data_path("ieee39.json"))}) {
      const GraphMatrices g = graph_matrices(c);
      for (int k = 0; k < c.n_areas(); ++k) {
        Vec indicator = Vec::Zero(c.n_buses());
        for (int i : c.areas[k].buses) indicator[i] = 1.0;
        const Vec row = g.incidence.transpose() * indicator;
        REQUIRE((row.transpose() - g.area_boundary.row(k)).cwiseAbs().maxCoeff() < 1e-14);
      }
    }
  }
}

TEST_CASE("dc power flow solves the pre-fault stationary point") {
  SECTION("two-bus angles from the 2x2 pseudo-inverse") {
    const NetworkCase c = testutil::case2();
    const DcFlow f = dc_power_flow(c);
    REQUIRE(f.theta[0] == Approx(0.25).epsilon(1e-12));
    REQUIRE(f.theta[1] == Approx(-0.25).epsilon(1e-12));
    REQUIRE(f.flows[0] == Approx(0.5).epsilon(1e-12));
  }
  SECTION("zero injections give the zero flow") {
    NetworkCase c = testutil::case2();
    c.buses[0].injection = 0.0;
    c.buses[1].injection = 0.0;
    const DcFlow f = dc_power_flow(c);
    REQUIRE(f.theta.cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE(f.flows.cwiseAbs().maxCoeff() < 1e-14);
  }
  SECTION("series path carries the injection end to end") {
    NetworkCase c = testutil::case3();
    c.buses[1].injection = 0.0;
    c.buses[2].injection = -1.0;
    const DcFlow f = dc_power_flow(c);
    REQUIRE(f.flows[0] == Approx(1.0).epsilon(1e-12));
    REQUIRE(f.flows[1] == Approx(1.0).epsilon(1e-12));
  }
  SECTION("residual on the 39-bus case") {
    const NetworkCase c = balance_injections(load_case(testutil::data_path("ieee39.json")));
    const GraphMatrices g = graph_matrices(c);
    const DcFlow f = dc_power_flow(c, g);
    REQUIRE((g.laplacian * f.theta - injections(c)).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(std::abs(f.theta.sum()) < 1e-10);
  }
  SECTION("unbalanced injections are rejected") {
    NetworkCase c = testutil::case2();
    c.buses[1].injection = -0.3;
    REQUIRE_THROWS_AS(dc_power_flow(c), ValidationError);
  }
}

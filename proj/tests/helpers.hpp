#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "olc/model.hpp"
#include "olc/network.hpp"
#include "olc/scenario.hpp"

namespace testutil {

inline std::string data_path(const std::string& name) {
  return std::string(OLC_DATA_DIR) + "/" + name;
}

/// Two buses, one line: generator (M=1, D=0.2, +0.5) feeding a load (-0.5).
inline olc::NetworkCase case2() {
  const nlohmann::json j = {
      {"baseMVA", 100},
      {"buses",
       {{{"id", 1}, {"kind", "generator"}, {"M", 1.0}, {"D", 0.2}, {"Pin", 0.5}},
        {{"id", 2}, {"kind", "load"}, {"D", 0.2}, {"Pin", -0.5}}}},
      {"lines", {{{"id", 1}, {"from", 1}, {"to", 2}, {"B", 1.0}}}}};
  return olc::case_from_json(j);
}

/// Three-bus path 1-2-3 with unit susceptances and two areas {1} and {2,3}.
inline olc::NetworkCase case3() {
  const nlohmann::json j = {
      {"baseMVA", 100},
      {"buses",
       {{{"id", 1}, {"kind", "generator"}, {"M", 1.0}, {"D", 0.2}, {"Pin", 1.0}},
        {{"id", 2}, {"kind", "load"}, {"D", 0.2}, {"Pin", -0.4}},
        {{"id", 3}, {"kind", "load"}, {"D", 0.2}, {"Pin", -0.6}}}},
      {"lines",
       {{{"id", 1}, {"from", 1}, {"to", 2}, {"B", 1.0}},
        {{"id", 2}, {"from", 2}, {"to", 3}, {"B", 1.0}}}},
      {"areas",
       {{{"id", 1}, {"buses", {1}}}, {{"id", 2}, {"buses", {2, 3}}}}}};
  return olc::case_from_json(j);
}

/// Path 1-2-3 with the middle bus carrying no injection (the hand-reduction
/// example: a single equivalent line of susceptance 1/2).
inline olc::NetworkCase case3_zero() {
  const nlohmann::json j = {
      {"baseMVA", 100},
      {"buses",
       {{{"id", 1}, {"kind", "generator"}, {"M", 1.0}, {"D", 0.2}, {"Pin", 0.5}},
        {{"id", 2}, {"kind", "zero"}},
        {{"id", 3}, {"kind", "load"}, {"D", 0.2}, {"Pin", -0.5}}}},
      {"lines",
       {{{"id", 1}, {"from", 1}, {"to", 2}, {"B", 1.0}},
        {{"id", 2}, {"from", 2}, {"to", 3}, {"B", 1.0}}}}};
  return olc::case_from_json(j);
}

inline olc::SystemModel quadratic_model(const olc::NetworkCase& c,
                                        olc::ModelOptions opt = {}) {
  return olc::build_model_uniform(c, olc::CostModel::quadratic(1.0), opt);
}

}  // namespace testutil

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace olc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when an input (case file, scenario, argument) violates its contract.
/// Maps to CLI exit code 1.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an iterative numerical procedure fails to converge.
/// Maps to CLI exit code 2.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace olc

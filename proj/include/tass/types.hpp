#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tass {

using complex_t = std::complex<double>;
using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double pi = std::numbers::pi;
inline constexpr complex_t I{0.0, 1.0};

// Error taxonomy. Each maps to one CLI exit code (see tools/cli.hpp).
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ResourceLimit : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidState : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateOutcome : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SearchFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FitFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Largest atom number for which (N+1)^2-dimensional operators are built.
inline constexpr int kFullSpaceMaxAtoms = 64;

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace tass

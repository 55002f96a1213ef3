#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Eigenvalues>

#include "tass/evolution.hpp"
#include "tass/observables.hpp"
#include "tass/types.hpp"

namespace tass {

struct ReducedDensity {
  CMatrix matrix;
  int n_atoms() const { return static_cast<int>(matrix.rows()) - 1; }
};

/// Partial trace over the other ensemble. For sector states rho = diag(|c_k|^2)
/// for either ensemble; the full path contracts the amplitude matrix.
inline ReducedDensity reduced_density(const JointState& state, int keep = 2) {
  require(keep == 1 || keep == 2, "reduced_density: ensemble must be 1 or 2");
  if (state.is_sector()) {
    return {state.amplitudes.cwiseAbs2().cast<complex_t>().asDiagonal().toDenseMatrix()};
  }
  const CMatrix a = state.amplitude_matrix();
  if (keep == 2) return {a.transpose() * a.conjugate()};
  return {a * a.adjoint()};
}

/// Spectrum of rho with round-off negativity above -1e-12 clamped to zero.
inline RVector density_spectrum(const ReducedDensity& rho) {
  const CMatrix& m = rho.matrix;
  const double trace = m.trace().real();
  if (std::abs(trace - 1.0) > 1e-8)
    throw InvalidState("reduced density has trace " + std::to_string(trace));
  RVector lambda;
  const CMatrix off = m - CMatrix(m.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() == 0.0) {
    lambda = m.diagonal().real();
  } else {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
    lambda = es.eigenvalues();
  }
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -1e-12) throw InvalidState("reduced density is not positive semidefinite");
    lambda(i) = std::max(lambda(i), 0.0);
  }
  return lambda;
}

/// -Tr(rho log2 rho) in bits.
inline double von_neumann_entropy(const ReducedDensity& rho) {
  double e = 0.0;
  for (double l : density_spectrum(rho)) {
    if (l > 0.0) e -= l * std::log2(l);
  }
  return e;
}

inline double max_entropy(int n_atoms) { return std::log2(n_atoms + 1.0); }

/// Entanglement entropy of a pure two-ensemble state.
inline double entanglement_entropy(const JointState& state) {
  return von_neumann_entropy(reduced_density(state));
}

// ---------------------------------------------------------------------------
// Variance-based separability criteria. Each left-hand side is >= 1 for any
// separable state; a value below one witnesses inter-ensemble entanglement.

enum class CriterionName { GMVT, DGCZ, HT };

inline std::string to_string(CriterionName n) {
  switch (n) {
    case CriterionName::GMVT: return "GMVT";
    case CriterionName::DGCZ: return "DGCZ";
    case CriterionName::HT: return "HT";
  }
  return "?";
}

inline CriterionName parse_criterion(std::string_view s) {
  if (s == "GMVT") return CriterionName::GMVT;
  if (s == "DGCZ") return CriterionName::DGCZ;
  if (s == "HT") return CriterionName::HT;
  throw InvalidArgument("unknown criterion '" + std::string(s) + "'");
}

struct CriterionResult {
  CriterionName name = CriterionName::HT;
  double lhs = 0.0;
  double bound = 1.0;
  bool detected = false;
  bool guard = false;  // denominator |<Sz1>|+|<Sz2>| below 1e-9 N
  double gx = 1.0;
  double gy = 1.0;
};

/// Margin below the bound required for detection; the product state sits on
/// the bound up to round-off.
inline constexpr double kDetectionMargin = 1e-12;

struct CriterionWeights {
  double gx = 1.0;
  double gy = 1.0;
};

inline CriterionResult criterion(const JointState& state, CriterionName name, CriterionWeights w = {}) {
  CriterionResult r;
  r.name = name;
  r.gx = w.gx;
  r.gy = w.gy;
  const double n = state.n_atoms;
  if (name == CriterionName::HT) {
    const double num = variance(state, TwoSpinObservable::sq_x()) +
                       variance(state, TwoSpinObservable::sq_y()) +
                       variance(state, TwoSpinObservable::sz_diff());
    r.lhs = num / (4.0 * n);
    r.detected = r.lhs < r.bound - kDetectionMargin;
    return r;
  }
  const double polarization =
      std::abs(expectation(state, OpLabel::Sz, 1)) + std::abs(expectation(state, OpLabel::Sz, 2));
  if (polarization <= 1e-9 * n) {
    r.guard = true;
    r.lhs = std::numeric_limits<double>::infinity();
    r.detected = false;
    return r;
  }
  if (name == CriterionName::GMVT) {
    require(w.gx != 0.0 && w.gy != 0.0, "criterion: GMVT weights must be nonzero");
    const double vx = variance(state, TwoSpinObservable::weighted(OpLabel::SxTilde, OpLabel::SxTilde, w.gx, 1.0));
    const double vy = variance(state, TwoSpinObservable::weighted(OpLabel::SyTilde, OpLabel::SyTilde, w.gy, -1.0));
    r.lhs = std::sqrt(vx * vy) / (std::abs(w.gx * w.gy) * polarization);
  } else {
    const double num = variance(state, TwoSpinObservable::sq_x()) + variance(state, TwoSpinObservable::sq_y());
    r.lhs = num / (2.0 * polarization);
  }
  r.detected = r.lhs < r.bound - kDetectionMargin;
  return r;
}

/// GMVT with (gx, gy) minimized over the Cartesian product of the given values.
inline CriterionResult gmvt_weight_scan(const JointState& state, const std::vector<double>& weights) {
  require(!weights.empty(), "gmvt_weight_scan: empty weight grid");
  CriterionResult best;
  best.lhs = std::numeric_limits<double>::infinity();
  bool first = true;
  for (double gx : weights)
    for (double gy : weights) {
      const CriterionResult r = criterion(state, CriterionName::GMVT, {gx, gy});
      if (first || r.lhs < best.lhs) best = r;
      first = false;
    }
  return best;
}

/// Normalized entropy E/E_max of the two-mode squeezed vacuum at the
/// Holstein-Primakoff validity time tau = ln(4N)/(2N), from
///   E = c(|d| log2(c/|d|) - log2 c)/(|d|-1)^2, c = 1 - tanh^2(N tau), |d| = tanh^2(N tau).
inline double hp_entropy_ratio(int n_atoms) {
  require(n_atoms >= 2, "hp_entropy_ratio: N must be >= 2");
  const double tau = hp_validity_time(n_atoms);
  const double t = std::tanh(n_atoms * tau);
  const double d = t * t;
  const double c = 1.0 - d;
  const double e = c * (d * std::log2(c / d) - std::log2(c)) / ((d - 1.0) * (d - 1.0));
  return e / max_entropy(n_atoms);
}

}  // namespace tass

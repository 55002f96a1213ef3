#pragma once

// CHSH test with sign-binned collective spin measurements
//   M(theta) = sgn(Sx~ cos theta + Sy~ sin theta)
// at angles (theta1^(1), theta1^(2), theta2^(1), theta2^(2)) = (0, tB, tB/2, -tB/2).

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "tass/evolution.hpp"
#include "tass/observables.hpp"
#include "tass/parallel.hpp"
#include "tass/spin_core.hpp"
#include "tass/types.hpp"

namespace tass {

/// Outcome assigned to the zero eigenvalue that exists for even N.
enum class ZeroSign { plus, minus };

struct DichotomicMeasurement {
  double theta = 0.0;
  RVector eigenvalues;  // ascending, 2k - N
  RVector signs;        // +-1 per eigenvector
  CMatrix eigenbasis;   // column i has eigenvalue eigenvalues(i)
  CMatrix op;           // sum_i signs(i) |v_i><v_i|

  MeasurementBasis basis() const { return {"M(" + std::to_string(theta) + ")", eigenbasis}; }
};

inline DichotomicMeasurement build_measurement(const SpinSpace& space, double theta,
                                               ZeroSign zero = ZeroSign::plus) {
  const CMatrix a = std::cos(theta) * build_operator(space, OpLabel::SxTilde).matrix +
                    std::sin(theta) * build_operator(space, OpLabel::SyTilde).matrix;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
  if (es.info() != Eigen::Success) throw InvalidState("build_measurement: eigensolver failed");
  DichotomicMeasurement m{theta, es.eigenvalues(), RVector(space.dim()), es.eigenvectors(), {}};
  for (int i = 0; i < space.dim(); ++i) {
    const double ev = m.eigenvalues(i);
    // Eigenvalues are integers 2k-N, so 1/2 separates zero from the rest.
    if (std::abs(ev) < 0.5) m.signs(i) = zero == ZeroSign::plus ? 1.0 : -1.0;
    else m.signs(i) = ev > 0 ? 1.0 : -1.0;
  }
  m.op = m.eigenbasis * m.signs.cast<complex_t>().asDiagonal() * m.eigenbasis.adjoint();
  return m;
}

struct ChshSetting {
  double theta_b = pi / 2.0;
  double tau = 0.0;

  std::array<double, 4> angles() const { return {0.0, theta_b, theta_b / 2.0, -theta_b / 2.0}; }
};

/// <M1 x M2> = sum_{i,j} s1_i s2_j p(i,j) in the two measurement eigenbases.
inline double correlator(const JointState& state, const DichotomicMeasurement& m1,
                         const DichotomicMeasurement& m2) {
  const JointDistribution p = joint_distribution(state, m1.basis(), m2.basis());
  return m1.signs.transpose() * p.probs * m2.signs;
}

/// Same correlator from the binned operators, sum_{k,k'} c_k^* c_k' M1_kk' M2_kk'.
inline double sector_operator_correlator(const JointState& state, const DichotomicMeasurement& m1,
                                         const DichotomicMeasurement& m2) {
  require_sector(state, "sector_operator_correlator");
  return sector_correlator(state.amplitudes, m1.op, m2.op).real();
}

inline double chsh_combination(double e11, double e12, double e21, double e22) {
  return std::abs(e11 + e12 - e21 + e22);
}

inline double chsh_value(const JointState& state, double theta_b, ZeroSign zero = ZeroSign::plus) {
  const SpinSpace space(state.n_atoms);
  const ChshSetting s{theta_b, 0.0};
  const auto a = s.angles();
  const auto a1 = build_measurement(space, a[0], zero);
  const auto a2 = build_measurement(space, a[1], zero);
  const auto b1 = build_measurement(space, a[2], zero);
  const auto b2 = build_measurement(space, a[3], zero);
  return chsh_combination(correlator(state, a1, b1), correlator(state, a1, b2), correlator(state, a2, b1),
                          correlator(state, a2, b2));
}

struct BellOptimum {
  int n_atoms = 0;
  double chsh = 0.0;
  double theta_b = 0.0;
  double tau = 0.0;
};

struct BellSearchOptions {
  int theta_points = 181;     // coarse grid over (0, pi]
  int tau_points = 21;        // coarse grid over the tau window
  double tau_lo_factor = 0.5;  // window [lo, hi] * tau hint
  double tau_hi_factor = 1.5;
  double theta_tol = 1e-4;
  double tau_tol = 1e-5;
  int max_sweeps = 20;
  ZeroSign zero = ZeroSign::plus;
  int threads = 0;
};

namespace detail {

/// Golden-section maximization of f on [a, b].
template <class F>
std::pair<double, double> golden_max(F&& f, double a, double b, double tol) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace detail

/// Maximizes C over theta_B in (0, pi] and tau in a window around the hint:
/// coarse grid, then alternating golden-section refinement of each coordinate.
inline BellOptimum optimize_violation(int n_atoms, double tau_hint, const BellSearchOptions& opt = {}) {
  require(n_atoms >= 1, "optimize_violation: N must be >= 1");
  require(tau_hint > 0.0, "optimize_violation: tau hint must be positive");
  require(opt.theta_points >= 3 && opt.tau_points >= 2, "optimize_violation: grid too small");
  const SpinSpace space(n_atoms);
  const Propagator prop(n_atoms);
  const CMatrix m0 = build_measurement(space, 0.0, opt.zero).op;

  auto value = [&](const JointState& st, double tb) {
    const CMatrix ma = build_measurement(space, tb, opt.zero).op;
    const CMatrix mb1 = build_measurement(space, tb / 2.0, opt.zero).op;
    const CMatrix mb2 = build_measurement(space, -tb / 2.0, opt.zero).op;
    const CVector& c = st.amplitudes;
    return chsh_combination(sector_correlator(c, m0, mb1).real(), sector_correlator(c, m0, mb2).real(),
                            sector_correlator(c, ma, mb1).real(), sector_correlator(c, ma, mb2).real());
  };

  // Coarse grid: measurement operators are shared across tau.
  const double t_lo = opt.tau_lo_factor * tau_hint, t_hi = opt.tau_hi_factor * tau_hint;
  const double dth = pi / (opt.theta_points - 1);
  std::vector<double> thetas(opt.theta_points);
  for (int i = 0; i < opt.theta_points; ++i) thetas[i] = dth * i;
  thetas[0] = 1e-3 * dth;  // theta_B = 0 is a trivial setting
  std::vector<std::array<CMatrix, 3>> ops(opt.theta_points);
  parallel_for(opt.theta_points, opt.threads, [&](int i) {
    ops[i] = {build_measurement(space, thetas[i], opt.zero).op,
              build_measurement(space, thetas[i] / 2.0, opt.zero).op,
              build_measurement(space, -thetas[i] / 2.0, opt.zero).op};
  });
  std::vector<double> taus(opt.tau_points);
  for (int j = 0; j < opt.tau_points; ++j) taus[j] = t_lo + (t_hi - t_lo) * j / (opt.tau_points - 1);
  RMatrix grid(opt.tau_points, opt.theta_points);
  parallel_for(opt.tau_points, opt.threads, [&](int j) {
    const CVector c = prop.evolve(taus[j]).amplitudes;
    for (int i = 0; i < opt.theta_points; ++i) {
      const auto& o = ops[i];
      grid(j, i) = chsh_combination(sector_correlator(c, m0, o[1]).real(), sector_correlator(c, m0, o[2]).real(),
                                    sector_correlator(c, o[0], o[1]).real(),
                                    sector_correlator(c, o[0], o[2]).real());
    }
  });
  Eigen::Index jb, ib;
  double best = grid.maxCoeff(&jb, &ib);
  double tb = thetas[ib], tau = taus[jb];

  // Alternating refinement inside one coarse cell around the incumbent.
  double th_half = dth, tau_half = (t_hi - t_lo) / (opt.tau_points - 1);
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    const double prev_tb = tb, prev_tau = tau;
    const JointState st = prop.evolve(tau);
    auto [tb_new, c1] = detail::golden_max([&](double x) { return value(st, x); }, std::max(1e-6, tb - th_half),
                                           std::min(pi, tb + th_half), opt.theta_tol);
    if (c1 > best) {
      best = c1;
      tb = tb_new;
    }
    auto [tau_new, c2] = detail::golden_max([&](double t) { return value(prop.evolve(t), tb); },
                                            std::max(t_lo, tau - tau_half), std::min(t_hi, tau + tau_half),
                                            opt.tau_tol);
    if (c2 > best) {
      best = c2;
      tau = tau_new;
    }
    th_half = std::max(opt.theta_tol, 0.5 * th_half);
    tau_half = std::max(opt.tau_tol, 0.5 * tau_half);
    if (std::abs(tb - prev_tb) < opt.theta_tol && std::abs(tau - prev_tau) < opt.tau_tol && sweep > 0) break;
  }
  return {n_atoms, best, tb, tau};
}

}  // namespace tass

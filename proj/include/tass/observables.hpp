#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "tass/evolution.hpp"
#include "tass/spin_core.hpp"
#include "tass/types.hpp"

namespace tass {

// ---------------------------------------------------------------------------
// Sector-state kernels. For psi = sum_k c_k |k,k>:
//   <A x 1> = sum_k |c_k|^2 A_kk
//   <A x B> = sum_{k,k'} c_k^* c_k' A_kk' B_kk'
// Band-limited operators (all collective spin components) cost O(N).

namespace detail {

inline double sector_local_expectation(const CVector& c, const CMatrix& a) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < c.size(); ++k) acc += std::norm(c(k)) * a(k, k).real();
  return acc;
}

/// <A^2 x 1> for Hermitian A with the given half-bandwidth.
inline double sector_local_square(const CVector& c, const CMatrix& a, int band) {
  const Eigen::Index d = c.size();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    double row = 0.0;
    for (Eigen::Index j = std::max<Eigen::Index>(0, k - band); j <= std::min(d - 1, k + band); ++j)
      row += std::norm(a(k, j));
    acc += std::norm(c(k)) * row;
  }
  return acc;
}

}  // namespace detail

/// sum_{k,k'} c_k^* c_k' A_kk' B_kk'. Pass band < 0 for dense operators.
inline complex_t sector_correlator(const CVector& c, const CMatrix& a, const CMatrix& b, int band = -1) {
  const Eigen::Index d = c.size();
  complex_t acc = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const Eigen::Index lo = band < 0 ? 0 : std::max<Eigen::Index>(0, k - band);
    const Eigen::Index hi = band < 0 ? d - 1 : std::min(d - 1, k + band);
    complex_t row = 0.0;
    for (Eigen::Index kp = lo; kp <= hi; ++kp) row += a(k, kp) * b(k, kp) * c(kp);
    acc += std::conj(c(k)) * row;
  }
  return acc;
}

// ---------------------------------------------------------------------------

/// <S_label> on ensemble 1 or 2.
inline double expectation(const JointState& state, OpLabel label, int ensemble) {
  require(ensemble == 1 || ensemble == 2, "expectation: ensemble must be 1 or 2");
  const SpinSpace space(state.n_atoms);
  const CMatrix op = build_operator(space, label).matrix;
  if (state.is_sector()) {
    // The partner ensemble's Fock index is diagonal, so only A_kk survives.
    return detail::sector_local_expectation(state.amplitudes, op);
  }
  const CMatrix full = on_ensemble(op, ensemble);
  return state.amplitudes.dot(full * state.amplitudes).real();
}

/// O = g1 A x 1 + g2 1 x B.
struct TwoSpinObservable {
  OpLabel first = OpLabel::SxTilde;
  OpLabel second = OpLabel::SxTilde;
  double g1 = 1.0;
  double g2 = 1.0;
  std::string name = "custom";

  static TwoSpinObservable sq_x() { return {OpLabel::SxTilde, OpLabel::SxTilde, 1.0, 1.0, "Sx~1+Sx~2"}; }
  static TwoSpinObservable sq_y() { return {OpLabel::SyTilde, OpLabel::SyTilde, 1.0, -1.0, "Sy~1-Sy~2"}; }
  static TwoSpinObservable asq_x() { return {OpLabel::SxTilde, OpLabel::SxTilde, 1.0, -1.0, "Sx~1-Sx~2"}; }
  static TwoSpinObservable asq_y() { return {OpLabel::SyTilde, OpLabel::SyTilde, 1.0, 1.0, "Sy~1+Sy~2"}; }
  static TwoSpinObservable sz_diff() { return {OpLabel::Sz, OpLabel::Sz, 1.0, -1.0, "Sz1-Sz2"}; }
  static TwoSpinObservable weighted(OpLabel a, OpLabel b, double g1, double g2) {
    return {a, b, g1, g2, "custom"};
  }
};

/// Var(O) = <O^2> - <O>^2, clamped at zero for round-off below 1e-10.
inline double variance(const JointState& state, const TwoSpinObservable& obs) {
  const SpinSpace space(state.n_atoms);
  const CMatrix a = build_operator(space, obs.first).matrix;
  const CMatrix b = build_operator(space, obs.second).matrix;
  double mean;
  double second;
  if (state.is_sector()) {
    const CVector& c = state.amplitudes;
    mean = obs.g1 * detail::sector_local_expectation(c, a) + obs.g2 * detail::sector_local_expectation(c, b);
    second = obs.g1 * obs.g1 * detail::sector_local_square(c, a, 1) +
             obs.g2 * obs.g2 * detail::sector_local_square(c, b, 1) +
             2.0 * obs.g1 * obs.g2 * sector_correlator(c, a, b, 1).real();
  } else {
    const CMatrix o = obs.g1 * on_ensemble(a, 1) + obs.g2 * on_ensemble(b, 2);
    const CVector opsi = o * state.amplitudes;
    mean = state.amplitudes.dot(opsi).real();
    second = opsi.squaredNorm();
  }
  const double var = second - mean * mean;
  if (var < -1e-10 * std::max(1.0, second))
    throw InvalidState("variance: negative variance " + std::to_string(var));
  return std::max(var, 0.0);
}

// ---------------------------------------------------------------------------
// Holstein-Primakoff reference curves.

enum class SqueezeKind { sq, asq };

/// 2N exp(-+2N tau).
inline double hp_variance(int n_atoms, double tau, SqueezeKind kind) {
  const double sgn = kind == SqueezeKind::sq ? -1.0 : 1.0;
  return 2.0 * n_atoms * std::exp(sgn * 2.0 * n_atoms * tau);
}

/// ln(4N)/(2N): the time scale where the a-level population reaches ~N.
inline double hp_validity_time(int n_atoms) {
  require(n_atoms >= 1, "hp_validity_time: N must be >= 1");
  return std::log(4.0 * n_atoms) / (2.0 * n_atoms);
}

// ---------------------------------------------------------------------------
// Measurement bases and joint distributions.

struct MeasurementBasis {
  std::string label;
  CMatrix unitary;  // column k is the outcome-k eigenvector; outcome value 2k-N
};

inline MeasurementBasis basis_from_letter(const SpinSpace& space, char letter) {
  switch (letter) {
    case 'x': return {"x", build_rotated_basis(space, pi / 2.0, 0.0).unitary};
    case 'y': return {"y", build_rotated_basis(space, pi / 2.0, pi / 2.0).unitary};
    case 'z': return {"z", CMatrix::Identity(space.dim(), space.dim())};
    default: throw InvalidArgument(std::string("unknown basis letter '") + letter + "'");
  }
}

inline MeasurementBasis basis_from_angles(const SpinSpace& space, double theta, double phi) {
  return {"(" + std::to_string(theta) + "," + std::to_string(phi) + ")",
          build_rotated_basis(space, theta, phi).unitary};
}

struct JointDistribution {
  std::string label1;
  std::string label2;
  RMatrix probs;  // probs(k1, k2)

  int n_atoms() const { return static_cast<int>(probs.rows()) - 1; }

  /// Covariance of the outcome values 2k1-N and 2k2-N.
  double covariance() const {
    const int n = n_atoms();
    double m1 = 0, m2 = 0, m12 = 0;
    for (int k1 = 0; k1 <= n; ++k1)
      for (int k2 = 0; k2 <= n; ++k2) {
        const double v1 = 2.0 * k1 - n, v2 = 2.0 * k2 - n, p = probs(k1, k2);
        m1 += p * v1;
        m2 += p * v2;
        m12 += p * v1 * v2;
      }
    return m12 - m1 * m2;
  }
};

/// p(k1,k2) = |(<k1|^(1) x <k2|^(2)) |psi>|^2.
inline JointDistribution joint_distribution(const JointState& state, const MeasurementBasis& b1,
                                            const MeasurementBasis& b2) {
  const CMatrix amp = b1.unitary.adjoint() * state.amplitude_matrix() * b2.unitary.conjugate();
  JointDistribution out{b1.label, b2.label, amp.cwiseAbs2()};
  const double total = out.probs.sum();
  if (std::abs(total - 1.0) > 1e-10)
    throw InvalidState("joint_distribution: probabilities sum to " + std::to_string(total));
  return out;
}

// ---------------------------------------------------------------------------
// Spin-EPR states.

enum class EprSign { plus, minus };

/// Sector coefficients of |EPR+-> in the given frame.
///   z frame:     sum_k |k,k>, sum_k (-1)^k |k,k>
///   tilde frame: the same states rotated by exp(-i Sz pi/8) on both ensembles,
///                i.e. sum_k (-i)^k |k,k> and sum_k i^k |k,k> up to global phase.
/// The tilde-frame EPR- equals sum_k |k>^(x~) |N-k>^(x~) / sqrt(N+1).
inline CVector epr_sector_state(int n_atoms, EprSign sign, Frame frame = Frame::tilde) {
  require(n_atoms >= 1, "epr_sector_state: N must be >= 1");
  const int d = n_atoms + 1;
  const double offset = frame_offset(frame);
  CVector c(d);
  for (int k = 0; k < d; ++k) {
    const double s = (sign == EprSign::minus && (k % 2) != 0) ? -1.0 : 1.0;
    c(k) = s * std::exp(-I * (2.0 * k - n_atoms) * offset) / std::sqrt(static_cast<double>(d));
  }
  return c;
}

/// |<EPR+-|psi>|^2.
inline double epr_fidelity(const JointState& state, EprSign sign, Frame frame = Frame::tilde) {
  require_sector(state, "epr_fidelity");
  return std::norm(epr_sector_state(state.n_atoms, sign, frame).dot(state.amplitudes));
}

/// Full-space sum_k |k>^(theta,phi) |k>^(theta,phi2) / sqrt(N+1) in the z frame,
/// with phi2 = -phi for EPR+ and pi - phi for EPR-.
inline CVector epr_state_in_basis(int n_atoms, EprSign sign, double theta, double phi) {
  require(n_atoms >= 1, "epr_state_in_basis: N must be >= 1");
  if (n_atoms > kFullSpaceMaxAtoms) throw ResourceLimit("epr_state_in_basis: N too large");
  const SpinSpace space(n_atoms);
  const int d = space.dim();
  const double phi2 = sign == EprSign::plus ? -phi : pi - phi;
  const CMatrix u1 = build_rotated_basis(space, theta, phi, Frame::z).unitary;
  const CMatrix u2 = build_rotated_basis(space, theta, phi2, Frame::z).unitary;
  // sum_k u1.col(k) x u2.col(k) has amplitude matrix u1 u2^T.
  const CMatrix amp = u1 * u2.transpose() / std::sqrt(static_cast<double>(d));
  CVector out(d * d);
  for (int k1 = 0; k1 < d; ++k1)
    for (int k2 = 0; k2 < d; ++k2) out(k1 * d + k2) = amp(k1, k2);
  return out;
}

}  // namespace tass

#pragma once

// Two-axis two-spin dynamics H = S1+ S2+ + S1- S2- (J absorbed into tau).
//
// H conserves Sz1 - Sz2, so the initial state |N,N> stays inside the
// equal-Fock sector span{|k,k>}, where H is real symmetric tridiagonal with
// off-diagonal (k+1)(N-k). Production evolution works in that (N+1)-dim
// sector; the (N+1)^2 full space exists for oracles and small-N checks.

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "tass/spin_core.hpp"
#include "tass/types.hpp"

namespace tass {

struct SectorHamiltonian {
  int n_atoms = 0;
  RVector diag;     // length N+1, identically zero for 2A2S
  RVector offdiag;  // length N, couples |k,k> <-> |k+1,k+1>

  RMatrix dense() const {
    const int d = n_atoms + 1;
    RMatrix h = RMatrix::Zero(d, d);
    h.diagonal() = diag;
    for (int k = 0; k < n_atoms; ++k) h(k, k + 1) = h(k + 1, k) = offdiag(k);
    return h;
  }
};

inline SectorHamiltonian build_sector_hamiltonian(int n_atoms) {
  require(n_atoms >= 1, "build_sector_hamiltonian: N must be >= 1");
  SectorHamiltonian h{n_atoms, RVector::Zero(n_atoms + 1), RVector(n_atoms)};
  for (int k = 0; k < n_atoms; ++k) h.offdiag(k) = static_cast<double>(k + 1) * (n_atoms - k);
  return h;
}

enum class HamiltonianKind { TwoAxisTwoSpin, OneAxisTwoSpin, TwoAxisOneSpin, OneAxisOneSpin };

inline HamiltonianKind parse_hamiltonian_kind(std::string_view s) {
  if (s == "2A2S") return HamiltonianKind::TwoAxisTwoSpin;
  if (s == "1A2S") return HamiltonianKind::OneAxisTwoSpin;
  if (s == "2A1S") return HamiltonianKind::TwoAxisOneSpin;
  if (s == "1A1S") return HamiltonianKind::OneAxisOneSpin;
  throw InvalidArgument("unknown Hamiltonian kind '" + std::string(s) + "'");
}

inline bool is_two_spin(HamiltonianKind k) {
  return k == HamiltonianKind::TwoAxisTwoSpin || k == HamiltonianKind::OneAxisTwoSpin;
}

struct HamiltonianVariant {
  HamiltonianKind kind = HamiltonianKind::TwoAxisTwoSpin;
  int n_atoms = 0;
  CMatrix matrix;  // (N+1)^2 for two-spin kinds, N+1 otherwise
};

/// Kronecker product with the first factor as the slow index: |k1,k2> -> k1*(N+1)+k2.
inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline CMatrix on_ensemble(const CMatrix& op, int ensemble) {
  const CMatrix id = CMatrix::Identity(op.rows(), op.cols());
  return ensemble == 1 ? kron(op, id) : kron(id, op);
}

inline HamiltonianVariant build_full_hamiltonian(int n_atoms, HamiltonianKind kind) {
  require(n_atoms >= 1, "build_full_hamiltonian: N must be >= 1");
  if (is_two_spin(kind) && n_atoms > kFullSpaceMaxAtoms)
    throw ResourceLimit("build_full_hamiltonian: N=" + std::to_string(n_atoms) +
                        " exceeds the full-space limit of " + std::to_string(kFullSpaceMaxAtoms));
  const SpinSpace space(n_atoms);
  const CMatrix sp = build_operator(space, OpLabel::Splus).matrix;
  const CMatrix sm = build_operator(space, OpLabel::Sminus).matrix;
  const CMatrix sz = build_operator(space, OpLabel::Sz).matrix;
  HamiltonianVariant h{kind, n_atoms, {}};
  switch (kind) {
    case HamiltonianKind::TwoAxisTwoSpin: h.matrix = kron(sp, sp) + kron(sm, sm); break;
    case HamiltonianKind::OneAxisTwoSpin: h.matrix = kron(sz, sz); break;
    case HamiltonianKind::TwoAxisOneSpin: h.matrix = sp * sp + sm * sm; break;
    case HamiltonianKind::OneAxisOneSpin: h.matrix = sz * sz; break;
  }
  return h;
}

enum class Representation { sector, full };

/// Pure state of the two ensembles. In the sector representation amplitude k
/// multiplies |k>_1 |k>_2; in the full representation index k1*(N+1)+k2.
struct JointState {
  int n_atoms = 0;
  Representation rep = Representation::sector;
  CVector amplitudes;

  int dim() const { return n_atoms + 1; }
  bool is_sector() const { return rep == Representation::sector; }

  static JointState initial(int n_atoms, Representation rep = Representation::sector) {
    require(n_atoms >= 1, "JointState: N must be >= 1");
    JointState s{n_atoms, rep, {}};
    const int d = n_atoms + 1;
    if (rep == Representation::sector) {
      s.amplitudes = CVector::Zero(d);
      s.amplitudes(n_atoms) = 1.0;
    } else {
      s.amplitudes = CVector::Zero(d * d);
      s.amplitudes(n_atoms * d + n_atoms) = 1.0;
    }
    return s;
  }

  /// Amplitude matrix A(k1,k2) = <k1,k2|psi>.
  CMatrix amplitude_matrix() const {
    const int d = dim();
    if (is_sector()) return amplitudes.asDiagonal().toDenseMatrix();
    CMatrix a(d, d);
    for (int k1 = 0; k1 < d; ++k1)
      for (int k2 = 0; k2 < d; ++k2) a(k1, k2) = amplitudes(k1 * d + k2);
    return a;
  }

  JointState to_full() const {
    if (!is_sector()) return *this;
    if (n_atoms > kFullSpaceMaxAtoms) throw ResourceLimit("JointState::to_full: N too large");
    const int d = dim();
    JointState f{n_atoms, Representation::full, CVector::Zero(d * d)};
    for (int k = 0; k < d; ++k) f.amplitudes(k * d + k) = amplitudes(k);
    return f;
  }
};

inline void require_sector(const JointState& s, const char* who) {
  if (!s.is_sector()) throw InvalidArgument(std::string(who) + ": sector representation required");
}

/// Cached eigendecomposition H = V diag(lambda) V^T of the sector Hamiltonian.
class Propagator {
 public:
  explicit Propagator(const SectorHamiltonian& h) : n_atoms_(h.n_atoms) {
    Eigen::SelfAdjointEigenSolver<RMatrix> es;
    es.computeFromTridiagonal(h.diag, h.offdiag, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw InvalidState("Propagator: eigensolver failed");
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
    initial_overlap_ = eigenvectors_.row(n_atoms_).transpose();
  }
  explicit Propagator(int n_atoms) : Propagator(build_sector_hamiltonian(n_atoms)) {}

  int n_atoms() const { return n_atoms_; }
  const RVector& eigenvalues() const { return eigenvalues_; }
  const RMatrix& eigenvectors() const { return eigenvectors_; }

  /// exp(-i H tau) |N,N>.
  JointState evolve(double tau) const {
    const CVector phases =
        (initial_overlap_.cast<complex_t>().array() * (-I * tau * eigenvalues_.array()).exp()).matrix();
    return JointState{n_atoms_, Representation::sector, eigenvectors_.cast<complex_t>() * phases};
  }

  /// exp(-i H tau) applied to an arbitrary sector state.
  JointState evolve(const JointState& from, double tau) const {
    require_sector(from, "Propagator::evolve");
    require(from.n_atoms == n_atoms_, "Propagator::evolve: atom number mismatch");
    const CMatrix v = eigenvectors_.cast<complex_t>();
    CVector coeff = v.adjoint() * from.amplitudes;
    coeff.array() *= (-I * tau * eigenvalues_.array()).exp();
    return JointState{n_atoms_, Representation::sector, v * coeff};
  }

 private:
  int n_atoms_;
  RVector eigenvalues_;
  RMatrix eigenvectors_;
  RVector initial_overlap_;
};

inline JointState evolve(const Propagator& prop, double tau) { return prop.evolve(tau); }

/// Eigendecomposition of a full-space (complex Hermitian) Hamiltonian.
class FullPropagator {
 public:
  explicit FullPropagator(const HamiltonianVariant& h) : n_atoms_(h.n_atoms), two_spin_(is_two_spin(h.kind)) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h.matrix);
    if (es.info() != Eigen::Success) throw InvalidState("FullPropagator: eigensolver failed");
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
  }
  const RVector& eigenvalues() const { return eigenvalues_; }
  const CMatrix& eigenvectors() const { return eigenvectors_; }

  CVector apply(const CVector& psi, double tau) const {
    CVector coeff = eigenvectors_.adjoint() * psi;
    coeff.array() *= (-I * tau * eigenvalues_.array()).exp();
    return eigenvectors_ * coeff;
  }

  JointState evolve(double tau) const {
    require(two_spin_, "FullPropagator::evolve: two-spin Hamiltonian required");
    const JointState init = JointState::initial(n_atoms_, Representation::full);
    return JointState{n_atoms_, Representation::full, apply(init.amplitudes, tau)};
  }

 private:
  int n_atoms_;
  bool two_spin_;
  RVector eigenvalues_;
  CMatrix eigenvectors_;
};

/// Full-space evolution of |N,N> by a Pade scaling-and-squaring matrix
/// exponential of -i H tau. Independent of any eigendecomposition.
inline JointState dense_exponential_evolve(int n_atoms, double tau) {
  const HamiltonianVariant h = build_full_hamiltonian(n_atoms, HamiltonianKind::TwoAxisTwoSpin);
  const CMatrix u = (complex_t(0.0, -tau) * h.matrix).exp();
  const JointState init = JointState::initial(n_atoms, Representation::full);
  return JointState{n_atoms, Representation::full, u * init.amplitudes};
}

/// Second-order amplitudes on |N,N>, |N-1,N-1>, |N-2,N-2>. H|N,N> = N|N-1,N-1>
/// and <N,N|H^2|N,N> = N^2, so the leading amplitude is 1 - tau^2 N^2 / 2.
inline std::array<complex_t, 3> short_time_expansion(int n_atoms, double tau) {
  const double n = n_atoms;
  return {complex_t(1.0 - 0.5 * tau * tau * n * n, 0.0), complex_t(0.0, -tau * n),
          complex_t(-tau * tau * n * (n - 1.0), 0.0)};
}

/// Largest amplitude deviation between sector and dense full-space evolution.
inline double sector_vs_full_deviation(int n_atoms, double tau) {
  const JointState sector = Propagator(n_atoms).evolve(tau).to_full();
  const JointState full = dense_exponential_evolve(n_atoms, tau);
  return (sector.amplitudes - full.amplitudes).cwiseAbs().maxCoeff();
}

}  // namespace tass

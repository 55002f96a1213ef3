#pragma once

// Spin Wigner function on the Bloch sphere,
//   W(theta, phi) = sum_{l=0}^{2j} sum_{m=-l}^{l} rho_lm Y_lm(theta, phi),
//   rho_lm = sum_{m1,m2} (-1)^{j-m1-m} <j m1; j -m2 | l m> <j m1|rho|j m2>,
// with |j m> = |k = j + m>.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "tass/evolution.hpp"
#include "tass/parallel.hpp"
#include "tass/spin_core.hpp"
#include "tass/types.hpp"

namespace tass {

struct MultipoleDecomposition {
  int n_atoms = 0;  // 2j
  std::vector<complex_t> coeff;

  static int index(int l, int m) { return l * l + l + m; }
  int l_max() const { return n_atoms; }
  complex_t at(int l, int m) const { return coeff[index(l, m)]; }
  double squared_norm() const {
    double s = 0.0;
    for (const complex_t& c : coeff) s += std::norm(c);
    return s;
  }
};

inline MultipoleDecomposition multipole(const CMatrix& rho) {
  require(rho.rows() == rho.cols() && rho.rows() >= 2, "multipole: density matrix must be square, dim >= 2");
  const int n = static_cast<int>(rho.rows()) - 1;
  MultipoleDecomposition out{n, std::vector<complex_t>((n + 1) * (n + 1), 0.0)};
  for (int m = -n; m <= n; ++m) {
    const CouplingBlock blk = coupling_block(n, n, 2 * m);
    for (int k1 = std::max(0, m); k1 <= std::min(n, n + m); ++k1) {
      const int k2 = k1 - m;
      const complex_t r = rho(k1, k2);
      if (r == 0.0) continue;
      // (-1)^{j-m1-m} with j-m1 = N-k1.
      const double phase = ((n - k1 - m) % 2 == 0) ? 1.0 : -1.0;
      for (int l = std::abs(m); l <= n; ++l)
        out.coeff[MultipoleDecomposition::index(l, m)] += phase * blk.at(2 * k1 - n, 2 * l) * r;
    }
  }
  return out;
}

inline MultipoleDecomposition multipole(const CVector& pure) { return multipole(CMatrix(pure * pure.adjoint())); }

// ---------------------------------------------------------------------------
// Orthonormal associated Legendre functions with the Condon-Shortley phase,
// Y_lm = P_lm(cos theta) e^{i m phi}, by the standard three-term recursion.

/// Table P(l, m) for 0 <= m <= l <= l_max at cos(theta).
inline RMatrix normalized_legendre(int l_max, double theta) {
  RMatrix p = RMatrix::Zero(l_max + 1, l_max + 1);
  const double x = std::cos(theta);
  const double s = std::sin(theta);
  p(0, 0) = 1.0 / std::sqrt(4.0 * pi);
  for (int m = 1; m <= l_max; ++m) p(m, m) = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * p(m - 1, m - 1);
  for (int m = 0; m < l_max; ++m) p(m + 1, m) = std::sqrt(2.0 * m + 3.0) * x * p(m, m);
  for (int m = 0; m <= l_max; ++m) {
    for (int l = m + 2; l <= l_max; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
      const double b = std::sqrt(((l - 1.0) * (l - 1.0) - m * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      p(l, m) = a * (x * p(l - 1, m) - b * p(l - 2, m));
    }
  }
  return p;
}

inline complex_t spherical_harmonic(int l, int m, double theta, double phi) {
  require(l >= 0 && std::abs(m) <= l, "spherical_harmonic: need |m| <= l");
  const RMatrix p = normalized_legendre(l, theta);
  const double v = p(l, std::abs(m));
  if (m >= 0) return v * std::exp(I * (m * phi));
  return ((m % 2 == 0) ? 1.0 : -1.0) * v * std::exp(I * (m * phi));
}

// ---------------------------------------------------------------------------

enum class Projection { none, cassini, mercator };

inline Projection parse_projection(std::string_view s) {
  if (s == "none") return Projection::none;
  if (s == "cassini") return Projection::cassini;
  if (s == "mercator") return Projection::mercator;
  throw InvalidArgument("unknown projection '" + std::string(s) + "'");
}

inline std::string to_string(Projection p) {
  switch (p) {
    case Projection::none: return "none";
    case Projection::cassini: return "cassini";
    case Projection::mercator: return "mercator";
  }
  return "?";
}

/// Latitude cut-off of the Mercator map.
inline constexpr double kMercatorMaxLatitude = 85.0 * pi / 180.0;

/// Rows sample y (polar angle for Projection::none), columns sample x.
/// Azimuths are reported in `frame`; the tilde frame measures phi from Sx~.
struct GridSpec {
  int rows = 181;
  int cols = 361;
  Projection projection = Projection::none;
  Frame frame = Frame::tilde;
  int threads = 0;
};

struct GridPoint {
  double x, y, theta, phi;
};

/// Map-plane coordinates of grid node (r, c) and the sphere point it shows.
inline GridPoint grid_point(const GridSpec& g, int r, int c) {
  const double u = static_cast<double>(c) / (g.cols - 1);
  const double v = static_cast<double>(r) / (g.rows - 1);
  GridPoint p{};
  switch (g.projection) {
    case Projection::none:
      p.x = -pi + 2.0 * pi * u;
      p.y = pi * v;
      p.theta = p.y;
      p.phi = p.x;
      break;
    case Projection::cassini:
      p.x = -pi + 2.0 * pi * u;
      p.y = -pi / 2.0 + pi * v;
      p.theta = std::asin(std::clamp(std::sin(p.x) * std::cos(p.y), -1.0, 1.0)) + pi / 2.0;
      // atan(cos x / tan y) on its full branch.
      p.phi = std::atan2(std::cos(p.x) * std::cos(p.y), std::sin(p.y));
      break;
    case Projection::mercator: {
      const double y_max = std::log(std::tan(pi / 4.0 + kMercatorMaxLatitude / 2.0));
      p.x = -pi + 2.0 * pi * u;
      p.y = -y_max + 2.0 * y_max * v;
      const double latitude = 2.0 * std::atan(std::exp(p.y)) - pi / 2.0;
      p.theta = pi / 2.0 - latitude;
      p.phi = p.x;
      break;
    }
  }
  return p;
}

struct WignerField {
  GridSpec grid;
  RMatrix x, y, theta, phi, values;  // all rows x cols
};

/// Evaluates W on the grid. Per polar angle, f_m = sum_l rho_lm P_l|m| is
/// formed once, so each row costs O(N^2 + cols N).
inline WignerField wigner_field(const MultipoleDecomposition& d, const GridSpec& g) {
  require(g.rows >= 2 && g.cols >= 2, "wigner_field: grid counts must be >= 2");
  const int n = d.n_atoms;
  WignerField out{g, RMatrix(g.rows, g.cols), RMatrix(g.rows, g.cols), RMatrix(g.rows, g.cols),
                  RMatrix(g.rows, g.cols), RMatrix(g.rows, g.cols)};
  const double offset = frame_offset(g.frame);
  std::vector<double> worst(g.rows, 0.0);
  parallel_for(g.rows, g.threads, [&](int r) {
    std::vector<complex_t> f(2 * n + 1);
    double last_theta = std::numeric_limits<double>::quiet_NaN();
    RMatrix p;
    for (int c = 0; c < g.cols; ++c) {
      const GridPoint gp = grid_point(g, r, c);
      out.x(r, c) = gp.x;
      out.y(r, c) = gp.y;
      out.theta(r, c) = gp.theta;
      out.phi(r, c) = gp.phi;
      if (gp.theta != last_theta) {
        p = normalized_legendre(n, gp.theta);
        for (int m = -n; m <= n; ++m) {
          const int am = std::abs(m);
          const double sgn = (m < 0 && (am % 2) != 0) ? -1.0 : 1.0;
          complex_t acc = 0.0;
          for (int l = am; l <= n; ++l) acc += d.at(l, m) * p(l, am);
          f[m + n] = sgn * acc;
        }
        last_theta = gp.theta;
      }
      const double phi_z = gp.phi + offset;
      complex_t w = f[n];
      for (int m = 1; m <= n; ++m) {
        const complex_t e = std::exp(I * (m * phi_z));
        w += f[n + m] * e + f[n - m] * std::conj(e);
      }
      out.values(r, c) = w.real();
      worst[r] = std::max(worst[r], std::abs(w.imag()) / std::max(1.0, std::abs(w.real())));
    }
  });
  if (*std::max_element(worst.begin(), worst.end()) > 1e-10)
    throw InvalidState("wigner_field: imaginary residue above 1e-10; input is not Hermitian");
  return out;
}

/// Wigner function at a single point (z-frame azimuth).
inline double wigner_value(const MultipoleDecomposition& d, double theta, double phi_z) {
  const RMatrix p = normalized_legendre(d.n_atoms, theta);
  complex_t w = 0.0;
  for (int l = 0; l <= d.n_atoms; ++l)
    for (int m = -l; m <= l; ++m) {
      const double sgn = (m < 0 && (m % 2) != 0) ? -1.0 : 1.0;
      w += d.at(l, m) * sgn * p(l, std::abs(m)) * std::exp(I * (m * phi_z));
    }
  return w.real();
}

// ---------------------------------------------------------------------------
// Projective measurement of |k>^(theta,phi) on ensemble 1.

struct ConditionalProjection {
  double theta = 0.0;
  double phi = 0.0;
  int k = 0;
  double probability = 0.0;
  CVector state;  // normalized post-measurement state of ensemble 2
};

inline ConditionalProjection conditional_state(const JointState& state, double theta, double phi, int k,
                                               Frame frame = Frame::tilde) {
  require(k >= 0 && k <= state.n_atoms, "conditional_state: outcome index out of range");
  const SpinSpace space(state.n_atoms);
  const CVector u = build_rotated_basis(space, theta, phi, frame).unitary.col(k);
  CVector w;
  if (state.is_sector()) {
    w = u.conjugate().cwiseProduct(state.amplitudes);
  } else {
    w = state.amplitude_matrix().transpose() * u.conjugate();
  }
  const double prob = w.squaredNorm();
  if (prob < 1e-12)
    throw DegenerateOutcome("conditional_state: outcome k=" + std::to_string(k) + " has probability " +
                            std::to_string(prob));
  return {theta, phi, k, prob, w / std::sqrt(prob)};
}

/// Grid node with the largest W value.
struct FieldPeak {
  double theta, phi, value;
};

inline FieldPeak field_peak(const WignerField& f) {
  Eigen::Index r, c;
  const double v = f.values.maxCoeff(&r, &c);
  return {f.theta(r, c), f.phi(r, c), v};
}

/// Great-circle angle between two points on the unit sphere.
inline double angular_distance(double theta1, double phi1, double theta2, double phi2) {
  const double c = std::cos(theta1) * std::cos(theta2) + std::sin(theta1) * std::sin(theta2) * std::cos(phi1 - phi2);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace tass

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/QR>

#include "tass/bell.hpp"
#include "tass/entanglement.hpp"
#include "tass/evolution.hpp"
#include "tass/observables.hpp"
#include "tass/types.hpp"

namespace tass {

enum class OptimalKind { sq, asq, Sz, E, F };

inline OptimalKind parse_optimal_kind(std::string_view s) {
  if (s == "sq") return OptimalKind::sq;
  if (s == "asq") return OptimalKind::asq;
  if (s == "Sz") return OptimalKind::Sz;
  if (s == "E") return OptimalKind::E;
  if (s == "F") return OptimalKind::F;
  throw InvalidArgument("unknown optimal-time kind '" + std::string(s) + "'");
}

inline std::string to_string(OptimalKind k) {
  switch (k) {
    case OptimalKind::sq: return "sq";
    case OptimalKind::asq: return "asq";
    case OptimalKind::Sz: return "Sz";
    case OptimalKind::E: return "E";
    case OptimalKind::F: return "F";
  }
  return "?";
}

/// Objective along the trajectory for each kind:
/// Var(Sx~1+Sx~2) (minimized), Var(Sx~1-Sx~2), entropy and F- (maximized),
/// <Sz1> (first zero).
inline double time_objective(const JointState& st, OptimalKind kind) {
  switch (kind) {
    case OptimalKind::sq: return variance(st, TwoSpinObservable::sq_x());
    case OptimalKind::asq: return variance(st, TwoSpinObservable::asq_x());
    case OptimalKind::Sz: return expectation(st, OpLabel::Sz, 1);
    case OptimalKind::E: return entanglement_entropy(st);
    case OptimalKind::F: return epr_fidelity(st, EprSign::minus);
  }
  return 0.0;
}

/// Typical (p0, p1) of tau N = p0 + p1 ln N for each kind; only used to size
/// the search window.
inline std::pair<double, double> window_scaling(OptimalKind kind) {
  switch (kind) {
    case OptimalKind::sq: return {0.467, 0.508};
    case OptimalKind::asq: return {0.700, 0.530};
    case OptimalKind::Sz: return {0.727, 0.536};
    case OptimalKind::E: return {0.727, 0.536};
    case OptimalKind::F: return {0.803, 0.544};
  }
  return {0.5, 0.5};
}

struct OptimalTime {
  int n_atoms = 0;
  OptimalKind kind = OptimalKind::sq;
  double tau = 0.0;
  double objective = 0.0;
};

struct TimeSearchOptions {
  int coarse_points = 400;
  double window_factor = 3.0;
  double tol = 1e-9;
};

inline double search_window(int n_atoms, OptimalKind kind, double factor = 3.0) {
  const auto [p0, p1] = window_scaling(kind);
  return factor * (p0 + p1 * std::log(static_cast<double>(n_atoms))) / n_atoms;
}

/// First local extremum (or first zero of <Sz>) on a coarse grid over
/// (0, window], refined by golden section (bisection for the zero).
inline OptimalTime find_optimal_time(int n_atoms, OptimalKind kind, const TimeSearchOptions& opt = {}) {
  require(n_atoms >= 1, "find_optimal_time: N must be >= 1");
  require(opt.coarse_points >= 3, "find_optimal_time: need at least 3 grid points");
  const Propagator prop(n_atoms);
  auto f = [&](double t) { return time_objective(prop.evolve(t), kind); };
  // Search for a minimum of sign * f.
  const double sign = kind == OptimalKind::sq ? 1.0 : -1.0;
  const double t_max = search_window(n_atoms, kind, opt.window_factor);
  const int n = opt.coarse_points;
  std::vector<double> ts(n + 1), fs(n + 1);
  for (int i = 0; i <= n; ++i) {
    ts[i] = t_max * i / n;
    fs[i] = f(ts[i]);
  }

  if (kind == OptimalKind::Sz) {
    for (int i = 1; i <= n; ++i) {
      if (fs[i] <= 0.0) {
        double a = ts[i - 1], b = ts[i], fa = fs[i - 1];
        while (b - a > opt.tol) {
          const double m = 0.5 * (a + b);
          const double fm = f(m);
          if ((fm > 0.0) == (fa > 0.0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        const double t = 0.5 * (a + b);
        return {n_atoms, kind, t, f(t)};
      }
    }
  } else {
    for (int i = 1; i < n; ++i) {
      const double l = sign * fs[i - 1], c = sign * fs[i], r = sign * fs[i + 1];
      if (c <= l && c < r) {
        auto [t, v] = detail::golden_max([&](double x) { return -sign * f(x); }, ts[i - 1], ts[i + 1], opt.tol);
        return {n_atoms, kind, t, -sign * v};
      }
    }
  }
  std::ostringstream msg;
  msg << "find_optimal_time: no " << (kind == OptimalKind::Sz ? "zero" : "extremum") << " of kind "
      << to_string(kind) << " for N=" << n_atoms << " in (0, " << t_max << "]; objective ranged over ["
      << *std::min_element(fs.begin(), fs.end()) << ", " << *std::max_element(fs.begin(), fs.end()) << "]";
  throw SearchFailure(msg.str());
}

// ---------------------------------------------------------------------------
// Fits.

enum class FitModel { log_over_n, linear_inverse_n, pade };

inline std::string to_string(FitModel m) {
  switch (m) {
    case FitModel::log_over_n: return "log-over-N";
    case FitModel::linear_inverse_n: return "linear-in-1/N";
    case FitModel::pade: return "pade";
  }
  return "?";
}

struct FitResult {
  FitModel model = FitModel::log_over_n;
  std::vector<std::string> names;
  std::vector<double> params;
  double residual_norm = 0.0;
  double data_norm = 0.0;
  double r_squared = 0.0;
  std::vector<int> n_grid;

  double param(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return params[i];
    throw InvalidArgument("FitResult: no parameter '" + std::string(name) + "'");
  }
};

namespace detail {

inline void fill_quality(FitResult& r, const RVector& y, const RVector& resid) {
  r.residual_norm = resid.norm();
  r.data_norm = y.norm();
  const double ss_tot = (y.array() - y.mean()).square().sum();
  r.r_squared = ss_tot > 0.0 ? 1.0 - resid.squaredNorm() / ss_tot : 1.0;
}

inline RVector least_squares(const RMatrix& a, const RVector& y, const char* who) {
  Eigen::ColPivHouseholderQR<RMatrix> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < a.cols()) throw FitFailure(std::string(who) + ": design matrix is rank deficient");
  return qr.solve(y);
}

}  // namespace detail

/// Least squares on tau N = p0 + p1 ln N.
inline FitResult fit_optimal_times(const std::vector<OptimalTime>& records) {
  std::vector<int> ns;
  for (const auto& r : records)
    if (std::find(ns.begin(), ns.end(), r.n_atoms) == ns.end()) ns.push_back(r.n_atoms);
  if (ns.size() < 4) throw FitFailure("fit_optimal_times: need at least 4 distinct N values");
  const int m = static_cast<int>(records.size());
  RMatrix a(m, 2);
  RVector y(m);
  for (int i = 0; i < m; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::log(static_cast<double>(records[i].n_atoms));
    y(i) = records[i].tau * records[i].n_atoms;
  }
  const RVector p = detail::least_squares(a, y, "fit_optimal_times");
  FitResult out{FitModel::log_over_n, {"p0", "p1"}, {p(0), p(1)}, 0, 0, 0, ns};
  detail::fill_quality(out, y, a * p - y);
  return out;
}

/// Minimum squeezed variance implied by tau N = p0 + p1 ln N and 2N e^{-2N tau}.
inline double predicted_min_variance(int n_atoms, double p0, double p1) {
  return 2.0 * n_atoms / (std::exp(2.0 * p0) * std::pow(static_cast<double>(n_atoms), 2.0 * p1));
}

struct BellScalingFit {
  FitResult slope;  // C - 2 = s / N
  FitResult pade;   // theta_B = (a/N + b/N^2)/(1 + c/N)
};

/// (a/N + b/N^2)/(1 + c/N) evaluated at N.
inline double pade_angle(double n, double a, double b, double c) { return (a / n + b / (n * n)) / (1.0 + c / n); }

inline BellScalingFit fit_bell_scaling(const std::vector<BellOptimum>& records) {
  const int m = static_cast<int>(records.size());
  if (m < 3) throw FitFailure("fit_bell_scaling: need at least 3 records");
  std::vector<int> ns;
  for (const auto& r : records) ns.push_back(r.n_atoms);
  BellScalingFit out;

  {
    RMatrix a(m, 1);
    RVector y(m);
    for (int i = 0; i < m; ++i) {
      a(i, 0) = 1.0 / records[i].n_atoms;
      y(i) = records[i].chsh - 2.0;
    }
    const RVector p = detail::least_squares(a, y, "fit_bell_scaling");
    out.slope = {FitModel::linear_inverse_n, {"slope"}, {p(0)}, 0, 0, 0, ns};
    detail::fill_quality(out.slope, y, a * p - y);
  }

  // Linearized start: theta (1 + c/N) = a/N + b/N^2, then Gauss-Newton.
  RVector y(m), x(m);
  for (int i = 0; i < m; ++i) {
    x(i) = records[i].n_atoms;
    y(i) = records[i].theta_b;
  }
  RMatrix lin(m, 3);
  for (int i = 0; i < m; ++i) {
    lin(i, 0) = 1.0 / x(i);
    lin(i, 1) = 1.0 / (x(i) * x(i));
    lin(i, 2) = -y(i) / x(i);
  }
  RVector p = detail::least_squares(lin, y, "fit_bell_scaling");
  auto residual = [&](const RVector& q) {
    RVector r(m);
    for (int i = 0; i < m; ++i) r(i) = pade_angle(x(i), q(0), q(1), q(2)) - y(i);
    return r;
  };
  RVector r = residual(p);
  for (int it = 0; it < 100; ++it) {
    RMatrix jac(m, 3);
    for (int i = 0; i < m; ++i) {
      const double n = x(i), den = 1.0 + p(2) / n;
      jac(i, 0) = 1.0 / n / den;
      jac(i, 1) = 1.0 / (n * n) / den;
      jac(i, 2) = -(p(0) / n + p(1) / (n * n)) / (den * den) / n;
    }
    // A singular Jacobian means the data no longer pin all three parameters;
    // keep the current iterate.
    Eigen::ColPivHouseholderQR<RMatrix> qr(jac);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) break;
    const RVector step = qr.solve(RVector(-r));
    // Step halving keeps the iteration monotone.
    double scale = 1.0;
    RVector trial = p + step, rt = residual(trial);
    while (rt.norm() > r.norm() && scale > 1e-6) {
      scale *= 0.5;
      trial = p + scale * step;
      rt = residual(trial);
    }
    if (rt.norm() > r.norm()) break;
    const bool done = (trial - p).norm() < 1e-12 * (1.0 + p.norm());
    p = trial;
    r = rt;
    if (done) break;
  }
  out.pade = {FitModel::pade, {"a", "b", "c"}, {p(0), p(1), p(2)}, 0, 0, 0, ns};
  detail::fill_quality(out.pade, y, r);
  return out;
}

}  // namespace tass

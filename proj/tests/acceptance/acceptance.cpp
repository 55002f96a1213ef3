// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "tass/tass.hpp"

using namespace tass;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[fail: " << what << "] ";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

// ---------------------------------------------------------------------------

void c1_oracle(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int n = 1; n <= 6; ++n)
    for (double t : {0.1, 0.37, 1.3}) worst = std::max(worst, sector_vs_full_deviation(n, t));
  const double secs = seconds_since(t0);
  v.detail << "max deviation " << worst << ", " << secs << " s. ";
  v.expect(worst <= 1e-10, "deviation > 1e-10");
  v.expect(secs < 5.0, "runtime >= 5 s");
}

void c2_algebra(Verdict& v) {
  double comm = 0.0, spec = 0.0, rot = 0.0, cg = 0.0;
  for (int n = 1; n <= 12; ++n) {
    const SpinSpace sp(n);
    const CMatrix x = build_operator(sp, OpLabel::Sx).matrix;
    const CMatrix y = build_operator(sp, OpLabel::Sy).matrix;
    const CMatrix z = build_operator(sp, OpLabel::Sz).matrix;
    const complex_t two_i(0.0, 2.0);
    comm = std::max(comm, (x * y - y * x - two_i * z).cwiseAbs().maxCoeff());
    comm = std::max(comm, (y * z - z * y - two_i * x).cwiseAbs().maxCoeff());
    comm = std::max(comm, (z * x - x * z - two_i * y).cwiseAbs().maxCoeff());
    for (int k = 0; k <= n; ++k) spec = std::max(spec, std::abs(z(k, k) - complex_t(2.0 * k - n)));
    spec = std::max(spec, (z - CMatrix(z.diagonal().asDiagonal())).cwiseAbs().maxCoeff());
  }
  for (int n = 1; n <= 8; ++n) {
    const CMatrix sy = build_operator(SpinSpace(n), OpLabel::Sy).matrix;
    for (double t : {0.0, 0.3, 1.1, pi / 2.0, 2.7, pi}) {
      const CMatrix ref = (complex_t(0.0, -t / 2.0) * sy).exp();
      rot = std::max(rot, (rotation_matrix(n, t).cast<complex_t>() - ref).cwiseAbs().maxCoeff());
    }
  }
  for (int tj = 1; tj <= 40; ++tj)
    for (int tm = -2 * tj; tm <= 2 * tj; tm += 2) {
      const CouplingBlock b = coupling_block(tj, tj, tm);
      const RMatrix g = b.coeff.transpose() * b.coeff;
      cg = std::max(cg, (g - RMatrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
      const RMatrix h = b.coeff * b.coeff.transpose();
      cg = std::max(cg, (h - RMatrix::Identity(h.rows(), h.cols())).cwiseAbs().maxCoeff());
    }
  // Racah-sum coefficients: sum_{m1} <j1 m1 j2 m2|J M><j1 m1 j2 m2|J' M> = delta_JJ'.
  for (int tj1 = 1; tj1 <= 6; ++tj1)
    for (int tj2 = 1; tj2 <= 6; ++tj2)
      for (int tM = -(tj1 + tj2); tM <= tj1 + tj2; tM += 2)
        for (int tJ = std::abs(tj1 - tj2); tJ <= tj1 + tj2; tJ += 2)
          for (int tK = std::abs(tj1 - tj2); tK <= tj1 + tj2; tK += 2) {
            if (std::abs(tM) > std::min(tJ, tK)) continue;
            double s = 0.0;
            for (int tm1 = -tj1; tm1 <= tj1; tm1 += 2) {
              const int tm2 = tM - tm1;
              if (std::abs(tm2) > tj2) continue;
              s += clebsch_gordan_doubled(tj1, tm1, tj2, tm2, tJ, tM) * clebsch_gordan_doubled(tj1, tm1, tj2, tm2, tK, tM);
            }
            cg = std::max(cg, std::abs(s - (tJ == tK ? 1.0 : 0.0)));
          }
  v.detail << "commutators " << comm << ", Sz spectrum " << spec << ", rotation vs expm " << rot
           << ", CG orthogonality " << cg << ". ";
  v.expect(comm <= 1e-10, "commutators");
  v.expect(spec <= 1e-10, "Sz spectrum");
  v.expect(rot <= 1e-10, "rotation matrix");
  v.expect(cg <= 1e-10, "Clebsch-Gordan orthogonality");
}

void c3_variances(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 20;
  const Propagator p(n);
  double pair_dev = 0.0;
  for (double t : linspace(0.0, 5.0, 2000)) {
    const JointState s = p.evolve(t);
    pair_dev = std::max(pair_dev, std::abs(variance(s, TwoSpinObservable::sq_x()) - variance(s, TwoSpinObservable::sq_y())));
  }
  const double t_opt = find_optimal_time(n, OptimalKind::sq).tau;
  double hp_sq = 0.0, hp_asq = 0.0;
  for (double t : linspace(0.0, 0.5 * t_opt, 200)) {
    const JointState s = p.evolve(t);
    hp_sq = std::max(hp_sq, std::abs(variance(s, TwoSpinObservable::sq_x()) / hp_variance(n, t, SqueezeKind::sq) - 1.0));
    hp_asq = std::max(hp_asq, std::abs(variance(s, TwoSpinObservable::asq_x()) / hp_variance(n, t, SqueezeKind::asq) - 1.0));
  }
  const double hp_rel = std::max(hp_sq, hp_asq);
  const double v0 = variance(p.evolve(0.0), TwoSpinObservable::sq_x());
  const double secs = seconds_since(t0);
  v.detail << "|Var sq_x - Var sq_y| " << pair_dev << ", HP relative error sq " << hp_sq << " asq " << hp_asq << ", Var(0) - 2N "
           << v0 - 2.0 * n << ", " << secs << " s. ";
  v.expect(pair_dev <= 1e-9, "sq pair mismatch");
  v.expect(hp_rel <= 0.10, "HP agreement");
  v.expect(std::abs(v0 - 2.0 * n) <= 1e-12, "Var(0) != 2N");
  v.expect(secs < 1.0, "runtime >= 1 s");
}

void c4_expectations(Verdict& v) {
  const int n = 20;
  const Propagator p(n);
  double xy = 0.0;
  for (double t : linspace(0.0, 5.0, 2000)) {
    const JointState s = p.evolve(t);
    for (int j : {1, 2})
      xy = std::max({xy, std::abs(expectation(s, OpLabel::Sx, j)), std::abs(expectation(s, OpLabel::Sy, j))});
  }
  const double z0 = expectation(p.evolve(0.0), OpLabel::Sz, 1);
  const double flip = find_optimal_time(n, OptimalKind::Sz).tau;
  // No earlier sign change on a fine grid.
  bool earlier = false;
  for (double t : linspace(0.0, flip * 0.999, 1000)) earlier = earlier || expectation(p.evolve(t), OpLabel::Sz, 1) <= 0.0;
  v.detail << "max |<Sx>|,|<Sy>| " << xy << ", <Sz>(0) " << z0 << ", first flip at tau " << flip << ". ";
  v.expect(xy <= 1e-12, "<Sx>, <Sy> nonzero");
  v.expect(std::abs(z0 - n) <= 1e-12, "<Sz>(0) != N");
  v.expect(!earlier && flip > 0.0 && flip < 0.3, "first flip not in (0, 0.3)");
}

void c5_fits(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> ns{10, 20, 40, 80, 160};
  struct Target {
    OptimalKind kind;
    double p0, p1;
  };
  const std::vector<Target> targets{{OptimalKind::sq, 0.467, 0.508},
                                    {OptimalKind::asq, 0.700, 0.530},
                                    {OptimalKind::Sz, 0.727, 0.536},
                                    {OptimalKind::F, 0.803, 0.544}};
  std::vector<OptimalTime> rec(targets.size() * ns.size());
  parallel_for(static_cast<int>(rec.size()), 0, [&](int i) {
    rec[i] = find_optimal_time(ns[i % ns.size()], targets[i / ns.size()].kind);
  });
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const std::vector<OptimalTime> sub(rec.begin() + k * ns.size(), rec.begin() + (k + 1) * ns.size());
    const FitResult f = fit_optimal_times(sub);
    const double p0 = f.param("p0"), p1 = f.param("p1");
    v.detail << to_string(targets[k].kind) << " (" << p0 << ", " << p1 << ") ";
    v.expect(std::abs(p0 - targets[k].p0) <= 0.05 && std::abs(p1 - targets[k].p1) <= 0.05,
             to_string(targets[k].kind) + " fit");
  }
  const double t10 = rec[0].tau;
  const double secs = seconds_since(t0);
  v.detail << "tau_sq(10) " << t10 << ", " << secs << " s. ";
  v.expect(std::abs(t10 - 0.165) <= 0.005, "tau_sq(10)");
  v.expect(secs < 120.0, "runtime >= 2 min");
}

void c6_entanglement(Verdict& v) {
  const double e0 = entanglement_entropy(Propagator(20).evolve(0.0));
  const double e1 = entanglement_entropy(Propagator(1).evolve(pi / 4.0));
  v.detail << "E(0) " << e0 << ", E(N=1, pi/4) " << e1 << ". ";
  v.expect(e0 <= 1e-12, "E(0) != 0");
  v.expect(std::abs(e1 - 1.0) <= 1e-12, "N=1 not 1 bit");

  const int n = 20, m = 2000;
  const Propagator p(n);
  const auto ts = linspace(0.0, 5.0, m);
  const double step = ts[1] - ts[0];
  std::vector<double> e(m), sz(m);
  for (int i = 0; i < m; ++i) {
    const JointState s = p.evolve(ts[i]);
    e[i] = entanglement_entropy(s);
    sz[i] = expectation(s, OpLabel::Sz, 1);
  }
  std::vector<double> zeros;
  for (int i = 1; i < m; ++i)
    if ((sz[i - 1] > 0.0) != (sz[i] > 0.0)) zeros.push_back(ts[i - 1] + step * sz[i - 1] / (sz[i - 1] - sz[i]));
  int maxima = 0, matched = 0;
  double worst = 0.0;
  for (int i = 1; i + 1 < m; ++i) {
    if (!(e[i] >= e[i - 1] && e[i] > e[i + 1])) continue;
    ++maxima;
    double d = 1e300;
    for (double z : zeros) d = std::min(d, std::abs(z - ts[i]));
    worst = std::max(worst, d);
    if (d <= step) ++matched;
  }
  v.detail << matched << "/" << maxima << " entropy maxima within one step (" << step << ") of an <Sz> zero, worst "
           << worst << "; E/E_max at optimum:";
  double prev = 0.0;
  bool increasing = true;
  for (int nn : {10, 20, 40, 80}) {
    const double r = find_optimal_time(nn, OptimalKind::E).objective / max_entropy(nn);
    v.detail << " " << r;
    increasing = increasing && r > prev;
    prev = r;
  }
  v.detail << ". ";
  v.expect(matched == maxima, "entropy maxima off <Sz> zeros");
  v.expect(increasing, "E/E_max not increasing");
}

void c7_witnesses(Verdict& v) {
  const int n = 20;
  const Propagator p(n);
  const double t_opt = find_optimal_time(n, OptimalKind::sq).tau;
  const auto all = {CriterionName::GMVT, CriterionName::DGCZ, CriterionName::HT};

  bool zero_none = true, small_all = true;
  for (auto c : all) {
    zero_none = zero_none && !criterion(p.evolve(0.0), c).detected;
    small_all = small_all && criterion(p.evolve(0.1 * t_opt), c).detected;
  }
  // Near the optimal squeezing time: [0.8, 1.25] tau_opt.
  bool ht_all = true;
  int gmvt_fail = 0, dgcz_fail = 0;
  const auto window = linspace(0.8 * t_opt, 1.25 * t_opt, 400);
  for (double t : window) {
    const JointState s = p.evolve(t);
    ht_all = ht_all && criterion(s, CriterionName::HT).detected;
    gmvt_fail += !criterion(s, CriterionName::GMVT).detected;
    dgcz_fail += !criterion(s, CriterionName::DGCZ).detected;
  }
  v.detail << "tau=0 none detect: " << zero_none << ", tau=0.1 tau_opt all detect: " << small_all
           << ", window [0.8,1.25] tau_opt: HT detects everywhere " << ht_all << ", GMVT fails at " << gmvt_fail
           << "/" << window.size() << ", DGCZ fails at " << dgcz_fail << "/" << window.size() << ". ";
  v.expect(zero_none, "detection at tau=0");
  v.expect(small_all, "missed detection at small tau");
  v.expect(ht_all, "HT fails near tau_opt");
  v.expect(gmvt_fail > 0 && dgcz_fail > 0, "GMVT/DGCZ never fail near tau_opt");
}

void c8_epr(Verdict& v) {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> th(0.0, pi), ph(-pi, pi);
  double worst = 0.0;
  for (int n : {4, 12}) {
    const CVector ref = epr_state_in_basis(n, EprSign::plus, 0.0, 0.0);
    for (int i = 0; i < 20; ++i)
      worst = std::max(worst, std::abs(std::abs(ref.dot(epr_state_in_basis(n, EprSign::plus, th(rng), ph(rng)))) - 1.0));
  }
  const auto t0 = std::chrono::steady_clock::now();
  const OptimalTime f = find_optimal_time(160, OptimalKind::F);
  const double secs = seconds_since(t0);
  v.detail << "basis invariance worst ||overlap|-1| " << worst << ", F- peak at N=160 " << f.objective << " (tau "
           << f.tau << ", " << secs << " s). ";
  v.expect(worst <= 1e-10, "basis invariance");
  v.expect(f.objective >= 0.88, "F- < 0.88");
  v.expect(secs < 30.0, "runtime >= 30 s");
}

// Largest W near (theta0, phi0_z) by a fine local grid of +-3 degrees.
std::pair<double, double> refine_peak(const MultipoleDecomposition& d, double theta0, double phi0_z) {
  double best = -1e300, bt = theta0, bp = phi0_z;
  const double span = 3.0 * pi / 180.0;
  for (int i = -150; i <= 150; ++i)
    for (int j = -150; j <= 150; ++j) {
      const double t = std::clamp(theta0 + span * i / 150.0, 0.0, pi), p = phi0_z + span * j / 150.0;
      const double w = wigner_value(d, t, p);
      if (w > best) {
        best = w;
        bt = t;
        bp = p;
      }
    }
  return {bt, bp};
}

void c9_wigner(Verdict& v) {
  const int n = 10;
  const Propagator p(n);
  const double t_opt = find_optimal_time(n, OptimalKind::sq).tau;
  GridSpec g;  // 181 x 361, no projection, tilde frame
  const double step = pi / (g.rows - 1);

  // Marginal at tau_opt: real and azimuthally flat.
  const auto dm = multipole(reduced_density(p.evolve(t_opt)).matrix);
  double imag = 0.0;
  for (double t : linspace(0.0, pi, 37))
    for (double ph : linspace(-pi, pi, 73)) {
      complex_t w = 0.0;
      for (int l = 0; l <= n; ++l)
        for (int m = -l; m <= l; ++m) w += dm.at(l, m) * spherical_harmonic(l, m, t, ph);
      imag = std::max(imag, std::abs(w.imag()));
    }
  const WignerField fm = wigner_field(dm, g);
  double flat = 0.0;
  for (int r = 0; r < g.rows; ++r) flat = std::max(flat, fm.values.row(r).maxCoeff() - fm.values.row(r).minCoeff());

  const FieldPeak north = field_peak(wigner_field(multipole(reduced_density(p.evolve(0.0)).matrix), g));
  // South-pole concentration: peak inside the polar cap theta >= 3pi/4 and most
  // of the quasi-probability in the southern hemisphere.
  const WignerField fs = wigner_field(multipole(reduced_density(p.evolve(2.0 * t_opt)).matrix), g);
  const FieldPeak south = field_peak(fs);
  double w_south = 0.0, w_total = 0.0;
  for (int r = 0; r < g.rows; ++r) {
    const double w = fs.values.row(r).sum() * std::sin(fs.theta(r, 0));
    w_total += w;
    if (fs.theta(r, 0) > pi / 2.0) w_south += w;
  }
  v.detail << "marginal imaginary part " << imag << ", azimuthal spread " << flat << ", tau=0 peak theta "
           << north.theta << ", 2 tau_opt peak theta " << south.theta << " with southern weight "
           << w_south / w_total << "; ";
  v.expect(imag <= 1e-9, "marginal not real");
  v.expect(flat <= 1e-9, "marginal not phi-symmetric");
  v.expect(north.theta <= step, "tau=0 peak not at north pole");
  v.expect(south.theta >= 0.75 * pi && w_south / w_total > 0.5, "2 tau_opt not concentrated at south pole");

  // Conditional projections k = N; the peak sits at (theta, pi - phi) in the tilde frame.
  struct Panel {
    const char* name;
    double theta, phi;
  };
  for (const Panel& pn : {Panel{"(a)", pi / 2.0, pi / 2.0}, Panel{"(b)", pi / 4.0, -pi / 2.0}}) {
    const auto cs = conditional_state(p.evolve(t_opt), pn.theta, pn.phi, n);
    const auto dc = multipole(cs.state);
    const FieldPeak coarse = field_peak(wigner_field(dc, g));
    const double off = frame_offset(Frame::tilde);
    const auto [rt, rp] = refine_peak(dc, coarse.theta, coarse.phi + off);
    const double dist = angular_distance(rt, rp - off, pn.theta, pi - pn.phi);
    v.detail << "panel " << pn.name << " peak (" << rt << ", " << rp - off << ") off by " << dist * 180.0 / pi
             << " deg; ";
    v.expect(dist <= 5.0 * pi / 180.0, std::string("panel ") + pn.name);
  }
}

void c10_bell(Verdict& v, std::string& info) {
  BellSearchOptions opt;
  auto optimum = [&](int n) { return optimize_violation(n, find_optimal_time(n, OptimalKind::sq).tau, opt); };
  const BellOptimum one = optimum(1);
  v.detail << "N=1 C " << one.chsh << " at theta_B " << one.theta_b << "; ";
  v.expect(std::abs(one.chsh - 2.0 * std::sqrt(2.0)) <= 1e-6, "N=1 C");
  v.expect(std::abs(one.theta_b - pi / 2.0) <= 1e-3, "N=1 theta_B");

  const std::vector<int> ns{1, 2, 4, 8, 16, 32};
  std::vector<BellOptimum> rec(ns.size());
  parallel_for(static_cast<int>(ns.size()), 0, [&](int i) { rec[i] = optimum(ns[i]); });
  bool below = true;
  v.detail << "C(N):";
  for (const auto& r : rec) {
    v.detail << " " << r.n_atoms << ":" << r.chsh;
    if (r.n_atoms > 1) below = below && r.chsh < 2.0 * std::sqrt(2.0);
  }
  v.detail << "; theta_B(N):";
  for (const auto& r : rec) v.detail << " " << r.n_atoms << ":" << r.theta_b;
  const BellScalingFit fit = fit_bell_scaling(rec);
  const double s = fit.slope.param("slope");
  const double a = fit.pade.param("a"), b = fit.pade.param("b"), c = fit.pade.param("c");
  v.detail << "; slope " << s << ", Pade (" << a << ", " << b << ", " << c << "). ";
  v.expect(std::abs(s - 0.55) <= 0.15 * 0.55, "slope");
  v.expect(std::abs(a - 6.1) <= 0.25 * 6.1 && std::abs(b + 0.67) <= 0.25 * 0.67 && std::abs(c - 2.45) <= 0.25 * 2.45,
           "Pade parameters");
  v.expect(below, "C >= 2 sqrt2 for N > 1");

  // Supplementary: the same fits over odd N.
  const std::vector<int> odd{1, 3, 5, 9, 17, 33};
  std::vector<BellOptimum> ro(odd.size());
  parallel_for(static_cast<int>(odd.size()), 0, [&](int i) { ro[i] = optimum(odd[i]); });
  const BellScalingFit fo = fit_bell_scaling(ro);
  std::ostringstream o;
  o << "odd N {1,3,5,9,17,33}: C(N):";
  for (const auto& r : ro) o << " " << r.n_atoms << ":" << r.chsh;
  o << "; slope " << fo.slope.param("slope") << ", Pade (" << fo.pade.param("a") << ", " << fo.pade.param("b") << ", "
    << fo.pade.param("c") << ")";
  info = o.str();
}

}  // namespace

int main() {
  std::string bell_info;
  const std::vector<std::pair<const char*, std::function<void(Verdict&)>>> criteria{
      {"oracle equivalence", c1_oracle},
      {"algebra suite", c2_algebra},
      {"variance regression", c3_variances},
      {"expectation regression", c4_expectations},
      {"optimal-time fits", c5_fits},
      {"entanglement", c6_entanglement},
      {"witnesses", c7_witnesses},
      {"spin-EPR", c8_epr},
      {"Wigner", c9_wigner},
      {"Bell", [&](Verdict& v) { c10_bell(v, bell_info); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "[exception: " << e.what() << "] ";
    }
    failures += !v.pass;
    std::printf("criterion %2zu %s  %s: %s(%.2f s)\n", i + 1, v.pass ? "PASS" : "FAIL", criteria[i].first,
                v.detail.str().c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  if (!bell_info.empty()) std::printf("info: Bell %s\n", bell_info.c_str());
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

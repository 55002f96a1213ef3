#pragma once

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tass/tass.hpp"

namespace tass::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInvalidArguments = 2;
inline constexpr int kNumericalFailure = 3;
inline constexpr int kIoFailure = 4;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kOutputDirEnv = "TASS_OUTPUT_DIR";

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 17 significant digits, locale independent.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

/// Long-format CSV with a one-line header.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  CsvWriter& operator<<(double v) { return field(format_number(v)); }
  CsvWriter& operator<<(int v) { return field(std::to_string(v)); }
  CsvWriter& operator<<(bool v) { return field(v ? "1" : "0"); }
  CsvWriter& operator<<(const std::string& v) { return field(v); }
  CsvWriter& operator<<(const char* v) { return field(v); }

  void end_row() {
    out_ << '\n';
    first_ = true;
    if (!out_) throw IoError("write failed for " + path_.string());
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  CsvWriter& field(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }

  std::filesystem::path path_;
  std::ofstream out_;
  bool first_ = true;
};

/// Parses "0.7", "pi", "-pi/2", "3pi/4", "3*pi/4".
inline double parse_angle(const std::string& text) {
  std::string s;
  for (char ch : text)
    if (ch != ' ' && ch != '*') s += ch;
  const auto p = s.find("pi");
  if (p == std::string::npos) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw InvalidArgument("cannot parse angle '" + text + "'");
    return v;
  }
  double coef = 1.0;
  const std::string head = s.substr(0, p);
  if (head == "-") coef = -1.0;
  else if (!head.empty() && head != "+") coef = parse_angle(head);
  double den = 1.0;
  const std::string tail = s.substr(p + 2);
  if (!tail.empty()) {
    if (tail[0] != '/') throw InvalidArgument("cannot parse angle '" + text + "'");
    den = parse_angle(tail.substr(1));
    if (den == 0.0) throw InvalidArgument("cannot parse angle '" + text + "'");
  }
  return coef * pi / den;
}

/// Outcome index: an integer, "N", or "N-j".
inline int parse_outcome(const std::string& s, int n_atoms) {
  if (s == "N") return n_atoms;
  if (s.rfind("N-", 0) == 0) return parse_outcome(std::to_string(n_atoms - std::stoi(s.substr(2))), n_atoms);
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw InvalidArgument("cannot parse outcome '" + s + "'");
  if (v < 0 || v > n_atoms) throw InvalidArgument("outcome '" + s + "' outside 0.." + std::to_string(n_atoms));
  return v;
}

struct TauGrid {
  double start = 0.0;
  double stop = 0.5;
  int count = 500;

  std::vector<double> values() const {
    require(count >= 1, "tau grid count must be >= 1");
    std::vector<double> t(count);
    for (int i = 0; i < count; ++i) t[i] = count == 1 ? start : start + (stop - start) * i / (count - 1);
    return t;
  }
};

struct Common {
  std::string out_dir;
  int threads = 0;
};

struct Context {
  std::string subcommand;
  std::vector<std::string> argv;
  Common common;
  nlohmann::json inputs = nlohmann::json::object();
  std::vector<std::string> outputs;
  nlohmann::json results = nlohmann::json::object();

  std::filesystem::path dir() const {
    if (!common.out_dir.empty()) return common.out_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return ".";
  }

  CsvWriter csv(const std::string& name, const std::vector<std::string>& header) {
    outputs.push_back(name);
    return CsvWriter(dir() / name, header);
  }
};

inline void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

inline void write_manifest(const Context& ctx, double seconds) {
  nlohmann::json m;
  m["subcommand"] = ctx.subcommand;
  m["argv"] = ctx.argv;
  m["inputs"] = ctx.inputs;
  m["threads"] = ctx.common.threads;
  m["outputs"] = ctx.outputs;
  m["results"] = ctx.results;
  m["versions"] = {{"tass", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"cli11", CLI11_VERSION},
                   {"compiler", __VERSION__}};
  m["timings"] = {{"wall_seconds", seconds}};
  const auto path = ctx.dir() / (ctx.subcommand + ".manifest.json");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << m.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Subcommand implementations.

struct VariancesArgs {
  std::vector<int> n{20};
  TauGrid tau{0.0, 0.5, 500};
};

inline void run_variances(Context& ctx, const VariancesArgs& a) {
  ctx.inputs = {{"n", a.n}, {"tau_min", a.tau.start}, {"tau_max", a.tau.stop}, {"points", a.tau.count}};
  const auto taus = a.tau.values();
  auto out = ctx.csv("variances.csv", {"n", "tau", "var_sq_x", "var_sq_y", "var_asq_x", "var_asq_y", "hp_sq", "hp_asq"});
  for (int n : a.n) {
    const Propagator prop(n);
    RMatrix rows(taus.size(), 4);
    parallel_for(static_cast<int>(taus.size()), ctx.common.threads, [&](int i) {
      const JointState st = prop.evolve(taus[i]);
      rows(i, 0) = variance(st, TwoSpinObservable::sq_x());
      rows(i, 1) = variance(st, TwoSpinObservable::sq_y());
      rows(i, 2) = variance(st, TwoSpinObservable::asq_x());
      rows(i, 3) = variance(st, TwoSpinObservable::asq_y());
    });
    for (std::size_t i = 0; i < taus.size(); ++i) {
      out << n << taus[i] << rows(i, 0) << rows(i, 1) << rows(i, 2) << rows(i, 3)
          << hp_variance(n, taus[i], SqueezeKind::sq) << hp_variance(n, taus[i], SqueezeKind::asq);
      out.end_row();
    }
  }
}

struct ExpectationsArgs {
  std::vector<int> n{20};
  TauGrid tau{0.0, 0.5, 500};
};

inline void run_expectations(Context& ctx, const ExpectationsArgs& a) {
  ctx.inputs = {{"n", a.n}, {"tau_min", a.tau.start}, {"tau_max", a.tau.stop}, {"points", a.tau.count}};
  const auto taus = a.tau.values();
  auto out = ctx.csv("expectations.csv", {"n", "tau", "Sx1", "Sy1", "Sz1", "Sx2", "Sy2", "Sz2"});
  const OpLabel labels[3] = {OpLabel::Sx, OpLabel::Sy, OpLabel::Sz};
  for (int n : a.n) {
    const Propagator prop(n);
    RMatrix rows(taus.size(), 6);
    parallel_for(static_cast<int>(taus.size()), ctx.common.threads, [&](int i) {
      const JointState st = prop.evolve(taus[i]);
      for (int j = 0; j < 2; ++j)
        for (int c = 0; c < 3; ++c) rows(i, 3 * j + c) = expectation(st, labels[c], j + 1);
    });
    for (std::size_t i = 0; i < taus.size(); ++i) {
      out << n << taus[i];
      for (int c = 0; c < 6; ++c) out << rows(i, c);
      out.end_row();
    }
  }
}

struct ProbdistArgs {
  int n = 20;
  std::vector<double> tau{0.1};
  std::vector<std::string> bases{"xx", "yy", "zz", "xy", "zx", "zy"};
};

inline void run_probdist(Context& ctx, const ProbdistArgs& a) {
  ctx.inputs = {{"n", a.n}, {"tau", a.tau}, {"bases", a.bases}};
  const SpinSpace space(a.n);
  const Propagator prop(a.n);
  for (std::size_t t = 0; t < a.tau.size(); ++t) {
    const JointState st = prop.evolve(a.tau[t]);
    for (const auto& pair : a.bases) {
      require(pair.size() == 2, "basis pair '" + pair + "' must be two letters from x, y, z");
      const auto b1 = basis_from_letter(space, pair[0]);
      const auto b2 = basis_from_letter(space, pair[1]);
      const JointDistribution d = joint_distribution(st, b1, b2);
      std::string name = "probdist_" + pair;
      if (a.tau.size() > 1) name += "_t" + std::to_string(t);
      auto out = ctx.csv(name + ".csv", {"tau", "k1", "k2", "s1", "s2", "p"});
      for (int k1 = 0; k1 <= a.n; ++k1)
        for (int k2 = 0; k2 <= a.n; ++k2) {
          out << a.tau[t] << k1 << k2 << 2 * k1 - a.n << 2 * k2 - a.n << d.probs(k1, k2);
          out.end_row();
        }
      ctx.results[name] = {{"covariance", d.covariance()}};
    }
  }
}

struct OptimalArgs {
  std::vector<int> n{10, 20, 40, 80, 160};
  std::vector<std::string> kinds{"sq", "asq", "Sz", "E", "F"};
  int coarse_points = 400;
};

inline std::vector<OptimalTime> compute_optimal_times(const OptimalArgs& a, int threads) {
  std::vector<OptimalKind> kinds;
  for (const auto& k : a.kinds) kinds.push_back(parse_optimal_kind(k));
  for (int n : a.n) require(n >= 1, "N must be >= 1");
  const int total = static_cast<int>(a.n.size() * kinds.size());
  std::vector<OptimalTime> rec(total);
  TimeSearchOptions opt;
  opt.coarse_points = a.coarse_points;
  parallel_for(total, threads, [&](int i) {
    rec[i] = find_optimal_time(a.n[i / kinds.size()], kinds[i % kinds.size()], opt);
  });
  return rec;
}

inline void write_optimal_times(Context& ctx, const std::string& name, const std::vector<OptimalTime>& rec) {
  auto out = ctx.csv(name, {"n", "kind", "tau", "tau_times_n", "objective"});
  for (const auto& r : rec) {
    out << r.n_atoms << to_string(r.kind) << r.tau << r.tau * r.n_atoms << r.objective;
    out.end_row();
  }
}

inline void run_optimal_times(Context& ctx, const OptimalArgs& a) {
  ctx.inputs = {{"n", a.n}, {"kinds", a.kinds}, {"coarse_points", a.coarse_points}};
  write_optimal_times(ctx, "optimal_times.csv", compute_optimal_times(a, ctx.common.threads));
}

inline void run_fit(Context& ctx, const OptimalArgs& a) {
  ctx.inputs = {{"n", a.n}, {"kinds", a.kinds}, {"coarse_points", a.coarse_points}};
  const auto rec = compute_optimal_times(a, ctx.common.threads);
  write_optimal_times(ctx, "fit_times.csv", rec);
  auto out = ctx.csv("fit.csv", {"kind", "model", "p0", "p1", "residual_norm", "data_norm", "r_squared"});
  for (const auto& k : a.kinds) {
    std::vector<OptimalTime> sub;
    for (const auto& r : rec)
      if (to_string(r.kind) == k) sub.push_back(r);
    const FitResult f = fit_optimal_times(sub);
    out << k << to_string(f.model) << f.params[0] << f.params[1] << f.residual_norm << f.data_norm << f.r_squared;
    out.end_row();
    ctx.results[k] = {{"p0", f.params[0]}, {"p1", f.params[1]}, {"residual_norm", f.residual_norm}};
    if (k == "sq") {
      auto pv = ctx.csv("fit_min_variance.csv", {"n", "tau_sq", "min_variance", "predicted"});
      for (const auto& r : sub) {
        pv << r.n_atoms << r.tau << r.objective << predicted_min_variance(r.n_atoms, f.params[0], f.params[1]);
        pv.end_row();
      }
    }
  }
}

struct EntanglementArgs {
  std::vector<int> n{10, 20};
  TauGrid tau{0.0, 5.0, 2000};
  std::vector<int> opt_n{10, 20, 40, 80, 160};
};

inline void run_entanglement(Context& ctx, const EntanglementArgs& a) {
  ctx.inputs = {{"n", a.n}, {"tau_min", a.tau.start}, {"tau_max", a.tau.stop}, {"points", a.tau.count}, {"opt_n", a.opt_n}};
  const auto taus = a.tau.values();
  auto out = ctx.csv("entanglement.csv", {"n", "tau", "E", "E_over_Emax", "Sz1"});
  for (int n : a.n) {
    const Propagator prop(n);
    RMatrix rows(taus.size(), 2);
    parallel_for(static_cast<int>(taus.size()), ctx.common.threads, [&](int i) {
      const JointState st = prop.evolve(taus[i]);
      rows(i, 0) = entanglement_entropy(st);
      rows(i, 1) = expectation(st, OpLabel::Sz, 1);
    });
    for (std::size_t i = 0; i < taus.size(); ++i) {
      out << n << taus[i] << rows(i, 0) << rows(i, 0) / max_entropy(n) << rows(i, 1);
      out.end_row();
    }
  }
  if (a.opt_n.empty()) return;
  OptimalArgs oa{a.opt_n, {"E", "sq", "asq", "Sz"}, 400};
  const auto rec = compute_optimal_times(oa, ctx.common.threads);
  auto opt = ctx.csv("entanglement_opt.csv", {"n", "tau_E", "E", "E_over_Emax", "hp_ratio", "dtau_sq", "dtau_asq",
                                             "dtau_Sz"});
  for (std::size_t i = 0; i < a.opt_n.size(); ++i) {
    const int n = a.opt_n[i];
    const OptimalTime* r = &rec[4 * i];
    opt << n << r[0].tau << r[0].objective << r[0].objective / max_entropy(n)
        << (n >= 2 ? hp_entropy_ratio(n) : std::nan("")) << r[0].tau - r[1].tau << r[0].tau - r[2].tau
        << r[0].tau - r[3].tau;
    opt.end_row();
  }
}

struct CriteriaArgs {
  std::vector<int> n{20};
  TauGrid tau{0.0, 0.3, 300};
  std::vector<double> g_scan;
};

inline void run_criteria(Context& ctx, const CriteriaArgs& a) {
  ctx.inputs = {{"n", a.n}, {"tau_min", a.tau.start}, {"tau_max", a.tau.stop}, {"points", a.tau.count},
                {"g_scan", a.g_scan}};
  const auto taus = a.tau.values();
  auto out = ctx.csv("criteria.csv", {"n", "tau", "criterion", "lhs", "detected", "guard", "gx", "gy"});
  const int per = a.g_scan.empty() ? 3 : 4;
  for (int n : a.n) {
    const Propagator prop(n);
    std::vector<CriterionResult> res(taus.size() * per);
    parallel_for(static_cast<int>(taus.size()), ctx.common.threads, [&](int i) {
      const JointState st = prop.evolve(taus[i]);
      res[per * i + 0] = criterion(st, CriterionName::GMVT);
      res[per * i + 1] = criterion(st, CriterionName::DGCZ);
      res[per * i + 2] = criterion(st, CriterionName::HT);
      if (per == 4) res[per * i + 3] = gmvt_weight_scan(st, a.g_scan);
    });
    for (std::size_t i = 0; i < taus.size(); ++i)
      for (int c = 0; c < per; ++c) {
        const auto& r = res[per * i + c];
        out << n << taus[i] << (c == 3 ? std::string("GMVT-scan") : to_string(r.name)) << r.lhs << r.detected
            << r.guard << r.gx << r.gy;
        out.end_row();
      }
  }
}

struct FidelityArgs {
  std::vector<int> n{20};
  TauGrid tau{0.0, 5.0, 2000};
  std::vector<int> opt_n{10, 20, 40, 80, 160};
};

inline void run_fidelity(Context& ctx, const FidelityArgs& a) {
  ctx.inputs = {{"n", a.n}, {"tau_min", a.tau.start}, {"tau_max", a.tau.stop}, {"points", a.tau.count}, {"opt_n", a.opt_n}};
  const auto taus = a.tau.values();
  auto out = ctx.csv("fidelity.csv", {"n", "tau", "F_plus", "F_minus"});
  for (int n : a.n) {
    const Propagator prop(n);
    RMatrix rows(taus.size(), 2);
    parallel_for(static_cast<int>(taus.size()), ctx.common.threads, [&](int i) {
      const JointState st = prop.evolve(taus[i]);
      rows(i, 0) = epr_fidelity(st, EprSign::plus);
      rows(i, 1) = epr_fidelity(st, EprSign::minus);
    });
    for (std::size_t i = 0; i < taus.size(); ++i) {
      out << n << taus[i] << rows(i, 0) << rows(i, 1);
      out.end_row();
    }
  }
  if (a.opt_n.empty()) return;
  const auto rec = compute_optimal_times({a.opt_n, {"F"}, 400}, ctx.common.threads);
  auto opt = ctx.csv("fidelity_opt.csv", {"n", "inv_n", "tau_F", "F_minus"});
  for (const auto& r : rec) {
    opt << r.n_atoms << 1.0 / r.n_atoms << r.tau << r.objective;
    opt.end_row();
  }
}

struct WignerGridArgs {
  std::string projection;
  int rows = 181;
  int cols = 361;
};

inline GridSpec make_grid(const WignerGridArgs& g, int threads) {
  GridSpec spec;
  spec.rows = g.rows;
  spec.cols = g.cols;
  spec.projection = parse_projection(g.projection);
  spec.threads = threads;
  return spec;
}

inline void write_field(Context& ctx, const std::string& name, const WignerField& f) {
  auto out = ctx.csv(name, {"x", "y", "theta", "phi", "W"});
  for (int r = 0; r < f.values.rows(); ++r)
    for (int c = 0; c < f.values.cols(); ++c) {
      out << f.x(r, c) << f.y(r, c) << f.theta(r, c) << f.phi(r, c) << f.values(r, c);
      out.end_row();
    }
}

struct WignerMarginalArgs {
  int n = 10;
  std::vector<double> tau;
  std::vector<double> opt_multiples{0.0, 0.5, 1.0, 2.0};
  WignerGridArgs grid{"cassini"};
};

inline void run_wigner_marginal(Context& ctx, const WignerMarginalArgs& a) {
  std::vector<double> taus = a.tau;
  double tau_sq = 0.0;
  if (taus.empty()) {
    tau_sq = find_optimal_time(a.n, OptimalKind::sq).tau;
    for (double m : a.opt_multiples) taus.push_back(m * tau_sq);
  }
  ctx.inputs = {{"n", a.n}, {"tau", taus}, {"projection", a.grid.projection}, {"rows", a.grid.rows}, {"cols", a.grid.cols}};
  if (tau_sq > 0.0) ctx.results["tau_opt_sq"] = tau_sq;
  const GridSpec spec = make_grid(a.grid, ctx.common.threads);
  const Propagator prop(a.n);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const JointState st = prop.evolve(taus[i]);
    const WignerField f = wigner_field(multipole(reduced_density(st).matrix), spec);
    write_field(ctx, "wigner_marginal_" + std::to_string(i) + ".csv", f);
    const FieldPeak pk = field_peak(f);
    ctx.results["panel_" + std::to_string(i)] = {{"tau", taus[i]}, {"peak_theta", pk.theta}, {"peak_W", pk.value}};
  }
}

struct WignerConditionalArgs {
  int n = 10;
  double tau = -1.0;  // negative: use the optimal squeezing time
  std::vector<std::string> panels{"pi/2,pi/2,N", "pi/4,-pi/2,N", "pi/4,pi/2,0", "pi/2,pi/2,N-1"};
  WignerGridArgs grid{"mercator"};
};

inline void run_wigner_conditional(Context& ctx, const WignerConditionalArgs& a) {
  const double tau = a.tau >= 0.0 ? a.tau : find_optimal_time(a.n, OptimalKind::sq).tau;
  ctx.inputs = {{"n", a.n}, {"tau", tau}, {"panels", a.panels}, {"projection", a.grid.projection},
                {"rows", a.grid.rows}, {"cols", a.grid.cols}};
  const GridSpec spec = make_grid(a.grid, ctx.common.threads);
  const JointState st = Propagator(a.n).evolve(tau);
  auto summary = ctx.csv("wigner_conditional_summary.csv",
                         {"panel", "theta", "phi", "k", "probability", "peak_theta", "peak_phi", "peak_W", "min_W"});
  for (std::size_t i = 0; i < a.panels.size(); ++i) {
    std::vector<std::string> parts;
    std::stringstream ss(a.panels[i]);
    for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
    require(parts.size() == 3, "panel '" + a.panels[i] + "' must be theta,phi,k");
    const double theta = parse_angle(parts[0]);
    const double phi = parse_angle(parts[1]);
    const int k = parse_outcome(parts[2], a.n);
    const ConditionalProjection cp = conditional_state(st, theta, phi, k);
    const WignerField f = wigner_field(multipole(cp.state), spec);
    write_field(ctx, "wigner_conditional_" + std::to_string(i) + ".csv", f);
    const FieldPeak pk = field_peak(f);
    summary << static_cast<int>(i) << theta << phi << k << cp.probability << pk.theta << pk.phi << pk.value
            << f.values.minCoeff();
    summary.end_row();
  }
}

struct BellArgs {
  std::vector<int> n{1, 2, 4, 8, 16, 32};
  std::string zero = "plus";
  int theta_points = 181;
  int tau_points = 21;
};

inline void run_bell(Context& ctx, const BellArgs& a) {
  ctx.inputs = {{"n", a.n}, {"zero", a.zero}, {"theta_points", a.theta_points}, {"tau_points", a.tau_points}};
  require(a.zero == "plus" || a.zero == "minus", "--zero must be plus or minus");
  BellSearchOptions opt;
  opt.zero = a.zero == "plus" ? ZeroSign::plus : ZeroSign::minus;
  opt.theta_points = a.theta_points;
  opt.tau_points = a.tau_points;
  opt.threads = ctx.common.threads;
  std::vector<BellOptimum> rec;
  std::vector<double> hints;
  for (int n : a.n) {
    const double hint = find_optimal_time(n, OptimalKind::sq).tau;
    hints.push_back(hint);
    rec.push_back(optimize_violation(n, hint, opt));
  }
  auto out = ctx.csv("bell.csv", {"n", "tau_hint", "tau", "theta_b", "C", "C_minus_2_times_n"});
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const auto& r = rec[i];
    out << r.n_atoms << hints[i] << r.tau << r.theta_b << r.chsh << (r.chsh - 2.0) * r.n_atoms;
    out.end_row();
  }
  if (rec.size() < 3) return;
  const BellScalingFit fit = fit_bell_scaling(rec);
  auto f = ctx.csv("bell_fit.csv", {"model", "param", "value", "residual_norm", "data_norm"});
  for (const FitResult* r : {&fit.slope, &fit.pade})
    for (std::size_t p = 0; p < r->params.size(); ++p) {
      f << to_string(r->model) << r->names[p] << r->params[p] << r->residual_norm << r->data_norm;
      f.end_row();
    }
}

struct OracleArgs {
  int n = 4;
  std::vector<double> tau{0.37};
};

/// Returns the worst deviation; the caller maps it to the exit code.
inline double run_oracle_check(Context& ctx, const OracleArgs& a) {
  ctx.inputs = {{"n", a.n}, {"tau", a.tau}};
  double worst = 0.0;
  auto out = ctx.csv("oracle_check.csv", {"n", "tau", "max_deviation"});
  for (double t : a.tau) {
    const double dev = sector_vs_full_deviation(a.n, t);
    worst = std::max(worst, dev);
    out << a.n << t << dev;
    out.end_row();
    std::printf("N=%d tau=%.6g max deviation %.3e\n", a.n, t, dev);
  }
  ctx.results["max_deviation"] = worst;
  return worst;
}

inline constexpr double kOracleTolerance = 1e-10;

// ---------------------------------------------------------------------------

inline void add_tau_grid(CLI::App* sub, TauGrid& g) {
  sub->add_option("--tau-min", g.start, "First tau of the grid")->capture_default_str();
  sub->add_option("--tau-max", g.stop, "Last tau of the grid")->capture_default_str();
  sub->add_option("--points", g.count, "Number of tau samples")->check(CLI::PositiveNumber)->capture_default_str();
}

inline CLI::Option* add_n_list(CLI::App* sub, std::vector<int>& n, const char* help = "Atom numbers per ensemble") {
  return sub->add_option("--n", n, help)->delimiter(',')->check(CLI::PositiveNumber)->capture_default_str();
}

inline void add_grid(CLI::App* sub, WignerGridArgs& g) {
  sub->add_option("--projection", g.projection, "none, cassini or mercator")
      ->check(CLI::IsMember({"none", "cassini", "mercator"}))
      ->capture_default_str();
  sub->add_option("--rows", g.rows, "Grid rows (y / theta)")->check(CLI::Range(2, 100000))->capture_default_str();
  sub->add_option("--cols", g.cols, "Grid columns (x / phi)")->check(CLI::Range(2, 100000))->capture_default_str();
}

inline int run(int argc, char** argv) {
  CLI::App app{"Two-axis two-spin squeezing simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Context ctx;
  for (int i = 0; i < argc; ++i) ctx.argv.emplace_back(argv[i]);
  app.add_option("--out", ctx.common.out_dir,
                 std::string("Output directory (default $") + kOutputDirEnv + " or the working directory)");
  app.add_option("--threads", ctx.common.threads, "Worker thread cap (0 = all cores)")->check(CLI::NonNegativeNumber);

  VariancesArgs va;
  auto* s_var = app.add_subcommand("variances", "Squeezed and anti-squeezed variances with HP overlay");
  add_n_list(s_var, va.n);
  add_tau_grid(s_var, va.tau);

  ExpectationsArgs ea;
  auto* s_exp = app.add_subcommand("expectations", "Spin expectation values of both ensembles");
  add_n_list(s_exp, ea.n);
  add_tau_grid(s_exp, ea.tau);

  ProbdistArgs pa;
  auto* s_prob = app.add_subcommand("probdist", "Joint outcome distributions in rotated bases");
  s_prob->add_option("--n", pa.n, "Atoms per ensemble")->check(CLI::PositiveNumber)->capture_default_str();
  s_prob->add_option("--tau", pa.tau, "Interaction time(s)")->delimiter(',')->capture_default_str();
  s_prob->add_option("--bases", pa.bases, "Basis pairs, letters x (Sx~), y (Sy~), z")
      ->delimiter(',')
      ->capture_default_str();

  EntanglementArgs ena;
  auto* s_ent = app.add_subcommand("entanglement", "Entanglement entropy versus time and its optimum versus N");
  add_n_list(s_ent, ena.n);
  add_tau_grid(s_ent, ena.tau);
  s_ent->add_option("--opt-n", ena.opt_n, "N values for the optimized entropy")->delimiter(',')->capture_default_str();
  ena.tau = {0.0, 5.0, 2000};

  CriteriaArgs ca;
  auto* s_cri = app.add_subcommand("criteria", "GMVT, DGCZ and HT separability criteria");
  add_n_list(s_cri, ca.n);
  add_tau_grid(s_cri, ca.tau);
  s_cri->add_option("--g-scan", ca.g_scan, "Weight values for an additional GMVT (gx, gy) scan")->delimiter(',');

  FidelityArgs fa;
  auto* s_fid = app.add_subcommand("fidelity", "Overlap with the spin-EPR states");
  add_n_list(s_fid, fa.n);
  add_tau_grid(s_fid, fa.tau);
  s_fid->add_option("--opt-n", fa.opt_n, "N values for the optimized F-")->delimiter(',')->capture_default_str();

  WignerMarginalArgs wma;
  auto* s_wm = app.add_subcommand("wigner-marginal", "Wigner function of one ensemble's reduced state");
  s_wm->add_option("--n", wma.n, "Atoms per ensemble")->check(CLI::PositiveNumber)->capture_default_str();
  auto* wm_tau = s_wm->add_option("--tau", wma.tau, "Explicit interaction times")->delimiter(',');
  s_wm->add_option("--opt-multiples", wma.opt_multiples, "Times as multiples of the optimal squeezing time")
      ->delimiter(',')
      ->excludes(wm_tau)
      ->capture_default_str();
  add_grid(s_wm, wma.grid);

  WignerConditionalArgs wca;
  auto* s_wc = app.add_subcommand("wigner-conditional", "Wigner function of ensemble 2 after projecting ensemble 1");
  s_wc->add_option("--n", wca.n, "Atoms per ensemble")->check(CLI::PositiveNumber)->capture_default_str();
  s_wc->add_option("--tau", wca.tau, "Interaction time (default: optimal squeezing time)");
  s_wc->add_option("--panel", wca.panels, "Projection theta,phi,k; k may be N or N-j; angles accept pi")
      ->capture_default_str();
  add_grid(s_wc, wca.grid);

  BellArgs ba;
  auto* s_bell = app.add_subcommand("bell", "Optimized CHSH violation and scaling fits");
  add_n_list(s_bell, ba.n);
  s_bell->add_option("--zero", ba.zero, "Outcome for the zero eigenvalue (plus or minus)")->capture_default_str();
  s_bell->add_option("--theta-points", ba.theta_points, "Coarse theta_B grid size")
      ->check(CLI::Range(3, 100000))
      ->capture_default_str();
  s_bell->add_option("--tau-points", ba.tau_points, "Coarse tau grid size")
      ->check(CLI::Range(2, 100000))
      ->capture_default_str();

  OptimalArgs oa;
  auto* s_opt = app.add_subcommand("optimal-times", "Optimal times for sq, asq, Sz, E and F");
  add_n_list(s_opt, oa.n);
  s_opt->add_option("--kinds", oa.kinds, "Subset of sq,asq,Sz,E,F")
      ->delimiter(',')
      ->check(CLI::IsMember({"sq", "asq", "Sz", "E", "F"}))
      ->capture_default_str();
  s_opt->add_option("--coarse-points", oa.coarse_points, "Coarse scan size")
      ->check(CLI::Range(3, 1000000))
      ->capture_default_str();

  OptimalArgs fit_a;
  fit_a.kinds = {"sq", "asq", "Sz", "F"};
  auto* s_fit = app.add_subcommand("fit", "Fit tau N = p0 + p1 ln N to the optimal times");
  add_n_list(s_fit, fit_a.n);
  s_fit->add_option("--kinds", fit_a.kinds, "Subset of sq,asq,Sz,E,F")
      ->delimiter(',')
      ->check(CLI::IsMember({"sq", "asq", "Sz", "E", "F"}))
      ->capture_default_str();
  s_fit->add_option("--coarse-points", fit_a.coarse_points, "Coarse scan size")
      ->check(CLI::Range(3, 1000000))
      ->capture_default_str();

  OracleArgs ora;
  auto* s_orc = app.add_subcommand("oracle-check", "Compare sector evolution with the dense full-space exponential");
  s_orc->add_option("--n", ora.n, "Atoms per ensemble")->check(CLI::Range(1, kFullSpaceMaxAtoms))->capture_default_str();
  s_orc->add_option("--tau", ora.tau, "Interaction time(s)")->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalidArguments;
  }

  const auto start = std::chrono::steady_clock::now();
  int code = kOk;
  try {
    CLI::App* sub = app.get_subcommands().front();
    ctx.subcommand = sub->get_name();
    prepare_dir(ctx.dir());
    if (sub == s_var) run_variances(ctx, va);
    else if (sub == s_exp) run_expectations(ctx, ea);
    else if (sub == s_prob) run_probdist(ctx, pa);
    else if (sub == s_ent) run_entanglement(ctx, ena);
    else if (sub == s_cri) run_criteria(ctx, ca);
    else if (sub == s_fid) run_fidelity(ctx, fa);
    else if (sub == s_wm) run_wigner_marginal(ctx, wma);
    else if (sub == s_wc) run_wigner_conditional(ctx, wca);
    else if (sub == s_bell) run_bell(ctx, ba);
    else if (sub == s_opt) run_optimal_times(ctx, oa);
    else if (sub == s_fit) run_fit(ctx, fit_a);
    else if (sub == s_orc) {
      if (run_oracle_check(ctx, ora) > kOracleTolerance) code = kNumericalFailure;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(ctx, secs);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidArguments;
  } catch (const ResourceLimit& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidArguments;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const std::exception& e) {
    // SearchFailure, FitFailure, InvalidState, DegenerateOutcome.
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return code;
}

}  // namespace tass::cli

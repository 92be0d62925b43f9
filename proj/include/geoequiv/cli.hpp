#pragma once

// Command-line front end. Exit codes: 0 pass, 1 fail, 2 inconclusive,
// 64 configuration or input error.

#include "geoequiv/csv.hpp"
#include "geoequiv/flow.hpp"
#include "geoequiv/pair_io.hpp"
#include "geoequiv/quantum.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

namespace geoequiv::cli {

enum ExitCode : int { kPass = 0, kFail = 1, kInconclusive = 2, kConfigError = 64 };

inline int exit_code(Verdict v) {
  switch (v) {
    case Verdict::Pass: return kPass;
    case Verdict::Fail: return kFail;
    default: return kInconclusive;
  }
}

// Fail dominates, then inconclusive.
inline Verdict combine(Verdict a, Verdict b) {
  if (a == Verdict::Fail || b == Verdict::Fail) return Verdict::Fail;
  if (a == Verdict::Inconclusive || b == Verdict::Inconclusive) return Verdict::Inconclusive;
  return Verdict::Pass;
}

struct RunConfig {
  std::string catalog;
  std::string file;
  CatalogParams params;
  int samples = 200;
  std::uint64_t seed = 42;
  double tol = 1e-3;
  double bracket_tol = 1e-6;
  double t_end = 3.0;
  double step = 1e-3;
  int geodesics = 20;
  int grid = 0;  // 0 picks the command default
  int power = 1;
  std::string emit;

  void validate() const {
    if (!(tol > 0.0) || !(bracket_tol > 0.0)) throw ConfigError("tolerances must be positive");
    if (!(t_end > 0.0) || !(step > 0.0)) throw ConfigError("--t-end and --step must be positive");
    if (samples < 1 || geodesics < 1) throw ConfigError("--samples and --geodesics must be positive");
    if (grid < 0) throw ConfigError("--grid must be positive");
  }
};

inline MetricPair resolve_pair(const RunConfig& cfg) {
  if (!cfg.catalog.empty() && !cfg.file.empty()) throw ConfigError("give either --catalog or --file, not both");
  if (!cfg.file.empty()) {
    if (!cfg.params.empty()) throw ConfigError("catalog parameters need --catalog");
    return load_pair_file(cfg.file);
  }
  if (!cfg.catalog.empty()) return build_catalog_pair(cfg.catalog, cfg.params);
  throw ConfigError("no pair given; use --catalog NAME or --file PATH");
}

namespace detail {

inline std::string join(const Vector& v, char sep = ' ') {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += csv::number(v[i]);
  }
  return s;
}

inline std::string phase_text(const PhasePoint& pp) { return join(pp.x) + " | " + join(pp.p); }

class Emitter {
 public:
  explicit Emitter(const std::string& path) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary);
    if (!file_) throw ConfigError("cannot write '" + path + "'");
  }
  bool active() const { return file_.is_open(); }
  std::ostream& stream() { return file_; }

 private:
  std::ofstream file_;
};

inline Verdict bracket_verdict(const BracketReport& rep, double tol) {
  if (rep.evaluated == 0) return Verdict::Inconclusive;
  bool small = true, noise = true;
  for (int j = 0; j < rep.n; ++j)
    for (int k = j + 1; k < rep.n; ++k) {
      small = small && rep.max_normalized(j, k) <= tol;
      noise = noise && rep.fd_noise_confirmed(j, k);
    }
  if (small && noise) return Verdict::Pass;
  if (!small && !noise) return Verdict::Fail;
  return Verdict::Inconclusive;
}

struct Histograms {
  std::map<int, int> rank;
  std::map<int, int> distinct;
  int degenerate = 0;
  int failed = 0;
};

inline Histograms histograms(const IntegralFamily& fam, int samples, std::uint64_t seed) {
  Histograms h;
  PhaseSampler sampler(fam.pair().g, default_sample_box(fam.pair().chart()), seed);
  for (int s = 0; s < samples; ++s) {
    try {
      const PhasePoint pp = sampler.phase_point();
      const RankResult r = differential_rank(fam, pp);
      if (r.rank) ++h.rank[*r.rank];
      else ++h.degenerate;
      ++h.distinct[distinct_eigenvalue_count(build_G(fam.pair(), pp.x))];
    } catch (const DomainError&) {
      ++h.failed;
    }
  }
  return h;
}

}  // namespace detail

inline BracketOptions bracket_options(const RunConfig& cfg) {
  BracketOptions o;
  o.samples = cfg.samples;
  o.seed = cfg.seed;
  return o;
}

inline EquivalenceOptions equivalence_options(const RunConfig& cfg) {
  EquivalenceOptions o;
  o.n_geodesics = cfg.geodesics;
  o.t_end = cfg.t_end;
  o.step = cfg.step;
  o.tol = cfg.tol;
  o.seed = cfg.seed;
  return o;
}

inline void print_brackets(std::ostream& out, const BracketReport& rep) {
  out << "brackets: " << rep.evaluated << " phase points";
  if (rep.skipped) out << " (" << rep.skipped << " skipped)";
  out << '\n';
  for (int j = 0; j < rep.n; ++j)
    for (int k = j + 1; k < rep.n; ++k)
      out << "  {I" << j << ",I" << k << "} max normalized " << std::setprecision(3) << std::scientific
          << rep.max_normalized(j, k) << ", richardson ratio " << std::fixed << std::setprecision(2)
          << rep.richardson_ratio(j, k) << (rep.fd_noise_confirmed(j, k) ? " (fd noise)" : "") << '\n'
          << std::defaultfloat << std::setprecision(6);
}

inline Verdict run_check(const MetricPair& pair, const RunConfig& cfg, std::ostream& out, std::ostream* csv_out) {
  const IntegralFamily fam(pair);
  const BracketReport rep = bracket_report(fam, bracket_options(cfg));
  const Verdict bv = detail::bracket_verdict(rep, cfg.bracket_tol);
  const EquivalenceReport eq = check_equivalence(pair, equivalence_options(cfg));
  const detail::Histograms hist = detail::histograms(fam, cfg.samples, cfg.seed);

  out << "pair: " << pair.name << " (n = " << pair.dim() << ")\n";
  print_brackets(out, rep);
  out << "  verdict " << verdict_name(bv) << '\n';
  out << "geodesics: " << eq.geodesics.size() << ", max distance " << std::scientific << std::setprecision(3)
      << eq.max_distance << std::defaultfloat << std::setprecision(6) << ", verdict " << verdict_name(eq.verdict)
      << '\n';
  out << "differential rank:";
  for (const auto& [r, c] : hist.rank) out << " " << r << "x" << c;
  if (hist.degenerate) out << " degenerate x" << hist.degenerate;
  out << "\ndistinct eigenvalues of G:";
  for (const auto& [m, c] : hist.distinct) out << " " << m << "x" << c;
  out << '\n';
  const Verdict overall = combine(bv, eq.verdict);
  out << "verdict: " << verdict_name(overall) << '\n';

  if (csv_out) {
    csv::Writer w(*csv_out, {"record", "i", "j", "value", "detail"});
    for (int j = 0; j < rep.n; ++j)
      for (int k = j + 1; k < rep.n; ++k) {
        w.row({"bracket", std::to_string(j), std::to_string(k), csv::number(rep.max_normalized(j, k)),
               detail::phase_text(rep.argmax_at(j, k))});
        w.row({"richardson", std::to_string(j), std::to_string(k), csv::number(rep.richardson_ratio(j, k)),
               rep.fd_noise_confirmed(j, k) ? "fd-noise" : "signal"});
      }
    for (std::size_t i = 0; i < eq.geodesics.size(); ++i) {
      const GeodesicComparison& c = eq.geodesics[i];
      w.row({"geodesic", std::to_string(i), "", csv::number(c.distance),
             c.usable ? detail::join(c.x0) : std::string("unusable")});
    }
    for (const auto& [r, c] : hist.rank) w.row({"rank", std::to_string(r), "", std::to_string(c), ""});
    if (hist.degenerate) w.row({"rank", "degenerate", "", std::to_string(hist.degenerate), ""});
    for (const auto& [m, c] : hist.distinct) w.row({"distinct", std::to_string(m), "", std::to_string(c), ""});
    w.row({"verdict", "brackets", "", std::to_string(exit_code(bv)), verdict_name(bv)});
    w.row({"verdict", "geodesics", "", std::to_string(exit_code(eq.verdict)), verdict_name(eq.verdict)});
    w.row({"verdict", "overall", "", std::to_string(exit_code(overall)), verdict_name(overall)});
  }
  return overall;
}

inline int cmd_check(const RunConfig& cfg, std::ostream& out) {
  const MetricPair pair = resolve_pair(cfg);
  detail::Emitter emit(cfg.emit);
  return exit_code(run_check(pair, cfg, out, emit.active() ? &emit.stream() : nullptr));
}

inline int cmd_brackets(const RunConfig& cfg, std::ostream& out) {
  const MetricPair pair = resolve_pair(cfg);
  const BracketReport rep = bracket_report(IntegralFamily(pair), bracket_options(cfg));
  print_brackets(out, rep);
  const Verdict v = detail::bracket_verdict(rep, cfg.bracket_tol);
  out << "verdict: " << verdict_name(v) << '\n';
  detail::Emitter emit(cfg.emit);
  if (emit.active()) {
    std::vector<std::string> header{"j", "k", "max_normalized_bracket"};
    for (int i = 1; i <= rep.n; ++i) header.push_back("x" + std::to_string(i));
    for (int i = 1; i <= rep.n; ++i) header.push_back("p" + std::to_string(i));
    csv::Writer w(emit.stream(), header);
    for (int j = 0; j < rep.n; ++j)
      for (int k = j + 1; k < rep.n; ++k) {
        std::vector<std::string> row{std::to_string(j), std::to_string(k), csv::number(rep.max_normalized(j, k))};
        const PhasePoint& pp = rep.argmax_at(j, k);
        for (Eigen::Index i = 0; i < pp.x.size(); ++i) row.push_back(csv::number(pp.x[i]));
        for (Eigen::Index i = 0; i < pp.p.size(); ++i) row.push_back(csv::number(pp.p[i]));
        w.row(row);
      }
  }
  return exit_code(v);
}

inline int cmd_rank(const RunConfig& cfg, std::ostream& out) {
  const MetricPair pair = resolve_pair(cfg);
  const detail::Histograms hist = detail::histograms(IntegralFamily(pair), cfg.samples, cfg.seed);
  out << "differential rank over " << cfg.samples << " phase points:\n";
  for (const auto& [r, c] : hist.rank) out << "  rank " << r << ": " << c << '\n';
  if (hist.degenerate) out << "  degenerate: " << hist.degenerate << '\n';
  if (hist.failed) out << "  outside domain: " << hist.failed << '\n';
  out << "distinct eigenvalues of G:\n";
  for (const auto& [m, c] : hist.distinct) out << "  " << m << ": " << c << '\n';
  detail::Emitter emit(cfg.emit);
  if (emit.active()) {
    csv::Writer w(emit.stream(), {"quantity", "value", "count"});
    for (const auto& [r, c] : hist.rank) w.row({"rank", std::to_string(r), std::to_string(c)});
    for (const auto& [m, c] : hist.distinct) w.row({"distinct", std::to_string(m), std::to_string(c)});
  }
  return hist.rank.empty() ? kInconclusive : kPass;
}

inline int cmd_sinjukov(const RunConfig& cfg, std::ostream& out) {
  if (cfg.power == 0) throw ConfigError("--power 0 is the identity transform and is not accepted");
  const MetricPair transformed = sinjukov_transform(resolve_pair(cfg), cfg.power);
  out << "transformed pair: " << transformed.name << '\n';
  if (!cfg.emit.empty()) {
    detail::Emitter emit(cfg.emit);
    emit.stream() << tabulate_pair(transformed).dump(2) << '\n';
    out << "tabulated definition written to " << cfg.emit << " (grid samples; interpolate between nodes)\n";
  }
  return exit_code(run_check(transformed, cfg, out, nullptr));
}

inline int cmd_geodesics(const RunConfig& cfg, std::ostream& out) {
  const MetricPair pair = resolve_pair(cfg);
  PhaseSampler sampler(pair.g, default_sample_box(pair.chart()), cfg.seed);
  const Vector x0 = sampler.base_point();
  const Vector v0 = sampler.unit_velocity(x0);
  const GeodesicTrace trace = integrate_geodesic(pair.g, x0, v0, cfg.t_end, cfg.step);
  const IntegralFamily fam(pair);
  const Vector drift = integral_drift(trace, fam);

  detail::Emitter emit(cfg.emit);
  std::ostream& csv_out = emit.active() ? emit.stream() : out;
  const int n = pair.dim();
  std::vector<std::string> header{"t"};
  for (int i = 1; i <= n; ++i) header.push_back("x" + std::to_string(i));
  for (int i = 1; i <= n; ++i) header.push_back("p" + std::to_string(i));
  csv::Writer w(csv_out, header);
  for (const TraceSample& s : trace.samples) {
    std::vector<std::string> row{csv::number(s.t)};
    for (int i = 0; i < n; ++i) row.push_back(csv::number(s.x[i]));
    for (int i = 0; i < n; ++i) row.push_back(csv::number(s.p[i]));
    w.row(row);
  }
  if (emit.active()) {
    out << "geodesic of " << pair.name << " from " << format_point(x0) << ": " << trace.samples.size()
        << " samples to t = " << trace.final_time() << (trace.exited_domain ? " (left the chart)" : "") << '\n';
    out << "energy drift " << trace.energy_drift << ", integral drift " << drift.maxCoeff() << '\n';
  }
  return kPass;
}

inline int cmd_quantum(const RunConfig& cfg, std::ostream& out) {
  const MetricPair pair = resolve_pair(cfg);
  const int base = cfg.grid > 0 ? cfg.grid : 32;
  const QuantumStudy study = quantum_study(pair, {base, 2 * base, 4 * base});
  out << "quantum operators of " << pair.name << ":\n";
  out << "  resolution  commutator[I0,I1]  adjoint defect\n";
  for (const QuantumLevel& l : study.levels)
    out << "  " << std::setw(10) << l.resolution << "  " << std::setw(17) << std::setprecision(6) << l.commutator
        << "  " << l.adjoint_defect << '\n';
  if (study.exact_zero) out << "  commutators vanish exactly\n";
  else out << "  fitted order " << study.order << '\n';
  const bool pass = study.pass();
  out << "verdict: " << (pass ? "PASS" : "FAIL") << '\n';
  detail::Emitter emit(cfg.emit);
  if (emit.active()) {
    csv::Writer w(emit.stream(), {"resolution", "step", "commutator", "adjoint_defect"});
    for (const QuantumLevel& l : study.levels)
      w.row({std::to_string(l.resolution), csv::number(l.step), csv::number(l.commutator),
             csv::number(l.adjoint_defect)});
  }
  return pass ? kPass : kFail;
}

inline int cmd_scan(const RunConfig& cfg, std::ostream& out) {
  const MetricPair pair = resolve_pair(cfg);
  const int density = cfg.grid > 0 ? cfg.grid : 400;
  const ScanResult scan = proportionality_scan(pair, density);
  if (scan.all) {
    out << "proportionality: all (every grid node)\n";
  } else {
    out << "proportionality components: " << scan.components << '\n';
    for (const Vector& r : scan.representatives) out << "  " << format_point(r) << '\n';
  }
  detail::Emitter emit(cfg.emit);
  if (emit.active()) {
    csv::Writer w(emit.stream(), {"component", "x1", "x2"});
    for (std::size_t i = 0; i < scan.representatives.size(); ++i)
      w.row({std::to_string(i), csv::number(scan.representatives[i][0]), csv::number(scan.representatives[i][1])});
  }
  return kPass;
}

inline int cmd_catalog(const RunConfig&, std::ostream& out) {
  for (const CatalogEntry& e : catalog()) {
    out << e.name << '\n';
    out << "  params:  " << e.params_schema << '\n';
    out << "  chart:   " << e.chart << '\n';
    out << "  caveats: " << e.caveats << '\n';
  }
  return kPass;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Numerical checks for geodesically equivalent metric pairs"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  std::vector<double> A, a;
  double c = 0.0;
  app.add_option("--catalog", cfg.catalog, "catalog entry name");
  app.add_option("--file", cfg.file, "pair definition file (JSON)");
  app.add_option("--A", A, "Beltrami matrix: 3 diagonal entries or 9 row-major entries")->delimiter(',');
  app.add_option("--a", a, "ellipsoid semi-axis squares")->delimiter(',');
  auto* c_opt = app.add_option("--c", c, "proportionality factor");
  app.add_option("--samples", cfg.samples, "phase points for brackets and rank");
  app.add_option("--seed", cfg.seed, "random seed");
  app.add_option("--tol", cfg.tol, "geodesic comparison tolerance");
  app.add_option("--bracket-tol", cfg.bracket_tol, "normalized bracket tolerance");
  app.add_option("--t-end", cfg.t_end, "geodesic length");
  app.add_option("--step", cfg.step, "integrator step");
  app.add_option("--geodesics", cfg.geodesics, "geodesics compared by check");
  app.add_option("--grid", cfg.grid, "grid resolution (quantum base level, scan density)");
  app.add_option("--power", cfg.power, "B-transform power");
  app.add_option("--emit", cfg.emit, "output file");

  struct Command {
    const char* name;
    const char* help;
    int (*fn)(const RunConfig&, std::ostream&);
  };
  static const Command commands[] = {
      {"check", "brackets, geodesic comparison, rank and eigenvalue summary", cmd_check},
      {"brackets", "Poisson brackets of the integrals", cmd_brackets},
      {"rank", "rank of the differentials of the integrals", cmd_rank},
      {"sinjukov", "B-transform the pair and check the result", cmd_sinjukov},
      {"geodesics", "export one geodesic as CSV", cmd_geodesics},
      {"quantum", "commutators and self-adjointness of the grid operators", cmd_quantum},
      {"scan", "count proportionality components", cmd_scan},
      {"catalog", "list catalog pairs", cmd_catalog},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const Command& cmd : commands) subs.emplace_back(app.add_subcommand(cmd.name, cmd.help), &cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (!A.empty()) cfg.params["A"] = A;
    if (!a.empty()) cfg.params["a"] = a;
    if (c_opt->count()) cfg.params["c"] = {c};
    cfg.validate();
    for (const auto& [sub, cmd] : subs)
      if (sub->parsed()) return cmd->fn(cfg, out);
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInconclusive;
  }
}

}  // namespace geoequiv::cli

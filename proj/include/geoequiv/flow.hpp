#pragma once

// Geodesic flows as Hamiltonian systems on T*M, drift of first integrals, and
// comparison of geodesics as unparameterised curves.

#include "geoequiv/integrals.hpp"

namespace geoequiv {

enum class Integrator { RK4, ImplicitMidpoint };

inline const char* integrator_name(Integrator m) {
  return m == Integrator::RK4 ? "rk4" : "implicit-midpoint";
}

struct TraceSample {
  double t = 0.0;
  Vector x;
  Vector p;
};

struct GeodesicTrace {
  std::vector<TraceSample> samples;
  std::string metric_id;
  double step = 0.0;
  Integrator method = Integrator::RK4;
  double energy_drift = 0.0;  // max |H - H(0)| / H(0) over recorded samples
  bool exited_domain = false;

  double final_time() const { return samples.empty() ? 0.0 : samples.back().t; }
};

struct FlowOptions {
  Integrator method = Integrator::RK4;
  int record_every = 1;
};

struct PhaseRate {
  Vector dx;
  Vector dp;
};

using PhaseVectorField = std::function<PhaseRate(const Vector& x, const Vector& p)>;

// dx/dt = g^{-1} p,  dp_i/dt = -dH/dx^i = 1/2 v^T (d_i g) v  with v = g^{-1} p
inline PhaseRate geodesic_rate(const MetricField& g, const Vector& x, const Vector& p) {
  const Matrix ginv = inverse_and_det(g, x).inverse;
  const Vector v = ginv * p;
  Vector dp(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    dp[i] = 0.5 * v.dot(metric_partial(g, x, static_cast<int>(i)) * v);
  return {v, dp};
}

namespace detail {

inline bool rk4_step(const PhaseVectorField& f, Vector& x, Vector& p, double h) {
  const PhaseRate k1 = f(x, p);
  const PhaseRate k2 = f(x + 0.5 * h * k1.dx, p + 0.5 * h * k1.dp);
  const PhaseRate k3 = f(x + 0.5 * h * k2.dx, p + 0.5 * h * k2.dp);
  const PhaseRate k4 = f(x + h * k3.dx, p + h * k3.dp);
  x += h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
  p += h / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
  return true;
}

inline bool midpoint_step(const PhaseVectorField& f, Vector& x, Vector& p, double h) {
  PhaseRate k = f(x, p);
  Vector x1 = x + h * k.dx, p1 = p + h * k.dp;
  for (int it = 0; it < 60; ++it) {
    k = f(0.5 * (x + x1), 0.5 * (p + p1));
    const Vector xn = x + h * k.dx, pn = p + h * k.dp;
    const double change = (xn - x1).lpNorm<Eigen::Infinity>() + (pn - p1).lpNorm<Eigen::Infinity>();
    x1 = xn;
    p1 = pn;
    if (change <= 1e-15 * (1.0 + x1.lpNorm<Eigen::Infinity>() + p1.lpNorm<Eigen::Infinity>())) break;
  }
  x = x1;
  p = p1;
  return true;
}

}  // namespace detail

// Fixed-step integration of an arbitrary phase-space vector field. Stops early,
// flagging exited_domain, when a stage leaves the chart.
inline GeodesicTrace integrate_phase_flow(const PhaseVectorField& f, const Vector& x0, const Vector& p0,
                                          double t_end, double step, const FlowOptions& opts = {}) {
  if (!(step > 0.0)) throw ConfigError("integration step must be positive");
  if (!(t_end >= 0.0)) throw ConfigError("integration end time must be non-negative");
  GeodesicTrace trace;
  trace.step = step;
  trace.method = opts.method;
  Vector x = x0, p = p0;
  trace.samples.push_back({0.0, x, p});
  const long steps = static_cast<long>(std::ceil(t_end / step - 1e-9));
  const int every = std::max(1, opts.record_every);
  for (long s = 1; s <= steps; ++s) {
    const double h = std::min(step, t_end - (s - 1) * step);
    Vector xn = x, pn = p;
    try {
      if (opts.method == Integrator::RK4)
        detail::rk4_step(f, xn, pn, h);
      else
        detail::midpoint_step(f, xn, pn, h);
      f(xn, pn);  // the new point must itself be evaluable
    } catch (const DomainError&) {
      trace.exited_domain = true;
      break;
    }
    x = std::move(xn);
    p = std::move(pn);
    if (s % every == 0 || s == steps) trace.samples.push_back({(s - 1) * step + h, x, p});
  }
  // After an exit only recorded samples are kept, so traces made with the same
  // step and record_every stay aligned sample by sample.
  return trace;
}

inline void measure_energy_drift(const MetricField& g, GeodesicTrace& trace) {
  if (trace.samples.empty()) return;
  const double h0 = hamiltonian(g, {trace.samples.front().x, trace.samples.front().p});
  double drift = 0.0;
  for (const auto& s : trace.samples)
    drift = std::max(drift, std::fabs(hamiltonian(g, {s.x, s.p}) - h0));
  trace.energy_drift = h0 > 0.0 ? drift / h0 : drift;
}

// Geodesic of `metric` from x0 with initial velocity v0 (p0 = g(x0) v0).
inline GeodesicTrace integrate_geodesic(const MetricField& metric, const Vector& x0, const Vector& v0,
                                        double t_end, double step, const FlowOptions& opts = {}) {
  metric.chart().require(x0);
  if (v0.size() != x0.size() || v0.norm() == 0.0)
    throw ConfigError("initial velocity must be a nonzero vector of the chart dimension");
  if (!(step > 0.0)) throw ConfigError("integration step must be positive");
  const Vector p0 = eval_metric(metric, x0) * v0;
  GeodesicTrace trace = integrate_phase_flow(
      [&metric](const Vector& x, const Vector& p) { return geodesic_rate(metric, x, p); }, x0, p0, t_end,
      step, opts);
  trace.metric_id = metric.label();
  measure_energy_drift(metric, trace);
  return trace;
}

// Geodesic flow of `flow_metric` reparameterised so that the base curve has
// unit speed in `speed_metric`. Orbits are unchanged; time is speed_metric arc
// length, which makes traces of geodesically equivalent metrics coincide in
// time as well as in shape.
inline GeodesicTrace integrate_geodesic_arclength(const MetricField& flow_metric,
                                                  const MetricField& speed_metric, const Vector& x0,
                                                  const Vector& v0, double t_end, double step,
                                                  const FlowOptions& opts = {}) {
  flow_metric.chart().require(x0);
  if (v0.norm() == 0.0) throw ConfigError("initial velocity must be nonzero");
  const Matrix gf = eval_metric(flow_metric, x0);
  const Vector p0 = gf * v0 / std::sqrt(v0.dot(gf * v0));
  auto rate = [&](const Vector& x, const Vector& p) {
    PhaseRate r = geodesic_rate(flow_metric, x, p);
    const double speed = std::sqrt(r.dx.dot(eval_metric(speed_metric, x) * r.dx));
    r.dx /= speed;
    r.dp /= speed;
    return r;
  };
  GeodesicTrace trace = integrate_phase_flow(rate, x0, p0, t_end, step, opts);
  trace.metric_id = flow_metric.label();
  measure_energy_drift(flow_metric, trace);
  return trace;
}

// Per k: max_t |I_k(t) - I_k(0)| / max(1, |I_k(0)|).
inline Vector integral_drift(const GeodesicTrace& trace, const IntegralFamily& fam) {
  Vector drift = Vector::Zero(fam.size());
  if (trace.samples.empty()) return drift;
  const Vector i0 = fam.eval_all({trace.samples.front().x, trace.samples.front().p});
  for (const auto& s : trace.samples) {
    const Vector v = fam.eval_all({s.x, s.p});
    for (int k = 0; k < fam.size(); ++k)
      drift[k] = std::max(drift[k], std::fabs(v[k] - i0[k]) / std::max(1.0, std::fabs(i0[k])));
  }
  return drift;
}

// Same measure for a single phase function.
inline double function_drift(const GeodesicTrace& trace, const PhaseFunction& f) {
  if (trace.samples.empty()) return 0.0;
  const double f0 = f({trace.samples.front().x, trace.samples.front().p});
  double drift = 0.0;
  for (const auto& s : trace.samples) drift = std::max(drift, std::fabs(f({s.x, s.p}) - f0));
  return drift / std::max(1.0, std::fabs(f0));
}

namespace detail {

inline double point_segment_distance(const Vector& q, const Vector& a, const Vector& b) {
  const Vector ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (q - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (q - (a + t * ab)).norm();
}

inline double directed_distance(const GeodesicTrace& from, const GeodesicTrace& to) {
  double worst = 0.0;
  const auto& pts = to.samples;
  for (const auto& s : from.samples) {
    double best = std::numeric_limits<double>::infinity();
    if (pts.size() == 1) best = (s.x - pts[0].x).norm();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      best = std::min(best, point_segment_distance(s.x, pts[i].x, pts[i + 1].x));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace detail

// Symmetrised max-min distance between the point set of one trace and the
// polyline of the other, in chart-Euclidean coordinates. Chart-dependent: a
// diagnostic for comparing curves, not a Riemannian invariant.
inline double unparameterized_distance(const GeodesicTrace& a, const GeodesicTrace& b) {
  if (a.samples.empty() || b.samples.empty()) throw ConfigError("cannot compare empty traces");
  return std::max(detail::directed_distance(a, b), detail::directed_distance(b, a));
}

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    default: return "INCONCLUSIVE";
  }
}

struct EquivalenceOptions {
  int n_geodesics = 20;
  double t_end = 3.0;
  double step = 1e-3;
  double tol = 1e-3;
  std::uint64_t seed = 42;
  int record_every = 10;
  std::optional<SampleBox> box;
};

struct GeodesicComparison {
  Vector x0, v0;
  double distance = 0.0;
  double compared_time = 0.0;  // g arc length common to both traces
  bool truncated = false;
  bool usable = false;
};

struct EquivalenceReport {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<GeodesicComparison> geodesics;
  double max_distance = 0.0;
  int worst = -1;
};

// Starts a g-geodesic and a gbar-geodesic from the same point and direction,
// both in g arc length, truncates them to their common time span, and
// compares the resulting curves.
inline EquivalenceReport check_equivalence(const MetricPair& pair, const EquivalenceOptions& opts = {}) {
  if (opts.n_geodesics < 1 || !(opts.t_end > 0.0) || !(opts.step > 0.0) || !(opts.tol > 0.0))
    throw ConfigError("equivalence check parameters must be positive");
  PhaseSampler sampler(pair.g, opts.box ? *opts.box : default_sample_box(pair.chart()), opts.seed);
  std::vector<std::pair<Vector, Vector>> starts;
  for (int i = 0; i < opts.n_geodesics; ++i) {
    Vector x0 = sampler.base_point();
    Vector v0 = sampler.unit_velocity(x0);
    starts.emplace_back(std::move(x0), std::move(v0));
  }
  EquivalenceReport report;
  report.geodesics.resize(starts.size());
  FlowOptions flow;
  flow.record_every = opts.record_every;
  parallel_for(starts.size(), [&](std::size_t i) {
    GeodesicComparison& c = report.geodesics[i];
    c.x0 = starts[i].first;
    c.v0 = starts[i].second;
    GeodesicTrace tg = integrate_geodesic_arclength(pair.g, pair.g, c.x0, c.v0, opts.t_end, opts.step, flow);
    GeodesicTrace tb =
        integrate_geodesic_arclength(pair.gbar, pair.g, c.x0, c.v0, opts.t_end, opts.step, flow);
    const std::size_t common = std::min(tg.samples.size(), tb.samples.size());
    c.truncated = tg.exited_domain || tb.exited_domain;
    if (common < 2) return;
    tg.samples.resize(common);
    tb.samples.resize(common);
    c.compared_time = std::min(tg.final_time(), tb.final_time());
    c.distance = unparameterized_distance(tg, tb);
    c.usable = true;
  });
  bool any = false;
  for (std::size_t i = 0; i < report.geodesics.size(); ++i) {
    const auto& c = report.geodesics[i];
    if (!c.usable) continue;
    any = true;
    if (report.worst < 0 || c.distance > report.max_distance) {
      report.max_distance = c.distance;
      report.worst = static_cast<int>(i);
    }
  }
  if (!any)
    report.verdict = Verdict::Inconclusive;
  else
    report.verdict = report.max_distance <= opts.tol ? Verdict::Pass : Verdict::Fail;
  return report;
}

}  // namespace geoequiv

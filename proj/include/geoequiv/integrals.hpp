#pragma once

// The quadratic integrals I_k, canonical Poisson brackets on T*M, rank of the
// differentials, the orbital map and the transfer of linear integrals.

#include "geoequiv/parallel.hpp"
#include "geoequiv/tensors.hpp"

#include <cstdint>
#include <random>

namespace geoequiv {

// A point of the cotangent bundle: chart coordinates and a momentum covector.
struct PhasePoint {
  Vector x;
  Vector p;
};

using PhaseFunction = std::function<double(const PhasePoint&)>;
using CovectorField = std::function<Vector(const Vector&)>;

// H = 1/2 g^{ij} p_i p_j
inline double hamiltonian(const MetricField& g, const PhasePoint& pp) {
  const Matrix ginv = inverse_and_det(g, pp.x).inverse;
  return 0.5 * pp.p.dot(ginv * pp.p);
}

inline double hamiltonian(const MetricPair& pair, const PhasePoint& pp) {
  return hamiltonian(pair.g, pp);
}

// I_k(x, p) = g^{ai} (S_k)^j_a p_i p_j for k = 0..n-1.
class IntegralFamily {
 public:
  explicit IntegralFamily(MetricPair pair) : pair_(std::move(pair)) {}

  const MetricPair& pair() const { return pair_; }
  int size() const { return pair_.dim(); }

  double eval(int k, const PhasePoint& pp) const {
    const PairAtPoint pt = evaluate_pair(pair_, pp.x);
    const Matrix G = pt.g_inv * pt.gbar;
    const Matrix S = build_S(pt, G, char_poly(G), k);
    return pp.p.dot(S * (pt.g_inv * pp.p));
  }

  Vector eval_all(const PhasePoint& pp) const {
    const PairAtPoint pt = evaluate_pair(pair_, pp.x);
    const Vector raised = pt.g_inv * pp.p;
    const auto S = build_all_S(pt);
    Vector out(size());
    for (int k = 0; k < size(); ++k) out[k] = pp.p.dot(S[static_cast<std::size_t>(k)] * raised);
    return out;
  }

  // The same value written as g(S_k xi, xi) for a tangent vector xi.
  double eval_raised(int k, const Vector& x, const Vector& xi) const {
    const PairAtPoint pt = evaluate_pair(pair_, x);
    const Matrix G = pt.g_inv * pt.gbar;
    const Matrix S = build_S(pt, G, char_poly(G), k);
    return xi.dot(pt.g * (S * xi));
  }

  PhaseFunction function(int k) const {
    return [self = *this, k](const PhasePoint& pp) { return self.eval(k, pp); };
  }

 private:
  MetricPair pair_;
};

inline double eval_I(const IntegralFamily& fam, int k, const PhasePoint& pp) { return fam.eval(k, pp); }

// Canonical bracket sum_i (df/dx^i dh/dp_i - df/dp_i dh/dx^i), central
// differences with step fd_step (1 + |component|); {x^i, p_i} = +1.
inline double poisson_bracket(const PhaseFunction& f, const PhaseFunction& h, const PhasePoint& pp,
                              double fd_step = kDefaultFdStep) {
  const Eigen::Index n = pp.x.size();
  auto partial = [&](const PhaseFunction& fn, bool momentum, Eigen::Index i) {
    PhasePoint plus = pp, minus = pp;
    const double c = momentum ? pp.p[i] : pp.x[i];
    const double step = fd_step * (1.0 + std::fabs(c));
    (momentum ? plus.p : plus.x)[i] += step;
    (momentum ? minus.p : minus.x)[i] -= step;
    return (fn(plus) - fn(minus)) / (2.0 * step);
  };
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    sum += partial(f, false, i) * partial(h, true, i) - partial(f, true, i) * partial(h, false, i);
  return sum;
}

// max(1, |I_j|, |I_k|) max(1, |p|^2)
inline double bracket_scale(double ij, double ik, const Vector& p) {
  return std::max({1.0, std::fabs(ij), std::fabs(ik)}) * std::max(1.0, p.squaredNorm());
}

// Sampling region in chart coordinates.
struct SampleBox {
  std::vector<Interval> bounds;
};

// The chart domain shrunk by `inset` of its width on each finite side;
// infinite sides fall back to [-1, 1].
inline SampleBox default_sample_box(const Chart& chart, double inset = 0.05) {
  SampleBox box;
  for (int i = 0; i < chart.dim(); ++i) {
    Interval b = chart.bounds(i);
    if (chart.periodic(i)) {
      box.bounds.push_back(b);
      continue;
    }
    if (!std::isfinite(b.lo)) b.lo = std::isfinite(b.hi) ? std::min(-1.0, b.hi - 2.0) : -1.0;
    if (!std::isfinite(b.hi)) b.hi = std::max(1.0, b.lo + 2.0);
    const double w = b.width();
    box.bounds.push_back({b.lo + inset * w, b.hi - inset * w});
  }
  return box;
}

// Seeded sampler: base points uniform in a box, momenta on the unit g-sphere
// (g^{ij} p_i p_j = 1), velocities of unit g-length.
class PhaseSampler {
 public:
  PhaseSampler(MetricField g, SampleBox box, std::uint64_t seed = 42)
      : g_(std::move(g)), box_(std::move(box)), rng_(seed) {}

  Vector base_point() {
    Vector x(static_cast<Eigen::Index>(box_.bounds.size()));
    for (std::size_t i = 0; i < box_.bounds.size(); ++i) {
      std::uniform_real_distribution<double> u(box_.bounds[i].lo, box_.bounds[i].hi);
      x[static_cast<Eigen::Index>(i)] = u(rng_);
    }
    return x;
  }

  Vector unit_direction(Eigen::Index n) {
    std::normal_distribution<double> normal;
    Vector u(n);
    do {
      for (Eigen::Index i = 0; i < n; ++i) u[i] = normal(rng_);
    } while (u.norm() < 1e-12);
    return u.normalized();
  }

  PhasePoint phase_point() {
    const Vector x = base_point();
    return {x, unit_momentum(x)};
  }

  Vector unit_momentum(const Vector& x) {
    const Matrix g = eval_metric(g_, x);
    const Matrix l = g.llt().matrixL();
    return l * unit_direction(x.size());
  }

  Vector unit_velocity(const Vector& x) {
    const Matrix g = eval_metric(g_, x);
    const Matrix l = g.llt().matrixL();
    return l.transpose().triangularView<Eigen::Upper>().solve(unit_direction(x.size()));
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  MetricField g_;
  SampleBox box_;
  std::mt19937_64 rng_;
};

struct BracketOptions {
  int samples = 200;
  std::uint64_t seed = 42;
  double fd_step = kDefaultFdStep;
  // Coarse step pair (h, h/2) for the Richardson check.
  double richardson_step = 1e-3;
  std::optional<SampleBox> box;
};

struct BracketReport {
  int n = 0;
  Matrix max_normalized;                 // n x n, zero diagonal
  std::vector<PhasePoint> argmax;        // row-major n x n
  Matrix coarse;                         // max normalized bracket at the Richardson step h
  Matrix fine;                           // ... and at h/2
  int evaluated = 0;
  int skipped = 0;

  const PhasePoint& argmax_at(int j, int k) const { return argmax[static_cast<std::size_t>(j * n + k)]; }

  double max_entry() const { return n > 0 ? max_normalized.maxCoeff() : 0.0; }

  double richardson_ratio(int j, int k) const {
    return fine(j, k) > 0.0 ? coarse(j, k) / fine(j, k) : std::numeric_limits<double>::infinity();
  }

  // The residual behaves like second-order truncation error (ratio near 4 on
  // halving) or is at roundoff level, rather than a genuine nonzero bracket.
  // Second differences at the coarse steps carry roundoff near eps / h^2 ~ 1e-10.
  bool fd_noise_confirmed(int j, int k) const {
    if (coarse(j, k) <= 1e-9) return true;
    const double r = richardson_ratio(j, k);
    return r >= 3.0 && r <= 5.0;
  }
};

inline BracketReport bracket_report(const IntegralFamily& fam, const BracketOptions& opts = {}) {
  if (opts.samples < 1) throw ConfigError("bracket report needs at least one sample");
  const int n = fam.size();
  PhaseSampler sampler(fam.pair().g, opts.box ? *opts.box : default_sample_box(fam.pair().chart()),
                       opts.seed);
  std::vector<PhasePoint> points;
  points.reserve(static_cast<std::size_t>(opts.samples));
  for (int s = 0; s < opts.samples; ++s) points.push_back(sampler.phase_point());

  const std::size_t pairs = static_cast<std::size_t>(n * n);
  struct SampleResult {
    bool ok = false;
    std::vector<double> value, coarse, fine;
  };
  std::vector<SampleResult> results(points.size());
  std::vector<PhaseFunction> fns;
  for (int k = 0; k < n; ++k) fns.push_back(fam.function(k));

  parallel_for(points.size(), [&](std::size_t s) {
    const PhasePoint& pp = points[s];
    SampleResult r;
    r.value.assign(pairs, 0.0);
    r.coarse.assign(pairs, 0.0);
    r.fine.assign(pairs, 0.0);
    try {
      const Vector values = fam.eval_all(pp);
      for (int j = 0; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) {
          const double scale = bracket_scale(values[j], values[k], pp.p);
          const double b = poisson_bracket(fns[static_cast<std::size_t>(j)], fns[static_cast<std::size_t>(k)], pp, opts.fd_step);
          const double bc = poisson_bracket(fns[static_cast<std::size_t>(j)], fns[static_cast<std::size_t>(k)], pp, opts.richardson_step);
          const double bf = poisson_bracket(fns[static_cast<std::size_t>(j)], fns[static_cast<std::size_t>(k)], pp, 0.5 * opts.richardson_step);
          for (auto [a, c] : {std::pair{j, k}, std::pair{k, j}}) {
            const std::size_t idx = static_cast<std::size_t>(a * n + c);
            r.value[idx] = std::fabs(b) / scale;
            r.coarse[idx] = std::fabs(bc) / scale;
            r.fine[idx] = std::fabs(bf) / scale;
          }
        }
      }
      r.ok = true;
    } catch (const DomainError&) {
      r.ok = false;
    }
    results[s] = std::move(r);
  });

  BracketReport rep;
  rep.n = n;
  rep.max_normalized = Matrix::Zero(n, n);
  rep.coarse = Matrix::Zero(n, n);
  rep.fine = Matrix::Zero(n, n);
  rep.argmax.assign(pairs, PhasePoint{Vector::Zero(n), Vector::Zero(n)});
  for (std::size_t s = 0; s < results.size(); ++s) {
    const SampleResult& r = results[s];
    if (!r.ok) {
      ++rep.skipped;
      continue;
    }
    ++rep.evaluated;
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (j == k) continue;
        const std::size_t idx = static_cast<std::size_t>(j * n + k);
        if (r.value[idx] > rep.max_normalized(j, k) || rep.evaluated == 1) {
          rep.max_normalized(j, k) = r.value[idx];
          rep.argmax[idx] = points[s];
        }
        rep.coarse(j, k) = std::max(rep.coarse(j, k), r.coarse[idx]);
        rep.fine(j, k) = std::max(rep.fine(j, k), r.fine[idx]);
      }
    }
  }
  return rep;
}

inline BracketReport bracket_report(const IntegralFamily& fam, int samples, std::uint64_t seed) {
  BracketOptions opts;
  opts.samples = samples;
  opts.seed = seed;
  return bracket_report(fam, opts);
}

struct RankResult {
  std::optional<int> rank;  // empty when the phase point is degenerate
  bool degenerate = false;
  Vector singular_values;
};

inline constexpr double kDegenerateMomentum = 1e-8;

// Numeric rank of the n x 2n matrix of differentials of I_0..I_{n-1} in (x, p).
inline RankResult differential_rank(const IntegralFamily& fam, const PhasePoint& pp,
                                    double rank_tol = 1e-6, double fd_step = kDefaultFdStep) {
  const int n = fam.size();
  RankResult result;
  if (pp.p.norm() <= kDegenerateMomentum) {
    result.degenerate = true;
    return result;
  }
  Matrix grad(n, 2 * n);
  for (int c = 0; c < 2 * n; ++c) {
    PhasePoint plus = pp, minus = pp;
    Vector& vp = c < n ? plus.x : plus.p;
    Vector& vm = c < n ? minus.x : minus.p;
    const int i = c % n;
    const double step = fd_step * (1.0 + std::fabs(vp[i]));
    vp[i] += step;
    vm[i] -= step;
    grad.col(c) = (fam.eval_all(plus) - fam.eval_all(minus)) / (2.0 * step);
  }
  Eigen::JacobiSVD<Matrix> svd(grad);
  result.singular_values = svd.singularValues();
  const double top = result.singular_values.size() ? result.singular_values[0] : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < result.singular_values.size(); ++i)
    if (result.singular_values[i] > rank_tol * top) ++rank;
  result.rank = top > 0.0 ? rank : 0;
  return result;
}

// xi -> (|xi|_g / |xi|_gbar) xi
inline Vector orbital_map(const MetricPair& pair, const Vector& x, const Vector& xi) {
  if (xi.norm() == 0.0) throw DomainError("orbital map is undefined on the zero vector");
  const Matrix g = eval_metric(pair.g, x);
  const Matrix gbar = eval_metric(pair.gbar, x);
  return std::sqrt(xi.dot(g * xi) / xi.dot(gbar * xi)) * xi;
}

// Given a covector field a with sum a_i xi^i conserved by the gbar-flow,
// returns (det g / det gbar)^{1/(n+1)} sum a_i xi^i as a function on T*M of g
// (xi = g^{-1} p).
inline PhaseFunction killing_transfer(const MetricPair& pair, CovectorField a) {
  return [pair, a = std::move(a)](const PhasePoint& pp) {
    const PairAtPoint pt = evaluate_pair(pair, pp.x);
    const double factor = std::pow(pt.det_ratio(), 1.0 / (pair.dim() + 1));
    return factor * a(pp.x).dot(pt.g_inv * pp.p);
  };
}

inline PhaseFunction killing_transfer(const MetricPair& pair, std::vector<Expression> a) {
  if (static_cast<int>(a.size()) != pair.dim())
    throw ConfigError("covector field needs one expression per coordinate");
  return killing_transfer(pair, CovectorField([a = std::move(a)](const Vector& x) {
                            Vector out(static_cast<Eigen::Index>(a.size()));
                            const std::span<const double> pt(x.data(), static_cast<std::size_t>(x.size()));
                            for (std::size_t i = 0; i < a.size(); ++i) out[static_cast<Eigen::Index>(i)] = a[i].evaluate(pt);
                            return out;
                          }));
}

}  // namespace geoequiv

#pragma once

// The operator G = g^{-1} gbar, its characteristic polynomial, the operators
// S_k, eigenvalue clustering and the B-transform of a metric pair.

#include "geoequiv/metric.hpp"

#include <optional>

namespace geoequiv {

// Two metric fields on a common chart.
struct MetricPair {
  MetricField g;
  MetricField gbar;
  std::string name;

  MetricPair(MetricField g_, MetricField gbar_, std::string name_ = {})
      : g(std::move(g_)), gbar(std::move(gbar_)), name(std::move(name_)) {
    if (g.dim() != gbar.dim()) throw ConfigError("metric pair members have different dimensions");
  }

  const Chart& chart() const { return g.chart(); }
  int dim() const { return g.dim(); }
};

// Both metrics and the derived quantities every tensor construction needs.
struct PairAtPoint {
  Vector x;
  Matrix g, gbar, g_inv;
  double det_g = 0.0, det_gbar = 0.0;

  int dim() const { return static_cast<int>(g.rows()); }
  // det(g) / det(gbar)
  double det_ratio() const { return det_g / det_gbar; }
};

inline PairAtPoint evaluate_pair(const MetricPair& pair, const Vector& x) {
  PairAtPoint pt;
  pt.x = x;
  pt.g = eval_metric(pair.g, x);
  pt.gbar = eval_metric(pair.gbar, x);
  auto [inv, det] = inverse_and_det(pt.g);
  pt.g_inv = std::move(inv);
  pt.det_g = det;
  pt.det_gbar = inverse_and_det(pt.gbar).det;
  return pt;
}

// A (1,1)-tensor at a point: matrix(i, j) = T^i_j. When `metric` is set the
// operator is self-adjoint with respect to it, which lets eigenvalue routines
// use a symmetric generalized problem.
struct OperatorAtPoint {
  Matrix matrix;
  Vector basepoint;
  std::optional<Matrix> metric;
};

// Coefficients of det(G - mu E) = c_0 mu^n + c_1 mu^{n-1} + ... + c_n.
struct CharPoly {
  std::vector<double> coeffs;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  double operator[](int i) const { return coeffs[static_cast<std::size_t>(i)]; }

  double evaluate(double mu) const {
    double acc = 0.0;
    for (double c : coeffs) acc = acc * mu + c;
    return acc;
  }
};

inline OperatorAtPoint build_G(const PairAtPoint& pt) {
  return {pt.g_inv * pt.gbar, pt.x, pt.g};
}

inline OperatorAtPoint build_G(const MetricPair& pair, const Vector& x) {
  return build_G(evaluate_pair(pair, x));
}

// Faddeev-LeVerrier: M_1 = E, a_k = -tr(G M_k)/k, M_{k+1} = G M_k + a_k E gives
// det(mu E - G) = sum a_k mu^{n-k}; det(G - mu E) is (-1)^n times that.
inline CharPoly char_poly(const Matrix& G) {
  const int n = static_cast<int>(G.rows());
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;
  CharPoly poly;
  poly.coeffs.assign(static_cast<std::size_t>(n) + 1, 0.0);
  poly.coeffs[0] = sign;
  Matrix m = Matrix::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    const Matrix gm = G * m;
    const double a = -gm.trace() / k;
    poly.coeffs[static_cast<std::size_t>(k)] = sign * a;
    m = gm;
    m.diagonal().array() += a;
  }
  return poly;
}

inline CharPoly char_poly(const OperatorAtPoint& G) { return char_poly(G.matrix); }

// S_k = (det g / det gbar)^{(k+2)/(n+1)} sum_{i=0}^{k} c_i G^{k-i+1}
inline Matrix build_S(const PairAtPoint& pt, const Matrix& G, const CharPoly& poly, int k) {
  const int n = pt.dim();
  if (k < 0 || k >= n) throw ConfigError("S_k index " + std::to_string(k) + " out of range");
  // Horner: P = c_0 G^k + ... + c_k E, then S = factor * G P.
  Matrix p = Matrix::Identity(n, n) * poly[0];
  for (int i = 1; i <= k; ++i) {
    p = G * p;
    p.diagonal().array() += poly[i];
  }
  const double factor = std::pow(pt.det_ratio(), static_cast<double>(k + 2) / (n + 1));
  return factor * (G * p);
}

inline OperatorAtPoint build_S(const MetricPair& pair, const Vector& x, int k) {
  const PairAtPoint pt = evaluate_pair(pair, x);
  const Matrix G = pt.g_inv * pt.gbar;
  return {build_S(pt, G, char_poly(G), k), x, pt.g};
}

// Every S_k at once (shares G and its polynomial).
inline std::vector<Matrix> build_all_S(const PairAtPoint& pt) {
  const int n = pt.dim();
  const Matrix G = pt.g_inv * pt.gbar;
  const CharPoly poly = char_poly(G);
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(n));
  Matrix p = Matrix::Identity(n, n) * poly[0];
  for (int k = 0; k < n; ++k) {
    if (k > 0) {
      p = G * p;
      p.diagonal().array() += poly[k];
    }
    const double factor = std::pow(pt.det_ratio(), static_cast<double>(k + 2) / (n + 1));
    out.push_back(factor * (G * p));
  }
  return out;
}

// Real eigenvalues, ascending, of an operator that is self-adjoint with respect
// to op.metric (or symmetric when no metric is attached). Solved as the
// symmetric-definite problem (g T) v = lambda g v.
inline std::vector<double> eigenvalues(const OperatorAtPoint& op) {
  Vector values;
  if (op.metric) {
    const Matrix& g = *op.metric;
    const Matrix lowered = symmetrized(g * op.matrix);
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(lowered, g, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw MetricError("generalized eigen-solve failed");
    values = solver.eigenvalues();
  } else {
    const double asym = (op.matrix - op.matrix.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(1.0, op.matrix.cwiseAbs().maxCoeff()))
      throw MetricError("operator without a metric must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrized(op.matrix), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw MetricError("symmetric eigen-solve failed");
    values = solver.eigenvalues();
  }
  return {values.data(), values.data() + values.size()};
}

inline double default_gap_tolerance(const std::vector<double>& sorted) {
  double radius = 0.0;
  for (double v : sorted) radius = std::max(radius, std::fabs(v));
  return 1e-6 * (1.0 + radius);
}

// Number of clusters in an ascending list; a new cluster starts whenever two
// neighbours differ by more than gap_tol.
inline int count_clusters(const std::vector<double>& sorted, double gap_tol) {
  if (sorted.empty()) return 0;
  int clusters = 1;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i] - sorted[i - 1] > gap_tol) ++clusters;
  return clusters;
}

// gap_tol <= 0 selects the default 1e-6 (1 + spectral radius).
inline int distinct_eigenvalue_count(const OperatorAtPoint& G, double gap_tol = 0.0) {
  const std::vector<double> ev = eigenvalues(G);
  return count_clusters(ev, gap_tol > 0.0 ? gap_tol : default_gap_tolerance(ev));
}

// B = (det gbar / det g)^{1/(n+1)} gbar^{-1} g
inline Matrix build_B(const PairAtPoint& pt) {
  const int n = pt.dim();
  const Matrix gbar_inv = inverse_and_det(pt.gbar).inverse;
  const double factor = std::pow(pt.det_gbar / pt.det_g, 1.0 / (n + 1));
  return factor * gbar_inv * pt.g;
}

inline OperatorAtPoint build_B(const MetricPair& pair, const Vector& x) {
  const PairAtPoint pt = evaluate_pair(pair, x);
  return {build_B(pt), x, pt.g};
}

inline Matrix integer_power(const Matrix& m, int power, const Vector& where) {
  const Eigen::Index n = m.rows();
  Matrix base = m;
  if (power < 0) {
    Eigen::FullPivLU<Matrix> lu(m);
    if (!lu.isInvertible() || std::fabs(lu.determinant()) < 1e-300)
      throw MetricError("B is singular at " + format_point(where));
    base = lu.inverse();
    power = -power;
  }
  Matrix out = Matrix::Identity(n, n);
  for (int i = 0; i < power; ++i) out = out * base;
  return out;
}

// (g, gbar) -> (g B^power, gbar B^power), with B always taken from the input
// pair. Applying power q to the result of power p equals power p + q.
inline MetricPair sinjukov_transform(const MetricPair& pair, int power) {
  auto make = [pair, power](bool second) {
    return [pair, power, second](const Vector& x) {
      const PairAtPoint pt = evaluate_pair(pair, x);
      const Matrix bp = integer_power(build_B(pt), power, x);
      return Matrix(symmetrized((second ? pt.gbar : pt.g) * bp));
    };
  };
  const std::string suffix = "_B^" + std::to_string(power);
  MetricField g(pair.chart(), make(false), pair.g.fd_step(), pair.g.label() + suffix);
  MetricField gbar(pair.chart(), make(true), pair.gbar.fd_step(), pair.gbar.label() + suffix);
  return MetricPair(std::move(g), std::move(gbar),
                    (pair.name.empty() ? std::string("pair") : pair.name) + " B^" + std::to_string(power));
}

}  // namespace geoequiv

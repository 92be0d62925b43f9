#pragma once

// Charts, metric fields and the maps that induce or pull back metrics.

#include "geoequiv/errors.hpp"
#include "geoequiv/expr.hpp"
#include "geoequiv/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace geoequiv {

inline constexpr double kDefaultFdStep = 1e-5;
inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kJacobianRankTolerance = 1e-8;

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
  double width() const { return hi - lo; }
};

// A single coordinate patch. Bounds are open; periodic coordinates accept any
// value (they are identified modulo the period hi - lo).
class Chart {
 public:
  Chart(std::vector<std::string> names, std::vector<Interval> domain,
        std::vector<bool> periodic = {})
      : names_(std::move(names)), domain_(std::move(domain)), periodic_(std::move(periodic)) {
    if (names_.empty()) throw ConfigError("chart needs at least one coordinate");
    if (domain_.size() != names_.size())
      throw ConfigError("chart domain has " + std::to_string(domain_.size()) +
                        " intervals for " + std::to_string(names_.size()) + " coordinates");
    if (periodic_.empty()) periodic_.assign(names_.size(), false);
    if (periodic_.size() != names_.size()) throw ConfigError("chart periodic flags size mismatch");
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (!(domain_[i].lo < domain_[i].hi))
        throw ConfigError("chart bounds for '" + names_[i] + "' are not ordered");
      if (periodic_[i] && !domain_[i].finite())
        throw ConfigError("periodic coordinate '" + names_[i] + "' needs finite bounds");
    }
  }

  // Flat chart R^n with names x1..xn on the given box.
  static Chart box(int n, Interval bounds = {}) {
    std::vector<std::string> names;
    for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
    return Chart(std::move(names), std::vector<Interval>(n, bounds));
  }

  int dim() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Interval>& domain() const { return domain_; }
  const Interval& bounds(int i) const { return domain_[i]; }
  bool periodic(int i) const { return periodic_[i]; }
  const std::vector<bool>& periodic_flags() const { return periodic_; }

  bool contains(const Vector& x) const {
    if (x.size() != dim()) return false;
    for (int i = 0; i < dim(); ++i) {
      if (!std::isfinite(x[i])) return false;
      if (periodic_[i]) continue;
      if (!(x[i] > domain_[i].lo && x[i] < domain_[i].hi)) return false;
    }
    return true;
  }

  void require(const Vector& x) const {
    if (x.size() != dim())
      throw DomainError("point " + format_point(x) + " has wrong dimension for chart of dimension " +
                        std::to_string(dim()));
    if (!contains(x)) throw DomainError("point " + format_point(x) + " is outside the chart domain");
  }

 private:
  std::vector<std::string> names_;
  std::vector<Interval> domain_;
  std::vector<bool> periodic_;
};

// Smallest pivot of an unpivoted LDL^T factorisation; positive iff m is SPD.
inline double smallest_cholesky_pivot(const Matrix& m) {
  const Eigen::Index n = m.rows();
  Matrix l = Matrix::Identity(n, n);
  Vector d(n);
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    double djj = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) djj -= l(j, k) * l(j, k) * d[k];
    d[j] = djj;
    smallest = std::min(smallest, djj);
    if (!(djj > 0.0)) return djj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double lij = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) lij -= l(i, k) * l(j, k) * d[k];
      l(i, j) = lij / djj;
    }
  }
  return smallest;
}

// A symmetric positive-definite matrix field on a chart.
class MetricField {
 public:
  using Evaluator = std::function<Matrix(const Vector&)>;

  MetricField(Chart chart, Evaluator evaluator, double fd_step = kDefaultFdStep,
              std::string label = {}, bool strict_symmetry = false)
      : chart_(std::move(chart)),
        evaluator_(std::move(evaluator)),
        fd_step_(fd_step),
        label_(std::move(label)),
        strict_symmetry_(strict_symmetry) {
    if (!(fd_step_ > 0.0)) throw ConfigError("fd_step must be positive");
  }

  // Entries given as text. Entry (i,j) and (j,i) must agree to 1e-12 when evaluated.
  static MetricField from_expressions(Chart chart, const std::vector<std::vector<Expression>>& entries,
                                      double fd_step = kDefaultFdStep, std::string label = {}) {
    const int n = chart.dim();
    if (static_cast<int>(entries.size()) != n)
      throw ConfigError("metric needs " + std::to_string(n) + " rows");
    for (const auto& row : entries)
      if (static_cast<int>(row.size()) != n)
        throw ConfigError("metric needs " + std::to_string(n) + " columns in every row");
    auto eval = [entries, n](const Vector& x) {
      Matrix m(n, n);
      const std::span<const double> pt(x.data(), static_cast<std::size_t>(x.size()));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = entries[i][j].evaluate(pt);
      return m;
    };
    return MetricField(std::move(chart), std::move(eval), fd_step, std::move(label), true);
  }

  static MetricField constant(Chart chart, const Matrix& value, std::string label = {}) {
    return MetricField(std::move(chart), [value](const Vector&) { return value; }, kDefaultFdStep,
                       std::move(label));
  }

  const Chart& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  double fd_step() const { return fd_step_; }
  const std::string& label() const { return label_; }
  bool strict_symmetry() const { return strict_symmetry_; }

  // Unchecked evaluation of the underlying evaluator.
  Matrix raw(const Vector& x) const { return evaluator_(x); }

  MetricField relabeled(std::string label) const {
    MetricField copy = *this;
    copy.label_ = std::move(label);
    return copy;
  }

 private:
  Chart chart_;
  Evaluator evaluator_;
  double fd_step_;
  std::string label_;
  bool strict_symmetry_;
};

// Checked evaluation: domain, symmetry, positive definiteness. The result is
// exactly symmetric.
inline Matrix eval_metric(const MetricField& f, const Vector& x) {
  f.chart().require(x);
  Matrix m = f.raw(x);
  const int n = f.dim();
  if (m.rows() != n || m.cols() != n)
    throw MetricError("metric evaluator returned a " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + " matrix on an " + std::to_string(n) +
                      "-dimensional chart");
  if (!m.allFinite()) throw MetricError("non-finite metric entry at " + format_point(x));
  if (f.strict_symmetry()) {
    const double defect = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (defect > kSymmetryTolerance * std::max(1.0, m.cwiseAbs().maxCoeff()))
      throw MetricError("metric is not symmetric at " + format_point(x) + " (defect " +
                        std::to_string(defect) + ")");
  }
  m = symmetrized(m);
  const double pivot = smallest_cholesky_pivot(m);
  if (!(pivot > 0.0)) {
    std::ostringstream os;
    os.precision(6);
    os << "metric" << (f.label().empty() ? "" : " '" + f.label() + "'")
       << " is not positive definite at " << format_point(x) << " (smallest pivot " << pivot << ")";
    throw MetricError(os.str());
  }
  return m;
}

struct InverseAndDet {
  Matrix inverse;
  double det = 0.0;
};

inline InverseAndDet inverse_and_det(const Matrix& spd) {
  Eigen::LLT<Matrix> llt(spd);
  if (llt.info() != Eigen::Success) throw MetricError("matrix is not positive definite");
  const Matrix& l = llt.matrixL();
  double det = 1.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) det *= l(i, i) * l(i, i);
  Matrix inv = llt.solve(Matrix::Identity(spd.rows(), spd.cols()));
  return {symmetrized(inv), det};
}

inline InverseAndDet inverse_and_det(const MetricField& f, const Vector& x) {
  return inverse_and_det(eval_metric(f, x));
}

// Central-difference step for coordinate value c.
inline double scaled_step(double base, double c) { return base * std::max(1.0, std::fabs(c)); }

// Central difference of the metric along coordinate i.
inline Matrix metric_partial(const MetricField& f, const Vector& x, int i) {
  const double h = scaled_step(f.fd_step(), x[i]);
  Vector xp = x, xm = x;
  xp[i] += h;
  xm[i] -= h;
  if (!f.chart().contains(xp) || !f.chart().contains(xm))
    throw DomainError("finite-difference stencil around " + format_point(x) +
                      " leaves the chart domain");
  return (eval_metric(f, xp) - eval_metric(f, xm)) / (2.0 * h);
}

// A smooth map from a chart into R^m, together with a metric on the target.
// Without an explicit Jacobian, central differences are used.
struct EmbeddingMap {
  using PointMap = std::function<Vector(const Vector&)>;
  using MatrixMap = std::function<Matrix(const Vector&)>;

  Chart chart;
  int ambient_dim = 0;
  PointMap map;
  MatrixMap jacobian;        // optional analytic Jacobian, m x n
  MatrixMap ambient_metric;  // m x m metric evaluated at the image point
  double fd_step = kDefaultFdStep;

  static MatrixMap euclidean(int m) {
    return [m](const Vector&) { return Matrix::Identity(m, m); };
  }

  static EmbeddingMap from_expressions(Chart chart, std::vector<Expression> components,
                                       MatrixMap ambient = {}) {
    const int m = static_cast<int>(components.size());
    if (m < chart.dim()) throw ConfigError("embedding needs at least as many components as coordinates");
    EmbeddingMap e{std::move(chart), m, {}, {}, ambient ? std::move(ambient) : euclidean(m)};
    e.map = [components = std::move(components)](const Vector& x) {
      Vector y(static_cast<Eigen::Index>(components.size()));
      const std::span<const double> pt(x.data(), static_cast<std::size_t>(x.size()));
      for (std::size_t k = 0; k < components.size(); ++k) y[static_cast<Eigen::Index>(k)] = components[k].evaluate(pt);
      return y;
    };
    return e;
  }
};

inline Matrix fd_jacobian(const EmbeddingMap::PointMap& map, const Chart& chart, const Vector& x,
                          double fd_step) {
  const Vector y0 = map(x);
  Matrix jac(y0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = scaled_step(fd_step, x[i]);
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    if (!chart.contains(xp) || !chart.contains(xm))
      throw DomainError("finite-difference stencil around " + format_point(x) +
                        " leaves the chart domain");
    jac.col(i) = (map(xp) - map(xm)) / (2.0 * h);
  }
  return jac;
}

inline Matrix embedding_jacobian(const EmbeddingMap& e, const Vector& x) {
  e.chart.require(x);
  Matrix jac = e.jacobian ? e.jacobian(x) : fd_jacobian(e.map, e.chart, x, e.fd_step);
  Eigen::JacobiSVD<Matrix> svd(jac);
  const Vector& s = svd.singularValues();
  if (s.size() < x.size() || !(s[s.size() - 1] > kJacobianRankTolerance * s[0]))
    throw RankError("Jacobian is rank deficient at " + format_point(x));
  return jac;
}

// x -> J(x)^T A(e(x)) J(x)
inline MetricField induced_metric(const EmbeddingMap& e, std::string label = {}) {
  auto eval = [e](const Vector& x) {
    const Matrix jac = embedding_jacobian(e, x);
    return Matrix(jac.transpose() * e.ambient_metric(e.map(x)) * jac);
  };
  return MetricField(e.chart, std::move(eval), e.fd_step, std::move(label));
}

// Pull-back along a local diffeomorphism into a space carrying ambient_metric
// (m must equal n).
inline MetricField pullback_metric(const EmbeddingMap& phi, std::string label = {}) {
  if (phi.ambient_dim != phi.chart.dim())
    throw ConfigError("pull-back needs a map between spaces of equal dimension");
  auto eval = [phi](const Vector& x) {
    Matrix jac;
    try {
      jac = embedding_jacobian(phi, x);
    } catch (const RankError&) {
      throw RankError("pull-back map has a singular Jacobian at " + format_point(x));
    }
    return Matrix(jac.transpose() * phi.ambient_metric(phi.map(x)) * jac);
  };
  return MetricField(phi.chart, std::move(eval), phi.fd_step, std::move(label));
}

// Pull-back of a metric field along a map from `chart` into target.chart().
inline MetricField pullback_metric(const Chart& chart, EmbeddingMap::PointMap map,
                                   const MetricField& target, std::string label = {}) {
  EmbeddingMap phi{chart, target.dim(), std::move(map), {},
                   [target](const Vector& y) { return eval_metric(target, y); }, target.fd_step()};
  return pullback_metric(phi, std::move(label));
}

}  // namespace geoequiv

#pragma once

// Grid discretization of the operators
//   I_k phi = (1 / sqrt(det g)) d_i ( sqrt(det g) (S_k)^i_a g^{aj} d_j phi )
// on two-dimensional charts, plus commutator and self-adjointness checks.
//
// The discrete operator is the weighted gradient of the symmetric form
//   E(f, h) = sum_edges K11 D1f D1h + K22 D2f D2h + sum_cells K12 (C1f C2h + C2f C1h)
// with K = sqrt(det g) S_k g^{-1}, D the one-sided differences along grid edges
// and C the cell-averaged gradient. (I f, h)_w = -E(f, h) holds node for node,
// so the operators are symmetric for the sqrt(det g) weighted pairing.

#include "geoequiv/csv.hpp"
#include "geoequiv/parallel.hpp"
#include "geoequiv/tensors.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace geoequiv {

enum class Boundary { Periodic, Zero };

struct GridAxis {
  double lo = 0.0, hi = 1.0;
  int n = 8;
  Boundary boundary = Boundary::Zero;

  // Periodic: n nodes at lo + i h, h = L / n.
  // Zero: n interior nodes at lo + (i + 1) h, h = L / (n + 1); lo and hi are
  // the (zero) ghost nodes.
  double step() const { return boundary == Boundary::Periodic ? (hi - lo) / n : (hi - lo) / (n + 1); }
  double node(int i) const { return boundary == Boundary::Periodic ? lo + i * step() : lo + (i + 1) * step(); }
  // Edges between consecutive nodes, ghosts included.
  int edge_count() const { return boundary == Boundary::Periodic ? n : n + 1; }
  int first_edge() const { return boundary == Boundary::Periodic ? 0 : -1; }
  double edge(int e) const { return node(e) + 0.5 * step(); }
};

struct GridSpec {
  std::array<GridAxis, 2> axes;

  int size() const { return axes[0].n * axes[1].n; }
  int index(int i, int j) const { return i * axes[1].n + j; }
  double cell_area() const { return axes[0].step() * axes[1].step(); }

  bool operator==(const GridSpec& o) const {
    for (int a = 0; a < 2; ++a)
      if (axes[a].lo != o.axes[a].lo || axes[a].hi != o.axes[a].hi || axes[a].n != o.axes[a].n ||
          axes[a].boundary != o.axes[a].boundary)
        return false;
    return true;
  }

  void validate() const {
    for (const auto& ax : axes) {
      if (ax.n < 8) throw ConfigError("grid too coarse: " + std::to_string(ax.n) + " nodes per axis (need >= 8)");
      if (!(std::isfinite(ax.lo) && std::isfinite(ax.hi) && ax.lo < ax.hi))
        throw ConfigError("grid axis needs finite ordered bounds");
    }
  }
};

// Covers the chart: periodic coordinates get periodic axes, the others a zero
// boundary at the chart bounds.
inline GridSpec grid_for_chart(const Chart& chart, int resolution) {
  if (chart.dim() != 2) throw ConfigError("quantum operators support two-dimensional charts only");
  GridSpec spec;
  for (int a = 0; a < 2; ++a) {
    const Interval& b = chart.bounds(a);
    if (!b.finite()) throw ConfigError("coordinate '" + chart.names()[a] + "' needs finite bounds for a grid");
    spec.axes[a] = {b.lo, b.hi, resolution, chart.periodic(a) ? Boundary::Periodic : Boundary::Zero};
  }
  spec.validate();
  return spec;
}

class GridFunction {
 public:
  explicit GridFunction(GridSpec grid) : grid_(grid), values_(static_cast<std::size_t>(grid.size()), 0.0) {
    grid_.validate();
  }

  template <class F>
  static GridFunction sample(const GridSpec& grid, F&& f) {
    GridFunction out(grid);
    for (int i = 0; i < grid.axes[0].n; ++i)
      for (int j = 0; j < grid.axes[1].n; ++j) {
        const double v = f(grid.axes[0].node(i), grid.axes[1].node(j));
        if (!std::isfinite(v)) throw DomainError("grid function value is not finite");
        out.at(i, j) = v;
      }
    return out;
  }

  const GridSpec& grid() const { return grid_; }
  double& at(int i, int j) { return values_[static_cast<std::size_t>(grid_.index(i, j))]; }
  double at(int i, int j) const { return values_[static_cast<std::size_t>(grid_.index(i, j))]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  // Value at any integer index; wraps periodic axes, zero outside otherwise.
  double extended(int i, int j) const {
    if (!wrap(0, i) || !wrap(1, j)) return 0.0;
    return at(i, j);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::fabs(v));
    return m;
  }

  GridFunction& operator-=(const GridFunction& o) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }

  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }

  friend GridFunction combine(double alpha, const GridFunction& f, double beta, const GridFunction& h) {
    GridFunction out(f.grid());
    for (std::size_t i = 0; i < out.values_.size(); ++i) out.values_[i] = alpha * f.values_[i] + beta * h.values_[i];
    return out;
  }

 private:
  bool wrap(int axis, int& i) const {
    const GridAxis& ax = grid_.axes[axis];
    if (ax.boundary == Boundary::Periodic) {
      i = ((i % ax.n) + ax.n) % ax.n;
      return true;
    }
    return i >= 0 && i < ax.n;
  }

  GridSpec grid_;
  std::vector<double> values_;
};

inline void write_csv(std::ostream& out, const GridFunction& f) {
  csv::Writer w(out, {"x1", "x2", "value"});
  const GridSpec& g = f.grid();
  for (int i = 0; i < g.axes[0].n; ++i)
    for (int j = 0; j < g.axes[1].n; ++j) w.row({g.axes[0].node(i), g.axes[1].node(j), f.at(i, j)});
}

// Second-order divergence-form operator on a GridSpec.
class GridOperator {
 public:
  GridOperator() = default;

  const GridSpec& grid() const { return grid_; }
  const std::string& label() const { return label_; }
  const std::vector<double>& weights() const { return weight_; }

  GridFunction apply(const GridFunction& f) const {
    if (!(f.grid() == grid_)) throw ConfigError("grid function does not live on the operator's grid");
    const GridAxis& a0 = grid_.axes[0];
    const GridAxis& a1 = grid_.axes[1];
    const double h0 = a0.step(), h1 = a1.step();
    const int n0 = a0.n, n1 = a1.n;
    const int c0 = a0.edge_count(), c1 = a1.edge_count();

    // Cross fluxes per cell: q0 = K12 C2f, q1 = K12 C1f.
    std::vector<double> q0(static_cast<std::size_t>(c0 * c1)), q1(q0.size());
    parallel_for(static_cast<std::size_t>(c0), [&](std::size_t row) {
      const int ci = static_cast<int>(row) + a0.first_edge();
      for (int cj = a1.first_edge(); cj < a1.first_edge() + c1; ++cj) {
        const double f00 = f.extended(ci, cj), f10 = f.extended(ci + 1, cj);
        const double f01 = f.extended(ci, cj + 1), f11 = f.extended(ci + 1, cj + 1);
        const double d0 = (f10 + f11 - f00 - f01) / (2.0 * h0);
        const double d1 = (f01 + f11 - f00 - f10) / (2.0 * h1);
        const std::size_t c = cell_slot(ci, cj);
        q0[c] = k12_[c] * d1;
        q1[c] = k12_[c] * d0;
      }
    });

    GridFunction out(grid_);
    parallel_for(static_cast<std::size_t>(n0), [&](std::size_t row) {
      const int i = static_cast<int>(row);
      for (int j = 0; j < n1; ++j) {
        const double fc = f.at(i, j);
        const double east = k11_[edge0_slot(i, j)] * (f.extended(i + 1, j) - fc) / h0;
        const double west = k11_[edge0_slot(i - 1, j)] * (fc - f.extended(i - 1, j)) / h0;
        const double north = k22_[edge1_slot(i, j)] * (f.extended(i, j + 1) - fc) / h1;
        const double south = k22_[edge1_slot(i, j - 1)] * (fc - f.extended(i, j - 1)) / h1;
        double acc = (east - west) / h0 + (north - south) / h1;
        // Node (i, j) is a corner of the cells (i-1..i, j-1..j).
        for (int di = -1; di <= 0; ++di)
          for (int dj = -1; dj <= 0; ++dj) {
            const std::size_t c = cell_slot(i + di, j + dj);
            const double s0 = di == -1 ? 1.0 : -1.0;
            const double s1 = dj == -1 ? 1.0 : -1.0;
            acc -= q0[c] * s0 / (2.0 * h0) + q1[c] * s1 / (2.0 * h1);
          }
        out.at(i, j) = acc / weight_[static_cast<std::size_t>(grid_.index(i, j))];
      }
    });
    return out;
  }

  GridFunction operator()(const GridFunction& f) const { return apply(f); }

  // Samples the symmetric coefficient field K(x) at edges and cells and the
  // weight w(x) at nodes.
  template <class Coefficient, class Weight>
  static GridOperator from_fields(const GridSpec& grid, Coefficient&& coefficient, Weight&& weight,
                                  std::string label) {
    std::vector<GridOperator> ops = from_field_family(grid, 1, [&](const Vector& x) {
      return std::vector<Matrix>{coefficient(x)};
    }, weight, {std::move(label)});
    return std::move(ops.front());
  }

  // Same as from_fields for several coefficient fields sharing evaluations;
  // family(x) returns `count` matrices.
  template <class Family, class Weight>
  static std::vector<GridOperator> from_field_family(const GridSpec& grid, int count, Family&& family,
                                                     Weight&& weight, std::vector<std::string> labels) {
    grid.validate();
    std::vector<GridOperator> ops(static_cast<std::size_t>(count));
    const GridAxis& a0 = grid.axes[0];
    const GridAxis& a1 = grid.axes[1];
    const int c0 = a0.edge_count(), c1 = a1.edge_count();
    for (int k = 0; k < count; ++k) {
      GridOperator& op = ops[static_cast<std::size_t>(k)];
      op.grid_ = grid;
      op.label_ = k < static_cast<int>(labels.size()) ? labels[static_cast<std::size_t>(k)] : std::string{};
      op.k11_.assign(static_cast<std::size_t>(c0 * a1.n), 0.0);
      op.k22_.assign(static_cast<std::size_t>(a0.n * c1), 0.0);
      op.k12_.assign(static_cast<std::size_t>(c0 * c1), 0.0);
      op.weight_.assign(static_cast<std::size_t>(grid.size()), 0.0);
    }
    auto at = [](double u, double v) {
      Vector x(2);
      x << u, v;
      return x;
    };
    auto checked = [&](const Vector& x) {
      std::vector<Matrix> ks = family(x);
      for (const Matrix& m : ks)
        if (!m.allFinite()) throw MetricError("operator coefficient is not finite at " + format_point(x));
      return ks;
    };
    // Every row writes disjoint slots.
    parallel_for(static_cast<std::size_t>(c0), [&](std::size_t row) {
      const int e = static_cast<int>(row) + a0.first_edge();
      for (int j = 0; j < a1.n; ++j) {
        const auto ks = checked(at(a0.edge(e), a1.node(j)));
        for (int k = 0; k < count; ++k)
          ops[static_cast<std::size_t>(k)].k11_[ops[0].edge0_slot(e, j)] = ks[static_cast<std::size_t>(k)](0, 0);
      }
      for (int ce = a1.first_edge(); ce < a1.first_edge() + c1; ++ce) {
        const auto ks = checked(at(a0.edge(e), a1.edge(ce)));
        for (int k = 0; k < count; ++k)
          ops[static_cast<std::size_t>(k)].k12_[ops[0].cell_slot(e, ce)] =
              0.5 * (ks[static_cast<std::size_t>(k)](0, 1) + ks[static_cast<std::size_t>(k)](1, 0));
      }
    });
    parallel_for(static_cast<std::size_t>(a0.n), [&](std::size_t row) {
      const int i = static_cast<int>(row);
      for (int e = a1.first_edge(); e < a1.first_edge() + c1; ++e) {
        const auto ks = checked(at(a0.node(i), a1.edge(e)));
        for (int k = 0; k < count; ++k)
          ops[static_cast<std::size_t>(k)].k22_[ops[0].edge1_slot(i, e)] = ks[static_cast<std::size_t>(k)](1, 1);
      }
      for (int j = 0; j < a1.n; ++j) {
        const double w = weight(at(a0.node(i), a1.node(j)));
        if (!(w > 0.0) || !std::isfinite(w))
          throw MetricError("volume weight is not positive at " + format_point(at(a0.node(i), a1.node(j))));
        for (auto& op : ops) op.weight_[static_cast<std::size_t>(grid.index(i, j))] = w;
      }
    });
    return ops;
  }

 private:
  // Axis-0 edges (e, j) with e in [first_edge, first_edge + edge_count).
  std::size_t edge0_slot(int e, int j) const {
    const GridAxis& a0 = grid_.axes[0];
    if (a0.boundary == Boundary::Periodic) e = ((e % a0.n) + a0.n) % a0.n;
    else e += 1;
    return static_cast<std::size_t>(e * grid_.axes[1].n + wrap_node(1, j));
  }

  std::size_t edge1_slot(int i, int e) const {
    const GridAxis& a1 = grid_.axes[1];
    if (a1.boundary == Boundary::Periodic) e = ((e % a1.n) + a1.n) % a1.n;
    else e += 1;
    return static_cast<std::size_t>(wrap_node(0, i) * a1.edge_count() + e);
  }

  std::size_t cell_slot(int ci, int cj) const {
    const GridAxis& a0 = grid_.axes[0];
    const GridAxis& a1 = grid_.axes[1];
    ci = a0.boundary == Boundary::Periodic ? ((ci % a0.n) + a0.n) % a0.n : ci + 1;
    cj = a1.boundary == Boundary::Periodic ? ((cj % a1.n) + a1.n) % a1.n : cj + 1;
    return static_cast<std::size_t>(ci * a1.edge_count() + cj);
  }

  int wrap_node(int axis, int i) const {
    const GridAxis& ax = grid_.axes[axis];
    return ax.boundary == Boundary::Periodic ? ((i % ax.n) + ax.n) % ax.n : i;
  }

  GridSpec grid_;
  std::string label_;
  std::vector<double> k11_, k22_, k12_, weight_;
};

namespace detail {

inline double sqrt_det(const MetricPair& pair, const Vector& x) {
  return std::sqrt(inverse_and_det(eval_metric(pair.g, x)).det);
}

}  // namespace detail

// All I_k, k = 0..n-1, from shared pair evaluations.
inline std::vector<GridOperator> build_quantum_family(const MetricPair& pair, const GridSpec& grid) {
  if (pair.dim() != 2) throw ConfigError("quantum operators support two-dimensional pairs only");
  const int n = pair.dim();
  std::vector<std::string> labels;
  for (int k = 0; k < n; ++k) labels.push_back("I_" + std::to_string(k));
  return GridOperator::from_field_family(
      grid, n,
      [&](const Vector& x) {
        const PairAtPoint pt = evaluate_pair(pair, x);
        const double root = std::sqrt(pt.det_g);
        std::vector<Matrix> ks;
        for (const Matrix& s : build_all_S(pt)) ks.push_back(symmetrized(root * s * pt.g_inv));
        return ks;
      },
      [&](const Vector& x) { return detail::sqrt_det(pair, x); }, std::move(labels));
}

inline GridOperator build_quantum_I(const MetricPair& pair, int k, const GridSpec& grid) {
  if (k < 0 || k >= pair.dim()) throw ConfigError("operator index " + std::to_string(k) + " out of range");
  return std::move(build_quantum_family(pair, grid)[static_cast<std::size_t>(k)]);
}

// Positive Beltrami-Laplace operator -(1/sqrt(det g)) d_i sqrt(det g) g^{ij} d_j,
// discretized directly from g.
inline GridOperator build_laplacian(const MetricField& g, const GridSpec& grid) {
  if (g.dim() != 2) throw ConfigError("quantum operators support two-dimensional metrics only");
  return GridOperator::from_fields(
      grid,
      [&](const Vector& x) {
        const auto [inv, det] = inverse_and_det(eval_metric(g, x));
        return Matrix(symmetrized(-std::sqrt(det) * inv));
      },
      [&](const Vector& x) { return std::sqrt(inverse_and_det(eval_metric(g, x)).det); }, "laplacian");
}

// max over fs of |A B f - B A f|_inf / |f|_inf
inline double commutator_norm(const GridOperator& a, const GridOperator& b, const std::vector<GridFunction>& fs) {
  if (!(a.grid() == b.grid())) throw ConfigError("commutator of operators on different grids");
  double worst = 0.0;
  for (const GridFunction& f : fs) {
    const double scale = f.max_abs();
    if (scale == 0.0) continue;
    const GridFunction diff = a(b(f)) - b(a(f));
    worst = std::max(worst, diff.max_abs() / scale);
  }
  return worst;
}

// sum_nodes w (f h) dA with w = sqrt(det g)
inline double weighted_inner(const GridFunction& f, const GridFunction& h, const std::vector<double>& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * f.values()[i] * h.values()[i];
  return acc * f.grid().cell_area();
}

inline double adjoint_defect(const GridOperator& op, const GridFunction& f, const GridFunction& h) {
  return std::fabs(weighted_inner(op(f), h, op.weights()) - weighted_inner(f, op(h), op.weights()));
}

// Weight recomputed from the pair's first metric.
inline double adjoint_defect(const GridOperator& op, const GridFunction& f, const GridFunction& h,
                             const MetricPair& pair) {
  const GridSpec& grid = op.grid();
  std::vector<double> w(static_cast<std::size_t>(grid.size()));
  Vector x(2);
  for (int i = 0; i < grid.axes[0].n; ++i)
    for (int j = 0; j < grid.axes[1].n; ++j) {
      x << grid.axes[0].node(i), grid.axes[1].node(j);
      w[static_cast<std::size_t>(grid.index(i, j))] = detail::sqrt_det(pair, x);
    }
  return std::fabs(weighted_inner(op(f), h, w) - weighted_inner(f, op(h), w));
}

// Eight smooth test functions. Periodic axes carry trigonometric modes; zero
// axes carry Gaussian bumps windowed by sin^8, which vanish to eighth order at
// the ghost nodes so that repeated applications never feel the boundary.
inline std::vector<GridFunction> test_functions(const GridSpec& grid) {
  static constexpr std::array<double, 8> centres{0.5, 0.45, 0.55, 0.42, 0.58, 0.5, 0.47, 0.53};
  static constexpr std::array<double, 8> widths{0.2, 0.18, 0.22, 0.16, 0.2, 0.25, 0.17, 0.21};
  static constexpr std::array<int, 8> modes0{1, 0, 1, 2, 1, 2, 3, 1};
  static constexpr std::array<int, 8> modes1{0, 1, 1, 1, 2, 2, 1, 3};
  std::vector<GridFunction> out;
  for (std::size_t q = 0; q < 8; ++q) {
    auto factor = [&](int axis, double x) {
      const GridAxis& ax = grid.axes[static_cast<std::size_t>(axis)];
      const double t = (x - ax.lo) / (ax.hi - ax.lo);
      if (ax.boundary == Boundary::Periodic) {
        const int m = axis == 0 ? modes0[q] : modes1[q];
        const double phase = 0.7 * static_cast<double>(q) + axis;
        return std::cos(2.0 * std::numbers::pi * m * t + phase);
      }
      const double c = axis == 0 ? centres[q] : centres[7 - q];
      const double z = (t - c) / widths[q];
      return std::exp(-0.5 * z * z) * std::pow(std::sin(std::numbers::pi * t), 8);
    };
    GridFunction f = GridFunction::sample(grid, [&](double u, double v) { return factor(0, u) * factor(1, v); });
    const double scale = f.max_abs();
    if (scale > 0.0)
      for (double& v : f.values()) v /= scale;
    out.push_back(std::move(f));
  }
  return out;
}

// Least-squares slope of log(value) against log(h); infinity when every value
// is exactly zero, NaN when only some are.
inline double convergence_order(const std::vector<double>& steps, const std::vector<double>& values) {
  if (steps.size() != values.size() || steps.size() < 2) throw ConfigError("convergence fit needs >= 2 levels");
  bool all_zero = true, any_zero = false;
  for (double v : values) {
    all_zero = all_zero && v == 0.0;
    any_zero = any_zero || v <= 0.0;
  }
  if (all_zero) return std::numeric_limits<double>::infinity();
  if (any_zero) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double lx = std::log(steps[i]), ly = std::log(values[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

struct QuantumLevel {
  int resolution = 0;
  double step = 0.0;  // largest grid step
  double commutator = 0.0;
  double adjoint_defect = 0.0;
};

struct QuantumStudy {
  std::vector<QuantumLevel> levels;
  double order = 0.0;
  double max_adjoint_defect = 0.0;
  bool exact_zero = false;
  double max_commutator = 0.0;

  // Commutators below `rounding_floor` at every level count as vanishing
  // (constant-coefficient pairs whose factors are not exactly representable).
  bool pass(double min_order = 1.5, double max_defect = 1e-9, double rounding_floor = 1e-9) const {
    if (max_adjoint_defect > max_defect) return false;
    if (exact_zero || max_commutator <= rounding_floor) return true;
    return std::isfinite(order) && order >= min_order;
  }
};

// Commutator [I_0, I_1] and self-adjointness of every I_k at each resolution.
inline QuantumStudy quantum_study(const MetricPair& pair, const std::vector<int>& resolutions) {
  QuantumStudy study;
  std::vector<double> steps, norms;
  for (int res : resolutions) {
    const GridSpec grid = grid_for_chart(pair.chart(), res);
    const std::vector<GridOperator> ops = build_quantum_family(pair, grid);
    const std::vector<GridFunction> fs = test_functions(grid);
    QuantumLevel level;
    level.resolution = res;
    level.step = std::max(grid.axes[0].step(), grid.axes[1].step());
    level.commutator = commutator_norm(ops[0], ops[1], fs);
    for (const GridOperator& op : ops)
      for (std::size_t q = 0; q + 1 < fs.size(); q += 2)
        level.adjoint_defect = std::max(level.adjoint_defect, adjoint_defect(op, fs[q], fs[q + 1]));
    study.max_adjoint_defect = std::max(study.max_adjoint_defect, level.adjoint_defect);
    steps.push_back(level.step);
    norms.push_back(level.commutator);
    study.max_commutator = std::max(study.max_commutator, level.commutator);
    study.levels.push_back(level);
  }
  study.order = convergence_order(steps, norms);
  study.exact_zero = std::isinf(study.order);
  return study;
}

}  // namespace geoequiv

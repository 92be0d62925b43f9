#pragma once

// Built-in metric pairs: the projective (Beltrami) pair on the sphere, the
// ellipsoid pair, the Poisson-sphere pair, flat and proportional pairs, and a
// non-equivalent control. All sphere-family pairs live on the spherical chart
// of sphere.hpp via the parametrisation x^i = sqrt(a_i) u^i(theta, phi).

#include "geoequiv/parallel.hpp"
#include "geoequiv/sphere.hpp"
#include "geoequiv/tensors.hpp"

#include <array>
#include <map>

namespace geoequiv {

namespace detail {

inline void require_positive(const Vector& a, const char* what) {
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!(a[i] > 0.0) || !std::isfinite(a[i]))
      throw ConfigError(std::string(what) + " parameters must be positive, got " + format_point(a));
}

// Image of the spherical chart under u -> sqrt(a) * u.
inline EmbeddingMap scaled_sphere(const Vector& a, double cap, EmbeddingMap::MatrixMap ambient) {
  const int n = static_cast<int>(a.size()) - 1;
  const Vector root = a.cwiseSqrt();
  return EmbeddingMap{sphere_chart(n, cap), n + 1,
                      [root](const Vector& x) { return Vector(root.cwiseProduct(sphere_point(x))); },
                      [root](const Vector& x) { return Matrix(root.asDiagonal() * sphere_jacobian(x)); },
                      std::move(ambient)};
}

}  // namespace detail

inline MetricField round_sphere_metric(int n, double cap = kDefaultPolarCap) {
  return induced_metric(sphere_embedding(n, cap), "g");
}

// g: round metric; gbar: pull-back of g by l(u) = Au/|Au|.
inline MetricPair beltrami_pair(const Matrix& A, double cap = kDefaultPolarCap) {
  if (A.rows() != A.cols() || A.rows() < 2) throw ConfigError("A must be a square matrix of size n+1 >= 2");
  const int n = static_cast<int>(A.rows()) - 1;
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible()) throw ConfigError("A must be nondegenerate");
  auto map = [A](const Vector& x) { return Vector((A * sphere_point(x)).normalized()); };
  auto jac = [A](const Vector& x) {
    const Vector au = A * sphere_point(x);
    const double r = au.norm();
    const Vector w = au / r;
    const Matrix proj = Matrix::Identity(au.size(), au.size()) - w * w.transpose();
    return Matrix(proj * A * sphere_jacobian(x) / r);
  };
  EmbeddingMap l{sphere_chart(n, cap), n + 1, map, jac, EmbeddingMap::euclidean(n + 1)};
  return MetricPair(round_sphere_metric(n, cap), induced_metric(l, "gbar"), "beltrami-sphere");
}

inline MetricPair beltrami_pair(const Vector& diagonal, double cap = kDefaultPolarCap) {
  return beltrami_pair(Matrix(diagonal.asDiagonal()), cap);
}

// g: Euclidean metric restricted to E = {sum x_i^2 / a_i = 1};
// gbar: (sum (x_i/a_i)^2)^{-1} sum dx_i^2 / a_i restricted to E.
inline MetricPair ellipsoid_pair(const Vector& a, double cap = kDefaultPolarCap) {
  detail::require_positive(a, "ellipsoid");
  const int m = static_cast<int>(a.size());
  auto g = induced_metric(detail::scaled_sphere(a, cap, EmbeddingMap::euclidean(m)), "g");
  auto conformal = [a](const Vector& y) {
    const double q = y.cwiseQuotient(a).squaredNorm();
    return Matrix(a.cwiseInverse().asDiagonal() * (1.0 / q));
  };
  auto gbar = induced_metric(detail::scaled_sphere(a, cap, conformal), "gbar");
  return MetricPair(std::move(g), std::move(gbar), "ellipsoid");
}

// g: (sum x_i^2 / a_i^2)^{-1} sum dx_i^2 restricted to E (the Poisson sphere);
// gbar: sum a_i dx_i^2 - (sum x_i dx_i)^2 restricted to E.
inline MetricPair poisson_pair(const Vector& a, double cap = kDefaultPolarCap) {
  detail::require_positive(a, "poisson");
  const int m = static_cast<int>(a.size());
  auto poisson = [a, m](const Vector& y) {
    const double q = y.cwiseQuotient(a).squaredNorm();
    return Matrix(Matrix::Identity(m, m) / q);
  };
  auto quadric = [a](const Vector& y) { return Matrix(Matrix(a.asDiagonal()) - y * y.transpose()); };
  auto g = induced_metric(detail::scaled_sphere(a, cap, poisson), "g");
  auto gbar = induced_metric(detail::scaled_sphere(a, cap, quadric), "gbar");
  return MetricPair(std::move(g), std::move(gbar), "poisson");
}

// Flat metric and gbar = I + x1 x2 e1 e1^T on (-0.9, 0.9)^2. Not geodesically
// equivalent; the two metrics agree at the origin only.
inline MetricPair control_pair_nonequivalent() {
  Chart chart = Chart::box(2, {-0.9, 0.9});
  const auto& v = chart.names();
  auto parse_row = [&v](std::initializer_list<const char*> row) {
    std::vector<Expression> out;
    for (const char* s : row) out.push_back(parse(s, v));
    return out;
  };
  auto g = MetricField::from_expressions(chart, {parse_row({"1", "0"}), parse_row({"0", "1"})}, kDefaultFdStep, "g");
  auto gbar = MetricField::from_expressions(chart, {parse_row({"1 + x1*x2", "0"}), parse_row({"0", "1"})},
                                            kDefaultFdStep, "gbar");
  return MetricPair(std::move(g), std::move(gbar), "control-nonequivalent");
}

// Identity metric and c times it on the periodic square [0, 2 pi)^n.
inline MetricPair flat_pair(double c = 1.0, int n = 2) {
  if (!(c > 0.0)) throw ConfigError("flat pair factor must be positive");
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  Chart chart(names, std::vector<Interval>(n, {0.0, 2.0 * std::numbers::pi}), std::vector<bool>(n, true));
  return MetricPair(MetricField::constant(chart, Matrix::Identity(n, n), "g"),
                    MetricField::constant(chart, c * Matrix::Identity(n, n), "gbar"), "flat");
}

// Round sphere and c times it.
inline MetricPair proportional_sphere_pair(double c = 1.0, int n = 2, double cap = kDefaultPolarCap) {
  if (!(c > 0.0)) throw ConfigError("proportionality factor must be positive");
  MetricField g = round_sphere_metric(n, cap);
  MetricField gbar(g.chart(), [g, c](const Vector& x) { return Matrix(c * g.raw(x)); }, g.fd_step(), "gbar");
  return MetricPair(std::move(g), std::move(gbar), "sphere-scaled");
}

// For A = diag(alpha), the first metric of the B-transformed Beltrami pair is
// the ellipsoid metric with a_i = |det A|^{2/3} / alpha_i^2 on the same chart:
// g_B = |det A|^{2/3} (A A^T)^{-1} restricted to the tangent spaces of S^n.
inline Vector ellipsoid_identification(const Vector& alpha) {
  const double det = std::fabs(alpha.prod());
  if (det == 0.0) throw ConfigError("A must be nondegenerate");
  // |det A|^{2/(n+1)} on S^n
  return alpha.cwiseAbs2().cwiseInverse() * std::pow(det, 2.0 / static_cast<double>(alpha.size()));
}

// ---------------------------------------------------------------------------
// Catalog registry

using CatalogParams = std::map<std::string, std::vector<double>>;

struct CatalogEntry {
  std::string name;
  std::string params_schema;
  std::string chart;
  std::string caveats;
  std::function<MetricPair(const CatalogParams&)> build;
};

namespace detail {

inline std::vector<double> param_or(const CatalogParams& p, const std::string& key, std::vector<double> fallback) {
  auto it = p.find(key);
  return it == p.end() ? std::move(fallback) : it->second;
}

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Matrix beltrami_matrix(const std::vector<double>& values) {
  const auto count = static_cast<Eigen::Index>(values.size());
  const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(count))));
  if (count >= 9 && side * side == count) {
    Matrix m(side, side);
    for (Eigen::Index i = 0; i < side; ++i)
      for (Eigen::Index j = 0; j < side; ++j) m(i, j) = values[static_cast<std::size_t>(i * side + j)];
    return m;
  }
  if (count >= 3) return Matrix(to_vector(values).asDiagonal());
  throw ConfigError("A needs n+1 diagonal entries or (n+1)^2 row-major entries (n >= 2)");
}

inline double scalar_param(const CatalogParams& p, const std::string& key, double fallback) {
  auto v = param_or(p, key, {fallback});
  if (v.size() != 1) throw ConfigError("parameter '" + key + "' must be a single number");
  return v[0];
}

}  // namespace detail

inline const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"beltrami-sphere", "A: n+1 diagonal entries or (n+1)^2 row-major entries (default 1,2,3)",
       "spherical (theta..., phi), theta in (0.05, pi-0.05), phi periodic",
       "polar caps excluded; proportionality points at the poles are not seen",
       [](const CatalogParams& p) {
         return beltrami_pair(detail::beltrami_matrix(detail::param_or(p, "A", {1, 2, 3})));
       }},
      {"ellipsoid", "a: n+1 positive squared semi-axes (default 1,2,3)",
       "spherical (theta..., phi) via x_i = sqrt(a_i) u_i", "polar caps excluded",
       [](const CatalogParams& p) { return ellipsoid_pair(detail::to_vector(detail::param_or(p, "a", {1, 2, 3}))); }},
      {"poisson", "a: n+1 positive parameters (default 1,2,3)",
       "spherical (theta..., phi) via x_i = sqrt(a_i) u_i", "polar caps excluded",
       [](const CatalogParams& p) { return poisson_pair(detail::to_vector(detail::param_or(p, "a", {1, 2, 3}))); }},
      {"control-nonequivalent", "none", "box (-0.9, 0.9)^2 in (x1, x2)",
       "negative control: not geodesically equivalent",
       [](const CatalogParams&) { return control_pair_nonequivalent(); }},
      {"flat", "c: positive factor, gbar = c g (default 1)", "periodic square [0, 2 pi)^2 in (x1, x2)", "none",
       [](const CatalogParams& p) { return flat_pair(detail::scalar_param(p, "c", 1.0)); }},
      {"sphere-scaled", "c: positive factor, gbar = c g (default 5)",
       "spherical (theta, phi), theta in (0.05, pi-0.05), phi periodic", "polar caps excluded",
       [](const CatalogParams& p) { return proportional_sphere_pair(detail::scalar_param(p, "c", 5.0)); }},
  };
  return entries;
}

inline const CatalogEntry& find_catalog_entry(const std::string& name) {
  for (const auto& e : catalog())
    if (e.name == name) return e;
  throw ConfigError("unknown catalog entry '" + name + "'");
}

inline MetricPair build_catalog_pair(const std::string& name, const CatalogParams& params = {}) {
  return find_catalog_entry(name).build(params);
}

// ---------------------------------------------------------------------------
// Proportionality scan (n = 2)

struct ScanResult {
  bool all = false;                  // every grid node is a proportionality point
  int components = 0;
  std::vector<Vector> representatives;
  int grid_nodes = 0;
  int grid_hits = 0;                 // nodes proportional at the grid resolution
  int refined_candidates = 0;
};

namespace detail {

// (l1 - l2)^2 / (l1 + l2)^2 for the two eigenvalues of G.
inline double relative_gap_sq(const MetricPair& pair, const Vector& x) {
  const PairAtPoint pt = evaluate_pair(pair, x);
  const Matrix G = pt.g_inv * pt.gbar;
  const double tr = G.trace();
  return std::max(0.0, 1.0 - 4.0 * G.determinant() / (tr * tr));
}

// Nelder-Mead on a 2-D function; out-of-domain points evaluate to +inf.
inline Vector nelder_mead_2d(const std::function<double(const Vector&)>& f, const Vector& start,
                             const Vector& scale, int max_iter = 600, double x_tol = 1e-13) {
  std::array<Vector, 3> s = {start, start, start};
  s[1][0] += scale[0];
  s[2][1] += scale[1];
  std::array<double, 3> v = {f(s[0]), f(s[1]), f(s[2])};
  for (int it = 0; it < max_iter; ++it) {
    std::array<int, 3> idx = {0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    const int best = idx[0], mid = idx[1], worst = idx[2];
    const double size = std::max((s[mid] - s[best]).lpNorm<Eigen::Infinity>(),
                                 (s[worst] - s[best]).lpNorm<Eigen::Infinity>());
    if (size < x_tol) break;
    const Vector centroid = 0.5 * (s[best] + s[mid]);
    const Vector reflected = centroid + (centroid - s[worst]);
    const double fr = f(reflected);
    if (fr < v[best]) {
      const Vector expanded = centroid + 2.0 * (centroid - s[worst]);
      const double fe = f(expanded);
      if (fe < fr) {
        s[worst] = expanded;
        v[worst] = fe;
      } else {
        s[worst] = reflected;
        v[worst] = fr;
      }
    } else if (fr < v[mid]) {
      s[worst] = reflected;
      v[worst] = fr;
    } else {
      const Vector contracted = centroid + 0.5 * (s[worst] - centroid);
      const double fc = f(contracted);
      if (fc < v[worst]) {
        s[worst] = contracted;
        v[worst] = fc;
      } else {
        for (int k : {mid, worst}) {
          s[k] = s[best] + 0.5 * (s[k] - s[best]);
          v[k] = f(s[k]);
        }
      }
    }
  }
  int best = 0;
  for (int k = 1; k < 3; ++k)
    if (v[k] < v[best]) best = k;
  return s[best];
}

}  // namespace detail

// Proportionality points of an n = 2 pair on its chart. Grid nodes sit at cell
// centres (never on a non-periodic boundary). A node counts when G has a single
// eigenvalue cluster there (gap_tol <= 0: default tolerance). Discrete local
// minima of the relative eigenvalue gap away from the grid boundary are refined
// by Nelder-Mead and kept when they reach a single cluster. Points closer than
// two grid cells (periodic-aware) form one component.
inline ScanResult proportionality_scan(const MetricPair& pair, int grid_density, double gap_tol = 0.0) {
  if (pair.dim() != 2) throw ConfigError("proportionality scan needs a two-dimensional chart");
  if (grid_density < 8) throw ConfigError("grid density must be at least 8");
  const Chart& chart = pair.chart();
  std::array<Interval, 2> box;
  std::array<double, 2> spacing{};
  std::array<bool, 2> periodic{};
  for (int i = 0; i < 2; ++i) {
    box[i] = chart.bounds(i);
    periodic[i] = chart.periodic(i);
    if (!box[i].finite()) throw ConfigError("proportionality scan needs finite chart bounds");
    spacing[i] = box[i].width() / grid_density;
  }
  const int N = grid_density;
  auto node = [&](int i, int j) {
    Vector x(2);
    x[0] = box[0].lo + (i + (periodic[0] ? 0.0 : 0.5)) * spacing[0];
    x[1] = box[1].lo + (j + (periodic[1] ? 0.0 : 0.5)) * spacing[1];
    return x;
  };
  auto proportional_at = [&](const Vector& x) {
    return distinct_eigenvalue_count(build_G(pair, x), gap_tol) == 1;
  };

  std::vector<double> gap(static_cast<std::size_t>(N) * N);
  std::vector<char> hit(gap.size(), 0);
  parallel_for(static_cast<std::size_t>(N), [&](std::size_t i) {
    for (int j = 0; j < N; ++j) {
      const Vector x = node(static_cast<int>(i), j);
      gap[i * N + j] = detail::relative_gap_sq(pair, x);
      hit[i * N + j] = proportional_at(x) ? 1 : 0;
    }
  });

  ScanResult result;
  result.grid_nodes = N * N;
  for (char h : hit) result.grid_hits += h;
  if (result.grid_hits == result.grid_nodes) {
    result.all = true;
    result.components = 1;
    return result;
  }

  std::vector<Vector> points;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (hit[static_cast<std::size_t>(i) * N + j]) points.push_back(node(i, j));

  auto value = [&](int i, int j) -> std::optional<double> {
    if (periodic[0]) i = (i % N + N) % N;
    if (periodic[1]) j = (j % N + N) % N;
    if (i < 0 || i >= N || j < 0 || j >= N) return std::nullopt;
    return gap[static_cast<std::size_t>(i) * N + j];
  };
  auto objective = [&](const Vector& x) {
    if (!chart.contains(x)) return std::numeric_limits<double>::infinity();
    try {
      return detail::relative_gap_sq(pair, x);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      const double centre = *value(i, j);
      bool interior = true, minimum = true;
      for (int di = -1; di <= 1 && minimum; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const auto v = value(i + di, j + dj);
          if (!v) {
            interior = false;
            break;
          }
          if (*v < centre) {
            minimum = false;
            break;
          }
        }
        if (!interior) break;
      }
      if (!interior || !minimum) continue;
      ++result.refined_candidates;
      const Vector start = node(i, j);
      Vector scale(2);
      scale << spacing[0], spacing[1];
      const Vector best = detail::nelder_mead_2d(objective, start, scale);
      if (chart.contains(best) && proportional_at(best)) points.push_back(best);
    }
  }

  // Single-linkage clustering with periodic wrap.
  auto close = [&](const Vector& a, const Vector& b) {
    for (int k = 0; k < 2; ++k) {
      double d = std::fabs(a[k] - b[k]);
      if (periodic[k]) d = std::min(d, box[k].width() - std::fmod(d, box[k].width()));
      if (d > 2.0 * spacing[k]) return false;
    }
    return true;
  };
  std::vector<int> parent(points.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  std::function<int(int)> root = [&](int i) { return parent[i] == i ? i : parent[i] = root(parent[i]); };
  for (std::size_t a = 0; a < points.size(); ++a)
    for (std::size_t b = a + 1; b < points.size(); ++b)
      if (close(points[a], points[b])) parent[root(static_cast<int>(a))] = root(static_cast<int>(b));
  std::vector<int> seen;
  for (std::size_t a = 0; a < points.size(); ++a) {
    const int r = root(static_cast<int>(a));
    if (std::find(seen.begin(), seen.end(), r) == seen.end()) {
      seen.push_back(r);
      result.representatives.push_back(points[a]);
    }
  }
  result.components = static_cast<int>(seen.size());
  return result;
}

}  // namespace geoequiv

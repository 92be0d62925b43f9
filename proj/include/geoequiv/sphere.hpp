#pragma once

// The spherical working chart on S^n and its embedding into R^{n+1}.
//
// Coordinates (theta_1, ..., theta_{n-1}, phi); each theta_k lies in
// (cap, pi - cap) and phi is periodic on [0, 2 pi). Components:
//   u_{n+1}   = cos theta_1
//   u_{n+2-k} = sin theta_1 ... sin theta_{k-1} cos theta_k     (k < n)
//   u_2       = sin theta_1 ... sin theta_{n-1} sin phi
//   u_1       = sin theta_1 ... sin theta_{n-1} cos phi
// For n = 2 this is (sin t cos p, sin t sin p, cos t). The polar caps are not
// covered; every statement checked on this chart holds away from them only.

#include "geoequiv/metric.hpp"

#include <numbers>

namespace geoequiv {

inline constexpr double kDefaultPolarCap = 0.05;

inline Chart sphere_chart(int n, double cap = kDefaultPolarCap) {
  if (n < 1) throw ConfigError("sphere dimension must be positive");
  std::vector<std::string> names;
  std::vector<Interval> domain;
  std::vector<bool> periodic;
  if (n == 2) {
    names = {"theta", "phi"};
  } else {
    for (int k = 1; k < n; ++k) names.push_back("theta" + std::to_string(k));
    names.push_back("phi");
  }
  for (int k = 1; k < n; ++k) {
    domain.push_back({cap, std::numbers::pi - cap});
    periodic.push_back(false);
  }
  domain.push_back({0.0, 2.0 * std::numbers::pi});
  periodic.push_back(true);
  return Chart(std::move(names), std::move(domain), std::move(periodic));
}

namespace detail {

// Component c of the unit-sphere embedding is a product of sin/cos factors of
// chart coordinates. Factor (coordinate index, use cos).
struct SphereFactor {
  int coord;
  bool is_cos;
};

inline std::vector<std::vector<SphereFactor>> sphere_factors(int n) {
  std::vector<std::vector<SphereFactor>> comps(n + 1);
  // index in output vector is 0-based u index
  comps[n] = {{0, true}};  // u_{n+1}
  for (int k = 2; k <= n - 1; ++k) {
    std::vector<SphereFactor> f;
    for (int j = 0; j < k - 1; ++j) f.push_back({j, false});
    f.push_back({k - 1, true});
    comps[n + 1 - k] = f;  // u_{n+2-k} has 0-based index n+1-k
  }
  std::vector<SphereFactor> tail;
  for (int j = 0; j < n - 1; ++j) tail.push_back({j, false});
  comps[0] = tail;
  comps[0].push_back({n - 1, true});
  comps[1] = tail;
  comps[1].push_back({n - 1, false});
  if (n == 1) comps.resize(2);
  return comps;
}

}  // namespace detail

inline Vector sphere_point(const Vector& x) {
  const int n = static_cast<int>(x.size());
  const auto comps = detail::sphere_factors(n);
  Vector u(n + 1);
  for (int c = 0; c <= n; ++c) {
    double v = 1.0;
    for (const auto& f : comps[c]) v *= f.is_cos ? std::cos(x[f.coord]) : std::sin(x[f.coord]);
    u[c] = v;
  }
  return u;
}

inline Matrix sphere_jacobian(const Vector& x) {
  const int n = static_cast<int>(x.size());
  const auto comps = detail::sphere_factors(n);
  Matrix jac = Matrix::Zero(n + 1, n);
  for (int c = 0; c <= n; ++c) {
    for (int i = 0; i < n; ++i) {
      bool depends = false;
      double v = 1.0;
      for (const auto& f : comps[c]) {
        const double s = std::sin(x[f.coord]), co = std::cos(x[f.coord]);
        if (f.coord == i) {
          depends = true;
          v *= f.is_cos ? -s : co;
        } else {
          v *= f.is_cos ? co : s;
        }
      }
      if (depends) jac(c, i) = v;
    }
  }
  return jac;
}

// Inverse of sphere_point on the chart (phi returned in [0, 2 pi)).
inline Vector sphere_coordinates(const Vector& u) {
  const int n = static_cast<int>(u.size()) - 1;
  Vector x(n);
  const Vector w = u.normalized();
  double rest = 1.0;  // product of sines so far
  for (int k = 1; k <= n - 1; ++k) {
    const double c = w[n + 1 - k] / rest;
    x[k - 1] = std::acos(std::clamp(c, -1.0, 1.0));
    rest *= std::sin(x[k - 1]);
  }
  double phi = std::atan2(w[1], w[0]);
  if (phi < 0) phi += 2.0 * std::numbers::pi;
  x[n - 1] = phi;
  return x;
}

// Unit sphere in R^{n+1} with the given ambient metric (Euclidean by default).
inline EmbeddingMap sphere_embedding(int n, double cap = kDefaultPolarCap,
                                     EmbeddingMap::MatrixMap ambient = {}) {
  return EmbeddingMap{sphere_chart(n, cap), n + 1, sphere_point, sphere_jacobian,
                      ambient ? std::move(ambient) : EmbeddingMap::euclidean(n + 1)};
}

}  // namespace geoequiv

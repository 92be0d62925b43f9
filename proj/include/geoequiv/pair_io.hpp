#pragma once

// Pair-definition files (JSON). Two forms are accepted:
//   {"n":2, "coords":["x1","x2"], "domain":[[lo,hi],...], "periodic":[...],
//    "g":[["expr",...],...], "gbar":[[...]], "fd_step":1e-5}
//   {"catalog":"beltrami-sphere", "params":{"A":[1,1,2]}}
// Domain bounds may be numbers, "inf"/"-inf" or null (unbounded).

#include "geoequiv/catalog.hpp"
#include "geoequiv/integrals.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace geoequiv {

namespace detail {

using nlohmann::json;

inline double bound_value(const json& v, double unbounded) {
  if (v.is_null()) return unbounded;
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ConfigError("domain bound must be a number, \"inf\", \"-inf\" or null");
}

inline std::vector<std::vector<Expression>> expression_matrix(const json& rows, int n,
                                                              const std::vector<std::string>& coords,
                                                              const std::string& which) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != n)
    throw ConfigError("'" + which + "' must be an array of " + std::to_string(n) + " rows");
  std::vector<std::vector<Expression>> out;
  for (const json& row : rows) {
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw ConfigError("every row of '" + which + "' needs " + std::to_string(n) + " entries");
    std::vector<Expression> parsed;
    for (const json& cell : row) {
      if (cell.is_number()) {
        parsed.emplace_back(Expression::constant(cell.get<double>()), coords);
        continue;
      }
      if (!cell.is_string()) throw ConfigError("metric entries in '" + which + "' must be strings or numbers");
      try {
        parsed.push_back(parse(cell.get<std::string>(), coords));
      } catch (const ParseError& e) {
        throw ConfigError("in '" + which + "' entry \"" + cell.get<std::string>() + "\": " + e.what());
      }
    }
    out.push_back(std::move(parsed));
  }
  return out;
}

inline MetricPair pair_from_expressions(const json& doc) {
  if (doc.contains("tabulated"))
    throw ConfigError("tabulated pair definitions are export-only and cannot be loaded");
  for (const char* key : {"n", "g", "gbar"})
    if (!doc.contains(key)) throw ConfigError(std::string("pair definition lacks '") + key + "'");
  const int n = doc.at("n").get<int>();
  if (n < 1) throw ConfigError("'n' must be positive");

  std::vector<std::string> coords;
  if (doc.contains("coords")) {
    coords = doc.at("coords").get<std::vector<std::string>>();
  } else {
    for (int i = 1; i <= n; ++i) coords.push_back("x" + std::to_string(i));
  }
  if (static_cast<int>(coords.size()) != n) throw ConfigError("'coords' must name " + std::to_string(n) + " coordinates");

  std::vector<Interval> domain(static_cast<std::size_t>(n));
  if (doc.contains("domain")) {
    const json& d = doc.at("domain");
    if (!d.is_array() || static_cast<int>(d.size()) != n) throw ConfigError("'domain' needs one interval per coordinate");
    for (int i = 0; i < n; ++i) {
      const json& iv = d[static_cast<std::size_t>(i)];
      if (!iv.is_array() || iv.size() != 2) throw ConfigError("domain intervals are [lo, hi] pairs");
      domain[static_cast<std::size_t>(i)] = {bound_value(iv[0], -std::numeric_limits<double>::infinity()),
                                             bound_value(iv[1], std::numeric_limits<double>::infinity())};
    }
  }
  std::vector<bool> periodic;
  if (doc.contains("periodic")) periodic = doc.at("periodic").get<std::vector<bool>>();
  const double fd_step = doc.value("fd_step", kDefaultFdStep);

  Chart chart(coords, domain, periodic);
  auto g = MetricField::from_expressions(chart, expression_matrix(doc.at("g"), n, coords, "g"), fd_step, "g");
  auto gbar = MetricField::from_expressions(chart, expression_matrix(doc.at("gbar"), n, coords, "gbar"), fd_step, "gbar");
  return MetricPair(std::move(g), std::move(gbar), doc.value("name", std::string("file")));
}

inline MetricPair pair_from_catalog(const json& doc) {
  CatalogParams params;
  if (doc.contains("params")) {
    for (const auto& [key, value] : doc.at("params").items()) {
      if (value.is_number()) params[key] = {value.get<double>()};
      else if (value.is_array()) params[key] = value.get<std::vector<double>>();
      else throw ConfigError("catalog parameter '" + key + "' must be a number or an array of numbers");
    }
  }
  return build_catalog_pair(doc.at("catalog").get<std::string>(), params);
}

}  // namespace detail

inline MetricPair parse_pair_definition(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("pair definition is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("pair definition must be a JSON object");
  try {
    if (doc.contains("catalog")) return detail::pair_from_catalog(doc);
    return detail::pair_from_expressions(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed pair definition: ") + e.what());
  }
}

inline MetricPair load_pair_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pair definition '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_pair_definition(buf.str());
}

// Samples both metrics on a tensor grid of `points` nodes per axis, inset from
// finite bounds (periodic axes span the full period). The result is a record
// for external tools, not a loadable definition.
inline nlohmann::json tabulate_pair(const MetricPair& pair, int points = 9) {
  if (points < 2) throw ConfigError("tabulation needs at least 2 points per axis");
  const Chart& chart = pair.chart();
  const int n = chart.dim();
  const SampleBox box = default_sample_box(chart);
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    const double lo = box.bounds[static_cast<std::size_t>(a)].lo, hi = box.bounds[static_cast<std::size_t>(a)].hi;
    const bool periodic = chart.periodic(a);
    for (int i = 0; i < points; ++i) {
      const double t = periodic ? static_cast<double>(i) / points : static_cast<double>(i) / (points - 1);
      axes[static_cast<std::size_t>(a)].push_back(lo + t * (hi - lo));
    }
  }
  auto to_rows = [](const Matrix& m) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(m(i, j));
    return rows;
  };
  nlohmann::json samples = nlohmann::json::array();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Vector x(n);
    for (int a = 0; a < n; ++a) x[a] = axes[static_cast<std::size_t>(a)][static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
    const PairAtPoint pt = evaluate_pair(pair, x);
    samples.push_back({{"x", std::vector<double>(x.data(), x.data() + n)}, {"g", to_rows(pt.g)}, {"gbar", to_rows(pt.gbar)}});
    int a = n - 1;
    while (a >= 0 && ++idx[static_cast<std::size_t>(a)] == points) idx[static_cast<std::size_t>(a--)] = 0;
    if (a < 0) break;
  }
  nlohmann::json domain = nlohmann::json::array();
  for (int a = 0; a < n; ++a) {
    const Interval& b = chart.bounds(a);
    domain.push_back({std::isfinite(b.lo) ? nlohmann::json(b.lo) : nlohmann::json("-inf"),
                      std::isfinite(b.hi) ? nlohmann::json(b.hi) : nlohmann::json("inf")});
  }
  return {{"name", pair.name},
          {"n", n},
          {"coords", chart.names()},
          {"domain", domain},
          {"periodic", chart.periodic_flags()},
          {"tabulated", true},
          {"notice", "metric values are sampled on a grid; values between nodes require interpolation and are "
                     "not exact"},
          {"points_per_axis", points},
          {"samples", samples}};
}

}  // namespace geoequiv

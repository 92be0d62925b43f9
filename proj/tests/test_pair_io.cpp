#include "geoequiv/flow.hpp"
#include "geoequiv/pair_io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

using namespace geoequiv;

namespace {

std::string pairs_file(const std::string& name) { return std::string(GEOEQUIV_PAIRS_DIR) + "/" + name; }

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(PairDefinition, ExpressionForm) {
  const MetricPair pair = parse_pair_definition(R"j({
    "name": "demo", "n": 2, "coords": ["u", "v"],
    "domain": [[0, 1], ["-inf", null]], "periodic": [false, false],
    "g": [["1 + u^2", 0], [0, 1]],
    "gbar": [["2", "0"], ["0", "exp(v)"]], "fd_step": 1e-4
  })j");
  EXPECT_EQ(pair.name, "demo");
  EXPECT_EQ(pair.chart().names(), (std::vector<std::string>{"u", "v"}));
  EXPECT_EQ(pair.chart().bounds(0).hi, 1.0);
  EXPECT_TRUE(std::isinf(pair.chart().bounds(1).lo));
  EXPECT_TRUE(std::isinf(pair.chart().bounds(1).hi));
  EXPECT_EQ(pair.g.fd_step(), 1e-4);
  const Matrix g = eval_metric(pair.g, vec({0.5, 0.0}));
  EXPECT_EQ(g(0, 0), 1.25);
  EXPECT_EQ(eval_metric(pair.gbar, vec({0.5, 1.0}))(1, 1), std::exp(1.0));
}

TEST(PairDefinition, DefaultsCoordinatesAndDomain) {
  const MetricPair pair = parse_pair_definition(R"j({"n": 2, "g": [[1,0],[0,1]], "gbar": [[2,0],[0,2]]})j");
  EXPECT_EQ(pair.chart().names(), (std::vector<std::string>{"x1", "x2"}));
  EXPECT_FALSE(pair.chart().bounds(0).finite());
  EXPECT_EQ(pair.name, "file");
}

TEST(PairDefinition, CatalogForm) {
  const MetricPair pair = parse_pair_definition(R"j({"catalog": "beltrami-sphere", "params": {"A": [1, 1, 2]}})j");
  EXPECT_EQ(pair.name, "beltrami-sphere");
  const MetricPair reference = beltrami_pair(vec({1, 1, 2}));
  const Vector x = vec({1.0, 0.5});
  EXPECT_EQ(eval_metric(pair.gbar, x), eval_metric(reference.gbar, x));
  const MetricPair flat = parse_pair_definition(R"j({"catalog": "flat", "params": {"c": 3}})j");
  EXPECT_EQ(eval_metric(flat.gbar, vec({0, 0}))(0, 0), 3.0);
}

TEST(PairDefinition, Errors) {
  EXPECT_THROW(parse_pair_definition("{"), ConfigError);
  EXPECT_THROW(parse_pair_definition("[1, 2]"), ConfigError);
  EXPECT_THROW(parse_pair_definition(R"j({"n": 2, "g": [[1,0],[0,1]]})j"), ConfigError);
  EXPECT_THROW(parse_pair_definition(R"j({"n": 2, "g": [[1,0]], "gbar": [[1,0],[0,1]]})j"), ConfigError);
  EXPECT_THROW(parse_pair_definition(R"j({"n": 2, "g": [[1,0],[0,1]], "gbar": [["1 +",0],[0,1]]})j"), ConfigError);
  EXPECT_THROW(parse_pair_definition(R"j({"n": 2, "g": [[1,0],[0,1]], "gbar": [["z",0],[0,1]]})j"), ConfigError);
  EXPECT_THROW(parse_pair_definition(R"j({"n": 2, "g": [[1,0],[0,1]], "gbar": [[true,0],[0,1]]})j"), ConfigError);
  EXPECT_THROW(parse_pair_definition(R"j({"n": 2, "domain": [[0, "x"], [0, 1]], "g": [[1,0],[0,1]], "gbar": [[1,0],[0,1]]})j"),
               ConfigError);
  EXPECT_THROW(parse_pair_definition(R"j({"n": "two", "g": [[1,0],[0,1]], "gbar": [[1,0],[0,1]]})j"), ConfigError);
  EXPECT_THROW(parse_pair_definition(R"j({"catalog": "torus"})j"), ConfigError);
  EXPECT_THROW(parse_pair_definition(R"j({"catalog": "flat", "params": {"c": "big"}})j"), ConfigError);
  EXPECT_THROW(load_pair_file(pairs_file("missing.json")), ConfigError);
}

TEST(PairDefinition, AsymmetricMetricRejectedOnEvaluation) {
  const MetricPair pair = parse_pair_definition(R"j({"n": 2, "g": [[1,"x1"],[0,1]], "gbar": [[1,0],[0,1]]})j");
  EXPECT_THROW(eval_metric(pair.g, vec({0.5, 0.0})), MetricError);
}

TEST(PairFiles, ShippedFilesLoad) {
  for (const char* name : {"beltrami.json", "ellipsoid.json", "control.json", "liouville.json"}) {
    const MetricPair pair = load_pair_file(pairs_file(name));
    EXPECT_EQ(pair.dim(), 2) << name;
  }
}

// g = (X - Y)(dx^2 + dy^2), gbar = (1/Y - 1/X)(dx^2 / X + dy^2 / Y) with
// X = X(x), Y = Y(y) is a classical geodesically equivalent pair.
TEST(PairFiles, LiouvillePairIsEquivalent) {
  const MetricPair pair = load_pair_file(pairs_file("liouville.json"));
  const BracketReport rep = bracket_report(IntegralFamily(pair), 200, 42);
  EXPECT_LE(rep.max_entry(), 1e-6);
  EXPECT_TRUE(rep.fd_noise_confirmed(0, 1));
  EXPECT_EQ(check_equivalence(pair).verdict, Verdict::Pass);
}

TEST(PairFiles, ControlFileMatchesCatalogControl) {
  const MetricPair file = load_pair_file(pairs_file("control.json"));
  const MetricPair builtin = control_pair_nonequivalent();
  const Vector x = vec({0.3, -0.4});
  EXPECT_EQ(eval_metric(file.gbar, x), eval_metric(builtin.gbar, x));
  EquivalenceOptions opts;
  opts.n_geodesics = 5;
  EXPECT_EQ(check_equivalence(file, opts).verdict, Verdict::Fail);
}

TEST(Tabulate, Structure) {
  const MetricPair pair = beltrami_pair(vec({1, 2, 3}));
  const nlohmann::json doc = tabulate_pair(pair, 5);
  EXPECT_EQ(doc.at("n").get<int>(), 2);
  EXPECT_TRUE(doc.at("tabulated").get<bool>());
  EXPECT_EQ(doc.at("samples").size(), 25u);
  EXPECT_EQ(doc.at("coords").get<std::vector<std::string>>(), (std::vector<std::string>{"theta", "phi"}));
  EXPECT_EQ(doc.at("periodic").get<std::vector<bool>>(), (std::vector<bool>{false, true}));
  const nlohmann::json& s = doc.at("samples")[7];
  const std::vector<double> xs = s.at("x").get<std::vector<double>>();
  const Vector x = vec({xs[0], xs[1]});
  const Matrix gbar = eval_metric(pair.gbar, x);
  EXPECT_EQ(s.at("gbar")[0][1].get<double>(), gbar(0, 1));
  EXPECT_THROW(tabulate_pair(pair, 1), ConfigError);
}

TEST(Tabulate, IsNotLoadable) {
  const std::string text = tabulate_pair(flat_pair(2.0), 3).dump();
  EXPECT_THROW(parse_pair_definition(text), ConfigError);
}

TEST(Tabulate, UnboundedDomainExported) {
  const MetricPair pair = parse_pair_definition(R"j({"n": 2, "g": [[1,0],[0,1]], "gbar": [[2,0],[0,2]]})j");
  const nlohmann::json doc = tabulate_pair(pair, 2);
  EXPECT_EQ(doc.at("domain")[0][0].get<std::string>(), "-inf");
  EXPECT_EQ(doc.at("domain")[0][1].get<std::string>(), "inf");
}

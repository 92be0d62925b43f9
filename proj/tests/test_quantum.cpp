#include "geoequiv/catalog.hpp"
#include "geoequiv/quantum.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace geoequiv;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

GridFunction random_function(const GridSpec& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GridFunction f(grid);
  for (double& v : f.values()) v = u(rng);
  return f;
}

double local_order(const QuantumStudy& s) {
  const auto& a = s.levels[s.levels.size() - 2];
  const auto& b = s.levels.back();
  return std::log(a.commutator / b.commutator) / std::log(a.step / b.step);
}

}  // namespace

TEST(Grid, Construction) {
  const GridSpec grid = grid_for_chart(sphere_chart(2), 16);
  EXPECT_EQ(grid.axes[0].boundary, Boundary::Zero);
  EXPECT_EQ(grid.axes[1].boundary, Boundary::Periodic);
  EXPECT_DOUBLE_EQ(grid.axes[1].step(), 2.0 * M_PI / 16);
  EXPECT_DOUBLE_EQ(grid.axes[0].step(), (M_PI - 0.1) / 17);
  EXPECT_GT(grid.axes[0].node(0), 0.05);
  EXPECT_LT(grid.axes[0].node(15), M_PI - 0.05);
  EXPECT_EQ(grid.size(), 256);
}

TEST(Grid, Errors) {
  EXPECT_THROW(grid_for_chart(sphere_chart(2), 4), ConfigError);
  EXPECT_THROW(grid_for_chart(Chart::box(2), 16), ConfigError);
  EXPECT_THROW(grid_for_chart(sphere_chart(3), 16), ConfigError);
  EXPECT_THROW(build_quantum_family(beltrami_pair(vec({1, 2, 3, 4})), grid_for_chart(sphere_chart(2), 16)),
               ConfigError);
  const GridSpec grid = grid_for_chart(flat_pair().chart(), 16);
  EXPECT_THROW(build_quantum_I(flat_pair(), 2, grid), ConfigError);
  EXPECT_THROW(commutator_norm(build_quantum_I(flat_pair(), 0, grid),
                               build_quantum_I(flat_pair(), 0, grid_for_chart(flat_pair().chart(), 32)), {}),
               ConfigError);
}

TEST(GridFunction, ExtensionAndCsv) {
  GridSpec grid = grid_for_chart(sphere_chart(2), 8);
  const GridFunction f = GridFunction::sample(grid, [](double u, double v) { return u + 10 * v; });
  EXPECT_EQ(f.extended(-1, 0), 0.0);
  EXPECT_EQ(f.extended(8, 0), 0.0);
  EXPECT_EQ(f.extended(3, -1), f.at(3, 7));
  EXPECT_EQ(f.extended(3, 8), f.at(3, 0));
  std::ostringstream out;
  write_csv(out, f);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x1,x2,value");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 64);
}

TEST(QuantumI, FlatLastOperatorIsPositiveLaplacian) {
  const MetricPair pair = flat_pair(1.0);
  std::vector<double> errors;
  for (int res : {32, 64}) {
    const GridSpec grid = grid_for_chart(pair.chart(), res);
    const GridFunction f = GridFunction::sample(grid, [](double u, double) { return std::sin(u); });
    errors.push_back((build_quantum_I(pair, 1, grid)(f) - f).max_abs());
  }
  EXPECT_LE(errors[1], 1e-3);
  EXPECT_NEAR(errors[0] / errors[1], 4.0, 0.1);
}

TEST(QuantumI, ConstantsAreAnnihilated) {
  const MetricPair pair = flat_pair(4.0);
  const GridSpec grid = grid_for_chart(pair.chart(), 16);
  const GridFunction one = GridFunction::sample(grid, [](double, double) { return 1.0; });
  for (const GridOperator& op : build_quantum_family(pair, grid)) EXPECT_EQ(op(one).max_abs(), 0.0);
}

TEST(QuantumI, ConstantCoefficientStencil) {
  const MetricPair pair = flat_pair(4.0);
  const GridSpec grid = grid_for_chart(pair.chart(), 24);
  const Matrix s0 = build_S(pair, vec({0, 0}), 0).matrix;
  const GridFunction f = test_functions(grid)[4];
  const GridFunction got = build_quantum_I(pair, 0, grid)(f);
  const double h0 = grid.axes[0].step(), h1 = grid.axes[1].step();
  double worst = 0.0;
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) {
      const double d11 = (f.extended(i + 1, j) - 2 * f.at(i, j) + f.extended(i - 1, j)) / (h0 * h0);
      const double d22 = (f.extended(i, j + 1) - 2 * f.at(i, j) + f.extended(i, j - 1)) / (h1 * h1);
      worst = std::max(worst, std::fabs(got.at(i, j) - (s0(0, 0) * d11 + s0(1, 1) * d22)));
    }
  EXPECT_LE(worst, 1e-12 * got.max_abs());
  EXPECT_EQ(s0(0, 1), 0.0);
}

TEST(Commutator, SameOperatorIsZero) {
  const MetricPair pair = beltrami_pair(vec({1, 2, 3}));
  const GridSpec grid = grid_for_chart(pair.chart(), 16);
  const GridOperator op = build_quantum_I(pair, 0, grid);
  EXPECT_EQ(commutator_norm(op, op, test_functions(grid)), 0.0);
}

TEST(Commutator, FlatPairIsExactlyZero) {
  const QuantumStudy s = quantum_study(flat_pair(1.0), {32, 64, 128});
  EXPECT_TRUE(s.exact_zero);
  for (const auto& l : s.levels) EXPECT_EQ(l.commutator, 0.0);
  EXPECT_TRUE(s.pass());
}

TEST(Commutator, BeltramiConverges) {
  const QuantumStudy s = quantum_study(beltrami_pair(vec({1, 2, 3})), {32, 64, 128});
  EXPECT_GE(s.order, 1.5);
  EXPECT_LT(s.levels[2].commutator, s.levels[1].commutator);
  EXPECT_LT(s.levels[1].commutator, s.levels[0].commutator);
  EXPECT_LE(s.max_adjoint_defect, 1e-9);
  EXPECT_TRUE(s.pass());
}

TEST(Commutator, ControlPairStalls) {
  const QuantumStudy s = quantum_study(control_pair_nonequivalent(), {32, 64, 128});
  for (const auto& l : s.levels) EXPECT_GT(l.commutator, 1e-3);
  EXPECT_LT(s.order, 0.5);
  EXPECT_FALSE(s.pass());
}

TEST(Adjoint, FlatPeriodic) {
  const MetricPair pair = flat_pair(4.0);
  const GridSpec grid = grid_for_chart(pair.chart(), 32);
  const auto fs = test_functions(grid);
  for (const GridOperator& op : build_quantum_family(pair, grid)) {
    EXPECT_LE(adjoint_defect(op, fs[0], fs[3]), 1e-12);
    EXPECT_LE(adjoint_defect(op, random_function(grid, 1), random_function(grid, 2)), 1e-12);
  }
}

TEST(Adjoint, SameFunctionIsExactlyZero) {
  const MetricPair pair = beltrami_pair(vec({1, 2, 3}));
  const GridSpec grid = grid_for_chart(pair.chart(), 32);
  const GridFunction f = test_functions(grid)[2];
  for (const GridOperator& op : build_quantum_family(pair, grid)) EXPECT_EQ(adjoint_defect(op, f, f, pair), 0.0);
}

TEST(Adjoint, BeltramiBumps) {
  const MetricPair pair = beltrami_pair(vec({1, 2, 3}));
  const GridSpec grid = grid_for_chart(pair.chart(), 48);
  const auto fs = test_functions(grid);
  for (const GridOperator& op : build_quantum_family(pair, grid))
    for (std::size_t q = 0; q + 1 < fs.size(); ++q) {
      EXPECT_LE(adjoint_defect(op, fs[q], fs[q + 1], pair), 1e-10);
      EXPECT_EQ(adjoint_defect(op, fs[q], fs[q + 1], pair), adjoint_defect(op, fs[q], fs[q + 1]));
    }
  // arbitrary grid functions too: the scheme is symmetric, not just accurate
  const GridOperator op = build_quantum_I(pair, 0, grid);
  EXPECT_LE(adjoint_defect(op, random_function(grid, 3), random_function(grid, 4)), 1e-9);
}

TEST(Property, LastOperatorIsTheLaplacian) {
  for (const MetricPair& pair : {beltrami_pair(vec({1, 2, 3})), control_pair_nonequivalent()}) {
    const GridSpec grid = grid_for_chart(pair.chart(), 32);
    const GridOperator i1 = build_quantum_I(pair, 1, grid);
    const GridOperator lap = build_laplacian(pair.g, grid);
    for (const GridFunction& f : test_functions(grid)) {
      const GridFunction a = i1(f), b = lap(f);
      EXPECT_LE((a - b).max_abs(), 1e-12 * a.max_abs()) << pair.name;
    }
  }
}

TEST(Property, Linearity) {
  const MetricPair pair = beltrami_pair(vec({1, 2, 3}));
  const GridSpec grid = grid_for_chart(pair.chart(), 24);
  for (const GridOperator& op : build_quantum_family(pair, grid))
    for (std::uint64_t s = 0; s < 5; ++s) {
      const GridFunction f = random_function(grid, 10 + s), h = random_function(grid, 20 + s);
      const double alpha = 1.5, beta = -0.7;
      const GridFunction lhs = op(combine(alpha, f, beta, h));
      const GridFunction rhs = combine(alpha, op(f), beta, op(h));
      EXPECT_LE((lhs - rhs).max_abs(), 1e-12 * lhs.max_abs());
    }
}

TEST(Property, SecondOrderCommutatorForEquivalentPairs) {
  for (const MetricPair& pair : {beltrami_pair(vec({1, 2, 3})), ellipsoid_pair(vec({1, 2, 3})),
                                 poisson_pair(vec({1, 2, 3}))}) {
    const QuantumStudy s = quantum_study(pair, {64, 128, 256});
    EXPECT_GE(local_order(s), 1.95) << pair.name;
  }
}

TEST(ConvergenceOrder, Fits) {
  EXPECT_NEAR(convergence_order({0.1, 0.05, 0.025}, {0.01, 0.0025, 0.000625}), 2.0, 1e-12);
  EXPECT_TRUE(std::isinf(convergence_order({0.1, 0.05}, {0.0, 0.0})));
  EXPECT_TRUE(std::isnan(convergence_order({0.1, 0.05}, {1.0, 0.0})));
  EXPECT_THROW(convergence_order({0.1}, {1.0}), ConfigError);
}

TEST(QuantumStudy, PassRule) {
  QuantumStudy s;
  s.order = 1.8;
  s.max_commutator = 1.0;
  EXPECT_TRUE(s.pass());
  s.max_adjoint_defect = 1e-6;
  EXPECT_FALSE(s.pass());
  s.max_adjoint_defect = 0.0;
  s.order = 0.1;
  EXPECT_FALSE(s.pass());
  s.max_commutator = 1e-11;
  EXPECT_TRUE(s.pass());
}

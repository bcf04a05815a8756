#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "calitr/error.hpp"
#include "calitr/kernels.hpp"
#include "calitr/nuisance.hpp"
#include "calitr/policy.hpp"
#include "calitr/scenario.hpp"
#include "calitr/value.hpp"

using namespace calitr;

namespace {

double angle(const Vector& a, const Vector& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0));
}

BatchValueFn first_coordinate() {
  return batched([](const Vector& b) { return b[0] / b.norm(); });
}

GaConfig small_ga(std::uint64_t seed) {
  GaConfig c;
  c.population_size = 40;
  c.generations = 40;
  c.restarts = 2;
  c.seed = seed;
  return c;
}

// Scenario-1 source restricted to (X2, X3), mode I nuisances, uniform weights.
struct TwoCovariate {
  SourceSample sample;
  RuleValue value;

  static TwoCovariate make() {
    ScenarioSpec spec;
    spec.scenario = 1;
    spec.n = 500;
    Rng rng = make_rng(17, 0);
    const SourceSample full = generate_source(spec, rng);
    SourceSample s(full.X().rightCols(2), full.A(), full.Y());
    const NuisanceFit fit = NuisanceFit::fit(s, NuisanceOptions::for_mode(NuisanceMode::ParametricI, 0));
    RuleValue v(s.X(), psi_table(s, fit.at_sample()),
                Vector::Constant(s.n(), 1.0 / static_cast<double>(s.n())));
    return {std::move(s), std::move(v)};
  }
};

}  // namespace

TEST(Ga, FindsFirstBasisVector) {
  const SearchResult r = ga_optimize(first_coordinate(), 3, GaConfig{});
  Vector e = Vector::Zero(4);
  e[0] = 1.0;
  EXPECT_LT(angle(r.rule.beta(), e), 0.05);
  EXPECT_NEAR(r.rule.beta().norm(), 1.0, 1e-12);
}

TEST(Ga, FindsSecondBasisVector) {
  const SearchResult r =
      ga_optimize(batched([](const Vector& b) { return b[1]; }), 2, GaConfig{});
  EXPECT_LT(angle(r.rule.beta(), (Vector(3) << 0, 1, 0).finished()), 0.05);
}

TEST(Ga, SeedDeterministicAcrossThreadCounts) {
  const BatchValueFn fn = batched([](const Vector& b) { return std::sin(3 * b[0]) + b[2] * b[1]; });
  set_thread_count(1);
  const SearchResult a = ga_optimize(fn, 2, small_ga(99));
  set_thread_count(4);
  const SearchResult b = ga_optimize(fn, 2, small_ga(99));
  set_thread_count(0);
  const SearchResult c = ga_optimize(fn, 2, small_ga(99));
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.value, c.value);
  for (Index j = 0; j < 3; ++j) {
    EXPECT_EQ(a.rule.beta()[j], b.rule.beta()[j]);
    EXPECT_EQ(a.rule.beta()[j], c.rule.beta()[j]);
  }
  EXPECT_EQ(a.evaluations, 2L * (40 + 40 * 38));
}

TEST(Ga, NeverBelowInitialPopulation) {
  const TwoCovariate t = TwoCovariate::make();
  const BatchValueFn fn = [&](const Matrix& B) { return t.value.batch(B); };
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    GaConfig init = small_ga(seed);
    init.restarts = 1;
    init.generations = 0;
    GaConfig full = init;
    full.generations = 40;
    EXPECT_GE(ga_optimize(fn, 2, full).value, ga_optimize(fn, 2, init).value);
  }
}

TEST(Ga, CloseToGridOracleOnScenarioOne) {
  const TwoCovariate t = TwoCovariate::make();
  const BatchValueFn fn = [&](const Matrix& B) { return t.value.batch(B); };
  const SearchResult grid = grid_search_sphere(fn, 2, std::numbers::pi / 180.0);
  GaConfig cfg;
  cfg.seed = 5;
  const SearchResult ga = ga_optimize(fn, 2, cfg);
  EXPECT_GE(ga.value, grid.value - 0.02);
}

TEST(Ga, InvalidConfigThrows) {
  GaConfig c;
  c.population_size = 3;
  EXPECT_THROW(c.validate(), Error);
  c = GaConfig{};
  c.crossover_rate = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = GaConfig{};
  c.elitism_count = 100;
  EXPECT_THROW(c.validate(), Error);
}

TEST(RanksAhead, ValueThenLexicographic) {
  const Vector a = (Vector(2) << 0.1, 0.9).finished();
  const Vector b = (Vector(2) << 0.2, 0.1).finished();
  EXPECT_TRUE(ranks_ahead(2.0, b, 1.0, a));
  EXPECT_TRUE(ranks_ahead(1.0, a, 1.0, b));
  EXPECT_FALSE(ranks_ahead(1.0, b, 1.0, a));
  EXPECT_FALSE(ranks_ahead(std::nan(""), a, -1e300, b));
}

TEST(Grid, CircleFindsDirectionWithinOneStep) {
  const double target = 2.2;
  const Vector dir = (Vector(2) << std::cos(target), std::sin(target)).finished();
  const double res = 0.01;
  const SearchResult r =
      grid_search_sphere(batched([&](const Vector& b) { return b.dot(dir); }), 1, res);
  EXPECT_LE(angle(r.rule.beta(), dir), res);
}

TEST(Grid, RefinementMonotone) {
  const BatchValueFn fn =
      batched([](const Vector& b) { return std::cos(5 * b[0]) * b[1] + 0.3 * b[b.size() - 1]; });
  for (Index p : {Index{1}, Index{3}}) {
    const double coarse = grid_search_sphere(fn, p, 0.2).value;
    const double fine = grid_search_sphere(fn, p, 0.1).value;
    EXPECT_GE(fine, coarse);
  }
}

TEST(Grid, PointsAreUnitAndCountsMatch) {
  for (Index p : {Index{1}, Index{2}, Index{3}}) {
    const Matrix g = sphere_grid(p, 0.3);
    EXPECT_EQ(g.cols(), p + 1);
    EXPECT_LT((g.rowwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);
  }
  EXPECT_EQ(sphere_grid(1, 0.3).rows(), 21);
  EXPECT_EQ(sphere_grid(2, 0.3).rows(), static_cast<Index>(std::ceil(4 * std::numbers::pi / 0.09)));
}

TEST(Grid, DimensionTooLarge) {
  try {
    grid_search_sphere(first_coordinate(), 4, 0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionTooLarge);
  }
}

TEST(Grid, RefineBeatsCoarseAndFindsSmoothMaximum) {
  const Vector dir = (Vector(4) << 0.3, -0.5, 0.7, 0.4).finished().normalized();
  const BatchValueFn fn = batched([&](const Vector& b) { return b.dot(dir); });
  const SearchResult r = grid_refine_sphere(fn, 3);
  EXPECT_LT(angle(r.rule.beta(), dir), 2e-3);
  EXPECT_GE(r.value, grid_search_sphere(fn, 3, 0.12).value);
}

TEST(QLearning, ExactContrastRecovered) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  const Index n = 200;
  Matrix X(n, 2);
  IntVector A(n);
  Vector Y(n);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = z(rng);
    X(i, 1) = z(rng);
    A[i] = static_cast<int>(i % 2);
    Y[i] = A[i] * X(i, 0);
  }
  const LinearRule r = q_learning_rule(SourceSample(X, A, Y));
  EXPECT_LT((r.beta() - (Vector(3) << 0, 1, 0).finished()).norm(), 1e-9);
}

TEST(QLearning, MatchesNormalEquationOracle) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  const Index n = 120;
  Matrix X(n, 3);
  IntVector A(n);
  Vector Y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 3; ++j) X(i, j) = z(rng);
    A[i] = z(rng) > 0 ? 1 : 0;
    Y[i] = z(rng);
  }
  Matrix Z(n, 8);
  for (Index i = 0; i < n; ++i) {
    Z(i, 0) = 1.0;
    Z.block(i, 1, 1, 3) = X.row(i);
    Z(i, 4) = A[i];
    Z.block(i, 5, 1, 3) = A[i] * X.row(i);
  }
  const Vector theta = (Z.transpose() * Z).llt().solve(Z.transpose() * Y);
  const Vector expected = theta.tail(4).normalized();
  const LinearRule r = q_learning_rule(SourceSample(X, A, Y));
  EXPECT_LT((r.beta() - expected).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_NEAR(r.beta().norm(), 1.0, 1e-12);
}

TEST(Pcd, IdentityNegationAndHandFixture) {
  Matrix X(4, 1);
  X << -2.0, -0.5, 0.5, 2.0;
  const LinearRule a((Vector(2) << 0.0, 1.0).finished());
  EXPECT_DOUBLE_EQ(pcd(a, a, X), 1.0);
  EXPECT_DOUBLE_EQ(pcd(a, a.negated(), X), 0.0);
  // Threshold at 1 disagrees with threshold at 0 only at x = 0.5.
  const LinearRule b((Vector(2) << -1.0, 1.0).finished());
  EXPECT_DOUBLE_EQ(pcd(a, b, X), 0.75);
  EXPECT_DOUBLE_EQ(pcd(b, a, X), 0.75);
}

TEST(Pcd, DimensionMismatch) {
  const LinearRule a((Vector(3) << 0.0, 1.0, 1.0).finished());
  try {
    pcd(a, a, Matrix::Zero(3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(Decisions, ScaleInvariant) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  Matrix X(300, 3);
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < 3; ++j) X(i, j) = z(rng);
  }
  const Vector beta = (Vector(4) << 0.4, -1.1, 0.3, 2.0).finished();
  const IntVector d = LinearRule(beta).decisions(X);
  for (double c : {1e-3, 0.7, 5.0, 1e4}) {
    EXPECT_EQ(LinearRule(c * beta).decisions(X), d);
  }
}

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "calitr/error.hpp"
#include "calitr/kernels.hpp"
#include "calitr/nuisance.hpp"
#include "calitr/scenario.hpp"

using namespace calitr;

namespace {

SourceSample scenario_sample(int scenario, Design design, Index n, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.scenario = scenario;
  spec.design = design;
  spec.n = n;
  Rng rng = make_rng(seed, 0);
  return generate_source(spec, rng);
}

SourceSample random_sample(Index n, Index p, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Matrix X(n, p);
  IntVector A(n);
  Vector Y(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) X(i, j) = z(rng);
    A[i] = i % 2;
    Y[i] = z(rng);
  }
  return SourceSample(X, A, Y);
}

}  // namespace

TEST(Logistic, NullModelInterceptNearLogitMean) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  std::bernoulli_distribution coin(0.5);
  const Index n = 20000;
  Matrix X(n, 2);
  IntVector A(n);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = z(rng);
    X(i, 1) = z(rng);
    A[i] = coin(rng) ? 1 : 0;
  }
  const auto fit = fit_logistic(X, A);
  const double abar = A.cast<double>().mean();
  const double se = 1.0 / std::sqrt(n * abar * (1 - abar));
  EXPECT_NEAR(fit.eta[0], std::log(abar / (1 - abar)), 3 * se);
  EXPECT_LT(std::abs(fit.eta[1]), 3 * se);
  EXPECT_LT(std::abs(fit.eta[2]), 3 * se);
}

TEST(Logistic, SeparatedDataThrowsOrFallsBackToRidge) {
  Matrix X(8, 1);
  X << -4, -3, -2, -1, 1, 2, 3, 4;
  IntVector A(8);
  A << 0, 0, 0, 0, 1, 1, 1, 1;
  try {
    fit_logistic(X, A, SeparationPolicy::Throw);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Separation);
  }
  const auto fit = fit_logistic(X, A, SeparationPolicy::Ridge);
  EXPECT_TRUE(fit.ridge);
  EXPECT_TRUE(fit.eta.allFinite());
  EXPECT_GT(fit.eta[1], 0.0);
}

TEST(Logistic, ObservationalCoefficientsWithinThreeStandardErrors) {
  const auto s = scenario_sample(1, Design::Observational, 5000, 31);
  const auto fit = fit_logistic(s);
  const Matrix info = logistic_information(s.X(), fit.eta);
  const Matrix cov = info.inverse() / static_cast<double>(s.n());
  const Vector truth = (Vector(4) << 0.0, 0.5, -0.5, 0.5).finished();
  for (Index k = 0; k < 4; ++k) {
    EXPECT_NEAR(fit.eta[k], truth[k], 3 * std::sqrt(cov(k, k))) << "coef " << k;
  }
}

TEST(Logistic, ScoreSumsToZero) {
  const auto s = scenario_sample(3, Design::Observational, 800, 2);
  const auto fit = fit_logistic(s);
  const Vector total = logistic_scores(s.X(), s.A(), fit.eta).colwise().sum();
  EXPECT_LT(total.lpNorm<Eigen::Infinity>(), 1e-6);
  EXPECT_LE(fit.gradient_norm, 1e-8);
}

TEST(Logistic, InformationMatchesNegativeScoreJacobian) {
  const auto s = scenario_sample(2, Design::Observational, 300, 8);
  const auto fit = fit_logistic(s);
  const Matrix G = logistic_information(s.X(), fit.eta);
  const double h = 1e-6;
  for (Index k = 0; k < fit.eta.size(); ++k) {
    Vector ep = fit.eta, em = fit.eta;
    ep[k] += h;
    em[k] -= h;
    const Vector d = (logistic_scores(s.X(), s.A(), ep).colwise().mean() -
                      logistic_scores(s.X(), s.A(), em).colwise().mean())
                         .transpose() /
                     (2 * h);
    EXPECT_LT((d + G.col(k)).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(LinearOutcome, ExactRecoveryOfLinearTruth) {
  auto base = random_sample(60, 3, 5);
  const Vector theta = (Vector(8) << 1, -2, 0.5, 3, 0.7, -1, 2, 0.25).finished();
  const Vector Y = outcome_design(base.X(), base.A()) * theta;
  const SourceSample s(base.X(), base.A(), Y);
  const auto fit = fit_linear_outcome(s);
  EXPECT_LT((fit.theta - theta).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(LinearOutcome, DuplicatedColumnIsRankDeficient) {
  auto base = random_sample(40, 2, 6);
  Matrix X = base.X();
  X.col(1) = X.col(0);
  const SourceSample s(X, base.A(), base.Y());
  try {
    fit_linear_outcome(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RankDeficient);
  }
}

TEST(LinearOutcome, MatchesNormalEquationOracle) {
  const auto s = random_sample(50, 3, 7);
  const Matrix Z = outcome_design(s.X(), s.A());
  const Vector oracle = (Z.transpose() * Z).llt().solve(Z.transpose() * s.Y());
  const auto fit = fit_linear_outcome(s);
  EXPECT_LT((fit.theta - oracle).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(LinearOutcome, MomentsAreOrthogonal) {
  const auto s = scenario_sample(1, Design::Observational, 500, 3);
  const auto fit = fit_linear_outcome(s);
  const Vector total = outcome_moments(s, fit.theta).colwise().mean();
  EXPECT_LT(total.lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(KernelPropensity, IndependentTreatmentGivesCentralValues) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> z;
  std::bernoulli_distribution coin(0.5);
  const Index n = 2000;
  Matrix X(n, 3);
  IntVector A(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 3; ++j) X(i, j) = z(rng);
    A[i] = coin(rng) ? 1 : 0;
  }
  const auto kp = KernelPropensity::fit(X, A);
  const Matrix central = Matrix::Zero(5, 3) + 0.3 * Matrix::Random(5, 3);
  const Vector pi = kp.predict_rows(central);
  EXPECT_GE(pi.minCoeff(), 0.4);
  EXPECT_LE(pi.maxCoeff(), 0.6);
}

TEST(KernelPropensity, PredictionsAlwaysClipped) {
  const auto s = scenario_sample(2, Design::Observational, 300, 12);
  const auto kp = KernelPropensity::fit(s.X(), s.A());
  Matrix far = Matrix::Constant(4, 3, 0.0);
  far.row(0) << 1, 50, -50;
  far.row(1) << 0, -50, 50;
  far.row(2) << 1, 1e3, 1e3;
  const Vector pi = kp.predict_rows(far);
  EXPECT_GE(pi.minCoeff(), 0.01);
  EXPECT_LE(pi.maxCoeff(), 0.99);
  const Vector in = kp.predict_rows(s.X());
  EXPECT_GE(in.minCoeff(), 0.01);
  EXPECT_LE(in.maxCoeff(), 0.99);
}

TEST(KernelPropensity, BeatsConstantPredictorOnObservationalData) {
  const auto s = scenario_sample(1, Design::Observational, 2000, 14);
  const auto kp = KernelPropensity::fit(s.X(), s.A());
  Rng rng = make_rng(99, 0);
  const Matrix Xe = sample_source_covariates(1, 5000, rng);
  const Vector pi = kp.predict_rows(Xe);
  const double abar = s.A().cast<double>().mean();
  double ise_k = 0, ise_c = 0;
  for (Index i = 0; i < Xe.rows(); ++i) {
    const double t = true_propensity(Xe.row(i), Design::Observational);
    ise_k += (pi[i] - t) * (pi[i] - t);
    ise_c += (abar - t) * (abar - t);
  }
  EXPECT_LT(ise_k, ise_c);
}

TEST(KernelPropensity, ConstantCovariateDropped) {
  const auto s = scenario_sample(1, Design::Observational, 200, 15);
  Matrix X = s.X();
  X.col(2).setConstant(3.0);
  const auto kp = KernelPropensity::fit(X, s.A());
  EXPECT_TRUE(kp.dropped()[2]);
  EXPECT_FALSE(kp.dropped()[1]);
  X.setConstant(1.0);
  try {
    KernelPropensity::fit(X, s.A());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateCovariate);
  }
}

TEST(KernelPropensity, TooFewObservations) {
  const auto s = random_sample(19, 2, 1);
  EXPECT_THROW(KernelPropensity::fit(s.X(), s.A()), Error);
}

TEST(KernelPropensity, JsonRoundTrip) {
  const auto s = scenario_sample(3, Design::Observational, 100, 16);
  const auto kp = KernelPropensity::fit(s.X(), s.A());
  const auto back = KernelPropensity::from_json(kp.to_json());
  EXPECT_EQ(kp.predict_rows(s.X()), back.predict_rows(s.X()));
}

TEST(Forest, ConstantResponseGivesConstantPredictions) {
  const auto s = random_sample(100, 3, 2);
  const auto forest = RegressionForest::fit(s.X(), Vector::Constant(100, 4.25), {20, 5, 0, 1});
  const Vector pred = forest.predict_rows(Matrix::Random(10, 3) * 5.0);
  for (Index i = 0; i < pred.size(); ++i) EXPECT_EQ(pred[i], 4.25);
}

TEST(Forest, PredictionsWithinTrainingRange) {
  const auto s = random_sample(150, 3, 3);
  const auto forest = RegressionForest::fit(s.X(), s.Y(), {50, 5, 0, 2});
  const Vector pred = forest.predict_rows(Matrix::Random(200, 3) * 4.0);
  EXPECT_GE(pred.minCoeff(), s.Y().minCoeff());
  EXPECT_LE(pred.maxCoeff(), s.Y().maxCoeff());
  EXPECT_GE(forest.oob_predictions().minCoeff(), s.Y().minCoeff());
}

TEST(Forest, LeavesRespectMinimumSizeOnTrainingRows) {
  const auto s = random_sample(120, 2, 4);
  ForestConfig cfg{5, 7, 0, 3};
  const auto forest = RegressionForest::fit(s.X(), s.Y(), cfg);
  // Every split leaves at least min_leaf bootstrap rows on each side, so the
  // tree never has more than n / min_leaf leaves.
  for (const auto& tree : forest.trees()) {
    int leaves = 0;
    for (const auto& node : tree) leaves += node.feature < 0 ? 1 : 0;
    EXPECT_LE(leaves, 120 / 7);
  }
}

TEST(Forest, DeterministicAcrossThreadCounts) {
  const auto s = random_sample(200, 3, 5);
  const int before = thread_count();
  set_thread_count(1);
  const auto a = RegressionForest::fit(s.X(), s.Y(), {30, 5, 0, 77});
  set_thread_count(4);
  const auto b = RegressionForest::fit(s.X(), s.Y(), {30, 5, 0, 77});
  set_thread_count(before);
  EXPECT_EQ(a.predict_rows(s.X()), b.predict_rows(s.X()));
  EXPECT_EQ(a.oob_predictions(), b.oob_predictions());
}

TEST(Forest, SerialAndParallelPredictionAgree) {
  const auto s = random_sample(200, 3, 6);
  const auto f = RegressionForest::fit(s.X(), s.Y(), {25, 5, 0, 5});
  EXPECT_EQ(kernels::serial::forest_predict(f, s.X()), kernels::omp::forest_predict(f, s.X()));
}

TEST(Forest, TooFewObservations) {
  const auto s = random_sample(19, 2, 1);
  try {
    RegressionForest::fit(s.X(), s.Y());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TooFewObservations);
  }
}

TEST(Forest, JsonRoundTripIsExact) {
  const auto s = random_sample(80, 3, 8);
  const auto f = RegressionForest::fit(s.X(), s.Y(), {10, 5, 0, 9});
  const auto g = RegressionForest::from_json(nlohmann::json::parse(f.to_json().dump()));
  EXPECT_EQ(f.predict_rows(s.X()), g.predict_rows(s.X()));
}

TEST(Forest, OutOfBagErrorBelowMisspecifiedLinearModel) {
  const auto s = scenario_sample(1, Design::Randomized, 2000, 21);
  for (int arm = 0; arm < 2; ++arm) {
    std::vector<Index> rows;
    for (Index i = 0; i < s.n(); ++i)
      if (s.A()[i] == arm) rows.push_back(i);
    Matrix X(static_cast<Index>(rows.size()), 3);
    Vector y(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      X.row(static_cast<Index>(k)) = s.X().row(rows[k]);
      y[static_cast<Index>(k)] = s.Y()[rows[k]];
    }
    const auto forest = RegressionForest::fit(X, y, {200, 5, 0, 4});
    const double mse_forest = (forest.oob_predictions() - y).squaredNorm() / y.size();
    const Matrix Xt = with_intercept(X);
    const Vector b = Xt.colPivHouseholderQr().solve(y);
    // In-sample error flatters the linear model; the forest still wins.
    const double mse_linear = (Xt * b - y).squaredNorm() / y.size();
    EXPECT_LT(mse_forest, mse_linear) << "arm " << arm;
  }
}

TEST(NuisanceFit, ModeOneUsesLogisticAndLinear) {
  const auto s = scenario_sample(1, Design::Observational, 400, 1);
  const auto f = NuisanceFit::fit(s, NuisanceOptions::for_mode(NuisanceMode::ParametricI, 1));
  EXPECT_EQ(f.mode(), NuisanceMode::ParametricI);
  EXPECT_TRUE(f.parametric());
  EXPECT_NEAR(f.at_sample().mu1[3], f.linear()->predict(s.X().row(3), 1), 1e-12);
}

TEST(NuisanceFit, ModeTwoUsesOutOfBagForOwnArm) {
  const auto s = scenario_sample(1, Design::Observational, 400, 2);
  const auto f = NuisanceFit::fit(s, NuisanceOptions::for_mode(NuisanceMode::NonparametricII, 3));
  EXPECT_EQ(f.mode(), NuisanceMode::NonparametricII);
  Index k0 = 0;
  for (Index i = 0; i < s.n(); ++i) {
    if (s.A()[i] == 0) {
      EXPECT_EQ(f.at_sample().mu0[i], f.forest(0)->oob_predictions()[k0]);
      ++k0;
    } else {
      EXPECT_EQ(f.at_sample().mu0[i], f.forest(0)->predict(s.X().row(i)));
    }
  }
  const auto& pi = f.at_sample().pi;
  EXPECT_GE(pi.minCoeff(), 0.01);
  EXPECT_LE(pi.maxCoeff(), 0.99);
}

TEST(NuisanceFit, FromPredictionsClips) {
  const auto f = NuisanceFit::from_predictions((Vector(3) << 0.0, 0.5, 1.0).finished(),
                                               Vector::Zero(3), Vector::Zero(3));
  EXPECT_DOUBLE_EQ(f.at_sample().pi[0], 0.01);
  EXPECT_DOUBLE_EQ(f.at_sample().pi[2], 0.99);
  EXPECT_TRUE(f.at_sample().clipped[0]);
  EXPECT_FALSE(f.at_sample().clipped[1]);
}

TEST(NuisanceFit, ParseMode) {
  EXPECT_EQ(parse_mode("I"), NuisanceMode::ParametricI);
  EXPECT_EQ(parse_mode("ii"), NuisanceMode::NonparametricII);
  EXPECT_THROW(parse_mode("III"), Error);
}

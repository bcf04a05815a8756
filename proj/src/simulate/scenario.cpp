#include "calitr/scenario.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "calitr/error.hpp"

namespace calitr {

namespace {

struct Normal2 {
  double m2, m3, rho;
};

constexpr double kRho1 = -0.25;
constexpr double kRho2 = -0.3;
constexpr double kNoiseSd = 0.5;

// Shared by scenario 2 (both populations) and the target of 3 and 4.
Normal2 mixture_component(int x1) {
  return x1 == 1 ? Normal2{1.0, -1.0, kRho1} : Normal2{-1.0, 1.0, kRho2};
}

struct Population {
  double p1;          // P(X1 = 1)
  bool mixture;       // (X2, X3) depends on X1
  Normal2 normal;     // used when !mixture
};

void check_scenario(int scenario) {
  if (scenario < 1 || scenario > 4) {
    throw Error(Errc::UnsupportedScenario,
                "scenario must be 1..4, got " + std::to_string(scenario));
  }
}

Population source_population(int scenario) {
  check_scenario(scenario);
  switch (scenario) {
    case 1: return {0.5, false, {-1.0, 0.0, kRho1}};
    case 2: return {0.5, true, {}};
    case 3: return {0.7, false, {0.1, -0.2, kRho1}};
    default: return {0.6, false, {0.0, 0.0, kRho1}};
  }
}

Population target_population(int scenario) {
  check_scenario(scenario);
  if (scenario == 1) return source_population(1);
  return {0.8, true, {}};
}

Matrix sample(const Population& pop, Index n, Rng& rng) {
  std::bernoulli_distribution bern(pop.p1);
  std::normal_distribution<double> z;
  Matrix X(n, kScenarioP);
  for (Index i = 0; i < n; ++i) {
    const int x1 = bern(rng) ? 1 : 0;
    const Normal2 c = pop.mixture ? mixture_component(x1) : pop.normal;
    const double z1 = z(rng);
    const double z2 = z(rng);
    X(i, 0) = x1;
    X(i, 1) = c.m2 + z1;
    X(i, 2) = c.m3 + c.rho * z1 + std::sqrt(1.0 - c.rho * c.rho) * z2;
  }
  return X;
}

double normal2_pdf(const Normal2& c, double x2, double x3) {
  const double u = x2 - c.m2;
  const double v = x3 - c.m3;
  const double det = 1.0 - c.rho * c.rho;
  const double q = (u * u - 2.0 * c.rho * u * v + v * v) / det;
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

double density(const Population& pop, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const int x1 = x[0] == 1.0 ? 1 : (x[0] == 0.0 ? 0 : -1);
  if (x1 < 0) return 0.0;
  const double mass = x1 == 1 ? pop.p1 : 1.0 - pop.p1;
  const Normal2 c = pop.mixture ? mixture_component(x1) : pop.normal;
  return mass * normal2_pdf(c, x[1], x[2]);
}

double sign0(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

Design parse_design(const std::string& s) {
  if (s == "obs" || s == "observational") return Design::Observational;
  if (s == "rand" || s == "randomized") return Design::Randomized;
  throw Error(Errc::InvalidArgument, "design must be obs or rand, got '" + s + "'");
}

std::string to_string(Design d) {
  return d == Design::Observational ? "obs" : "rand";
}

void ScenarioSpec::validate() const {
  check_scenario(scenario);
  if (n < 50) throw Error(Errc::InvalidArgument, "scenario n must be at least 50");
  if (N_target < 10000) {
    throw Error(Errc::InvalidArgument, "target pool must hold at least 10000 draws");
  }
}

Matrix sample_source_covariates(int scenario, Index n, Rng& rng) {
  return sample(source_population(scenario), n, rng);
}

Matrix sample_target_covariates(int scenario, Index n, Rng& rng) {
  return sample(target_population(scenario), n, rng);
}

Vector target_means(int scenario) {
  check_scenario(scenario);
  Vector m(3);
  if (scenario == 1) {
    m << 0.5, -1.0, 0.0;
  } else {
    m << 0.8, 0.6, -0.6;
  }
  return m;
}

double outcome_mean(const Eigen::Ref<const Eigen::RowVectorXd>& x, int a) {
  const double t = x[2] - x[1] * x[1] + 1.0;
  const double effect = a == 1 ? 2.0 * sign0(t) / (2.0 + std::abs(t)) : 0.0;
  return std::exp(2.0 - 0.1 * x[0] - 0.2 * x[1] + 0.2 * x[2] + effect);
}

double true_propensity(const Eigen::Ref<const Eigen::RowVectorXd>& x, Design design) {
  if (design == Design::Randomized) return 0.5;
  return expit(0.5 * x[0] - 0.5 * x[1] + 0.5 * x[2]);
}

SourceSample generate_source(const ScenarioSpec& spec, Rng& rng) {
  spec.validate();
  Matrix X = sample_source_covariates(spec.scenario, spec.n, rng);
  IntVector A(spec.n);
  Vector Y(spec.n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, kNoiseSd);
  for (Index i = 0; i < spec.n; ++i) {
    A[i] = unif(rng) < true_propensity(X.row(i), spec.design) ? 1 : 0;
    Y[i] = outcome_mean(X.row(i), A[i]) + noise(rng);
  }
  return SourceSample(std::move(X), std::move(A), std::move(Y));
}

double source_density(int scenario, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return density(source_population(scenario), x);
}

double target_density(int scenario, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return density(target_population(scenario), x);
}

double true_density_ratio(int scenario, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  check_scenario(scenario);
  if (scenario == 1) return 1.0;
  if (scenario == 2) return x[0] == 1.0 ? 1.6 : 0.4;
  return target_density(scenario, x) / source_density(scenario, x);
}

Matrix outcome_table(const Matrix& X) {
  Matrix mu(X.rows(), 2);
  for (Index i = 0; i < X.rows(); ++i) {
    mu(i, 0) = outcome_mean(X.row(i), 0);
    mu(i, 1) = outcome_mean(X.row(i), 1);
  }
  return mu;
}

double true_value_mc(const LinearRule& rule, const Matrix& target_X) {
  double s = 0.0;
  for (Index i = 0; i < target_X.rows(); ++i) {
    s += outcome_mean(target_X.row(i), rule.decide(target_X.row(i)));
  }
  return s / static_cast<double>(target_X.rows());
}

}  // namespace calitr

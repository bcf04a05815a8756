#pragma once

#include <cstdint>
#include <string>

#include "calitr/random.hpp"
#include "calitr/types.hpp"

namespace calitr {

enum class Design { Randomized, Observational };

// "rand"/"randomized" or "obs"/"observational". Throws Error{InvalidArgument}.
Design parse_design(const std::string& s);
std::string to_string(Design d);

struct ScenarioSpec {
  int scenario = 1;
  Design design = Design::Observational;
  Index n = 1000;
  Index N_target = 100000;
  std::uint64_t seed = 0;

  // Throws Error{UnsupportedScenario} or Error{InvalidArgument}.
  void validate() const;
};

// Three covariates for every scenario: X1 binary, (X2, X3) bivariate normal.
inline constexpr Index kScenarioP = 3;

Matrix sample_source_covariates(int scenario, Index n, Rng& rng);
Matrix sample_target_covariates(int scenario, Index n, Rng& rng);

// Known target covariate means used as calibration targets.
Vector target_means(int scenario);

// exp{2 - 0.1 x1 - 0.2 x2 + 0.2 x3 + a 2 sign(t) / (2 + |t|)}, t = x3 - x2^2 + 1,
// with sign(0) = 0.
double outcome_mean(const Eigen::Ref<const Eigen::RowVectorXd>& x, int a);
double true_propensity(const Eigen::Ref<const Eigen::RowVectorXd>& x, Design design);

// Noise sd 0.5.
SourceSample generate_source(const ScenarioSpec& spec, Rng& rng);

// Covariate densities (X1 probability mass times the bivariate normal part).
double source_density(int scenario, const Eigen::Ref<const Eigen::RowVectorXd>& x);
double target_density(int scenario, const Eigen::Ref<const Eigen::RowVectorXd>& x);

// f_t(x) / f_s(x). Scenario 1 returns 1. Throws Error{UnsupportedScenario}
// outside 1..4.
double true_density_ratio(int scenario, const Eigen::Ref<const Eigen::RowVectorXd>& x);

// Per-row mu(x, 0) and mu(x, 1).
Matrix outcome_table(const Matrix& X);

// N^-1 sum_i mu(X_i, d(X_i; beta)), noise free.
double true_value_mc(const LinearRule& rule, const Matrix& target_X);

}  // namespace calitr

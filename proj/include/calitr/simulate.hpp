#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "calitr/calibration.hpp"
#include "calitr/constraints.hpp"
#include "calitr/nuisance.hpp"
#include "calitr/policy.hpp"
#include "calitr/scenario.hpp"

namespace calitr {

// Covariate draw with noise-free outcome means mu(x, 0), mu(x, 1) per row.
struct CovariatePool {
  Matrix X;
  Matrix mu;
  Vector weights;  // sums to 1; uniform for target draws

  Index size() const noexcept { return X.rows(); }
  // sum_i w_i mu(X_i, d(X_i; beta))
  double value(const LinearRule& rule) const;
  BatchValueFn batch_value() const;
};

CovariatePool target_pool(int scenario, Index N, std::uint64_t seed);

struct Truth {
  LinearRule rule;
  double value = 0.0;
};

// Grid refinement over the pool's weighted value.
Truth grid_truth(const CovariatePool& pool, const RefineConfig& refine = {});

// Source draw of size N reweighted by the calibration weights for `spec`
// (solved on the draw itself, no stabilization). gamma = 1 weights may be
// negative; the weighted value is then a signed mixture.
CovariatePool pseudo_pool(int scenario, double gamma, const ConstraintSpec& spec, Index N,
                          std::uint64_t seed);

// Constraints on the means of the listed covariates (1-based) with the known
// target means as targets.
ConstraintSpec scenario_constraints(int scenario, const std::vector<int>& covariates = {1, 2, 3});

// N^-1 sum_i {W_i - f_t(X_i)/f_s(X_i)}^2 over a source draw of size N, with
// entropy-balancing weights unless gamma says otherwise.
// Throws Error{UnsupportedScenario} for scenario 1.
double density_ratio_mse(int scenario, const std::vector<int>& covariates, double gamma, Index N,
                         std::uint64_t seed);
// Same average for given rows X and density-ratio-scale weights W (mean 1).
double density_ratio_mse(int scenario, const Matrix& X, const Vector& W);

// ---- replication study -----------------------------------------------------

enum class Method { EB, EL, LS, Original, QLearning };

std::string to_string(Method m);
// "eb", "el", "ls", "orig", "qlearn". Throws Error{InvalidArgument}.
Method parse_method(const std::string& s);
std::vector<Method> parse_methods(const std::string& csv);

struct StudyConfig {
  ScenarioSpec scenario;
  NuisanceMode mode = NuisanceMode::ParametricI;
  std::vector<Method> methods{Method::EB, Method::EL, Method::Original};
  int reps = 200;
  GaConfig ga;
  RefineConfig refine;
  // Size of the source draw behind each pseudo-population truth.
  Index pseudo_N = 100000;
  // Keep per-replication records in the report.
  bool keep_records = false;

  void validate() const;
};

// Truths shared by all replications of one study.
struct StudyTruths {
  CovariatePool target;
  Truth target_opt;                  // beta^t, V^t(beta^t)
  std::vector<std::optional<Truth>>  // per entry of config.methods; empty for
      pseudo_opt;                    // methods without a pseudo population
};

StudyTruths compute_truths(const StudyConfig& config);

struct ReplicationRecord {
  int rep = 0;
  bool ok = false;
  std::string error;    // code string when !ok
  double estimate = 0;  // hat V at hat beta
  double se = 0;
  double target_value = 0;  // V^t(hat beta)
  double pcd = 0;           // against beta^t
  Vector beta;
};

struct MethodSummary {
  Method method = Method::EB;
  int included = 0;
  int excluded = 0;
  double mean_estimate = 0;
  std::optional<double> sd;  // empty when fewer than two replications
  double mean_se = 0;
  std::optional<double> cp_plus;  // percent; empty without a pseudo truth
  double cp_t = 0;                // percent
  double mean_target_value = 0;
  double mean_pcd = 0;
  std::optional<double> pseudo_truth;
  std::vector<ReplicationRecord> records;
};

struct ReplicationReport {
  StudyConfig config;
  double target_truth = 0;
  Vector target_beta;
  std::vector<MethodSummary> methods;

  const MethodSummary& get(Method m) const;
  nlohmann::json to_json() const;
};

// Replication r draws its source sample from make_rng(seed, r) and learns with
// GA seed derive_seed(seed, r); replications run concurrently and are
// reduced in index order.
ReplicationReport run_replications(const StudyConfig& config);
ReplicationReport run_replications(const StudyConfig& config, const StudyTruths& truths);

// One learned rule with its estimate on a given sample.
struct LearnResult {
  LinearRule rule;
  double estimate = 0;
  double se = 0;
  std::optional<WeightSolution> weights;
};

// Calibration (when method calibrates), nuisance fit, GA search and the
// variance at the learned rule. Q-learning skips calibration and the GA and
// reports the original AIPW estimate at its rule.
LearnResult learn_rule(const SourceSample& sample, Method method, const ConstraintSpec& spec,
                       NuisanceMode mode, const GaConfig& ga, std::uint64_t seed);
// GA learning with any calibration setting; nullopt is the original estimator.
LearnResult learn_rule(const SourceSample& sample, const std::optional<CalibrationConfig>& calibration,
                       const ConstraintSpec& spec, NuisanceMode mode, const GaConfig& ga,
                       std::uint64_t seed);
// Same with nuisances already fitted on `sample`.
LearnResult learn_rule(const SourceSample& sample, Method method, const ConstraintSpec& spec,
                       const NuisanceFit& fit, const GaConfig& ga, std::uint64_t seed);
LearnResult learn_rule(const SourceSample& sample, const std::optional<CalibrationConfig>& calibration,
                       const ConstraintSpec& spec, const NuisanceFit& fit, const GaConfig& ga,
                       std::uint64_t seed);

// gamma and stabilization for a calibrating method; nullopt otherwise.
std::optional<CalibrationConfig> method_calibration(Method m);

}  // namespace calitr

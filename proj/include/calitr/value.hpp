#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "calitr/calibration.hpp"
#include "calitr/constraints.hpp"
#include "calitr/nuisance.hpp"
#include "calitr/types.hpp"

namespace calitr {

// I{a = d} / rho(a | x) * (y - mu_d) + mu_d with rho(a | x) = pi a + (1 - pi)(1 - a).
double psi(double y, int a, int d, double pi, double mu0, double mu1);

// psi evaluated under d = 0 and d = 1 for every row; psi_i(beta) picks one
// column by d(X_i; beta).
struct PsiTable {
  Vector psi0;
  Vector psi1;

  Vector select(const IntVector& decisions) const;
};

PsiTable psi_table(const SourceSample& sample, const SamplePredictions& pred);
Vector psi_values(const SourceSample& sample, const LinearRule& rule,
                  const NuisanceFit& nuisance);

// psi_i with pi = clip(expit(eta' Xt_i)) and mu_d = Z(X_i, d)' theta.
Vector psi_parametric(const SourceSample& sample, const LinearRule& rule,
                      const Vector& theta, const Vector& eta);

// n^-1 sum_i psi_i without weights; sum_i w_i psi_i with them.
// Throws Error{LengthMismatch}.
double aipw_value(const SourceSample& sample, const LinearRule& rule,
                  const NuisanceFit& nuisance);
double aipw_value(const SourceSample& sample, const LinearRule& rule,
                  const NuisanceFit& nuisance, const Vector& weights);

// Calibration state behind a calibrated estimate. The Jacobian dW/dlambda is
// taken from the unstabilized weights at lambda_hat.
struct Weighting {
  const ConstraintMatrix& G;
  const WeightSolution& solution;
};

// Plug-in pieces of the influence function. Entries for absent nuisances are
// empty.
struct InfluenceTerms {
  Vector H_lambda;
  Matrix G_lambda;  // -n^-1 sum rho'(l'G_i) G_i G_i'
  Vector H_theta;
  Matrix G_theta;   // n^-1 sum Z_i Z_i'
  Vector H_eta;
  Matrix G_eta;     // n^-1 sum Xt_i Xt_i' pi_i (1 - pi_i)
};

enum class VarianceKind { Parametric, Nonparametric };

struct ValueEstimate {
  double value = 0.0;
  double se = 0.0;
  // Columns xi1 = W_i (psi_i - value), xi2 and, for parametric variance, xi3, xi4.
  Matrix xi;
  NuisanceMode mode = NuisanceMode::ParametricI;
  Vector beta;
  bool calibrated = false;

  Index n() const noexcept { return xi.rows(); }
  double lower() const noexcept { return value - 1.96 * se; }
  double upper() const noexcept { return value + 1.96 * se; }
  nlohmann::json to_json() const;
};

InfluenceTerms influence_terms(const SourceSample& sample, const LinearRule& rule,
                               const NuisanceFit& nuisance,
                               const std::optional<Weighting>& weighting,
                               VarianceKind kind);

// Both throw Error{SingularG} when a G matrix has condition number above 1e12.
// variance_parametric also needs logistic and linear fits
// (Error{InvalidArgument} otherwise).
ValueEstimate variance_parametric(const SourceSample& sample, const LinearRule& rule,
                                  const NuisanceFit& nuisance,
                                  const std::optional<Weighting>& weighting = std::nullopt);
ValueEstimate variance_nonparametric(const SourceSample& sample, const LinearRule& rule,
                                     const NuisanceFit& nuisance,
                                     const std::optional<Weighting>& weighting = std::nullopt);

// Parametric variance for mode I fits, nonparametric otherwise.
ValueEstimate estimate_value(const SourceSample& sample, const LinearRule& rule,
                             const NuisanceFit& nuisance,
                             const std::optional<Weighting>& weighting = std::nullopt);

// Solves G x = b after symmetrizing G. Throws Error{SingularG} with the
// condition number in the message.
Vector solve_symmetrized(const Matrix& G, const Vector& b, const std::string& name);
double condition_number(const Matrix& G);

// ---- target-sample evaluation -------------------------------------------

// Logistic propensity and forest outcome fitted on the target sample.
NuisanceFit fit_target_nuisance(const TargetSample& target, std::uint64_t seed);
// n^-1 sum_i psi_i on the target sample.
double evaluate_on_target(const TargetSample& target, const LinearRule& rule,
                          const NuisanceFit& target_nuisance);

// ---- fast value over many rules ------------------------------------------

// V(beta) = sum_i w_i psi_i(beta) = base + sum_{i : Xt_i' beta > 0} c_i with
// c_i = w_i (psi1_i - psi0_i), base = sum_i w_i psi0_i.
class RuleValue {
 public:
  RuleValue(const Matrix& X, const PsiTable& table, const Vector& weights);

  double operator()(const Vector& beta) const;
  // One value per row of betas.
  Vector batch(const Matrix& betas, bool parallel = true) const;

  Index dim() const noexcept { return xt_.cols(); }

 private:
  Matrix xt_;
  Vector c_;
  double base_ = 0.0;
};

}  // namespace calitr

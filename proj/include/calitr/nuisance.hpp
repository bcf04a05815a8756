#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "calitr/types.hpp"

namespace calitr {

inline constexpr double kPropensityClip = 0.01;

// ---- logistic propensity --------------------------------------------------

struct LogisticFit {
  Vector eta;  // (intercept, X coefficients)
  int iterations = 0;
  double gradient_norm = 0.0;  // max-norm of the mean score at eta
  bool ridge = false;          // separation detected; ridge 1e-6 fallback used

  double linear_predictor(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  // expit(eta' (1, x)), not clipped.
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Vector predict_rows(const Matrix& X) const;
};

enum class SeparationPolicy { Throw, Ridge };

// Newton-Raphson with step halving on the log-likelihood.
// Throws Error{Separation} under SeparationPolicy::Throw.
LogisticFit fit_logistic(const Matrix& X, const IntVector& A,
                         SeparationPolicy policy = SeparationPolicy::Throw);
inline LogisticFit fit_logistic(const SourceSample& s,
                                SeparationPolicy policy = SeparationPolicy::Throw) {
  return fit_logistic(s.X(), s.A(), policy);
}

// S_i = Xt_i (A_i - expit(eta' Xt_i)), one row per observation.
Matrix logistic_scores(const Matrix& X, const IntVector& A, const Vector& eta);
// n^-1 sum_i Xt_i Xt_i' pi_i (1 - pi_i)
Matrix logistic_information(const Matrix& X, const Vector& eta);

// ---- linear outcome --------------------------------------------------------

// Outcome regression on Z = (1, X, A, A X).
struct LinearOutcomeFit {
  Vector theta;

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x, int a) const;
  Vector predict_rows(const Matrix& X, int a) const;
  // Interaction block (coefficients of A and A X): the treatment contrast.
  Vector contrast() const;
};

Eigen::RowVectorXd outcome_design_row(const Eigen::Ref<const Eigen::RowVectorXd>& x, int a);
Matrix outcome_design(const Matrix& X, const IntVector& A);

// Throws Error{RankDeficient}.
LinearOutcomeFit fit_linear_outcome(const SourceSample& sample);

// C_i = Z_i (Y_i - Z_i' theta), one row per observation.
Matrix outcome_moments(const SourceSample& sample, const Vector& theta);
// n^-1 sum_i Z_i Z_i'
Matrix outcome_information(const SourceSample& sample);

// ---- additive kernel propensity -------------------------------------------

// logit pi(x) = logit(Abar) + sum_j {logit m_j(x_j) - logit(Abar)}, where m_j
// is a Gaussian Nadaraya-Watson smooth of A on X_j with bandwidth
// 1.06 sd_j n^(-1/5). Constant covariates are dropped.
class KernelPropensity {
 public:
  // Throws Error{TooFewObservations} (n < 20) or Error{DegenerateCovariate}
  // when every covariate is constant.
  static KernelPropensity fit(const Matrix& X, const IntVector& A);

  // Clipped to [0.01, 0.99].
  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Vector predict_rows(const Matrix& X) const;

  const Vector& bandwidths() const noexcept { return h_; }
  const std::vector<bool>& dropped() const noexcept { return dropped_; }

  nlohmann::json to_json() const;
  static KernelPropensity from_json(const nlohmann::json& j);

 private:
  Matrix x_;
  Vector a_;
  Vector h_;
  std::vector<bool> dropped_;
  double base_logit_ = 0.0;
};

// ---- regression forest -----------------------------------------------------

struct ForestConfig {
  int trees = 200;
  int min_leaf = 5;
  int mtry = 0;  // 0 means ceil(p / 3)
  std::uint64_t seed = 0;
};

class RegressionForest {
 public:
  struct Node {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  using Tree = std::vector<Node>;

  // Bootstrap trees with variance-reduction splits at midpoints between
  // sorted distinct values. Tree t draws from make_rng(seed, t), so the fit
  // is identical for any thread count. Throws Error{TooFewObservations}.
  static RegressionForest fit(const Matrix& X, const Vector& y,
                              const ForestConfig& config = {});

  double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Vector predict_rows(const Matrix& X) const;
  // Average over trees whose bootstrap left the training row out; falls back
  // to the full prediction for rows that were in every bootstrap.
  const Vector& oob_predictions() const noexcept { return oob_; }

  const std::vector<Tree>& trees() const noexcept { return trees_; }
  Index p() const noexcept { return p_; }

  nlohmann::json to_json() const;
  static RegressionForest from_json(const nlohmann::json& j);

 private:
  std::vector<Tree> trees_;
  Vector oob_;
  Index p_ = 0;
};

double tree_predict(const RegressionForest::Tree& tree,
                    const Eigen::Ref<const Eigen::RowVectorXd>& x);

// ---- combined fit ----------------------------------------------------------

enum class NuisanceMode { ParametricI, NonparametricII };
enum class PropensityKind { Logistic, Kernel, Constant };
enum class OutcomeKind { Linear, Forest };

std::string to_string(NuisanceMode mode);
// "I" / "II" (case-insensitive). Throws Error{InvalidArgument}.
NuisanceMode parse_mode(const std::string& s);

struct NuisanceOptions {
  PropensityKind propensity = PropensityKind::Logistic;
  OutcomeKind outcome = OutcomeKind::Linear;
  double constant_propensity = 0.5;  // PropensityKind::Constant only
  ForestConfig forest;
  SeparationPolicy separation = SeparationPolicy::Ridge;

  // I: logistic + linear. II: kernel + forest.
  static NuisanceOptions for_mode(NuisanceMode mode, std::uint64_t seed);
};

// Predictions at the training rows. Forest outcomes use out-of-bag values for
// rows of the fitted arm.
struct SamplePredictions {
  Vector pi;
  Vector mu0;
  Vector mu1;
  std::vector<bool> clipped;  // pi hit the [0.01, 0.99] clip
};

class NuisanceFit {
 public:
  static NuisanceFit fit(const SourceSample& sample, const NuisanceOptions& options);
  // Fixed predictions, e.g. known propensities; no model objects attached.
  static NuisanceFit from_predictions(Vector pi, Vector mu0, Vector mu1);

  NuisanceMode mode() const noexcept { return mode_; }
  const NuisanceOptions& options() const noexcept { return options_; }
  const SamplePredictions& at_sample() const noexcept { return pred_; }

  const std::optional<LogisticFit>& logistic() const noexcept { return logistic_; }
  const std::optional<LinearOutcomeFit>& linear() const noexcept { return linear_; }
  const std::optional<KernelPropensity>& kernel() const noexcept { return kernel_; }
  const std::optional<RegressionForest>& forest(int arm) const noexcept {
    return arm == 0 ? forest0_ : forest1_;
  }

  // True when both logistic and linear models are present (variance with
  // xi3 and xi4 available).
  bool parametric() const noexcept { return logistic_.has_value() && linear_.has_value(); }

  // New-point predictions; propensity is clipped.
  double propensity(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  double outcome(const Eigen::Ref<const Eigen::RowVectorXd>& x, int a) const;

  nlohmann::json to_json() const;

 private:
  NuisanceMode mode_ = NuisanceMode::ParametricI;
  NuisanceOptions options_;
  SamplePredictions pred_;
  std::optional<LogisticFit> logistic_;
  std::optional<LinearOutcomeFit> linear_;
  std::optional<KernelPropensity> kernel_;
  std::optional<RegressionForest> forest0_;
  std::optional<RegressionForest> forest1_;
};

double clip_propensity(double pi) noexcept;

}  // namespace calitr

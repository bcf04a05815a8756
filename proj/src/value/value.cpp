#include "calitr/value.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "calitr/error.hpp"
#include "calitr/kernels.hpp"
#include "calitr/rho.hpp"

namespace calitr {

namespace {

constexpr double kMaxCondition = 1e12;

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// gamma == 1 uses the linear link on the whole line, as in calibration.
double link(double x, double gamma) { return gamma == 1.0 ? 1.0 + x : rho(x, gamma); }
double link_prime(double x, double gamma) {
  return gamma == 1.0 ? 1.0 : rho_prime(x, gamma);
}

void check_weights(const SourceSample& sample, const Vector& w) {
  if (w.size() != sample.n()) {
    throw Error(Errc::LengthMismatch, "weights have length " + std::to_string(w.size()) +
                                          ", sample has " + std::to_string(sample.n()));
  }
}

void check_weighting(const SourceSample& sample, const Weighting& wt) {
  check_weights(sample, wt.solution.weights);
  if (wt.G.n() != sample.n() || wt.solution.lambda_hat.size() != wt.G.q()) {
    throw Error(Errc::LengthMismatch, "constraint matrix does not match the weight solution");
  }
}

// W_i = n w_i, or 1 for the original estimator.
Vector scaled_weights(const SourceSample& sample, const std::optional<Weighting>& wt) {
  if (!wt) return Vector::Ones(sample.n());
  check_weighting(sample, *wt);
  return wt->solution.weights * static_cast<double>(sample.n());
}

struct LambdaPart {
  Vector H;
  Matrix G;
};

// rho(l'G_i) G_i, one row per observation.
Matrix lambda_moments(const Weighting& wt) {
  const Matrix& G = wt.G.G;
  const Vector x = G * wt.solution.lambda_hat;
  Matrix M(G.rows(), G.cols());
  for (Index i = 0; i < G.rows(); ++i) M.row(i) = link(x[i], wt.solution.gamma) * G.row(i);
  return M;
}

LambdaPart lambda_part(const Weighting& wt, const Vector& psi) {
  const Matrix& G = wt.G.G;
  const Vector& lambda = wt.solution.lambda_hat;
  const double gamma = wt.solution.gamma;
  const double nn = static_cast<double>(G.rows());
  const Vector x = G * lambda;
  LambdaPart out;
  out.G = Matrix::Zero(G.cols(), G.cols());
  for (Index i = 0; i < G.rows(); ++i) {
    out.G.noalias() -= link_prime(x[i], gamma) * G.row(i).transpose() * G.row(i);
  }
  out.G /= nn;
  out.H = weight_jacobian(wt.G, lambda, gamma).transpose() * psi / nn;
  return out;
}

// Projects every row of M through a' G^-1.
Vector project(const Vector& H, const Matrix& G, const Matrix& M, const std::string& name) {
  const Vector a = solve_symmetrized(G, H, name);
  return M * a;
}

ValueEstimate finish(Matrix xi, NuisanceMode mode, const LinearRule& rule,
                     bool calibrated, double value) {
  const Index n = xi.rows();
  ValueEstimate est;
  est.value = value;
  const Vector total = xi.rowwise().sum();
  const double var = total.squaredNorm() / static_cast<double>(n);
  est.se = std::sqrt(var / static_cast<double>(n));
  est.xi = std::move(xi);
  est.mode = mode;
  est.beta = rule.beta();
  est.calibrated = calibrated;
  return est;
}

}  // namespace

double psi(double y, int a, int d, double pi, double mu0, double mu1) {
  const double mu_d = d == 1 ? mu1 : mu0;
  if (a != d) return mu_d;
  const double varrho = a == 1 ? pi : 1.0 - pi;
  return (y - mu_d) / varrho + mu_d;
}

Vector PsiTable::select(const IntVector& decisions) const {
  Vector out(psi0.size());
  for (Index i = 0; i < out.size(); ++i) out[i] = decisions[i] == 1 ? psi1[i] : psi0[i];
  return out;
}

PsiTable psi_table(const SourceSample& sample, const SamplePredictions& pred) {
  const Index n = sample.n();
  if (pred.pi.size() != n || pred.mu0.size() != n || pred.mu1.size() != n) {
    throw Error(Errc::LengthMismatch, "nuisance predictions do not match the sample");
  }
  PsiTable t{Vector(n), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    const int a = sample.A()[i];
    const double y = sample.Y()[i];
    t.psi0[i] = psi(y, a, 0, pred.pi[i], pred.mu0[i], pred.mu1[i]);
    t.psi1[i] = psi(y, a, 1, pred.pi[i], pred.mu0[i], pred.mu1[i]);
  }
  return t;
}

Vector psi_values(const SourceSample& sample, const LinearRule& rule,
                  const NuisanceFit& nuisance) {
  if (rule.p() != sample.p()) {
    throw Error(Errc::DimensionMismatch, "rule dimension does not match the covariates");
  }
  return psi_table(sample, nuisance.at_sample()).select(rule.decisions(sample.X()));
}

Vector psi_parametric(const SourceSample& sample, const LinearRule& rule,
                      const Vector& theta, const Vector& eta) {
  const Index n = sample.n();
  const Matrix Xt = with_intercept(sample.X());
  const IntVector d = rule.decisions(sample.X());
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    const double pi = clip_propensity(expit(Xt.row(i).dot(eta)));
    const double mu_d = outcome_design_row(sample.X().row(i), d[i]).dot(theta);
    out[i] = psi(sample.Y()[i], sample.A()[i], d[i], pi, mu_d, mu_d);
  }
  return out;
}

double aipw_value(const SourceSample& sample, const LinearRule& rule,
                  const NuisanceFit& nuisance) {
  return psi_values(sample, rule, nuisance).mean();
}

double aipw_value(const SourceSample& sample, const LinearRule& rule,
                  const NuisanceFit& nuisance, const Vector& weights) {
  check_weights(sample, weights);
  return weights.dot(psi_values(sample, rule, nuisance));
}

double condition_number(const Matrix& G) {
  const Matrix S = 0.5 * (G + G.transpose());
  Eigen::JacobiSVD<Matrix> svd(S);
  const Vector& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double lo = s[s.size() - 1];
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return s[0] / lo;
}

Vector solve_symmetrized(const Matrix& G, const Vector& b, const std::string& name) {
  const double cond = condition_number(G);
  if (!(cond <= kMaxCondition)) {
    std::ostringstream msg;
    msg << name << " is singular (condition number " << cond << ")";
    throw Error(Errc::SingularG, msg.str());
  }
  const Matrix S = 0.5 * (G + G.transpose());
  const Vector x = S.partialPivLu().solve(b);
  const double res = (S * x - b).norm();
  if (b.norm() > 0.0 && !(res <= 1e-8 * b.norm())) {
    std::ostringstream msg;
    msg << name << " solve residual " << res << " exceeds tolerance";
    throw Error(Errc::SingularG, msg.str());
  }
  return x;
}

InfluenceTerms influence_terms(const SourceSample& sample, const LinearRule& rule,
                               const NuisanceFit& nuisance,
                               const std::optional<Weighting>& weighting,
                               VarianceKind kind) {
  const Index n = sample.n();
  const double nn = static_cast<double>(n);
  const Vector psi_i = psi_values(sample, rule, nuisance);
  const Vector W = scaled_weights(sample, weighting);
  InfluenceTerms t;
  if (weighting) {
    LambdaPart lp = lambda_part(*weighting, psi_i);
    t.H_lambda = std::move(lp.H);
    t.G_lambda = std::move(lp.G);
  }
  if (kind == VarianceKind::Nonparametric) return t;
  if (!nuisance.logistic() || !nuisance.linear()) {
    throw Error(Errc::InvalidArgument,
                "parametric variance needs logistic propensity and linear outcome fits");
  }
  const SamplePredictions& pred = nuisance.at_sample();
  const IntVector d = rule.decisions(sample.X());
  const Matrix Xt = with_intercept(sample.X());
  const Index k_theta = 2 * (sample.p() + 1);
  t.H_theta = Vector::Zero(k_theta);
  t.H_eta = Vector::Zero(sample.p() + 1);
  for (Index i = 0; i < n; ++i) {
    const int a = sample.A()[i];
    const bool match = a == d[i];
    const double varrho = a == 1 ? pred.pi[i] : 1.0 - pred.pi[i];
    const double ind = match ? 1.0 / varrho : 0.0;
    t.H_theta += W[i] * (1.0 - ind) * outcome_design_row(sample.X().row(i), d[i]).transpose();
    if (match && !pred.clipped[static_cast<std::size_t>(i)]) {
      const double pi = pred.pi[i];
      const double mu_d = d[i] == 1 ? pred.mu1[i] : pred.mu0[i];
      const double resid = sample.Y()[i] - mu_d;
      const double coef = -resid / (varrho * varrho) * (2.0 * a - 1.0) * pi * (1.0 - pi);
      t.H_eta += W[i] * coef * Xt.row(i).transpose();
    }
  }
  t.H_theta /= nn;
  t.H_eta /= nn;
  t.G_theta = outcome_information(sample);
  t.G_eta = logistic_information(sample.X(), nuisance.logistic()->eta);
  return t;
}

ValueEstimate variance_parametric(const SourceSample& sample, const LinearRule& rule,
                                  const NuisanceFit& nuisance,
                                  const std::optional<Weighting>& weighting) {
  const InfluenceTerms t =
      influence_terms(sample, rule, nuisance, weighting, VarianceKind::Parametric);
  const Vector psi_i = psi_values(sample, rule, nuisance);
  const Vector W = scaled_weights(sample, weighting);
  const Vector Wpsi = W.cwiseProduct(psi_i);
  const double value = Wpsi.mean();
  Matrix xi = Matrix::Zero(sample.n(), 4);
  // xi1 = W_i (psi_i - V)
  xi.col(0) = W.array() * (psi_i.array() - value);
  if (weighting) {
    xi.col(1) = project(t.H_lambda, t.G_lambda, lambda_moments(*weighting), "G_lambda");
  }
  const Matrix C = outcome_moments(sample, nuisance.linear()->theta);
  xi.col(2) = project(t.H_theta, t.G_theta, C, "G_theta");
  const Matrix S = logistic_scores(sample.X(), sample.A(), nuisance.logistic()->eta);
  xi.col(3) = project(t.H_eta, t.G_eta, S, "G_eta");
  return finish(std::move(xi), NuisanceMode::ParametricI, rule, weighting.has_value(),
                value);
}

ValueEstimate variance_nonparametric(const SourceSample& sample, const LinearRule& rule,
                                     const NuisanceFit& nuisance,
                                     const std::optional<Weighting>& weighting) {
  const Vector psi_i = psi_values(sample, rule, nuisance);
  const Vector W = scaled_weights(sample, weighting);
  const Vector Wpsi = W.cwiseProduct(psi_i);
  const double value = Wpsi.mean();
  Matrix xi = Matrix::Zero(sample.n(), 2);
  // xi1 = W_i (psi_i - V)
  xi.col(0) = W.array() * (psi_i.array() - value);
  if (weighting) {
    const LambdaPart lp = lambda_part(*weighting, psi_i);
    xi.col(1) = project(lp.H, lp.G, lambda_moments(*weighting), "G_lambda");
  }
  return finish(std::move(xi), NuisanceMode::NonparametricII, rule,
                weighting.has_value(), value);
}

ValueEstimate estimate_value(const SourceSample& sample, const LinearRule& rule,
                             const NuisanceFit& nuisance,
                             const std::optional<Weighting>& weighting) {
  if (nuisance.mode() == NuisanceMode::ParametricI && nuisance.parametric()) {
    return variance_parametric(sample, rule, nuisance, weighting);
  }
  return variance_nonparametric(sample, rule, nuisance, weighting);
}

nlohmann::json ValueEstimate::to_json() const {
  nlohmann::json j;
  j["value"] = value;
  j["se"] = se;
  j["n"] = n();
  j["mode"] = to_string(mode);
  j["calibrated"] = calibrated;
  j["beta"] = std::vector<double>(beta.data(), beta.data() + beta.size());
  j["ci_lower"] = lower();
  j["ci_upper"] = upper();
  return j;
}

NuisanceFit fit_target_nuisance(const TargetSample& target, std::uint64_t seed) {
  NuisanceOptions o;
  o.propensity = PropensityKind::Logistic;
  o.outcome = OutcomeKind::Forest;
  o.forest.seed = seed;
  return NuisanceFit::fit(target.data(), o);
}

double evaluate_on_target(const TargetSample& target, const LinearRule& rule,
                          const NuisanceFit& target_nuisance) {
  return aipw_value(target.data(), rule, target_nuisance);
}

RuleValue::RuleValue(const Matrix& X, const PsiTable& table, const Vector& weights)
    : xt_(with_intercept(X)) {
  if (table.psi0.size() != X.rows() || table.psi1.size() != X.rows() ||
      weights.size() != X.rows()) {
    throw Error(Errc::LengthMismatch, "rule value inputs differ in length");
  }
  c_ = weights.cwiseProduct(table.psi1 - table.psi0);
  base_ = weights.dot(table.psi0);
}

double RuleValue::operator()(const Vector& beta) const {
  if (beta.size() != xt_.cols()) {
    throw Error(Errc::DimensionMismatch, "rule dimension does not match the covariates");
  }
  return kernels::serial::rule_values(xt_, c_, base_, beta.transpose())[0];
}

Vector RuleValue::batch(const Matrix& betas, bool parallel) const {
  if (betas.cols() != xt_.cols()) {
    throw Error(Errc::DimensionMismatch, "rule dimension does not match the covariates");
  }
  return parallel ? kernels::omp::rule_values(xt_, c_, base_, betas)
                  : kernels::serial::rule_values(xt_, c_, base_, betas);
}

}  // namespace calitr

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "calitr/error.hpp"
#include "calitr/nuisance.hpp"

namespace calitr {

namespace {

constexpr double kRidge = 1e-6;
constexpr double kGradTol = 1e-10;
constexpr int kMaxIter = 100;
// Fitted linear predictors beyond this mean probabilities within 1e-15 of
// 0 or 1: the likelihood is being driven to its supremum.
constexpr double kSeparationLp = 35.0;

double expit(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
double softplus(double t) {
  return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

// Mean negative log-likelihood plus optional ridge.
double objective(const Matrix& Xt, const Vector& a, const Vector& eta, double ridge) {
  const Vector lp = Xt * eta;
  double s = 0.0;
  for (Index i = 0; i < lp.size(); ++i) s += softplus(lp[i]) - a[i] * lp[i];
  return s / static_cast<double>(lp.size()) + 0.5 * ridge * eta.squaredNorm();
}

struct Newton {
  Vector eta;
  int iterations = 0;
  double grad = 0.0;
  bool converged = false;
  double max_lp = 0.0;
};

Newton run_newton(const Matrix& Xt, const Vector& a, double ridge) {
  const Index n = Xt.rows();
  const Index k = Xt.cols();
  const double nn = static_cast<double>(n);
  Newton out;
  out.eta = Vector::Zero(k);
  double obj = objective(Xt, a, out.eta, ridge);
  for (int it = 0; it < kMaxIter; ++it) {
    const Vector lp = Xt * out.eta;
    Vector pi(n), w(n);
    for (Index i = 0; i < n; ++i) {
      pi[i] = expit(lp[i]);
      w[i] = pi[i] * (1.0 - pi[i]);
    }
    const Vector g = Xt.transpose() * (pi - a) / nn + ridge * out.eta;
    out.grad = g.lpNorm<Eigen::Infinity>();
    out.iterations = it;
    out.max_lp = lp.cwiseAbs().maxCoeff();
    if (out.grad <= kGradTol) {
      out.converged = true;
      return out;
    }
    if (out.max_lp > kSeparationLp) return out;
    Matrix H = Xt.transpose() * w.asDiagonal() * Xt / nn;
    H.diagonal().array() += ridge;
    Eigen::LDLT<Matrix> ldlt(H);
    Vector step = -ldlt.solve(g);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) return out;
    double t = 1.0;
    bool moved = false;
    while (t > 1e-12) {
      const Vector trial = out.eta + t * step;
      const double o = objective(Xt, a, trial, ridge);
      if (o <= obj + 1e-4 * t * g.dot(step)) {
        out.eta = trial;
        obj = o;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // Flat to rounding: accept the current point if the gradient is small.
      out.converged = out.grad <= 1e-8;
      return out;
    }
  }
  const Vector lp = Xt * out.eta;
  Vector pi(n);
  for (Index i = 0; i < n; ++i) pi[i] = expit(lp[i]);
  out.grad = (Xt.transpose() * (pi - a) / nn + ridge * out.eta).lpNorm<Eigen::Infinity>();
  out.max_lp = lp.cwiseAbs().maxCoeff();
  out.converged = out.grad <= 1e-8;
  out.iterations = kMaxIter;
  return out;
}

}  // namespace

double LogisticFit::linear_predictor(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return eta[0] + x.dot(eta.tail(eta.size() - 1));
}

double LogisticFit::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return expit(linear_predictor(x));
}

Vector LogisticFit::predict_rows(const Matrix& X) const {
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out[i] = predict(X.row(i));
  return out;
}

LogisticFit fit_logistic(const Matrix& X, const IntVector& A, SeparationPolicy policy) {
  if (X.rows() != A.size()) {
    throw Error(Errc::LengthMismatch, "X and A lengths differ");
  }
  const Matrix Xt = with_intercept(X);
  const Vector a = A.cast<double>();
  const Newton plain = run_newton(Xt, a, 0.0);

  LogisticFit fit;
  if (plain.converged && plain.max_lp <= kSeparationLp) {
    fit.eta = plain.eta;
    fit.iterations = plain.iterations;
    fit.gradient_norm = plain.grad;
    return fit;
  }
  if (policy == SeparationPolicy::Throw) {
    throw Error(Errc::Separation,
                "logistic likelihood has no finite maximizer (separated data)");
  }
  const Newton ridge = run_newton(Xt, a, kRidge);
  fit.eta = ridge.eta;
  fit.iterations = ridge.iterations;
  fit.gradient_norm = ridge.grad;
  fit.ridge = true;
  return fit;
}

Matrix logistic_scores(const Matrix& X, const IntVector& A, const Vector& eta) {
  const Matrix Xt = with_intercept(X);
  const Vector lp = Xt * eta;
  Matrix S(Xt.rows(), Xt.cols());
  for (Index i = 0; i < Xt.rows(); ++i) {
    S.row(i) = Xt.row(i) * (static_cast<double>(A[i]) - expit(lp[i]));
  }
  return S;
}

Matrix logistic_information(const Matrix& X, const Vector& eta) {
  const Matrix Xt = with_intercept(X);
  const Vector lp = Xt * eta;
  Vector w(lp.size());
  for (Index i = 0; i < lp.size(); ++i) {
    const double p = expit(lp[i]);
    w[i] = p * (1.0 - p);
  }
  return Xt.transpose() * w.asDiagonal() * Xt / static_cast<double>(Xt.rows());
}

}  // namespace calitr

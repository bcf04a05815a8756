#include "calitr/types.hpp"

#include <cmath>
#include <string>

#include "calitr/error.hpp"

namespace calitr {

SourceSample::SourceSample(Matrix X, IntVector A, Vector Y)
    : x_(std::move(X)), a_(std::move(A)), y_(std::move(Y)) {
  const Index n = x_.rows();
  if (a_.size() != n || y_.size() != n) {
    throw Error(Errc::LengthMismatch,
                "X has " + std::to_string(n) + " rows but A has " +
                    std::to_string(a_.size()) + " and Y has " +
                    std::to_string(y_.size()));
  }
  if (n < 2) {
    throw Error(Errc::TooFewRows,
                "need at least 2 observations, got " + std::to_string(n));
  }
  for (Index i = 0; i < n; ++i) {
    if (a_[i] != 0 && a_[i] != 1) {
      throw Error(Errc::NonBinaryTreatment,
                  "row " + std::to_string(i + 1) + ": treatment value " +
                      std::to_string(a_[i]) + " is not 0/1");
    }
    if (!std::isfinite(y_[i])) {
      throw Error(Errc::NonFinite,
                  "row " + std::to_string(i + 1) + ": outcome is not finite");
    }
    for (Index j = 0; j < x_.cols(); ++j) {
      if (!std::isfinite(x_(i, j))) {
        throw Error(Errc::NonFinite, "row " + std::to_string(i + 1) +
                                         ": covariate x" +
                                         std::to_string(j + 1) +
                                         " is not finite");
      }
    }
  }
  treated_ = a_.sum();
  if (treated_ == 0 || treated_ == n) {
    throw Error(Errc::SingleArm, "only one treatment arm is present");
  }
}

Vector normalized(const Vector& v) {
  const double norm = v.norm();
  if (!std::isfinite(norm) || norm == 0.0) {
    throw Error(Errc::InvalidArgument,
                "rule coefficients must be finite and not all zero");
  }
  return v / norm;
}

LinearRule::LinearRule(Vector beta) : beta_(normalized(beta)) {}

double LinearRule::score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != p()) {
    throw Error(Errc::DimensionMismatch,
                "rule expects " + std::to_string(p()) + " covariates, got " +
                    std::to_string(x.size()));
  }
  return beta_[0] + x.dot(beta_.tail(p()).transpose());
}

IntVector LinearRule::decisions(const Matrix& X) const {
  if (X.cols() != p()) {
    throw Error(Errc::DimensionMismatch,
                "rule expects " + std::to_string(p()) + " covariates, got " +
                    std::to_string(X.cols()));
  }
  const Vector s = (X * beta_.tail(p())).array() + beta_[0];
  return (s.array() > 0.0).cast<int>();
}

Matrix with_intercept(const Matrix& X) {
  Matrix out(X.rows(), X.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(X.cols()) = X;
  return out;
}

}  // namespace calitr

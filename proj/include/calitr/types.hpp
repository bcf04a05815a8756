#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace calitr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;
using Index = Eigen::Index;

// Individual-level sample (Y, A, X). Construction validates; the object is
// immutable afterwards.
class SourceSample {
 public:
  // Throws Error{TooFewRows, NonBinaryTreatment, NonFinite, SingleArm,
  // LengthMismatch}.
  SourceSample(Matrix X, IntVector A, Vector Y);

  const Matrix& X() const noexcept { return x_; }
  const IntVector& A() const noexcept { return a_; }
  const Vector& Y() const noexcept { return y_; }

  Index n() const noexcept { return x_.rows(); }
  Index p() const noexcept { return x_.cols(); }
  Index treated() const noexcept { return treated_; }

 private:
  Matrix x_;
  IntVector a_;
  Vector y_;
  Index treated_ = 0;
};

// Individual-level data from the target population, only used to benchmark
// rules against an AIPW evaluation on the target itself.
class TargetSample {
 public:
  explicit TargetSample(SourceSample data) : data_(std::move(data)) {}
  TargetSample(Matrix X, IntVector A, Vector Y)
      : data_(std::move(X), std::move(A), std::move(Y)) {}

  const SourceSample& data() const noexcept { return data_; }
  Index n() const noexcept { return data_.n(); }
  Index p() const noexcept { return data_.p(); }

 private:
  SourceSample data_;
};

// Linear treatment rule d(x; beta) = I{(1, x') beta > 0}, intercept first.
// beta is normalized to unit Euclidean norm on construction.
class LinearRule {
 public:
  explicit LinearRule(Vector beta);

  const Vector& beta() const noexcept { return beta_; }
  Index dim() const noexcept { return beta_.size(); }
  Index p() const noexcept { return beta_.size() - 1; }

  double score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  // Ties at the boundary resolve to 0.
  int decide(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return score(x) > 0.0 ? 1 : 0;
  }
  IntVector decisions(const Matrix& X) const;

  LinearRule negated() const { return LinearRule(-beta_); }

 private:
  Vector beta_;
};

// Unit-norm copy of v. Throws InvalidArgument for zero or non-finite input.
Vector normalized(const Vector& v);

// (1, x')' rows for every row of X.
Matrix with_intercept(const Matrix& X);

}  // namespace calitr

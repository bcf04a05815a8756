#pragma once

#include <vector>

#include "calitr/types.hpp"

namespace calitr {

// Raw first and second moments of the covariates. Indices are 1-based to
// match the x1..xp column names.
enum class MomentKind { Mean, Mean2, Cross };

struct Moment {
  MomentKind kind = MomentKind::Mean;
  int i = 1;
  int j = 1;  // only used by Cross

  static Moment mean(int index) { return {MomentKind::Mean, index, index}; }
  static Moment mean2(int index) { return {MomentKind::Mean2, index, index}; }
  static Moment cross(int a, int b) { return {MomentKind::Cross, a, b}; }

  double evaluate(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  bool operator==(const Moment&) const = default;
};

struct ConstraintSpec {
  std::vector<Moment> moments;
  Vector targets;

  Index q() const noexcept { return static_cast<Index>(moments.size()); }

  // Throws InvalidArgument (empty / size mismatch / non-finite targets) or
  // IndexOutOfRange (descriptor outside 1..p).
  void validate(Index p) const;

  // Means of the listed covariates with the given targets.
  static ConstraintSpec covariate_means(const std::vector<int>& indices,
                                        const Vector& targets);
};

// Rows g(X_i) - mu_g0.
struct ConstraintMatrix {
  Matrix G;

  Index n() const noexcept { return G.rows(); }
  Index q() const noexcept { return G.cols(); }
};

ConstraintMatrix build_constraint_matrix(const Matrix& X,
                                         const ConstraintSpec& spec);

inline ConstraintMatrix build_constraint_matrix(const SourceSample& sample,
                                                const ConstraintSpec& spec) {
  return build_constraint_matrix(sample.X(), spec);
}

// Sample moments of X for each descriptor in spec (spec.targets ignored).
Vector empirical_moments(const Matrix& X, const ConstraintSpec& spec);

}  // namespace calitr

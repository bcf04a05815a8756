#include "calitr/constraints.hpp"

#include <cmath>
#include <string>

#include "calitr/error.hpp"

namespace calitr {

double Moment::evaluate(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const double xi = x[i - 1];
  switch (kind) {
    case MomentKind::Mean: return xi;
    case MomentKind::Mean2: return xi * xi;
    case MomentKind::Cross: return xi * x[j - 1];
  }
  return 0.0;
}

void ConstraintSpec::validate(Index p) const {
  if (moments.empty()) {
    throw Error(Errc::InvalidArgument, "constraint spec has no moments");
  }
  if (targets.size() != q()) {
    throw Error(Errc::InvalidArgument,
                "constraint spec has " + std::to_string(q()) +
                    " moments but " + std::to_string(targets.size()) +
                    " targets");
  }
  for (Index m = 0; m < targets.size(); ++m) {
    if (!std::isfinite(targets[m])) {
      throw Error(Errc::InvalidArgument,
                  "target " + std::to_string(m + 1) + " is not finite");
    }
  }
  for (const auto& mom : moments) {
    const bool bad_i = mom.i < 1 || mom.i > p;
    const bool bad_j =
        mom.kind == MomentKind::Cross && (mom.j < 1 || mom.j > p);
    if (bad_i || bad_j) {
      throw Error(Errc::IndexOutOfRange,
                  "moment refers to a covariate outside x1..x" +
                      std::to_string(p));
    }
  }
}

ConstraintSpec ConstraintSpec::covariate_means(const std::vector<int>& indices,
                                               const Vector& targets) {
  ConstraintSpec spec;
  spec.moments.reserve(indices.size());
  for (int idx : indices) spec.moments.push_back(Moment::mean(idx));
  spec.targets = targets;
  return spec;
}

ConstraintMatrix build_constraint_matrix(const Matrix& X,
                                         const ConstraintSpec& spec) {
  spec.validate(X.cols());
  ConstraintMatrix out{Matrix(X.rows(), spec.q())};
  for (Index m = 0; m < spec.q(); ++m) {
    const Moment& mom = spec.moments[static_cast<std::size_t>(m)];
    const double target = spec.targets[m];
    const auto xi = X.col(mom.i - 1);
    switch (mom.kind) {
      case MomentKind::Mean:
        out.G.col(m) = xi.array() - target;
        break;
      case MomentKind::Mean2:
        out.G.col(m) = xi.array().square() - target;
        break;
      case MomentKind::Cross:
        out.G.col(m) = xi.array() * X.col(mom.j - 1).array() - target;
        break;
    }
  }
  if (!out.G.allFinite()) {
    throw Error(Errc::NonFinite, "constraint matrix has non-finite entries");
  }
  return out;
}

Vector empirical_moments(const Matrix& X, const ConstraintSpec& spec) {
  ConstraintSpec zero = spec;
  zero.targets = Vector::Zero(spec.q());
  return build_constraint_matrix(X, zero).G.colwise().mean().transpose();
}

}  // namespace calitr

#include <Eigen/QR>

#include "calitr/error.hpp"
#include "calitr/nuisance.hpp"

namespace calitr {

Eigen::RowVectorXd outcome_design_row(const Eigen::Ref<const Eigen::RowVectorXd>& x, int a) {
  const Index p = x.size();
  Eigen::RowVectorXd z(2 * (p + 1));
  z[0] = 1.0;
  z.segment(1, p) = x;
  z[p + 1] = static_cast<double>(a);
  z.segment(p + 2, p) = static_cast<double>(a) * x;
  return z;
}

Matrix outcome_design(const Matrix& X, const IntVector& A) {
  Matrix Z(X.rows(), 2 * (X.cols() + 1));
  for (Index i = 0; i < X.rows(); ++i) Z.row(i) = outcome_design_row(X.row(i), A[i]);
  return Z;
}

double LinearOutcomeFit::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x, int a) const {
  return outcome_design_row(x, a).dot(theta);
}

Vector LinearOutcomeFit::predict_rows(const Matrix& X, int a) const {
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out[i] = predict(X.row(i), a);
  return out;
}

Vector LinearOutcomeFit::contrast() const {
  const Index half = theta.size() / 2;
  return theta.tail(half);
}

LinearOutcomeFit fit_linear_outcome(const SourceSample& sample) {
  const Matrix Z = outcome_design(sample.X(), sample.A());
  Eigen::ColPivHouseholderQR<Matrix> qr(Z);
  qr.setThreshold(1e-10);
  if (qr.rank() < Z.cols()) {
    throw Error(Errc::RankDeficient,
                "outcome design (1, X, A, AX) has rank " + std::to_string(qr.rank()) +
                    " < " + std::to_string(Z.cols()));
  }
  LinearOutcomeFit fit;
  fit.theta = qr.solve(sample.Y());
  return fit;
}

Matrix outcome_moments(const SourceSample& sample, const Vector& theta) {
  const Matrix Z = outcome_design(sample.X(), sample.A());
  const Vector r = sample.Y() - Z * theta;
  return r.asDiagonal() * Z;
}

Matrix outcome_information(const SourceSample& sample) {
  const Matrix Z = outcome_design(sample.X(), sample.A());
  return Z.transpose() * Z / static_cast<double>(Z.rows());
}

}  // namespace calitr

#include "calitr/calibration.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include "calitr/dataset.hpp"
#include "calitr/error.hpp"
#include "calitr/rho.hpp"
#include "simplex.hpp"

namespace calitr {

namespace {

// gamma == 1 uses 1 + x on the whole line.
double link(double x, double gamma) {
  if (gamma == 1.0) return 1.0 + x;
  return rho(x, gamma);
}

double link_prime(double x, double gamma) {
  if (gamma == 1.0) return 1.0;
  return rho_prime(x, gamma);
}

bool in_domain(const Vector& x, double gamma) {
  for (Index i = 0; i < x.size(); ++i) {
    if (!in_rho_domain(x[i], gamma)) return false;
  }
  return true;
}

// n^-1 sum_i rho(x_i) G_i
Vector mean_equation(const Matrix& G, const Vector& x, double gamma) {
  Vector r(x.size());
  for (Index i = 0; i < x.size(); ++i) r[i] = rho(x[i], gamma);
  return G.transpose() * r / static_cast<double>(x.size());
}

double dual_objective(const Vector& x, double gamma) {
  double s = 0.0;
  for (Index i = 0; i < x.size(); ++i) s += rho_integral(x[i], gamma);
  return s / static_cast<double>(x.size());
}

LambdaSolution solve_least_squares(const Matrix& G, const CalibrationConfig& config) {
  const Index n = G.rows();
  const Matrix GtG = G.transpose() * G;
  Eigen::LDLT<Matrix> ldlt(GtG);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw Error(Errc::NotConverged, "G'G is not positive definite");
  }
  LambdaSolution out;
  out.lambda = -ldlt.solve(G.transpose() * Vector::Ones(n));
  const Vector r = G.transpose() * (Vector::Ones(n) + G * out.lambda);
  out.residual = r.lpNorm<Eigen::Infinity>() / static_cast<double>(n);
  out.iterations = 1;
  if (!std::isfinite(out.residual) || out.residual > config.tol) {
    throw Error(Errc::NotConverged, "least-squares residual " +
                                        format_double(out.residual) +
                                        " above tolerance");
  }
  return out;
}

}  // namespace

std::optional<double> Stabilization::resolve(Index n) const {
  switch (mode) {
    case Mode::Off:
      return std::nullopt;
    case Mode::Auto:
      return 12.0 * std::log(static_cast<double>(n));
    case Mode::Fixed:
      return a_n;
  }
  return std::nullopt;
}

void CalibrationConfig::validate() const {
  if (!std::isfinite(gamma)) {
    throw Error(Errc::InvalidArgument, "gamma must be finite");
  }
  if (!(tol > 0.0)) {
    throw Error(Errc::InvalidArgument, "tol must be positive");
  }
  if (max_iter < 1) {
    throw Error(Errc::InvalidArgument, "max_iter must be at least 1");
  }
  if (stabilization.mode == Stabilization::Mode::Fixed &&
      !(stabilization.a_n > 0.0 && std::isfinite(stabilization.a_n))) {
    throw Error(Errc::InvalidArgument, "stabilization a_n must be positive");
  }
}

CalibrationConfig CalibrationConfig::for_gamma(double gamma) {
  CalibrationConfig c;
  c.gamma = gamma;
  c.stabilization = gamma == -1.0 ? Stabilization::automatic() : Stabilization::off();
  return c;
}

FeasibilityReport check_feasibility(const ConstraintMatrix& cm) {
  const Matrix& G = cm.G;
  const Index n = G.rows();
  const Index q = G.cols();
  FeasibilityReport report;

  // Column scaling keeps the LP tolerances meaningful; it does not move the
  // origin relative to the hull.
  Vector scale(q);
  for (Index k = 0; k < q; ++k) {
    const double s = G.col(k).lpNorm<Eigen::Infinity>();
    scale[k] = s > 0.0 ? s : 1.0;
  }
  const Matrix Gs = G * scale.cwiseInverse().asDiagonal();

  Eigen::ColPivHouseholderQR<Matrix> qr(Gs);
  qr.setThreshold(1e-10);
  report.full_rank = qr.rank() == q;

  // Variables (v_1..v_n, m+, m-) with w_i = v_i + m:
  //   sum_i v_i Gs_i + m * colsum(Gs) = 0,  sum_i v_i + n m = 1.
  const Vector colsum = Gs.colwise().sum().transpose();
  Matrix A(q + 1, n + 2);
  A.topLeftCorner(q, n) = Gs.transpose();
  A.block(0, n, q, 1) = colsum;
  A.block(0, n + 1, q, 1) = -colsum;
  A.bottomLeftCorner(1, n).setOnes();
  A(q, n) = static_cast<double>(n);
  A(q, n + 1) = -static_cast<double>(n);
  Vector b = Vector::Zero(q + 1);
  b[q] = 1.0;
  Vector c = Vector::Zero(n + 2);
  c[n] = 1.0;
  c[n + 1] = -1.0;

  const auto lp = detail::solve_standard_lp(A, b, c);
  Vector u;
  if (lp.status == detail::LpStatus::Optimal) {
    report.margin = static_cast<double>(n) * lp.objective;
    u = lp.y.head(q);
  } else if (lp.status == detail::LpStatus::Infeasible) {
    report.margin = -std::numeric_limits<double>::infinity();
    u = lp.y.head(q);
  } else {
    report.margin = std::numeric_limits<double>::quiet_NaN();
  }
  report.feasible = report.full_rank && report.margin > 1e-10;

  // u'Gs_i >= -m* > 0 for every row when the margin is negative; map back to
  // the original coordinates.
  if (!report.feasible && u.size() == q) {
    const Vector dir = -(scale.cwiseInverse().cwiseProduct(u));
    const double norm = dir.norm();
    if (norm > 0.0 && std::isfinite(norm)) report.separating_direction = dir / norm;
  }
  return report;
}

LambdaSolution solve_lambda(const ConstraintMatrix& cm, const CalibrationConfig& config) {
  config.validate();
  const Matrix& G = cm.G;
  const Index n = G.rows();
  const Index q = G.cols();
  const double gamma = config.gamma;
  if (gamma == 1.0) return solve_least_squares(G, config);

  LambdaSolution out;
  out.lambda = Vector::Zero(q);
  Vector x = Vector::Zero(n);
  Vector f = mean_equation(G, x, gamma);
  double fnorm = f.lpNorm<Eigen::Infinity>();
  double obj = dual_objective(x, gamma);
  Vector d(n);

  for (int iter = 0; iter < config.max_iter; ++iter) {
    if (fnorm <= config.tol) {
      out.residual = fnorm;
      out.iterations = iter;
      return out;
    }
    for (Index i = 0; i < n; ++i) d[i] = rho_prime(x[i], gamma);
    Matrix J = G.transpose() * d.asDiagonal() * G / static_cast<double>(n);
    Eigen::LDLT<Matrix> ldlt(J);
    Vector step = -ldlt.solve(f);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      J.diagonal().array() += 1e-10 * std::max(1.0, J.diagonal().maxCoeff());
      step = -Eigen::PartialPivLU<Matrix>(J).solve(f);
    }
    const double slope = f.dot(step);

    double t = 1.0;
    bool admissible = false;
    bool accepted = false;
    while (t > 1e-16) {
      const Vector trial = out.lambda + t * step;
      const Vector xt = G * trial;
      if (in_domain(xt, gamma)) {
        admissible = true;
        const double ot = dual_objective(xt, gamma);
        const Vector ft = mean_equation(G, xt, gamma);
        const double ftn = ft.lpNorm<Eigen::Infinity>();
        // Close to the optimum the objective is flat to rounding; a
        // decreasing residual is accepted there.
        if (ot <= obj + 1e-4 * t * slope || ftn < (1.0 - 1e-4 * t) * fnorm) {
          out.lambda = trial;
          x = xt;
          f = ft;
          fnorm = ftn;
          obj = ot;
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!admissible) {
        throw Error(Errc::DomainViolation,
                    "no Newton step stays inside the rho domain");
      }
      throw Error(Errc::NotConverged, "line search stalled with residual " +
                                          format_double(fnorm));
    }
  }
  if (fnorm <= config.tol) {
    out.residual = fnorm;
    out.iterations = config.max_iter;
    return out;
  }
  throw Error(Errc::NotConverged,
              "residual " + format_double(fnorm) + " above tolerance after " +
                  std::to_string(config.max_iter) + " iterations");
}

WeightSolution compute_weights(const ConstraintMatrix& cm, const Vector& lambda,
                               const CalibrationConfig& config) {
  const Matrix& G = cm.G;
  const Index n = G.rows();
  if (lambda.size() != G.cols()) {
    throw Error(Errc::LengthMismatch, "lambda length does not match q");
  }
  const Vector x = G * lambda;
  Vector r(n);
  for (Index i = 0; i < n; ++i) r[i] = link(x[i], config.gamma);

  WeightSolution ws;
  ws.gamma = config.gamma;
  ws.lambda_hat = lambda;
  ws.residual = (G.transpose() * r).lpNorm<Eigen::Infinity>() / static_cast<double>(n);
  ws.weights = r / r.sum();
  ws.has_negative = (ws.weights.array() < 0.0).any();

  ws.a_n = config.stabilization.resolve(n);
  if (ws.a_n) {
    const Vector before = ws.weights;
    ws.weights = stabilize_weights(before, *ws.a_n);
    ws.stabilized = ws.weights != before;
    ws.renormalized = ws.stabilized;
  }
  ws.W = static_cast<double>(n) * ws.weights;
  return ws;
}

Vector stabilize_weights(const Vector& w, double a_n) {
  if (!(a_n > 0.0)) {
    throw Error(Errc::InvalidArgument, "a_n must be positive");
  }
  for (Index i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) {
      throw Error(Errc::NonPositiveWeight,
                  "weight " + std::to_string(i + 1) + " is not positive");
    }
  }
  const double cap = 1.0 / a_n;
  Vector out = w;
  bool changed = false;
  for (Index i = 0; i < w.size(); ++i) {
    if (w[i] > cap) {
      out[i] = 1.0 / (1.0 / w[i] + a_n);
      changed = true;
    }
  }
  if (!changed) return out;
  return out / out.sum();
}

WeightSolution calibrate(const ConstraintMatrix& cm, const CalibrationConfig& config,
                         bool allow_infeasible) {
  config.validate();
  const FeasibilityReport report = check_feasibility(cm);
  if (!report.feasible && config.gamma <= 0.0 && !allow_infeasible) {
    throw Error(Errc::Infeasible,
                report.full_rank
                    ? "calibration targets are not inside the convex hull of the data"
                    : "constraint matrix is rank deficient");
  }
  const LambdaSolution sol = solve_lambda(cm, config);
  WeightSolution ws = compute_weights(cm, sol.lambda, config);
  ws.iterations = sol.iterations;
  ws.feasible = report.feasible;
  return ws;
}

WeightSolution uniform_weights(Index n, Index q) {
  WeightSolution ws;
  ws.gamma = 0.0;
  ws.lambda_hat = Vector::Zero(q);
  ws.weights = Vector::Constant(n, 1.0 / static_cast<double>(n));
  ws.W = Vector::Ones(n);
  return ws;
}

Matrix weight_jacobian(const ConstraintMatrix& cm, const Vector& lambda, double gamma) {
  const Matrix& G = cm.G;
  const Index n = G.rows();
  const Vector x = G * lambda;
  Vector r(n), dr(n);
  for (Index i = 0; i < n; ++i) {
    r[i] = link(x[i], gamma);
    dr[i] = link_prime(x[i], gamma);
  }
  const double S = r.sum();
  const Eigen::RowVectorXd bar = (G.transpose() * dr).transpose() / S;
  const double nn = static_cast<double>(n);
  Matrix J(n, G.cols());
  for (Index i = 0; i < n; ++i) {
    J.row(i) = nn * (dr[i] * G.row(i) / S - (r[i] / S) * bar);
  }
  return J;
}

}  // namespace calitr

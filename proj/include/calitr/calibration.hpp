#pragma once

#include <optional>

#include "calitr/constraints.hpp"
#include "calitr/types.hpp"

namespace calitr {

// Stabilization cap a_n for large weights: off, a fixed value, or the
// default 12 log n.
struct Stabilization {
  enum class Mode { Off, Auto, Fixed };
  Mode mode = Mode::Off;
  double a_n = 0.0;

  static Stabilization off() { return {}; }
  static Stabilization automatic() { return {Mode::Auto, 0.0}; }
  static Stabilization fixed(double a) { return {Mode::Fixed, a}; }

  // nullopt when off.
  std::optional<double> resolve(Index n) const;
};

struct CalibrationConfig {
  double gamma = 0.0;
  // Max-norm of the per-observation mean residual n^-1 sum_i rho(l'G_i) G_i.
  double tol = 1e-10;
  int max_iter = 200;
  Stabilization stabilization;

  void validate() const;

  // Entropy balancing leaves stabilization off; empirical likelihood defaults
  // to the 12 log n cap.
  static CalibrationConfig for_gamma(double gamma);
};

struct FeasibilityReport {
  bool feasible = false;   // origin strictly inside the convex hull of rows
  bool full_rank = false;  // rows span R^q
  // n * max_w min_i w_i over weights w with sum w_i G_i = 0, sum w_i = 1.
  // Positive iff the origin is in the relative interior of the hull.
  double margin = 0.0;
  // Unit vector u with u'G_i < 0 for every row when strictly separable;
  // empty otherwise.
  Vector separating_direction;
};

FeasibilityReport check_feasibility(const ConstraintMatrix& G);

struct LambdaSolution {
  Vector lambda;
  double residual = 0.0;  // max-norm of n^-1 sum_i rho(l'G_i) G_i
  int iterations = 0;
};

// Damped Newton on the dual estimating equation, starting at lambda = 0.
// gamma == 1 is solved in closed form (the equation is linear in lambda).
// Throws Error{NotConverged, DomainViolation}.
LambdaSolution solve_lambda(const ConstraintMatrix& G,
                            const CalibrationConfig& config);

struct WeightSolution {
  double gamma = 0.0;
  Vector lambda_hat;
  Vector weights;  // sums to 1
  Vector W;        // n * weights
  double residual = 0.0;  // max-norm of n^-1 sum_i rho(l'G_i) G_i
  int iterations = 0;
  bool feasible = true;
  bool has_negative = false;
  bool stabilized = false;   // stabilization was requested and applied
  bool renormalized = false; // capped weights were renormalized to sum 1
  std::optional<double> a_n;

  Index n() const noexcept { return weights.size(); }
};

// w_i = rho(l'G_i) / sum_j rho(l'G_j). For gamma == 1 the linear link 1 + x
// is used on the whole line, so weights can be negative.
WeightSolution compute_weights(const ConstraintMatrix& G, const Vector& lambda,
                               const CalibrationConfig& config);

// Weights above 1/a_n are replaced by 1 / (1/w + a_n), then renormalized.
// Throws Error{NonPositiveWeight}.
Vector stabilize_weights(const Vector& w, double a_n);

// Feasibility check, dual solve, weights and optional stabilization.
// Infeasible targets throw Error{Infeasible} for gamma <= 0 unless
// allow_infeasible is set; for gamma > 0 they are only flagged.
WeightSolution calibrate(const ConstraintMatrix& G,
                         const CalibrationConfig& config,
                         bool allow_infeasible = false);

// lambda = 0, w_i = 1/n.
WeightSolution uniform_weights(Index n, Index q);

// dW_i/dlambda (n x q) for W_i = n rho_i / sum_j rho_j at lambda.
Matrix weight_jacobian(const ConstraintMatrix& G, const Vector& lambda,
                       double gamma);

}  // namespace calitr

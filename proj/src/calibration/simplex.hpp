#pragma once

#include "calitr/types.hpp"

namespace calitr::detail {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::IterationLimit;
  Vector x;
  // Simplex multipliers of the final phase. For Infeasible they form a Farkas
  // certificate: A'y >= 0 and b'y < 0.
  Vector y;
  double objective = 0.0;
  int pivots = 0;
};

// maximize c'x  subject to  A x = b, x >= 0. Two-phase revised simplex with
// an explicit basis inverse; meant for few rows and many columns.
LpResult solve_standard_lp(const Matrix& A, const Vector& b, const Vector& c,
                           int max_pivots = 100000);

}  // namespace calitr::detail

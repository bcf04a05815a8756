#pragma once

namespace calitr {

// Cressie-Read weight link rho(x) and its antiderivative.
//   gamma = -1: 1 / (1 - x)        (empirical likelihood)
//   gamma =  0: exp(x)             (entropy balancing)
//   otherwise : (1 + gamma x)^(1/gamma)
// gamma == 0 is evaluated as the exact exponential limit.

bool in_rho_domain(double x, double gamma) noexcept;

// Throws Error{DomainViolation} outside the branch domain.
double rho(double x, double gamma);
double rho_prime(double x, double gamma);

// R(x) = int_0^x rho(t) dt. The dual objective sum_i R(lambda' G_i) is convex
// and its gradient is the calibration estimating equation.
double rho_integral(double x, double gamma);

}  // namespace calitr

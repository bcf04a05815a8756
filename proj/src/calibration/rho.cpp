#include "calitr/rho.hpp"

#include <cmath>
#include <string>

#include "calitr/dataset.hpp"
#include "calitr/error.hpp"

namespace calitr {

namespace {

[[noreturn]] void domain_error(double x, double gamma) {
  throw Error(Errc::DomainViolation,
              "rho argument " + format_double(x) +
                  " outside the domain for gamma = " + format_double(gamma));
}

}  // namespace

bool in_rho_domain(double x, double gamma) noexcept {
  if (!std::isfinite(x)) return false;
  if (gamma == 0.0) return true;
  return 1.0 + gamma * x > 0.0;
}

double rho(double x, double gamma) {
  if (!in_rho_domain(x, gamma)) domain_error(x, gamma);
  if (gamma == 0.0) return std::exp(x);
  if (gamma == -1.0) return 1.0 / (1.0 - x);
  if (gamma == 1.0) return 1.0 + x;
  return std::pow(1.0 + gamma * x, 1.0 / gamma);
}

double rho_prime(double x, double gamma) {
  if (!in_rho_domain(x, gamma)) domain_error(x, gamma);
  if (gamma == 0.0) return std::exp(x);
  if (gamma == -1.0) {
    const double u = 1.0 - x;
    return 1.0 / (u * u);
  }
  if (gamma == 1.0) return 1.0;
  return std::pow(1.0 + gamma * x, 1.0 / gamma - 1.0);
}

double rho_integral(double x, double gamma) {
  if (!in_rho_domain(x, gamma)) domain_error(x, gamma);
  if (gamma == 0.0) return std::expm1(x);
  if (gamma == -1.0) return -std::log1p(-x);
  const double e = 1.0 / gamma + 1.0;
  return (std::pow(1.0 + gamma * x, e) - 1.0) / (gamma * e);
}

}  // namespace calitr

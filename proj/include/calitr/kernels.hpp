#pragma once

#include <cstddef>
#include <functional>

#include "calitr/types.hpp"

namespace calitr {

class RegressionForest;

// Worker cap: CALITR_THREADS when set to a positive integer, otherwise the
// OpenMP default.
int thread_count();
void set_thread_count(int n);

// Data-parallel hot loops. Each kernel has a serial reference and an OpenMP
// version that produces bit-identical results (every output element is
// computed by one thread in a fixed order).
namespace kernels {

// values[k] = base + sum_{i : Xt_i' beta_k > 0} c_i for each row beta_k of
// betas. Xt carries the intercept column.
namespace serial {
Vector rule_values(const Matrix& Xt, const Vector& c, double base, const Matrix& betas);
Vector forest_predict(const RegressionForest& forest, const Matrix& X);
// Gaussian Nadaraya-Watson smooth of (xs, ys) at each query point.
Vector nw_smooth(const Vector& xs, const Vector& ys, double h, const Vector& query);
void for_each(std::size_t count, const std::function<void(std::size_t)>& body);
}  // namespace serial

namespace omp {
Vector rule_values(const Matrix& Xt, const Vector& c, double base, const Matrix& betas);
Vector forest_predict(const RegressionForest& forest, const Matrix& X);
Vector nw_smooth(const Vector& xs, const Vector& ys, double h, const Vector& query);
// Dynamic schedule; body must only write to slots owned by its index.
void for_each(std::size_t count, const std::function<void(std::size_t)>& body);
}  // namespace omp

}  // namespace kernels
}  // namespace calitr

#include "calitr/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <vector>
#include <cstdlib>
#include <string>

#include "calitr/nuisance.hpp"

namespace calitr {

namespace {

int initial_threads() {
  if (const char* env = std::getenv("CALITR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return omp_get_max_threads();
}

int& thread_cap() {
  static int cap = initial_threads();
  return cap;
}

constexpr Index kRowBlock = 256;
constexpr Index kRuleChunk = 32;

// Values of candidates [k0, k1). Rows are visited in fixed blocks and each
// candidate's sum runs block by block, so the result for a candidate does not
// depend on the chunk it belongs to.
void rule_value_chunk(const Matrix& Xt, const Vector& c, double base, const Matrix& betas,
                      Index k0, Index k1, Vector& out) {
  const Index n = Xt.rows();
  const Index d = Xt.cols();
  std::vector<double> acc(static_cast<std::size_t>(k1 - k0), 0.0);
  std::vector<double> s(static_cast<std::size_t>(kRowBlock));
  for (Index r0 = 0; r0 < n; r0 += kRowBlock) {
    const Index m = std::min(kRowBlock, n - r0);
    const double* cb = c.data() + r0;
    for (Index k = k0; k < k1; ++k) {
      const double* x0 = Xt.col(0).data() + r0;
      const double b0 = betas(k, 0);
      for (Index i = 0; i < m; ++i) s[static_cast<std::size_t>(i)] = x0[i] * b0;
      for (Index j = 1; j < d; ++j) {
        const double* xj = Xt.col(j).data() + r0;
        const double bj = betas(k, j);
        for (Index i = 0; i < m; ++i) s[static_cast<std::size_t>(i)] += xj[i] * bj;
      }
      // Branch-free masked sum in four interleaved partials, combined in a
      // fixed order.
      double a[4] = {0.0, 0.0, 0.0, 0.0};
      Index i = 0;
      for (; i + 4 <= m; i += 4) {
        for (int l = 0; l < 4; ++l) {
          a[l] += cb[i + l] * static_cast<double>(s[static_cast<std::size_t>(i + l)] > 0.0);
        }
      }
      for (; i < m; ++i) a[0] += cb[i] * static_cast<double>(s[static_cast<std::size_t>(i)] > 0.0);
      acc[static_cast<std::size_t>(k - k0)] += (a[0] + a[1]) + (a[2] + a[3]);
    }
  }
  for (Index k = k0; k < k1; ++k) out[k] = base + acc[static_cast<std::size_t>(k - k0)];
}

double nw_one(const Vector& xs, const Vector& ys, double h, double q) {
  double num = 0.0, den = 0.0;
  const double inv = 1.0 / h;
  for (Index i = 0; i < xs.size(); ++i) {
    const double u = (q - xs[i]) * inv;
    const double k = std::exp(-0.5 * u * u);
    num += k * ys[i];
    den += k;
  }
  // Far outside the data every kernel weight underflows; use the nearest
  // observation's response.
  if (!(den > 0.0)) {
    Index best = 0;
    for (Index i = 1; i < xs.size(); ++i) {
      if (std::abs(q - xs[i]) < std::abs(q - xs[best])) best = i;
    }
    return ys[best];
  }
  return num / den;
}

}  // namespace

int thread_count() { return thread_cap(); }

void set_thread_count(int n) { thread_cap() = n > 0 ? n : initial_threads(); }

namespace kernels {

namespace serial {

Vector rule_values(const Matrix& Xt, const Vector& c, double base, const Matrix& betas) {
  Vector out(betas.rows());
  for (Index k0 = 0; k0 < betas.rows(); k0 += kRuleChunk) {
    rule_value_chunk(Xt, c, base, betas, k0, std::min(k0 + kRuleChunk, betas.rows()), out);
  }
  return out;
}

Vector forest_predict(const RegressionForest& forest, const Matrix& X) {
  Vector out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) out[i] = forest.predict(X.row(i));
  return out;
}

Vector nw_smooth(const Vector& xs, const Vector& ys, double h, const Vector& query) {
  Vector out(query.size());
  for (Index i = 0; i < query.size(); ++i) out[i] = nw_one(xs, ys, h, query[i]);
  return out;
}

void for_each(std::size_t count, const std::function<void(std::size_t)>& body) {
  for (std::size_t i = 0; i < count; ++i) body(i);
}

}  // namespace serial

namespace omp {

Vector rule_values(const Matrix& Xt, const Vector& c, double base, const Matrix& betas) {
  Vector out(betas.rows());
  const Index K = betas.rows();
  const auto chunks = static_cast<long>((K + kRuleChunk - 1) / kRuleChunk);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
  for (long t = 0; t < chunks; ++t) {
    const Index k0 = static_cast<Index>(t) * kRuleChunk;
    rule_value_chunk(Xt, c, base, betas, k0, std::min(k0 + kRuleChunk, K), out);
  }
  return out;
}

Vector forest_predict(const RegressionForest& forest, const Matrix& X) {
  Vector out(X.rows());
  const auto n = static_cast<long>(X.rows());
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (long i = 0; i < n; ++i) out[i] = forest.predict(X.row(i));
  return out;
}

Vector nw_smooth(const Vector& xs, const Vector& ys, double h, const Vector& query) {
  Vector out(query.size());
  const auto n = static_cast<long>(query.size());
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (long i = 0; i < n; ++i) out[i] = nw_one(xs, ys, h, query[i]);
  return out;
}

void for_each(std::size_t count, const std::function<void(std::size_t)>& body) {
  const auto n = static_cast<long>(count);
  // Exceptions cannot cross the parallel region; the one from the lowest
  // index is rethrown so the error does not depend on scheduling.
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(thread_count())
  for (long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace omp

}  // namespace kernels
}  // namespace calitr

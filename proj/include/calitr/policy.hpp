#pragma once

#include <cstdint>
#include <functional>

#include "calitr/types.hpp"

namespace calitr {

// Value of each candidate rule; candidates are the rows of the argument.
using BatchValueFn = std::function<Vector(const Matrix&)>;
using ValueFn = std::function<double(const Vector&)>;

// Wraps a scalar value function; candidates are evaluated concurrently when
// parallel is set.
BatchValueFn batched(ValueFn fn, bool parallel = true);

struct GaConfig {
  int population_size = 100;
  int generations = 150;
  double crossover_rate = 0.8;
  double mutation_scale = 0.2;
  int elitism_count = 2;
  int tournament_size = 3;
  int restarts = 3;
  std::uint64_t seed = 0;

  // Throws Error{InvalidArgument}.
  void validate() const;
};

struct SearchResult {
  LinearRule rule;
  double value = 0.0;
  long evaluations = 0;
};

// True when (value a, beta a) ranks ahead of (value b, beta b): larger value,
// then lexicographically smaller coefficients.
bool ranks_ahead(double va, const Vector& a, double vb, const Vector& b);

// Genetic search over unit vectors in R^(p+1). Restart r draws from
// make_rng(seed, r); all random draws happen on the calling thread, so the
// result does not depend on how value_fn parallelizes.
SearchResult ga_optimize(const BatchValueFn& value_fn, Index p, const GaConfig& config);

// Candidate grid on the unit sphere in R^(p+1) at the given angular step:
// p = 1 circle, p = 2 Fibonacci lattice, p = 3 product grid of hyperspherical
// angles. Throws Error{DimensionTooLarge} for p > 3.
Matrix sphere_grid(Index p, double resolution);

SearchResult grid_search_sphere(const BatchValueFn& value_fn, Index p, double resolution);

// Coarse grid, then repeated local product grids around the current best
// `keep` candidates with the step shrunk by `shrink` each round until it
// falls below final_resolution.
struct RefineConfig {
  double coarse_resolution = 0.2;
  double final_resolution = 1e-3;
  double shrink = 0.25;
  int keep = 8;
};
SearchResult grid_refine_sphere(const BatchValueFn& value_fn, Index p,
                                const RefineConfig& config = {});

// Normalized interaction block of the linear Q-function fit
// Y ~ (1, X, A, A X). Throws Error{RankDeficient}.
LinearRule q_learning_rule(const SourceSample& sample);

// 1 - N^-1 sum_i |d(X_i; a) - d(X_i; b)|. Throws Error{DimensionMismatch}.
double pcd(const LinearRule& a, const LinearRule& b, const Matrix& X);

}  // namespace calitr

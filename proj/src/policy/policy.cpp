#include "calitr/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "calitr/error.hpp"
#include "calitr/kernels.hpp"
#include "calitr/nuisance.hpp"
#include "calitr/random.hpp"

namespace calitr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vector random_unit(Index dim, Rng& rng) {
  std::normal_distribution<double> z;
  Vector v(dim);
  double norm = 0.0;
  while (!(norm > 1e-12)) {
    for (Index j = 0; j < dim; ++j) v[j] = z(rng);
    norm = v.norm();
  }
  return v / norm;
}

void check_p(Index p) {
  if (p < 1) throw Error(Errc::InvalidArgument, "rule needs at least one covariate");
  if (p > 3) {
    throw Error(Errc::DimensionTooLarge,
                "grid search supports p <= 3 covariates, got " + std::to_string(p));
  }
}

void check_resolution(double r) {
  if (!(r > 0.0 && r < std::numbers::pi)) {
    throw Error(Errc::InvalidArgument, "grid resolution must lie in (0, pi)");
  }
}

struct Best {
  Vector beta;
  double value = -std::numeric_limits<double>::infinity();
  bool set = false;

  void offer(double v, const Eigen::Ref<const Vector>& b) {
    if (!set || ranks_ahead(v, b, value, beta)) {
      beta = b;
      value = v;
      set = true;
    }
  }
};

// Indices of the `keep` best rows, best first.
std::vector<Index> top_rows(const Matrix& cands, const Vector& vals, int keep) {
  std::vector<Index> idx(static_cast<std::size_t>(cands.rows()));
  std::iota(idx.begin(), idx.end(), Index{0});
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(keep), idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](Index a, Index b) {
                      return ranks_ahead(vals[a], cands.row(a).transpose(), vals[b],
                                         cands.row(b).transpose());
                    });
  idx.resize(k);
  return idx;
}

// Orthonormal basis of the complement of unit vector b (columns).
Matrix tangent_basis(const Vector& b) {
  Eigen::HouseholderQR<Matrix> qr(b);
  const Matrix Q = qr.householderQ() * Matrix::Identity(b.size(), b.size());
  return Q.rightCols(b.size() - 1);
}

// (2m+1)^k product offsets in the tangent space of b, mapped back to the sphere.
void local_grid(const Vector& b, double step, int m, std::vector<Vector>& out) {
  const Matrix T = tangent_basis(b);
  const Index k = T.cols();
  std::vector<int> c(static_cast<std::size_t>(k), -m);
  while (true) {
    Vector v = b;
    for (Index j = 0; j < k; ++j) v += step * c[static_cast<std::size_t>(j)] * T.col(j);
    out.push_back(v / v.norm());
    Index j = 0;
    while (j < k && ++c[static_cast<std::size_t>(j)] > m) {
      c[static_cast<std::size_t>(j)] = -m;
      ++j;
    }
    if (j == k) break;
  }
}

Matrix stack(const std::vector<Vector>& rows, Index dim) {
  Matrix M(static_cast<Index>(rows.size()), dim);
  for (std::size_t k = 0; k < rows.size(); ++k) M.row(static_cast<Index>(k)) = rows[k].transpose();
  return M;
}

Vector evaluate(const BatchValueFn& fn, const Matrix& cands) {
  Vector v = fn(cands);
  if (v.size() != cands.rows()) {
    throw Error(Errc::LengthMismatch, "value function returned the wrong number of values");
  }
  return v;
}

}  // namespace

BatchValueFn batched(ValueFn fn, bool parallel) {
  return [fn = std::move(fn), parallel](const Matrix& betas) {
    Vector out(betas.rows());
    auto body = [&](std::size_t k) {
      const auto r = static_cast<Index>(k);
      out[r] = fn(betas.row(r).transpose());
    };
    const auto count = static_cast<std::size_t>(betas.rows());
    if (parallel) {
      kernels::omp::for_each(count, body);
    } else {
      kernels::serial::for_each(count, body);
    }
    return out;
  };
}

void GaConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(Errc::InvalidArgument, m); };
  if (population_size < 4) fail("GA population must be at least 4");
  if (generations < 0) fail("GA generations must be non-negative");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) fail("crossover rate must lie in [0, 1]");
  if (!(mutation_scale >= 0.0 && mutation_scale <= 1.0)) fail("mutation scale must lie in [0, 1]");
  if (elitism_count < 0 || elitism_count >= population_size) {
    fail("elitism count must lie in [0, population)");
  }
  if (tournament_size < 1) fail("tournament size must be positive");
  if (restarts < 1) fail("GA needs at least one restart");
}

bool ranks_ahead(double va, const Vector& a, double vb, const Vector& b) {
  const double x = std::isnan(va) ? -std::numeric_limits<double>::infinity() : va;
  const double y = std::isnan(vb) ? -std::numeric_limits<double>::infinity() : vb;
  if (x != y) return x > y;
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                      b.data() + b.size());
}

SearchResult ga_optimize(const BatchValueFn& value_fn, Index p, const GaConfig& config) {
  config.validate();
  if (p < 1) throw Error(Errc::InvalidArgument, "rule needs at least one covariate");
  const Index dim = p + 1;
  const Index P = config.population_size;
  const Index E = config.elitism_count;
  Best best;
  long evals = 0;

  for (int r = 0; r < config.restarts; ++r) {
    Rng rng = make_rng(config.seed, static_cast<std::uint64_t>(r));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_real_distribution<double> blend(-0.5, 1.5);
    std::normal_distribution<double> noise(0.0, config.mutation_scale);
    std::uniform_int_distribution<Index> pick(0, P - 1);

    Matrix pop(P, dim);
    for (Index k = 0; k < P; ++k) pop.row(k) = random_unit(dim, rng).transpose();
    Vector vals = evaluate(value_fn, pop);
    evals += P;
    for (Index k = 0; k < P; ++k) best.offer(vals[k], pop.row(k).transpose());

    auto ahead = [&](Index a, Index b) {
      return ranks_ahead(vals[a], pop.row(a).transpose(), vals[b], pop.row(b).transpose());
    };
    auto tournament = [&]() {
      Index w = pick(rng);
      for (int t = 1; t < config.tournament_size; ++t) {
        const Index c = pick(rng);
        if (ahead(c, w)) w = c;
      }
      return w;
    };

    for (int g = 0; g < config.generations; ++g) {
      std::vector<Index> order(static_cast<std::size_t>(P));
      std::iota(order.begin(), order.end(), Index{0});
      std::sort(order.begin(), order.end(), ahead);

      Matrix next(P, dim);
      Vector next_vals(P);
      for (Index k = 0; k < E; ++k) {
        next.row(k) = pop.row(order[static_cast<std::size_t>(k)]);
        next_vals[k] = vals[order[static_cast<std::size_t>(k)]];
      }
      for (Index k = E; k < P; ++k) {
        const Index a = tournament();
        const Index b = tournament();
        Vector child = pop.row(a).transpose();
        if (unif(rng) < config.crossover_rate) {
          for (Index j = 0; j < dim; ++j) {
            const double u = blend(rng);
            child[j] = u * pop(a, j) + (1.0 - u) * pop(b, j);
          }
        }
        for (Index j = 0; j < dim; ++j) child[j] += noise(rng);
        const double norm = child.norm();
        next.row(k) = norm > 1e-12 ? Vector(child / norm).transpose()
                                   : random_unit(dim, rng).transpose();
      }
      const Vector fresh = evaluate(value_fn, next.bottomRows(P - E));
      evals += P - E;
      next_vals.tail(P - E) = fresh;
      pop = std::move(next);
      vals = std::move(next_vals);
      for (Index k = E; k < P; ++k) best.offer(vals[k], pop.row(k).transpose());
    }
  }
  return {LinearRule(best.beta), best.value, evals};
}

Matrix sphere_grid(Index p, double resolution) {
  check_p(p);
  check_resolution(resolution);
  std::vector<Vector> pts;
  if (p == 1) {
    for (long k = 0; static_cast<double>(k) * resolution < kTwoPi; ++k) {
      const double t = static_cast<double>(k) * resolution;
      pts.push_back((Vector(2) << std::cos(t), std::sin(t)).finished());
    }
  } else if (p == 2) {
    const auto N = static_cast<long>(std::ceil(4.0 * std::numbers::pi / (resolution * resolution)));
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (long k = 0; k < N; ++k) {
      const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(N);
      const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * static_cast<double>(k);
      pts.push_back((Vector(3) << z, rad * std::cos(phi), rad * std::sin(phi)).finished());
    }
  } else {
    const auto half = static_cast<long>(std::floor(std::numbers::pi / resolution));
    for (long i = 0; i <= half; ++i) {
      const double a = static_cast<double>(i) * resolution;
      for (long j = 0; j <= half; ++j) {
        const double b = static_cast<double>(j) * resolution;
        for (long k = 0; static_cast<double>(k) * resolution < kTwoPi; ++k) {
          const double c = static_cast<double>(k) * resolution;
          pts.push_back((Vector(4) << std::cos(a), std::sin(a) * std::cos(b),
                         std::sin(a) * std::sin(b) * std::cos(c),
                         std::sin(a) * std::sin(b) * std::sin(c))
                            .finished());
        }
      }
    }
  }
  return stack(pts, p + 1);
}

SearchResult grid_search_sphere(const BatchValueFn& value_fn, Index p, double resolution) {
  const Matrix grid = sphere_grid(p, resolution);
  const Vector vals = evaluate(value_fn, grid);
  Best best;
  for (Index k = 0; k < grid.rows(); ++k) best.offer(vals[k], grid.row(k).transpose());
  return {LinearRule(best.beta), best.value, static_cast<long>(grid.rows())};
}

SearchResult grid_refine_sphere(const BatchValueFn& value_fn, Index p,
                                const RefineConfig& config) {
  if (!(config.shrink > 0.0 && config.shrink < 1.0) || config.keep < 1 ||
      !(config.final_resolution > 0.0)) {
    throw Error(Errc::InvalidArgument, "invalid grid refinement settings");
  }
  Matrix cands = sphere_grid(p, config.coarse_resolution);
  Vector vals = evaluate(value_fn, cands);
  long evals = static_cast<long>(cands.rows());
  Best best;
  for (Index k = 0; k < cands.rows(); ++k) best.offer(vals[k], cands.row(k).transpose());

  // Offsets of +-2 steps cover the previous step's neighbourhood when
  // shrink >= 1/4.
  const int m = 2;
  double step = config.coarse_resolution * config.shrink;
  while (true) {
    std::vector<Vector> local;
    for (Index k : top_rows(cands, vals, config.keep)) {
      local_grid(cands.row(k).transpose(), step, m, local);
    }
    cands = stack(local, p + 1);
    vals = evaluate(value_fn, cands);
    evals += static_cast<long>(cands.rows());
    for (Index k = 0; k < cands.rows(); ++k) best.offer(vals[k], cands.row(k).transpose());
    if (step < config.final_resolution) break;
    step *= config.shrink;
  }
  return {LinearRule(best.beta), best.value, evals};
}

LinearRule q_learning_rule(const SourceSample& sample) {
  return LinearRule(fit_linear_outcome(sample).contrast());
}

double pcd(const LinearRule& a, const LinearRule& b, const Matrix& X) {
  if (a.dim() != b.dim() || X.cols() != a.p()) {
    throw Error(Errc::DimensionMismatch, "rules and covariates differ in dimension");
  }
  if (X.rows() == 0) throw Error(Errc::InvalidArgument, "pcd needs at least one row");
  const IntVector da = a.decisions(X);
  const IntVector db = b.decisions(X);
  Index diff = 0;
  for (Index i = 0; i < X.rows(); ++i) diff += da[i] != db[i] ? 1 : 0;
  return 1.0 - static_cast<double>(diff) / static_cast<double>(X.rows());
}

}  // namespace calitr

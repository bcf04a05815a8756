#include "simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/LU>

namespace calitr::detail {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;
constexpr int kRefactorEvery = 64;
constexpr int kBlandAfter = 50;

// Shared state for both phases. Columns n..n+m-1 are artificials.
struct Tableau {
  const Matrix& A;
  Index m;
  Index n;
  std::vector<Index> basis;
  Matrix Binv;
  Vector xB;
  const Vector& b;

  Tableau(const Matrix& A_, const Vector& b_)
      : A(A_), m(A_.rows()), n(A_.cols()), basis(static_cast<std::size_t>(A_.rows())),
        Binv(Matrix::Identity(A_.rows(), A_.rows())), xB(b_), b(b_) {
    for (Index r = 0; r < m; ++r) basis[static_cast<std::size_t>(r)] = n + r;
  }

  Vector column(Index j) const {
    if (j < n) return A.col(j);
    Vector e = Vector::Zero(m);
    e[j - n] = 1.0;
    return e;
  }

  void refactor() {
    Matrix B(m, m);
    for (Index r = 0; r < m; ++r) B.col(r) = column(basis[static_cast<std::size_t>(r)]);
    Eigen::PartialPivLU<Matrix> lu(B);
    Binv = lu.inverse();
    xB = Binv * b;
    for (Index r = 0; r < m; ++r) {
      if (xB[r] < 0.0 && xB[r] > -1e-12) xB[r] = 0.0;
    }
  }

  void pivot(Index row, Index entering, const Vector& alpha) {
    const double a = alpha[row];
    const double step = xB[row] / a;
    xB -= step * alpha;
    xB[row] = step;
    const Eigen::RowVectorXd prow = Binv.row(row) / a;
    for (Index r = 0; r < m; ++r) {
      if (r == row) continue;
      Binv.row(r) -= alpha[r] * prow;
    }
    Binv.row(row) = prow;
    basis[static_cast<std::size_t>(row)] = entering;
    for (Index r = 0; r < m; ++r) {
      if (xB[r] < 0.0 && xB[r] > -1e-12) xB[r] = 0.0;
    }
  }

  // Returns Optimal, Unbounded or IterationLimit. cost has n + m entries;
  // allow_artificial gates artificial columns from entering.
  LpStatus optimize(const Vector& cost, bool allow_artificial, int& pivots,
                    int max_pivots) {
    int degenerate_run = 0;
    int since_refactor = 0;
    std::vector<bool> in_basis(static_cast<std::size_t>(n + m), false);
    while (true) {
      std::fill(in_basis.begin(), in_basis.end(), false);
      for (Index j : basis) in_basis[static_cast<std::size_t>(j)] = true;

      Vector cB(m);
      for (Index r = 0; r < m; ++r) cB[r] = cost[basis[static_cast<std::size_t>(r)]];
      const Vector y = Binv.transpose() * cB;
      const Vector reduced = cost.head(n) - A.transpose() * y;

      const bool bland = degenerate_run > kBlandAfter;
      Index entering = -1;
      double best = kCostTol;
      for (Index j = 0; j < n; ++j) {
        if (in_basis[static_cast<std::size_t>(j)]) continue;
        if (reduced[j] > best) {
          entering = j;
          best = reduced[j];
          if (bland) break;
        }
      }
      if (allow_artificial && entering < 0) {
        for (Index r = 0; r < m; ++r) {
          const Index j = n + r;
          if (in_basis[static_cast<std::size_t>(j)]) continue;
          const double d = cost[j] - y[r];
          if (d > best) {
            entering = j;
            best = d;
            if (bland) break;
          }
        }
      }
      if (entering < 0) return LpStatus::Optimal;
      if (pivots >= max_pivots) return LpStatus::IterationLimit;

      const Vector alpha = Binv * column(entering);
      Index leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (Index r = 0; r < m; ++r) {
        if (alpha[r] <= kPivotTol) continue;
        const double t = xB[r] / alpha[r];
        if (t < ratio - 1e-14 ||
            (t <= ratio + 1e-14 && leave >= 0 &&
             basis[static_cast<std::size_t>(r)] <
                 basis[static_cast<std::size_t>(leave)])) {
          ratio = t;
          leave = r;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;

      degenerate_run = (ratio <= 1e-14) ? degenerate_run + 1 : 0;
      pivot(leave, entering, alpha);
      ++pivots;
      if (++since_refactor >= kRefactorEvery) {
        refactor();
        since_refactor = 0;
      }
    }
  }

  Vector multipliers(const Vector& cost) const {
    Vector cB(m);
    for (Index r = 0; r < m; ++r) cB[r] = cost[basis[static_cast<std::size_t>(r)]];
    return Binv.transpose() * cB;
  }
};

}  // namespace

LpResult solve_standard_lp(const Matrix& A_in, const Vector& b_in,
                           const Vector& c, int max_pivots) {
  const Index m = A_in.rows();
  const Index n = A_in.cols();
  Matrix A = A_in;
  Vector b = b_in;
  Vector sign = Vector::Ones(m);
  for (Index r = 0; r < m; ++r) {
    if (b[r] < 0.0) {
      A.row(r) *= -1.0;
      b[r] = -b[r];
      sign[r] = -1.0;
    }
  }

  Tableau tab(A, b);
  LpResult result;

  Vector phase1 = Vector::Zero(n + m);
  phase1.tail(m).setConstant(-1.0);
  const LpStatus s1 = tab.optimize(phase1, true, result.pivots, max_pivots);
  if (s1 == LpStatus::IterationLimit) {
    result.status = s1;
    return result;
  }
  tab.refactor();
  double art_sum = 0.0;
  for (Index r = 0; r < m; ++r) {
    if (tab.basis[static_cast<std::size_t>(r)] >= n) art_sum += tab.xB[r];
  }
  const double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
  if (art_sum > 1e-9 * scale) {
    result.status = LpStatus::Infeasible;
    result.y = tab.multipliers(phase1).cwiseProduct(sign);
    result.objective = -art_sum;
    return result;
  }

  // Drive zero-level artificials out where a structural column can replace
  // them; rows where none can are redundant and stay pinned at zero.
  for (Index r = 0; r < m; ++r) {
    if (tab.basis[static_cast<std::size_t>(r)] < n) continue;
    const Eigen::RowVectorXd row = tab.Binv.row(r) * A;
    Index best = -1;
    double mag = 1e-9;
    for (Index j = 0; j < n; ++j) {
      bool basic = false;
      for (Index k : tab.basis) basic = basic || (k == j);
      if (basic) continue;
      if (std::abs(row[j]) > mag) {
        mag = std::abs(row[j]);
        best = j;
      }
    }
    if (best >= 0) {
      const Vector alpha = tab.Binv * tab.column(best);
      tab.pivot(r, best, alpha);
      ++result.pivots;
    }
  }
  tab.refactor();

  Vector phase2 = Vector::Zero(n + m);
  phase2.head(n) = c;
  const LpStatus s2 = tab.optimize(phase2, false, result.pivots, max_pivots);
  result.status = s2;
  if (s2 != LpStatus::Optimal) return result;
  tab.refactor();

  result.x = Vector::Zero(n);
  for (Index r = 0; r < m; ++r) {
    const Index j = tab.basis[static_cast<std::size_t>(r)];
    if (j < n) result.x[j] = std::max(0.0, tab.xB[r]);
  }
  result.y = tab.multipliers(phase2).cwiseProduct(sign);
  result.objective = c.dot(result.x);
  return result;
}

}  // namespace calitr::detail

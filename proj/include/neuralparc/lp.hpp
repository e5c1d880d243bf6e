#pragma once

// Dense two-phase simplex for   maximise c·x  s.t.  A x <= b,  x free.
//
// Every geometric predicate in the library (emptiness, containment, support
// values, redundancy) funnels through solve() so that a single set of
// tolerances governs all of them.

#include "neuralparc/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace neuralparc {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LinearProgram {
  Vector objective;  // maximised
  Matrix A;
  Vector b;
  std::optional<Vector> lower;
  std::optional<Vector> upper;
};

struct LpOutcome {
  LpStatus status = LpStatus::Infeasible;
  double value = 0.0;
  Vector witness;  // set when status == Optimal

  bool optimal() const { return status == LpStatus::Optimal; }
};

namespace detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kPivotTol = 1e-9;
inline constexpr double kReducedCostTol = 1e-10;
// Residual L1 infeasibility (in row-normalised units) accepted by phase one.
inline constexpr double kPhaseOneTol = 1e-9;
inline constexpr int kDegenerateStreak = 50;

class SimplexTableau {
 public:
  enum class Result { Optimal, Unbounded, IterationLimit };

  SimplexTableau(int rows, int cols) : table_(RowMatrix::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  RowMatrix& table() { return table_; }
  std::vector<int>& basis() { return basis_; }
  int rows() const { return static_cast<int>(basis_.size()); }
  int cols() const { return static_cast<int>(table_.cols()) - 1; }
  double& rhs(int r) { return table_(r, cols()); }
  double objective_value() const { return table_(table_.rows() - 1, table_.cols() - 1); }

  void pivot(int r, int c) {
    const int obj = rows();
    const double p = table_(r, c);
    table_.row(r) /= p;
    for (int i = 0; i <= obj; ++i) {
      if (i == r) continue;
      const double f = table_(i, c);
      if (f != 0.0) table_.row(i) -= f * table_.row(r);
    }
    table_(r, c) = 1.0;
    for (int i = 0; i < obj; ++i)
      if (i != r) table_(i, c) = 0.0;
    table_(obj, c) = 0.0;
    if (rhs(r) < 0.0 && rhs(r) > -1e-13) rhs(r) = 0.0;
    basis_[r] = c;
  }

  // Objective row holds reduced costs; a negative entry improves the
  // (maximised) objective.
  Result run(const std::vector<char>& allowed, bool bland) {
    const int obj = rows();
    const int max_iter = 50 * (rows() + cols()) + 200;
    int degenerate = 0;
    for (int iter = 0; iter < max_iter; ++iter) {
      const bool use_bland = bland || degenerate > kDegenerateStreak;
      int enter = -1;
      double best = -kReducedCostTol;
      for (int j = 0; j < cols(); ++j) {
        if (!allowed[j]) continue;
        const double rc = table_(obj, j);
        if (rc < best) {
          enter = j;
          if (use_bland) break;
          best = rc;
        }
      }
      if (enter < 0) return Result::Optimal;

      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < obj; ++i) {
        const double a = table_(i, enter);
        if (a <= kPivotTol) continue;
        const double ratio = std::max(rhs(i), 0.0) / a;
        const double slack = leave < 0 ? 0.0 : 1e-12 * (1.0 + best_ratio);
        if (leave < 0 || ratio < best_ratio - slack) {
          best_ratio = ratio;
          leave = i;
        } else if (leave >= 0 && ratio <= best_ratio + slack) {
          const bool better = use_bland ? basis_[i] < basis_[leave] : a > table_(leave, enter);
          if (better) {
            leave = i;
            best_ratio = std::min(best_ratio, ratio);
          }
        }
      }
      if (leave < 0) return Result::Unbounded;
      degenerate = best_ratio <= 1e-12 ? degenerate + 1 : 0;
      pivot(leave, enter);
    }
    return Result::IterationLimit;
  }

 private:
  RowMatrix table_;
  std::vector<int> basis_;
};

struct NormalisedSystem {
  Matrix A;
  Vector b;
  Vector scale;  // original row norms of the kept rows
  bool trivially_infeasible = false;
};

inline NormalisedSystem normalise_rows(const Matrix& A, const Vector& b) {
  NormalisedSystem out;
  std::vector<Eigen::Index> keep;
  std::vector<double> norms;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double nrm = A.row(i).norm();
    if (nrm < 1e-12) {
      if (b(i) < -kFeasTol) out.trivially_infeasible = true;
      continue;
    }
    keep.push_back(i);
    norms.push_back(nrm);
  }
  out.A.resize(static_cast<Eigen::Index>(keep.size()), A.cols());
  out.b.resize(static_cast<Eigen::Index>(keep.size()));
  out.scale.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    out.A.row(ri) = A.row(keep[r]) / norms[r];
    out.b(ri) = b(keep[r]) / norms[r];
    out.scale(ri) = norms[r];
  }
  return out;
}

struct RawResult {
  LpStatus status;
  Vector x;
  bool iteration_limit = false;
};

// Column layout: [u (n) | v (n) | slack (m) | artificial (k)], x = u - v.
inline RawResult two_phase(const Matrix& A, const Vector& b, const Vector& c, bool bland) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  std::vector<int> art_row;
  for (int i = 0; i < m; ++i)
    if (b(i) < 0.0) art_row.push_back(i);
  const int k = static_cast<int>(art_row.size());
  const int ncols = 2 * n + m + k;
  SimplexTableau tab(m, ncols);
  auto& T = tab.table();
  const int rhs = ncols;

  int next_art = 2 * n + m;
  for (int i = 0; i < m; ++i) {
    const double sign = b(i) < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) {
      T(i, j) = sign * A(i, j);
      T(i, n + j) = -sign * A(i, j);
    }
    T(i, 2 * n + i) = sign;
    T(i, rhs) = sign * b(i);
    if (sign < 0.0) {
      T(i, next_art) = 1.0;
      tab.basis()[i] = next_art++;
    } else {
      tab.basis()[i] = 2 * n + i;
    }
  }

  std::vector<char> allowed(ncols, 1);
  if (k > 0) {
    // Phase one: maximise -sum(artificials).
    for (int j = 2 * n + m; j < ncols; ++j) T(m, j) = 1.0;
    for (int i : art_row) T.row(m) -= T.row(i);
    const auto r = tab.run(allowed, bland);
    if (r == SimplexTableau::Result::IterationLimit) return {LpStatus::Infeasible, {}, true};
    if (-tab.objective_value() > kPhaseOneTol) return {LpStatus::Infeasible, {}, false};
    // Drive zero-level artificials out of the basis.
    for (int i = 0; i < m; ++i) {
      if (tab.basis()[i] < 2 * n + m) continue;
      for (int j = 0; j < 2 * n + m; ++j) {
        if (std::abs(T(i, j)) > kPivotTol) {
          tab.pivot(i, j);
          break;
        }
      }
    }
    for (int j = 2 * n + m; j < ncols; ++j) allowed[j] = 0;
  }

  // Phase two.
  T.row(m).setZero();
  for (int j = 0; j < n; ++j) {
    T(m, j) = -c(j);
    T(m, n + j) = c(j);
  }
  for (int i = 0; i < m; ++i) {
    const int bj = tab.basis()[i];
    const double f = T(m, bj);
    if (f != 0.0) T.row(m) -= f * T.row(i);
  }
  const auto r = tab.run(allowed, bland);
  if (r == SimplexTableau::Result::IterationLimit) return {LpStatus::Infeasible, {}, true};

  Vector x = Vector::Zero(n);
  for (int i = 0; i < m; ++i) {
    const int bj = tab.basis()[i];
    if (bj < n) x(bj) += T(i, rhs);
    else if (bj < 2 * n) x(bj - n) -= T(i, rhs);
  }
  if (r == SimplexTableau::Result::Unbounded) return {LpStatus::Unbounded, x, false};
  return {LpStatus::Optimal, x, false};
}

inline double max_violation(const Matrix& A, const Vector& b, const Vector& x, const Vector& scale) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double v = (A.row(i).dot(x) - b(i)) / std::max(1.0, scale(i));
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace detail

/// Solves the LP. Throws InputError on shape mismatch and SolverError when
/// neither pivot rule yields a verified answer.
inline LpOutcome solve(const LinearProgram& lp) {
  const auto n = lp.A.cols();
  require(lp.A.rows() == lp.b.size(), "lp: A and b row counts differ");
  require(lp.objective.size() == n, "lp: objective length differs from A's column count");
  if (lp.lower) require(lp.lower->size() == n, "lp: lower bound length mismatch");
  if (lp.upper) require(lp.upper->size() == n, "lp: upper bound length mismatch");

  Matrix A = lp.A;
  Vector b = lp.b;
  auto append_bounds = [&](const Vector& bound, double sign) {
    const auto m0 = A.rows();
    A.conservativeResize(m0 + n, n);
    b.conservativeResize(m0 + n);
    A.bottomRows(n) = sign * Matrix::Identity(n, n);
    b.tail(n) = sign * bound;
  };
  if (lp.lower) append_bounds(*lp.lower, -1.0);
  if (lp.upper) append_bounds(*lp.upper, 1.0);

  if (A.rows() == 0) {
    if (lp.objective.isZero(0.0)) return {LpStatus::Optimal, 0.0, Vector::Zero(n)};
    return {LpStatus::Unbounded, 0.0, {}};
  }

  auto norm = detail::normalise_rows(A, b);
  if (norm.trivially_infeasible) return {LpStatus::Infeasible, 0.0, {}};
  if (n == 0 || norm.A.rows() == 0) {
    if (!lp.objective.isZero(0.0)) return {LpStatus::Unbounded, 0.0, {}};
    return {LpStatus::Optimal, 0.0, Vector::Zero(n)};
  }

  for (bool bland : {false, true}) {
    const auto raw = detail::two_phase(norm.A, norm.b, lp.objective, bland);
    if (raw.iteration_limit) continue;
    if (raw.status == LpStatus::Infeasible) return {LpStatus::Infeasible, 0.0, {}};
    if (detail::max_violation(A, b, raw.x, A.rowwise().norm()) > kFeasTol) continue;
    if (raw.status == LpStatus::Unbounded) return {LpStatus::Unbounded, 0.0, {}};
    return {LpStatus::Optimal, lp.objective.dot(raw.x), raw.x};
  }
  throw SolverError("lp: simplex failed to converge to a verified solution");
}

/// True iff {x | A x <= b} is nonempty.
inline bool feasible(const Matrix& A, const Vector& b) {
  return solve({Vector::Zero(A.cols()), A, b, std::nullopt, std::nullopt}).optimal();
}

/// Feasibility witness, if one exists.
inline std::optional<Vector> feasible_point(const Matrix& A, const Vector& b) {
  auto out = solve({Vector::Zero(A.cols()), A, b, std::nullopt, std::nullopt});
  if (!out.optimal()) return std::nullopt;
  return out.witness;
}

}  // namespace neuralparc

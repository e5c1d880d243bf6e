#pragma once

#include "neuralparc/common.hpp"
#include "neuralparc/lp.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace neuralparc {

/// Convex set {x | A x <= b}. Immutable once built.
class HPolytope {
 public:
  HPolytope() = default;

  HPolytope(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
    require(A_.rows() == b_.size(), "HPolytope: A has " + std::to_string(A_.rows()) + " rows but b has " +
                                        std::to_string(b_.size()) + " entries");
  }

  /// All of R^dim (no constraints).
  static HPolytope universe(int dim) { return HPolytope(Matrix(0, dim), Vector(0)); }

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  int dim() const { return static_cast<int>(A_.cols()); }
  int num_constraints() const { return static_cast<int>(A_.rows()); }

  /// Membership with slack: A x <= b + tol. A negative tol demands interior.
  bool contains(const Vector& x, double tol = kFeasTol) const {
    require(x.size() == A_.cols(), "HPolytope::contains: dimension mismatch");
    for (Eigen::Index i = 0; i < A_.rows(); ++i)
      if (A_.row(i).dot(x) > b_(i) + tol) return false;
    return true;
  }

 private:
  Matrix A_;
  Vector b_;
};

/// Axis-aligned box [lower, upper].
class Hyperrectangle {
 public:
  Hyperrectangle() = default;

  Hyperrectangle(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    require(lower_.size() == upper_.size(), "Hyperrectangle: bound lengths differ");
    for (Eigen::Index i = 0; i < lower_.size(); ++i)
      require(lower_(i) <= upper_(i), "Hyperrectangle: lower > upper in coordinate " + std::to_string(i));
  }

  /// Origin-centred box [-h, h].
  static Hyperrectangle centred(const Vector& half_width) { return {-half_width, half_width}; }

  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  int dim() const { return static_cast<int>(lower_.size()); }
  Vector center() const { return 0.5 * (lower_ + upper_); }
  Vector half_width() const { return 0.5 * (upper_ - lower_); }

  bool contains(const Vector& x, double tol = kFeasTol) const {
    require(x.size() == lower_.size(), "Hyperrectangle::contains: dimension mismatch");
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x(i) < lower_(i) - tol || x(i) > upper_(i) + tol) return false;
    return true;
  }

  /// Closed-form support value max_{x in box} direction·x.
  double support(const Vector& direction) const {
    require(direction.size() == lower_.size(), "Hyperrectangle::support: dimension mismatch");
    return direction.dot(center()) + direction.cwiseAbs().dot(half_width());
  }

  /// The 2n-row H-representation: rows [I; -I], b = [upper; -lower].
  HPolytope as_hpolytope() const {
    const auto n = lower_.size();
    Matrix A(2 * n, n);
    A << Matrix::Identity(n, n), -Matrix::Identity(n, n);
    Vector b(2 * n);
    b << upper_, -lower_;
    return {A, b};
  }

 private:
  Vector lower_;
  Vector upper_;
};

inline bool is_empty(const HPolytope& P) { return !feasible(P.A(), P.b()); }

/// Constraint stacking.
inline HPolytope intersect(const HPolytope& P, const HPolytope& Q) {
  require(P.dim() == Q.dim(), "intersect: dimension mismatch");
  Matrix A(P.num_constraints() + Q.num_constraints(), P.dim());
  A << P.A(), Q.A();
  Vector b(A.rows());
  b << P.b(), Q.b();
  return {A, b};
}

/// Block-diagonal layout: [[A_P, 0], [0, A_Q]], [b_P; b_Q].
inline HPolytope cartesian_product(const HPolytope& P, const HPolytope& Q) {
  Matrix A = Matrix::Zero(P.num_constraints() + Q.num_constraints(), P.dim() + Q.dim());
  A.topLeftCorner(P.num_constraints(), P.dim()) = P.A();
  A.bottomRightCorner(Q.num_constraints(), Q.dim()) = Q.A();
  Vector b(A.rows());
  b << P.b(), Q.b();
  return {A, b};
}

/// max_{x in P} direction·x, or nullopt when unbounded. Throws InputError
/// for an empty P.
inline std::optional<double> support(const HPolytope& P, const Vector& direction) {
  require(direction.size() == P.dim(), "support: dimension mismatch");
  const auto out = solve({direction, P.A(), P.b(), std::nullopt, std::nullopt});
  switch (out.status) {
    case LpStatus::Optimal:
      return out.value;
    case LpStatus::Unbounded:
      return std::nullopt;
    case LpStatus::Infeasible:
      break;
  }
  throw InputError("support: polytope is empty");
}

/// P ⊖ E for a box E; exact: b'_i = b_i - h_E(a_i).
inline HPolytope pontryagin_diff(const HPolytope& P, const Hyperrectangle& E) {
  require(P.dim() == E.dim(), "pontryagin_diff: dimension mismatch");
  Vector b = P.b();
  for (int i = 0; i < P.num_constraints(); ++i) b(i) -= E.support(P.A().row(i).transpose());
  return {P.A(), b};
}

/// Support-function buffering of P by a box: b'_i = b_i + h_E(a_i). A
/// superset of P ⊕ E, equal to it when P's normals are axis-aligned.
inline HPolytope minkowski_buffer(const HPolytope& P, const Hyperrectangle& E) {
  require(P.dim() == E.dim(), "minkowski_buffer: dimension mismatch");
  Vector b = P.b();
  for (int i = 0; i < P.num_constraints(); ++i) b(i) += E.support(P.A().row(i).transpose());
  return {P.A(), b};
}

/// Buffering by a general nonempty, bounded H-polytope Q over the union of
/// both normal sets. Always ⊇ P ⊕ Q; exact in two dimensions.
inline HPolytope minkowski_buffer(const HPolytope& P, const HPolytope& Q) {
  require(P.dim() == Q.dim(), "minkowski_buffer: dimension mismatch");
  const int n = P.dim();
  std::vector<Vector> normals;
  std::vector<double> offsets;
  auto add = [&](const Vector& raw) {
    const double nrm = raw.norm();
    if (nrm < 1e-12) return;
    const Vector a = raw / nrm;
    for (const auto& seen : normals)
      if (seen.dot(a) > 1.0 - 1e-12) return;
    const auto hp = support(P, a);
    const auto hq = support(Q, a);
    if (!hp || !hq) return;  // unbounded in this direction: no constraint
    normals.push_back(a);
    offsets.push_back(*hp + *hq);
  };
  for (int i = 0; i < P.num_constraints(); ++i) add(P.A().row(i).transpose());
  for (int i = 0; i < Q.num_constraints(); ++i) add(Q.A().row(i).transpose());
  Matrix A(static_cast<Eigen::Index>(normals.size()), n);
  Vector b(static_cast<Eigen::Index>(normals.size()));
  for (std::size_t i = 0; i < normals.size(); ++i) {
    A.row(static_cast<Eigen::Index>(i)) = normals[i].transpose();
    b(static_cast<Eigen::Index>(i)) = offsets[i];
  }
  return {A, b};
}

/// {x in region | C x + d in target} = H([A C; A_region], [b - A d; b_region]).
inline HPolytope preimage(const HPolytope& target, const HPolytope& region, const Matrix& C, const Vector& d) {
  require(C.rows() == target.dim(), "preimage: rows(C) must equal dim(target)");
  require(C.cols() == region.dim(), "preimage: cols(C) must equal dim(region)");
  require(d.size() == C.rows(), "preimage: length(d) must equal rows(C)");
  Matrix A(target.num_constraints() + region.num_constraints(), region.dim());
  A << target.A() * C, region.A();
  Vector b(A.rows());
  b << target.b() - target.A() * d, region.b();
  return {A, b};
}

/// n i.i.d. uniform points in B, reproducible per seed.
inline std::vector<Vector> sample_uniform(const Hyperrectangle& B, int n, std::uint64_t seed) {
  require(n >= 1, "sample_uniform: n must be >= 1");
  Rng rng(seed);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    Vector x(B.dim());
    for (int i = 0; i < B.dim(); ++i) x(i) = rng.uniform(B.lower()(i), B.upper()(i));
    out.push_back(std::move(x));
  }
  return out;
}

struct ChebyshevBall {
  Vector center;
  double radius = 0.0;
};

/// Largest inscribed ball (radius capped at `cap` for unbounded sets), or
/// nullopt if P is empty.
inline std::optional<ChebyshevBall> chebyshev_ball(const HPolytope& P, double cap = 1e6) {
  const int n = P.dim();
  const int m = P.num_constraints();
  Matrix A(m + 2, n + 1);
  Vector b(m + 2);
  A.topLeftCorner(m, n) = P.A();
  A.block(0, n, m, 1) = P.A().rowwise().norm();
  b.head(m) = P.b();
  A.row(m).setZero();
  A(m, n) = -1.0;
  b(m) = 0.0;
  A.row(m + 1).setZero();
  A(m + 1, n) = 1.0;
  b(m + 1) = cap;
  Vector c = Vector::Zero(n + 1);
  c(n) = 1.0;
  const auto out = solve({c, A, b, std::nullopt, std::nullopt});
  if (!out.optimal()) return std::nullopt;
  return ChebyshevBall{out.witness.head(n), out.witness(n)};
}

/// Tight axis-aligned bounding box from 2n support LPs; nullopt if P is
/// empty or unbounded.
inline std::optional<Hyperrectangle> bounding_box(const HPolytope& P) {
  if (is_empty(P)) return std::nullopt;
  const int n = P.dim();
  Vector lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    Vector e = Vector::Zero(n);
    e(i) = 1.0;
    const auto up = support(P, e);
    const auto down = support(P, -e);
    if (!up || !down) return std::nullopt;
    hi(i) = *up;
    lo(i) = std::min(-*down, *up);
  }
  return Hyperrectangle(lo, hi);
}

/// Drops rows that are implied by the others (one LP per row, with the row
/// relaxed by one unit so the probe stays bounded).
inline HPolytope reduce(const HPolytope& P) {
  const int m = P.num_constraints();
  std::vector<char> keep(static_cast<std::size_t>(m), 1);
  for (int i = 0; i < m; ++i) {
    const Vector a = P.A().row(i).transpose();
    const double nrm = a.norm();
    if (nrm < 1e-12) {
      keep[static_cast<std::size_t>(i)] = 0;
      continue;
    }
    std::vector<Eigen::Index> rows;
    for (int j = 0; j < m; ++j)
      if (j != i && keep[static_cast<std::size_t>(j)]) rows.push_back(j);
    Matrix A(static_cast<Eigen::Index>(rows.size()) + 1, P.dim());
    Vector b(A.rows());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      A.row(static_cast<Eigen::Index>(r)) = P.A().row(rows[r]);
      b(static_cast<Eigen::Index>(r)) = P.b()(rows[r]);
    }
    A.row(A.rows() - 1) = a.transpose();
    b(b.size() - 1) = P.b()(i) + nrm;
    const auto out = solve({a, A, b, std::nullopt, std::nullopt});
    if (out.status == LpStatus::Infeasible) return P;  // empty set: nothing to reduce
    if (out.optimal() && out.value <= P.b()(i) + kFeasTol * nrm) keep[static_cast<std::size_t>(i)] = 0;
  }
  std::vector<Eigen::Index> rows;
  for (int i = 0; i < m; ++i)
    if (keep[static_cast<std::size_t>(i)]) rows.push_back(i);
  Matrix A(static_cast<Eigen::Index>(rows.size()), P.dim());
  Vector b(A.rows());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    A.row(static_cast<Eigen::Index>(r)) = P.A().row(rows[r]);
    b(static_cast<Eigen::Index>(r)) = P.b()(rows[r]);
  }
  return {A, b};
}

/// Regular octagon circumscribing the disk of the given radius, centred at
/// the origin (facets at distance `radius` along k·π/4).
inline HPolytope circumscribed_octagon(double radius) {
  require(radius >= 0.0, "circumscribed_octagon: negative radius");
  Matrix A(8, 2);
  Vector b = Vector::Constant(8, radius);
  for (int k = 0; k < 8; ++k) {
    const double angle = k * std::numbers::pi / 4.0;
    A(k, 0) = std::cos(angle);
    A(k, 1) = std::sin(angle);
  }
  return {A, b};
}

// JSON: {"A": [[...]], "b": [...]} or {"box": {"lower": [...], "upper": [...]}}.

inline nlohmann::json matrix_to_json(const Matrix& M) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index cols_if_empty = 0) {
  require(j.is_array(), "expected a matrix (array of rows)");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows == 0 ? cols_if_empty : static_cast<Eigen::Index>(j.at(0).size());
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols, "ragged matrix row");
    for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return M;
}

inline nlohmann::json vector_to_json(const Vector& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  require(j.is_array(), "expected a vector (array of numbers)");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline nlohmann::json to_json(const HPolytope& P) {
  return {{"A", matrix_to_json(P.A())}, {"b", vector_to_json(P.b())}, {"dim", P.dim()}};
}

inline nlohmann::json to_json(const Hyperrectangle& B) {
  return {{"box", {{"lower", vector_to_json(B.lower())}, {"upper", vector_to_json(B.upper())}}}};
}

inline Hyperrectangle box_from_json(const nlohmann::json& j) {
  const auto& box = j.contains("box") ? j.at("box") : j;
  return {vector_from_json(box.at("lower")), vector_from_json(box.at("upper"))};
}

/// Accepts either JSON form and returns the H-representation.
inline HPolytope hpolytope_from_json(const nlohmann::json& j) {
  if (j.contains("box") || j.contains("lower")) return box_from_json(j).as_hpolytope();
  const auto b = vector_from_json(j.at("b"));
  const Eigen::Index dim = j.contains("dim") ? j.at("dim").get<Eigen::Index>() : 0;
  return {matrix_from_json(j.at("A"), dim), b};
}

}  // namespace neuralparc

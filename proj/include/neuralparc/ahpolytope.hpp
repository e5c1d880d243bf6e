#pragma once

#include "neuralparc/hpolytope.hpp"

namespace neuralparc {

/// Affine image {C x + d | x in base} of an H-polytope.
class AHPolytope {
 public:
  AHPolytope() = default;

  AHPolytope(HPolytope base, Matrix C, Vector d) : base_(std::move(base)), C_(std::move(C)), d_(std::move(d)) {
    require(C_.cols() == base_.dim(), "AHPolytope: cols(C) must equal dim(base)");
    require(C_.rows() == d_.size(), "AHPolytope: rows(C) must equal length(d)");
  }

  const HPolytope& base() const { return base_; }
  const Matrix& C() const { return C_; }
  const Vector& d() const { return d_; }
  int dim() const { return static_cast<int>(C_.rows()); }

 private:
  HPolytope base_;
  Matrix C_;
  Vector d_;
};

/// Which way a query within tolerance of the boundary is resolved.
enum class Boundary {
  Inclusive,  // near-boundary counts as inside (avoid sets)
  Exclusive,  // near-boundary counts as outside (reach sets)
};

inline AHPolytope from_hpolytope(const HPolytope& P) {
  return {P, Matrix::Identity(P.dim(), P.dim()), Vector::Zero(P.dim())};
}

/// Exact intersection over the stacked base (x, y) with C1 x + d1 = C2 y + d2
/// written as a pair of inequalities.
inline AHPolytope intersect_ah(const AHPolytope& U1, const AHPolytope& U2) {
  require(U1.dim() == U2.dim(), "intersect_ah: dimension mismatch");
  const auto& A1 = U1.base().A();
  const auto& A2 = U2.base().A();
  const auto n1 = A1.cols(), n2 = A2.cols();
  const auto m1 = A1.rows(), m2 = A2.rows();
  const auto k = U1.dim();
  Matrix A = Matrix::Zero(m1 + m2 + 2 * k, n1 + n2);
  A.block(0, 0, m1, n1) = A1;
  A.block(m1, n1, m2, n2) = A2;
  A.block(m1 + m2, 0, k, n1) = U1.C();
  A.block(m1 + m2, n1, k, n2) = -U2.C();
  A.block(m1 + m2 + k, 0, k, n1) = -U1.C();
  A.block(m1 + m2 + k, n1, k, n2) = U2.C();
  Vector b(A.rows());
  b << U1.base().b(), U2.base().b(), U2.d() - U1.d(), U1.d() - U2.d();
  Matrix C = Matrix::Zero(k, n1 + n2);
  C.leftCols(n1) = U1.C();
  return {HPolytope(A, b), C, U1.d()};
}

/// Exact convex hull via the lifted base (x1, x2, γ):
///   A1 x1 <= γ b1,  A2 x2 <= (1 - γ) b2,  0 <= γ <= 1,
///   image C1 x1 + C2 x2 + γ (d1 - d2) + d2.
inline AHPolytope convex_hull_ah(const AHPolytope& U1, const AHPolytope& U2) {
  require(U1.dim() == U2.dim(), "convex_hull_ah: dimension mismatch");
  const auto& A1 = U1.base().A();
  const auto& A2 = U2.base().A();
  const auto n1 = A1.cols(), n2 = A2.cols();
  const auto m1 = A1.rows(), m2 = A2.rows();
  Matrix A = Matrix::Zero(m1 + m2 + 2, n1 + n2 + 1);
  A.block(0, 0, m1, n1) = A1;
  A.block(0, n1 + n2, m1, 1) = -U1.base().b();
  A.block(m1, n1, m2, n2) = A2;
  A.block(m1, n1 + n2, m2, 1) = U2.base().b();
  A(m1 + m2, n1 + n2) = 1.0;
  A(m1 + m2 + 1, n1 + n2) = -1.0;
  Vector b(A.rows());
  b << Vector::Zero(m1), U2.base().b(), 1.0, 0.0;
  Matrix C(U1.dim(), n1 + n2 + 1);
  C << U1.C(), U2.C(), U1.d() - U2.d();
  return {HPolytope(A, b), C, U2.d()};
}

/// Projection of P onto its first m coordinates: AH(A, b, [I_m 0], 0).
inline AHPolytope project(const HPolytope& P, int m) {
  require(m >= 0 && m <= P.dim(), "project: m out of range");
  Matrix C = Matrix::Zero(m, P.dim());
  C.leftCols(m) = Matrix::Identity(m, m);
  return {P, C, Vector::Zero(m)};
}

inline bool is_empty_ah(const AHPolytope& U) { return is_empty(U.base()); }

/// One feasibility LP: exists x with A x <= b (shifted by the polarity) and
/// C x + d = y. Exclusive tightens every base row, so it reports nothing
/// inside a base that encodes equalities as row pairs (intersect_ah).
inline bool contains_point_ah(const AHPolytope& U, const Vector& y, Boundary polarity = Boundary::Inclusive) {
  require(y.size() == U.dim(), "contains_point_ah: dimension mismatch");
  const auto& base = U.base();
  const auto m = base.num_constraints();
  const auto k = U.dim();
  Matrix A(m + 2 * k, base.dim());
  A << base.A(), U.C(), -U.C();
  Vector b(A.rows());
  const double shift = polarity == Boundary::Inclusive ? kFeasTol : -kFeasTol;
  b << base.b() + shift * base.A().rowwise().norm(), y - U.d(), U.d() - y;
  return feasible(A, b);
}

inline nlohmann::json to_json(const AHPolytope& U) {
  return {{"base", to_json(U.base())}, {"C", matrix_to_json(U.C())}, {"d", vector_to_json(U.d())}};
}

inline AHPolytope ahpolytope_from_json(const nlohmann::json& j) {
  auto base = hpolytope_from_json(j.at("base"));
  return {base, matrix_from_json(j.at("C"), base.dim()), vector_from_json(j.at("d"))};
}

}  // namespace neuralparc

#include "neuralparc/hpolytope.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

namespace neuralparc {
namespace {

Hyperrectangle square(double h) { return Hyperrectangle::centred(Vector::Constant(2, h)); }

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

TEST(HPolytope, ShapeMismatchIsInputError) {
  EXPECT_THROW(HPolytope(Matrix::Zero(3, 2), Vector::Zero(2)), InputError);
  EXPECT_THROW(Hyperrectangle(vec({1.0}), vec({0.0})), InputError);
}

TEST(HPolytope, UnitBoxSupport) {
  const auto box = square(1.0);
  EXPECT_DOUBLE_EQ(box.support(vec({1, 1})), 2.0);
  const auto h = support(box.as_hpolytope(), vec({1, 1}));
  ASSERT_TRUE(h.has_value());
  EXPECT_NEAR(*h, 2.0, 1e-9);
}

TEST(HPolytope, SupportOfHalfPlaneIsUnbounded) {
  Matrix A(1, 2);
  A << 1, 0;
  EXPECT_FALSE(support(HPolytope(A, vec({1.0})), vec({0, 1})).has_value());
}

TEST(HPolytope, SupportOfEmptySetThrows) {
  Matrix A(2, 1);
  A << 1, -1;
  EXPECT_THROW(support(HPolytope(A, vec({-1, 0})), vec({1})), InputError);
}

TEST(HPolytope, PontryaginDifferenceOfBoxes) {
  const auto out = pontryagin_diff(square(1.0).as_hpolytope(), square(0.5));
  const auto expected = square(0.5).as_hpolytope();
  EXPECT_TRUE(out.A().isApprox(expected.A()));
  EXPECT_TRUE(out.b().isApprox(expected.b()));
}

TEST(HPolytope, PontryaginDifferenceProperty) {
  Rng rng(21);
  const Hyperrectangle E(vec({-0.1, -0.05}), vec({0.2, 0.1}));
  const std::vector<Vector> corners{vec({-0.1, -0.05}), vec({-0.1, 0.1}), vec({0.2, -0.05}), vec({0.2, 0.1})};
  for (int trial = 0; trial < 20; ++trial) {
    const auto P = oracle::random_polytope(rng, 2, 6);
    const auto D = pontryagin_diff(P, E);
    for (const auto& x : oracle::sample_polytope(rng, D, 200))
      for (const auto& e : corners) EXPECT_TRUE(oracle::inside(P.A(), P.b(), x + e, 1e-12));
    // Every point of P whose E-translate stays inside P lies in D.
    for (const auto& x : oracle::sample_polytope(rng, P, 200)) {
      bool all = true;
      for (const auto& e : corners) all = all && oracle::inside(P.A(), P.b(), x + e);
      if (all) EXPECT_TRUE(oracle::inside(D.A(), D.b(), x, 1e-12));
    }
  }
}

TEST(HPolytope, BoxBufferContainsMinkowskiSum) {
  Rng rng(22);
  const Hyperrectangle E(vec({-0.3, -0.1}), vec({0.1, 0.2}));
  for (int trial = 0; trial < 20; ++trial) {
    const auto P = oracle::random_polytope(rng, 2, 5);
    const auto S = minkowski_buffer(P, E);
    for (const auto& x : oracle::sample_polytope(rng, P, 100))
      for (int s = 0; s < 5; ++s) EXPECT_TRUE(oracle::inside(S.A(), S.b(), x + oracle::sample_in(rng, E), 1e-12));
  }
}

TEST(HPolytope, BoxBufferExactForAxisAlignedSets) {
  const auto S = minkowski_buffer(square(1.0).as_hpolytope(), square(0.5));
  const auto expected = square(1.5).as_hpolytope();
  EXPECT_TRUE(S.b().isApprox(expected.b()));
}

TEST(HPolytope, GeneralBufferIsExactInThePlane) {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto P = oracle::random_polytope(rng, 2, 4, 1.0);
    const auto Q = oracle::random_polytope(rng, 2, 3, 0.3);
    const auto S = minkowski_buffer(P, Q);
    const auto vp = oracle::enumerate_vertices(P.A(), P.b());
    const auto vq = oracle::enumerate_vertices(Q.A(), Q.b());
    for (int d = 0; d < 32; ++d) {
      const double angle = 2.0 * std::numbers::pi * d / 32.0 + 0.01;
      const Vector dir = vec({std::cos(angle), std::sin(angle)});
      const auto hs = support(S, dir);
      ASSERT_TRUE(hs.has_value());
      EXPECT_NEAR(*hs, oracle::vertex_support(vp, dir) + oracle::vertex_support(vq, dir), 1e-7);
    }
  }
}

TEST(HPolytope, GeneralBufferDropsParallelNormals) {
  const auto S = minkowski_buffer(square(1.0).as_hpolytope(), square(0.25).as_hpolytope());
  EXPECT_EQ(S.num_constraints(), 4);
}

TEST(HPolytope, OctagonCircumscribesDisk) {
  const double r = 0.4;
  const auto oct = circumscribed_octagon(r);
  for (int k = 0; k < 360; ++k) {
    const double a = k * std::numbers::pi / 180.0;
    EXPECT_TRUE(oct.contains(vec({r * std::cos(a), r * std::sin(a)}), 1e-12));
  }
  // Vertices sit at r / cos(pi/8).
  const auto verts = oracle::enumerate_vertices(oct.A(), oct.b());
  ASSERT_EQ(verts.size(), 8u);
  for (const auto& v : verts) EXPECT_NEAR(v.norm(), r / std::cos(std::numbers::pi / 8.0), 1e-12);
}

TEST(HPolytope, PreimageMembershipMatchesImage) {
  Rng rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    const auto target = oracle::random_polytope(rng, 2, 4, 1.0);
    const auto region = oracle::random_polytope(rng, 3, 3, 2.0);
    Matrix C(2, 3);
    for (int i = 0; i < 6; ++i) C(i / 3, i % 3) = rng.uniform(-1.0, 1.0);
    const Vector d = vec({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
    const auto pre = preimage(target, region, C, d);
    for (const auto& x : oracle::sample_polytope(rng, region, 500)) {
      const bool in_target = oracle::inside(target.A(), target.b(), C * x + d);
      EXPECT_EQ(oracle::inside(pre.A(), pre.b(), x, 1e-12), in_target);
    }
  }
}

TEST(HPolytope, PreimageShapeChecks) {
  EXPECT_THROW(preimage(square(1).as_hpolytope(), HPolytope::universe(3), Matrix::Zero(3, 3), Vector::Zero(3)),
               InputError);
}

TEST(HPolytope, CartesianProductAndIntersection) {
  const auto P = cartesian_product(square(1).as_hpolytope(), Hyperrectangle(vec({2}), vec({3})).as_hpolytope());
  EXPECT_EQ(P.dim(), 3);
  EXPECT_TRUE(P.contains(vec({0.5, -0.5, 2.5})));
  EXPECT_FALSE(P.contains(vec({0.5, -0.5, 1.5})));
  const auto I = intersect(square(1).as_hpolytope(), Hyperrectangle(vec({0.5, 0.5}), vec({3, 3})).as_hpolytope());
  EXPECT_TRUE(I.contains(vec({0.75, 0.75})));
  EXPECT_FALSE(I.contains(vec({0.25, 0.75})));
  EXPECT_FALSE(is_empty(I));
  EXPECT_TRUE(is_empty(intersect(square(1).as_hpolytope(), Hyperrectangle(vec({2, 2}), vec({3, 3})).as_hpolytope())));
}

TEST(HPolytope, ChebyshevBall) {
  const auto ball = chebyshev_ball(square(1).as_hpolytope());
  ASSERT_TRUE(ball.has_value());
  EXPECT_NEAR(ball->radius, 1.0, 1e-9);
  Rng rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    const auto P = oracle::random_polytope(rng, 3, 6);
    const auto cb = chebyshev_ball(P);
    ASSERT_TRUE(cb.has_value());
    EXPECT_GT(cb->radius, 0.0);
    for (int s = 0; s < 50; ++s)
      EXPECT_TRUE(P.contains(cb->center + cb->radius * oracle::random_unit(rng, 3), 1e-7));
  }
  Matrix A(2, 1);
  A << 1, -1;
  EXPECT_FALSE(chebyshev_ball(HPolytope(A, vec({-1, 0}))).has_value());
}

TEST(HPolytope, BoundingBoxMatchesVertices) {
  Rng rng(26);
  for (int trial = 0; trial < 20; ++trial) {
    const auto P = oracle::random_polytope(rng, 3, 7);
    const auto bb = bounding_box(P);
    ASSERT_TRUE(bb.has_value());
    const auto verts = oracle::enumerate_vertices(P.A(), P.b());
    for (int i = 0; i < 3; ++i) {
      Vector e = Vector::Zero(3);
      e(i) = 1.0;
      EXPECT_NEAR(bb->upper()(i), oracle::vertex_support(verts, e), 1e-7);
      EXPECT_NEAR(bb->lower()(i), -oracle::vertex_support(verts, -e), 1e-7);
    }
  }
  EXPECT_FALSE(bounding_box(HPolytope::universe(2)).has_value());
}

TEST(HPolytope, ReducePreservesTheSet) {
  Rng rng(27);
  for (int trial = 0; trial < 20; ++trial) {
    const auto P = oracle::random_polytope(rng, 2, 10);
    const auto R = reduce(P);
    EXPECT_LE(R.num_constraints(), P.num_constraints());
    const auto vp = oracle::enumerate_vertices(P.A(), P.b());
    const auto vr = oracle::enumerate_vertices(R.A(), R.b());
    for (int d = 0; d < 16; ++d) {
      const Vector dir = oracle::random_unit(rng, 2);
      EXPECT_NEAR(oracle::vertex_support(vp, dir), oracle::vertex_support(vr, dir), 1e-9);
    }
  }
  // A duplicated face is dropped once.
  Matrix A(5, 2);
  A << 1, 0, 0, 1, -1, 0, 0, -1, 2, 0;
  EXPECT_EQ(reduce(HPolytope(A, vec({1, 1, 1, 1, 2}))).num_constraints(), 4);
}

TEST(HPolytope, SampleUniformIsReproducibleAndInside) {
  const Hyperrectangle B(vec({0, -1}), vec({2, 1}));
  const auto a = sample_uniform(B, 500, 9);
  const auto b = sample_uniform(B, 500, 9);
  ASSERT_EQ(a.size(), 500u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_TRUE(B.contains(a[i], 0.0));
  }
  EXPECT_NE(sample_uniform(B, 1, 10)[0], a[0]);
  EXPECT_THROW(sample_uniform(B, 0, 1), InputError);
}

TEST(HPolytope, SampleUniformDegenerateAndMean) {
  for (const auto& x : sample_uniform(Hyperrectangle(vec({2}), vec({2})), 5, 4)) EXPECT_EQ(x(0), 2.0);
  const auto xs = sample_uniform(Hyperrectangle(vec({0}), vec({1})), 100000, 5);
  double mean = 0.0;
  for (const auto& x : xs) mean += x(0);
  EXPECT_NEAR(mean / 1e5, 0.5, 0.01);
}

TEST(HPolytope, IdentityCases) {
  Rng rng(29);
  const auto P = oracle::random_polytope(rng, 2, 4);
  const Hyperrectangle zero(Vector::Zero(2), Vector::Zero(2));
  const auto D = pontryagin_diff(P, zero);
  const auto M = minkowski_buffer(P, zero);
  const auto I = intersect(P, P);
  const auto vp = oracle::enumerate_vertices(P.A(), P.b());
  for (const auto* Q : {&D, &M, &I}) {
    const auto vq = oracle::enumerate_vertices(Q->A(), Q->b());
    for (int d = 0; d < 16; ++d) {
      const Vector dir = oracle::random_unit(rng, 2);
      EXPECT_NEAR(oracle::vertex_support(vp, dir), oracle::vertex_support(vq, dir), 1e-9);
    }
  }
}

TEST(HPolytope, ScaledPreimage) {
  const auto pre = preimage(Hyperrectangle(vec({0, 0}), vec({2, 2})).as_hpolytope(), square(100).as_hpolytope(),
                            2.0 * Matrix::Identity(2, 2), Vector::Zero(2));
  const auto bb = bounding_box(pre);
  ASSERT_TRUE(bb.has_value());
  EXPECT_LE((bb->lower() - vec({0, 0})).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((bb->upper() - vec({1, 1})).cwiseAbs().maxCoeff(), 1e-9);
  const auto id = preimage(Hyperrectangle(vec({0, 0}), vec({1, 1})).as_hpolytope(), square(10).as_hpolytope(),
                           Matrix::Identity(2, 2), Vector::Zero(2));
  EXPECT_TRUE(id.contains(vec({0.5, 0.5})));
  EXPECT_FALSE(id.contains(vec({1.5, 0.5})));
}

TEST(HPolytope, ProductWithEmptyIsEmpty) {
  Matrix A(2, 1);
  A << 1, -1;
  const HPolytope empty(A, vec({0, -1}));
  const auto P = cartesian_product(empty, square(1).as_hpolytope());
  EXPECT_EQ(P.num_constraints(), 6);
  EXPECT_TRUE(is_empty(P));
}

TEST(HPolytope, JsonRoundTrip) {
  Rng rng(28);
  const auto P = oracle::random_polytope(rng, 3, 4);
  const auto Q = hpolytope_from_json(nlohmann::json::parse(to_json(P).dump()));
  EXPECT_EQ(P.A(), Q.A());
  EXPECT_EQ(P.b(), Q.b());
  const auto U = hpolytope_from_json(to_json(HPolytope::universe(3)));
  EXPECT_EQ(U.dim(), 3);
  const Hyperrectangle B(vec({0, -1}), vec({2, 1}));
  const auto Bj = box_from_json(to_json(B));
  EXPECT_EQ(Bj.lower(), B.lower());
  EXPECT_EQ(hpolytope_from_json(to_json(B)).b(), B.as_hpolytope().b());
}

}  // namespace
}  // namespace neuralparc

#include "neuralparc/ahpolytope.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>

namespace neuralparc {
namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

double cross(const Vector& o, const Vector& a, const Vector& b) {
  return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
}

// Monotone-chain hull, counter-clockwise.
std::vector<Vector> hull2d(std::vector<Vector> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) {
    return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
  });
  std::vector<Vector> h(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

// Signed margin of y inside a CCW polygon (positive strictly inside).
double hull_margin(const std::vector<Vector>& h, const Vector& y) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& a = h[i];
    const auto& b = h[(i + 1) % h.size()];
    margin = std::min(margin, cross(a, b, y) / (b - a).norm());
  }
  return margin;
}

AHPolytope random_ah(Rng& rng) {
  const auto base = oracle::random_polytope(rng, 3, 3, 1.0);
  Matrix C(2, 3);
  for (int i = 0; i < 6; ++i) C(i / 3, i % 3) = rng.uniform(-1.0, 1.0);
  return {base, C, vec({rng.uniform(-1, 1), rng.uniform(-1, 1)})};
}

std::vector<Vector> image_vertices(const AHPolytope& U) {
  std::vector<Vector> out;
  for (const auto& v : oracle::enumerate_vertices(U.base().A(), U.base().b())) out.push_back(U.C() * v + U.d());
  return out;
}

TEST(AHPolytope, ShapeChecks) {
  EXPECT_THROW(AHPolytope(HPolytope::universe(2), Matrix::Zero(2, 3), Vector::Zero(2)), InputError);
  EXPECT_THROW(AHPolytope(HPolytope::universe(2), Matrix::Zero(2, 2), Vector::Zero(3)), InputError);
  const auto U = from_hpolytope(HPolytope::universe(2));
  EXPECT_THROW(intersect_ah(U, from_hpolytope(HPolytope::universe(3))), InputError);
}

TEST(AHPolytope, FromHPolytopeMembership) {
  const auto box = Hyperrectangle(vec({0, 0}), vec({1, 2})).as_hpolytope();
  const auto U = from_hpolytope(box);
  EXPECT_TRUE(contains_point_ah(U, vec({0.5, 1.5})));
  EXPECT_FALSE(contains_point_ah(U, vec({1.5, 1.5})));
}

TEST(AHPolytope, BoundaryPolarity) {
  const auto U = from_hpolytope(Hyperrectangle(vec({0, 0}), vec({1, 1})).as_hpolytope());
  const Vector edge = vec({1.0, 0.5});
  EXPECT_TRUE(contains_point_ah(U, edge, Boundary::Inclusive));
  EXPECT_FALSE(contains_point_ah(U, edge, Boundary::Exclusive));
  EXPECT_TRUE(contains_point_ah(U, vec({0.5, 0.5}), Boundary::Exclusive));
}

TEST(AHPolytope, IntersectionMatchesBothMemberships) {
  Rng rng(31);
  const Hyperrectangle window(vec({-4, -4}), vec({4, 4}));
  for (int trial = 0; trial < 10; ++trial) {
    const auto U1 = random_ah(rng);
    const auto U2 = random_ah(rng);
    const auto I = intersect_ah(U1, U2);
    const auto h1 = hull2d(image_vertices(U1));
    const auto h2 = hull2d(image_vertices(U2));
    for (int s = 0; s < 60; ++s) {
      const Vector y = oracle::sample_in(rng, window);
      const double m = std::min(hull_margin(h1, y), hull_margin(h2, y));
      if (std::abs(m) < 1e-6) continue;
      EXPECT_EQ(contains_point_ah(I, y), m > 0) << "trial " << trial;
    }
    const bool disjoint_oracle = [&] {
      // Nonempty iff some point of the plane lies in both hulls; test via
      // the stacked LP-free check on a fine grid plus vertex containment.
      for (const auto& v : h1)
        if (hull_margin(h2, v) >= 0) return false;
      for (const auto& v : h2)
        if (hull_margin(h1, v) >= 0) return false;
      for (std::size_t i = 0; i < h1.size(); ++i)
        for (std::size_t j = 0; j < h2.size(); ++j) {
          const auto& a = h1[i];
          const auto& b = h1[(i + 1) % h1.size()];
          const auto& c = h2[j];
          const auto& d = h2[(j + 1) % h2.size()];
          if (cross(a, b, c) * cross(a, b, d) <= 0 && cross(c, d, a) * cross(c, d, b) <= 0) return false;
        }
      return true;
    }();
    EXPECT_EQ(is_empty_ah(I), disjoint_oracle) << "trial " << trial;
  }
}

TEST(AHPolytope, ConvexHullMatchesPlanarHull) {
  Rng rng(32);
  const Hyperrectangle window(vec({-4, -4}), vec({4, 4}));
  for (int trial = 0; trial < 10; ++trial) {
    const auto U1 = random_ah(rng);
    const auto U2 = random_ah(rng);
    const auto H = convex_hull_ah(U1, U2);
    auto pts = image_vertices(U1);
    for (const auto& v : image_vertices(U2)) pts.push_back(v);
    const auto h = hull2d(pts);
    for (int s = 0; s < 60; ++s) {
      const Vector y = oracle::sample_in(rng, window);
      const double m = hull_margin(h, y);
      if (std::abs(m) < 1e-6) continue;
      EXPECT_EQ(contains_point_ah(H, y), m > 0) << "trial " << trial;
    }
  }
}

TEST(AHPolytope, HullContainsConvexCombinations) {
  Rng rng(33);
  const auto U1 = random_ah(rng);
  const auto U2 = random_ah(rng);
  const auto H = convex_hull_ah(U1, U2);
  const auto x1 = oracle::sample_polytope(rng, U1.base(), 20);
  const auto x2 = oracle::sample_polytope(rng, U2.base(), 20);
  for (std::size_t i = 0; i < x1.size(); ++i) {
    const double g = rng.uniform();
    const Vector y = g * (U1.C() * x1[i] + U1.d()) + (1 - g) * (U2.C() * x2[i] + U2.d());
    EXPECT_TRUE(contains_point_ah(H, y));
  }
}

TEST(AHPolytope, ProjectionKeepsLeadingCoordinates) {
  const auto cube = Hyperrectangle(vec({0, 0, 0}), vec({1, 2, 3})).as_hpolytope();
  const auto P = project(cube, 2);
  EXPECT_EQ(P.dim(), 2);
  EXPECT_TRUE(contains_point_ah(P, vec({0.5, 1.5})));
  EXPECT_FALSE(contains_point_ah(P, vec({0.5, 2.5})));
  EXPECT_THROW(project(cube, 4), InputError);
}

TEST(AHPolytope, ProjectionMatchesLiftFeasibility) {
  Rng rng(35);
  for (int trial = 0; trial < 5; ++trial) {
    const auto P = oracle::random_polytope(rng, 4, 4, 1.0);
    const auto U = project(P, 2);
    const Hyperrectangle window(vec({-3, -3}), vec({3, 3}));
    for (int s = 0; s < 400; ++s) {
      const Vector y = oracle::sample_in(rng, window);
      const Matrix A_tail = P.A().rightCols(2);
      const Vector b_rest = P.b() - P.A().leftCols(2) * y;
      EXPECT_EQ(contains_point_ah(U, y), feasible(A_tail, b_rest));
    }
  }
}

TEST(AHPolytope, FullDimensionProjectionIsTheIdentity) {
  const auto cube = Hyperrectangle(vec({0, 0}), vec({1, 1})).as_hpolytope();
  const auto U = project(cube, 2);
  EXPECT_EQ(U.C(), Matrix::Identity(2, 2));
  EXPECT_TRUE(U.d().isZero(0.0));
}

TEST(AHPolytope, IdempotentIntersectionAndHull) {
  Rng rng(36);
  const auto U = random_ah(rng);
  const auto I = intersect_ah(U, U);
  const auto H = convex_hull_ah(U, U);
  const Hyperrectangle window(vec({-4, -4}), vec({4, 4}));
  const auto h = hull2d(image_vertices(U));
  for (int s = 0; s < 500; ++s) {
    const Vector y = oracle::sample_in(rng, window);
    if (std::abs(hull_margin(h, y)) < 1e-6) continue;
    const bool in = contains_point_ah(U, y);
    EXPECT_EQ(contains_point_ah(I, y), in);
    EXPECT_EQ(contains_point_ah(H, y), in);
  }
}

TEST(AHPolytope, HullOfTwoPointsIsTheSegment) {
  const auto point = [](const Vector& p) {
    return AHPolytope(Hyperrectangle(vec({0}), vec({0})).as_hpolytope(), Matrix::Zero(2, 1), p);
  };
  const auto H = convex_hull_ah(point(vec({0, 0})), point(vec({2, 1})));
  EXPECT_TRUE(contains_point_ah(H, vec({1, 0.5})));
  EXPECT_TRUE(contains_point_ah(H, vec({2, 1})));
  EXPECT_FALSE(contains_point_ah(H, vec({1, 0.6})));
  EXPECT_FALSE(contains_point_ah(H, vec({2.2, 1.1})));
}

TEST(AHPolytope, DisjointSegmentsIntersectToEmpty) {
  const auto seg = [](double y) {
    return AHPolytope(Hyperrectangle(vec({0}), vec({1})).as_hpolytope(), vec({1, 0}).reshaped(2, 1),
                      vec({0, y}));
  };
  EXPECT_TRUE(is_empty_ah(intersect_ah(seg(0), seg(1))));
  EXPECT_FALSE(is_empty_ah(intersect_ah(seg(0), seg(0))));
  EXPECT_TRUE(contains_point_ah(seg(0), vec({0.5, 0})));
  EXPECT_FALSE(contains_point_ah(seg(0), vec({0.5, 0.1})));
}

TEST(AHPolytope, EmptyBaseIsEmpty) {
  Matrix A(2, 1);
  A << 1, -1;
  const AHPolytope U(HPolytope(A, vec({-1, 0})), Matrix::Identity(1, 1), Vector::Zero(1));
  EXPECT_TRUE(is_empty_ah(U));
  EXPECT_FALSE(contains_point_ah(U, vec({0})));
}

TEST(AHPolytope, JsonRoundTrip) {
  Rng rng(34);
  const auto U = random_ah(rng);
  const auto V = ahpolytope_from_json(nlohmann::json::parse(to_json(U).dump()));
  EXPECT_EQ(U.C(), V.C());
  EXPECT_EQ(U.d(), V.d());
  EXPECT_EQ(U.base().A(), V.base().A());
}

}  // namespace
}  // namespace neuralparc

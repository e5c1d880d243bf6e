#include "neuralparc/blackbox.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace neuralparc {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(Builtin, NamesAndSpecs) {
  const auto drift = builtin("drift2d");
  EXPECT_EQ(drift->name(), "drift2d");
  EXPECT_EQ(drift->spec(), (TrajectorySpec{2, 1, 7.8, 0.1}));
  EXPECT_NEAR(drift->parameter_box().lower()(1), std::numbers::pi / 6, 1e-15);
  EXPECT_NEAR(drift->parameter_box().upper()(1), 2 * std::numbers::pi / 9, 1e-15);
  EXPECT_EQ(drift->disturbance_amplitude().size(), 0);

  const auto boat = builtin("boat2d");
  EXPECT_EQ(boat->spec(), (TrajectorySpec{2, 0, 10.0, 0.1}));
  EXPECT_EQ(boat->parameter_box().dim(), 3);
  EXPECT_THROW(builtin("glider"), InputError);
}

TEST(Drift2d, StartsAtP0) {
  const auto sys = builtin("drift2d");
  const Vector p0 = vec({3.5, -2.0});
  EXPECT_EQ(sys->evaluate(p0, vec({10, 0.6}), 0.0, 0), p0);
}

TEST(Drift2d, AccelerationPhaseIsExact) {
  // x = a t² / 2 along +x until t = v / a; RK4 is exact on quadratics.
  const auto sys = builtin("drift2d");
  const auto r = sys->rollout(vec({10, 0.6}), 0, {0.5, 1.0, 3.0});
  EXPECT_NEAR(r.p[0](0), 0.375, 1e-12);
  EXPECT_NEAR(r.p[1](0), 1.5, 1e-12);
  EXPECT_NEAR(r.p[2](0), 13.5, 1e-12);
  for (const auto& p : r.p) EXPECT_EQ(p(1), 0.0);
}

TEST(Drift2d, FinalYawStaysNearPi) {
  const auto sys = builtin("drift2d");
  const auto K = sys->parameter_box();
  for (const auto& k : sample_uniform(K, 50, 3)) {
    const double q = sys->final_q(k, 0)(0);
    EXPECT_GT(q, 5 * std::numbers::pi / 6);
    EXPECT_LT(q, std::numbers::pi);
  }
}

TEST(Rollout, TranslationInvarianceOnAGrid) {
  for (const char* name : {"drift2d", "boat2d"}) {
    const auto sys = builtin(name);
    const auto ks = sample_uniform(sys->parameter_box(), 5, 1);
    for (const auto& k : ks)
      for (double t : {0.0, 0.05, 1.0, 3.33, sys->spec().t_f})
        for (const auto& p0 : {vec({1, 2}), vec({-7.5, 0.25})}) {
          const Vector a = sys->evaluate(p0, k, t, 42);
          const Vector b = sys->evaluate(Vector::Zero(2), k, t, 42);
          EXPECT_LE((a - b - p0).cwiseAbs().maxCoeff(), 1e-12) << name << " t=" << t;
        }
  }
}

TEST(Rollout, OffGridQueriesAreContinuous) {
  const auto sys = builtin("boat2d");
  const Vector k = vec({0.2, 5, 0.5});
  const auto r = sys->rollout(k, 9, {2.0, 2.0 + 1e-9, 2.0025, 2.005});
  EXPECT_LT((r.p[1] - r.p[0]).norm(), 1e-8);
  EXPECT_LT((r.p[2] - r.p[0]).norm(), 0.01);
  EXPECT_LT((r.p[3] - r.p[2]).norm(), 0.01);
}

TEST(Rollout, RejectsBadQueries) {
  const auto sys = builtin("drift2d");
  EXPECT_THROW(sys->rollout(vec({10, 0.6}), 0, {1.0, 0.5}), InputError);
  EXPECT_THROW(sys->rollout(vec({10, 0.6}), 0, {9.0}), InputError);
  EXPECT_THROW(sys->rollout(vec({10}), 0, {1.0}), InputError);
}

TEST(Boat2d, NominalLoopReachesItsGoal) {
  const Boat2d nominal(0.0);
  const auto K = nominal.parameter_box();
  const Vector k = K.center();
  const auto r = nominal.rollout(k, 0, {nominal.spec().t_f});
  EXPECT_LT((r.p.back() - k.tail(2)).norm(), 1.0);
  for (const auto& corner : {K.lower(), K.upper()}) {
    const auto rc = nominal.rollout(corner, 0, {nominal.spec().t_f});
    EXPECT_LT((rc.p.back() - corner.tail(2)).norm(), 1.0);
  }
}

TEST(Boat2d, DisturbancesStayWithinAmplitude) {
  const Boat2d boat;
  const Vector amp = boat.disturbance_amplitude();
  Vector seen = Vector::Zero(3);
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const Matrix D = boat.disturbance_profile(seed);
    ASSERT_EQ(D.rows(), 10);
    for (Eigen::Index c = 0; c < 3; ++c) {
      ASSERT_LE(D.col(c).cwiseAbs().maxCoeff(), amp(c));
      seen(c) = std::max(seen(c), D.col(c).cwiseAbs().maxCoeff());
    }
  }
  // The family is exercised up to its edge.
  EXPECT_GT(seen.cwiseQuotient(amp).minCoeff(), 0.99);
}

TEST(Boat2d, DisturbanceChangesTheRollout) {
  const Boat2d boat;
  const Vector k = vec({0.1, 5.5, 0.2});
  const auto a = boat.rollout(k, 1, {10.0});
  const auto b = boat.rollout(k, 2, {10.0});
  const auto a2 = boat.rollout(k, 1, {10.0});
  EXPECT_GT((a.p[0] - b.p[0]).norm(), 1e-6);
  EXPECT_EQ(a.p[0], a2.p[0]);
}

TEST(Collect, SingleRowShape) {
  const auto sys = builtin("drift2d");
  const auto d = collect(*sys, sys->parameter_box(), 1, 5);
  EXPECT_EQ(d.n_traj(), 1);
  EXPECT_EQ(d.data.labels.cols(), 78 * 2 + 1);
  EXPECT_EQ(d.data.features.cols(), 2);
  EXPECT_THROW(collect(*sys, sys->parameter_box(), 0, 5), InputError);
}

TEST(Collect, SameSeedSameDataset) {
  const auto sys = builtin("boat2d");
  const auto a = collect(*sys, sys->parameter_box(), 50, 8);
  const auto b = collect(*sys, sys->parameter_box(), 50, 8);
  const auto c = collect(*sys, sys->parameter_box(), 50, 9);
  EXPECT_EQ(a.data.features, b.data.features);
  EXPECT_EQ(a.data.labels, b.data.labels);
  EXPECT_NE(a.data.labels, c.data.labels);
}

TEST(Collect, LabelsMatchDirectEvaluation) {
  const auto sys = builtin("drift2d");
  const auto d = collect(*sys, sys->parameter_box(), 10000, 11);
  const auto spec = sys->spec();
  // Recompute selected label columns with off-label-grid queries and compare means.
  const std::vector<int> steps{10, 40, 78};
  Vector direct = Vector::Zero(7);
  for (int i = 0; i < d.n_traj(); ++i) {
    const Vector k = d.data.features.row(i).transpose();
    const auto r = sys->rollout(k, 0, {spec.time(10), spec.time(40), spec.time(78)});
    for (std::size_t j = 0; j < steps.size(); ++j) direct.segment(2 * static_cast<Eigen::Index>(j), 2) += r.p[j];
    direct(6) += r.q(0);
  }
  direct /= d.n_traj();
  for (std::size_t j = 0; j < steps.size(); ++j)
    for (int c = 0; c < 2; ++c) {
      const double expected = direct(2 * static_cast<Eigen::Index>(j) + c);
      const double column = d.data.labels.col((steps[j] - 1) * 2 + c).mean();
      EXPECT_LE(std::abs(expected - column), 0.01 * std::abs(expected) + 1e-9) << "step " << steps[j];
    }
  EXPECT_LE(std::abs(direct(6) - d.data.labels.col(156).mean()), 0.01 * std::abs(direct(6)));
}

TEST(Dataset, JsonRoundTrip) {
  const auto sys = builtin("boat2d");
  const auto d = collect(*sys, sys->parameter_box(), 7, 3);
  const auto body = nlohmann::json::parse(dataset_to_json(d).dump());
  const auto meta = nlohmann::json::parse(dataset_meta(d).dump());
  EXPECT_EQ(body.at("header").at(0), "k1");
  EXPECT_EQ(body.at("header").at(3), "p1_1");
  const auto back = dataset_from_json(body, meta);
  EXPECT_EQ(back.system, "boat2d");
  EXPECT_EQ(back.data.features, d.data.features);
  EXPECT_EQ(back.data.labels, d.data.labels);
  auto bad = meta;
  bad["n_traj"] = 8;
  EXPECT_THROW(dataset_from_json(body, bad), InputError);
}

}  // namespace
}  // namespace neuralparc

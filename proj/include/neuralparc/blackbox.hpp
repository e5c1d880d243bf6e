#pragma once

// Synthetic black-box trajectory families and offline dataset collection.
//
// Both systems integrate their dynamics relative to the start position and
// add p0 afterwards, so translation invariance holds exactly. Disturbances act
// on speed, yaw rate and body-frame drift only.

#include "neuralparc/hpolytope.hpp"
#include "neuralparc/parallel.hpp"
#include "neuralparc/relu_network.hpp"
#include "neuralparc/trajectory_spec.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace neuralparc {

/// Workspace positions at the requested times (start at the origin) and the
/// final goal-state channels.
struct Rollout {
  std::vector<Vector> p;
  Vector q;
};

class BlackBoxSystem {
 public:
  virtual ~BlackBoxSystem() = default;

  virtual std::string name() const = 0;
  virtual TrajectorySpec spec() const = 0;
  /// Trajectory parameter box K.
  virtual Hyperrectangle parameter_box() const = 0;
  /// Per-channel amplitude of the disturbance family; empty if undisturbed.
  virtual Vector disturbance_amplitude() const { return {}; }
  /// Realised piecewise-constant disturbance values for one seed (one row
  /// per segment).
  virtual Matrix disturbance_profile(std::uint64_t) const { return {}; }

  /// Positions for p0 = 0 at each of `times` (ascending, within [0, t_f]).
  virtual Rollout rollout(const Vector& k, std::uint64_t disturbance_seed, const std::vector<double>& times) const = 0;

  Vector evaluate(const Vector& p0, const Vector& k, double t, std::uint64_t disturbance_seed) const {
    require(p0.size() == spec().n_p, "evaluate: p0 dimension mismatch");
    return rollout(k, disturbance_seed, {t}).p.front() + p0;
  }

  Vector final_q(const Vector& k, std::uint64_t disturbance_seed) const { return rollout(k, disturbance_seed, {}).q; }

  /// Positions on the label grid dt, 2dt, ..., t_f followed by q.
  Vector label(const Vector& k, std::uint64_t disturbance_seed) const {
    const auto s = spec();
    std::vector<double> times;
    for (int i = 1; i <= s.steps(); ++i) times.push_back(s.time(i));
    const auto r = rollout(k, disturbance_seed, times);
    Vector y(s.label_dim());
    for (int i = 0; i < s.steps(); ++i) y.segment(i * s.n_p, s.n_p) = r.p[static_cast<std::size_t>(i)];
    y.tail(s.n_q) = r.q;
    return y;
  }
};

namespace detail {

/// Fixed-step RK4 on a uniform grid of `substeps` steps per dt, with exact
/// partial steps for off-grid query times. `rhs(x, t, step_index)` may use
/// the step index to hold piecewise-constant inputs fixed within a step.
template <std::size_t N, typename Rhs>
void integrate(const std::array<double, N>& x0, double t_f, double dt, int substeps, const std::vector<double>& times,
               Rhs rhs, std::vector<std::array<double, N>>& at_times, std::array<double, N>& final_state) {
  using State = std::array<double, N>;
  const double h = dt / substeps;
  const long total = std::lround(t_f / h);
  auto step = [&](const State& x, double t, double hh, long idx) {
    auto axpy = [](const State& a, const State& b, double s) {
      State out;
      for (std::size_t i = 0; i < N; ++i) out[i] = a[i] + s * b[i];
      return out;
    };
    const State k1 = rhs(x, t, idx);
    const State k2 = rhs(axpy(x, k1, hh / 2), t + hh / 2, idx);
    const State k3 = rhs(axpy(x, k2, hh / 2), t + hh / 2, idx);
    const State k4 = rhs(axpy(x, k3, hh), t + hh, idx);
    State out;
    for (std::size_t i = 0; i < N; ++i) out[i] = x[i] + hh / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return out;
  };
  at_times.clear();
  at_times.reserve(times.size());
  State x = x0;
  std::size_t q = 0;
  for (long i = 0; i <= total; ++i) {
    const double t = static_cast<double>(i) * h;
    while (q < times.size()) {
      const double tq = times[q];
      require(tq >= -1e-12 && tq <= t_f + 1e-9, "rollout: query time outside [0, t_f]");
      require(q == 0 || tq >= times[q - 1], "rollout: query times must be ascending");
      const double rem = tq - t;
      if (rem > h * (1 - 1e-9) && i < total) break;
      at_times.push_back(std::abs(rem) <= 1e-12 * (1 + t_f) ? x : step(x, t, rem, i));
      ++q;
    }
    if (i < total) x = step(x, t, h, i);
  }
  final_state = x;
}

}  // namespace detail

/// Two-phase planar drift manoeuvre. Straight acceleration along +x to speed
/// v, then hard braking while the course swings toward -1.6·θ_β and the body
/// yaws toward π. k = (v, θ_β), q = final yaw. Undisturbed.
class Drift2d final : public BlackBoxSystem {
 public:
  static constexpr double kAccel = 3.0;
  static constexpr double kBrake = 2.5;
  static constexpr double kCourseGain = 1.5;
  static constexpr double kCourseScale = 1.6;
  static constexpr double kYawGain = 0.12;
  static constexpr int kSubsteps = 20;

  std::string name() const override { return "drift2d"; }
  TrajectorySpec spec() const override { return {2, 1, 7.8, 0.1}; }
  Hyperrectangle parameter_box() const override {
    Vector lo(2), hi(2);
    lo << 9.0, std::numbers::pi / 6.0;
    hi << 11.0, 2.0 * std::numbers::pi / 9.0;
    return {lo, hi};
  }

  Rollout rollout(const Vector& k, std::uint64_t, const std::vector<double>& times) const override {
    require(k.size() == 2, "drift2d: k must be (v, theta_beta)");
    const double v = k(0), beta = k(1);
    require(v > 0.0, "drift2d: v must be positive");
    const double t_switch = v / kAccel;
    // State: x, y, speed, course, yaw.
    using State = std::array<double, 5>;
    auto rhs = [&](const State& s, double t, long) {
      State d{};
      const double speed = std::max(s[2], 0.0);
      d[0] = speed * std::cos(s[3]);
      d[1] = speed * std::sin(s[3]);
      if (t < t_switch) {
        d[2] = kAccel;
      } else {
        d[2] = -kBrake * std::min(1.0, speed / 0.1);
        d[3] = -kCourseGain * (s[3] + kCourseScale * beta);
        d[4] = kYawGain * speed * (std::numbers::pi - s[4]);
      }
      return d;
    };
    const auto s = spec();
    std::vector<State> at;
    State final_state;
    detail::integrate<5>(State{}, s.t_f, s.dt, kSubsteps, times, rhs, at, final_state);
    Rollout out;
    for (const auto& st : at) out.p.push_back((Vector(2) << st[0], st[1]).finished());
    out.q = Vector::Constant(1, final_state[4]);
    return out;
  }
};

/// Planar unicycle steered toward the goal offset (g_x, g_y) from initial
/// heading θ0, with piecewise-constant (1 s) disturbances on relative speed,
/// yaw rate and lateral drift. k = (θ0, g_x, g_y), no goal-state channels.
class Boat2d final : public BlackBoxSystem {
 public:
  static constexpr int kSubsteps = 20;
  static constexpr double kSegment = 1.0;

  /// Multiplies the disturbance amplitudes; 0 gives the nominal closed loop.
  explicit Boat2d(double disturbance_scale = 1.0) : scale_(disturbance_scale) {
    require(disturbance_scale >= 0.0, "boat2d: disturbance scale must be >= 0");
  }

  std::string name() const override { return "boat2d"; }
  TrajectorySpec spec() const override { return {2, 0, 10.0, 0.1}; }
  Hyperrectangle parameter_box() const override {
    Vector lo(3), hi(3);
    lo << -std::numbers::pi / 6.0, 4.0, -1.0;
    hi << std::numbers::pi / 6.0, 7.0, 1.0;
    return {lo, hi};
  }
  Vector disturbance_amplitude() const override { return scale_ * (Vector(3) << 0.1, 0.05, 0.05).finished(); }

  Matrix disturbance_profile(std::uint64_t seed) const override {
    const int segments = static_cast<int>(std::ceil(spec().t_f / kSegment));
    const Vector amp = disturbance_amplitude();
    Rng rng(seed);
    Matrix D(segments, amp.size());
    for (int s = 0; s < segments; ++s)
      for (Eigen::Index c = 0; c < amp.size(); ++c) D(s, c) = rng.uniform(-amp(c), amp(c));
    return D;
  }

  Rollout rollout(const Vector& k, std::uint64_t disturbance_seed, const std::vector<double>& times) const override {
    require(k.size() == 3, "boat2d: k must be (theta0, g_x, g_y)");
    const Matrix D = disturbance_profile(disturbance_seed);
    const auto s = spec();
    const long steps_per_segment = std::lround(kSegment / (s.dt / kSubsteps));
    const double gx = k(1), gy = k(2);
    // State: x, y, heading, forward speed.
    using State = std::array<double, 4>;
    auto rhs = [&](const State& x, double, long idx) {
      const auto seg = std::min<Eigen::Index>(idx / steps_per_segment, D.rows() - 1);
      const double du = D(seg, 0), dw = D(seg, 1), dlat = D(seg, 2);
      const double ex = gx - x[0], ey = gy - x[1];
      const double dist = std::hypot(ex, ey);
      const double psi = std::atan2(ey, ex);
      const double u_des = std::min(1.0, 0.6 * dist);
      State d;
      d[0] = x[3] * std::cos(x[2]) - dlat * std::sin(x[2]);
      d[1] = x[3] * std::sin(x[2]) + dlat * std::cos(x[2]);
      d[2] = 1.5 * std::sin(psi - x[2]) * std::min(1.0, dist / 0.3) + dw;
      d[3] = (u_des * (1.0 + du) - x[3]) / 0.5;
      return d;
    };
    std::vector<State> at;
    State final_state;
    detail::integrate<4>(State{0.0, 0.0, k(0), 0.0}, s.t_f, s.dt, kSubsteps, times, rhs, at, final_state);
    Rollout out;
    for (const auto& st : at) out.p.push_back((Vector(2) << st[0], st[1]).finished());
    out.q = Vector(0);
    return out;
  }

 private:
  double scale_ = 1.0;
};

inline std::unique_ptr<BlackBoxSystem> builtin(const std::string& name) {
  if (name == "drift2d") return std::make_unique<Drift2d>();
  if (name == "boat2d") return std::make_unique<Boat2d>();
  throw InputError("unknown system '" + name + "' (expected drift2d or boat2d)");
}

// ---------------------------------------------------------------------------
// Datasets

struct Dataset {
  TrainingSet data;
  std::string system;
  std::uint64_t seed = 0;
  Hyperrectangle parameter_box;

  int n_traj() const { return data.size(); }
};

/// Disturbance seed of trajectory i in a collection run.
inline std::uint64_t collection_disturbance_seed(std::uint64_t seed, int i) {
  return derive_seed(derive_seed(seed, 0xd157), static_cast<std::uint64_t>(i));
}

/// n_traj rollouts at p0 = 0 with k uniform in Kd.
inline Dataset collect(const BlackBoxSystem& system, const Hyperrectangle& Kd, int n_traj, std::uint64_t seed) {
  require(n_traj >= 1, "collect: n_traj must be >= 1");
  const auto spec = system.spec();
  require(Kd.dim() == system.parameter_box().dim(), "collect: parameter box dimension mismatch");
  const auto ks = sample_uniform(Kd, n_traj, seed);
  Dataset out;
  out.system = system.name();
  out.seed = seed;
  out.parameter_box = Kd;
  out.data.spec = spec;
  out.data.features.resize(n_traj, Kd.dim());
  out.data.labels.resize(n_traj, spec.label_dim());
  parallel_for(n_traj, [&](int i) {
    try {
      out.data.labels.row(i) = system.label(ks[static_cast<std::size_t>(i)], collection_disturbance_seed(seed, i));
    } catch (const std::exception& e) {
      throw std::runtime_error("collect: trajectory " + std::to_string(i) + " failed: " + e.what());
    }
  });
  for (int i = 0; i < n_traj; ++i) out.data.features.row(i) = ks[static_cast<std::size_t>(i)].transpose();
  return out;
}

inline std::vector<std::string> dataset_header(const Dataset& d) {
  std::vector<std::string> h;
  for (Eigen::Index i = 0; i < d.data.features.cols(); ++i) h.push_back("k" + std::to_string(i + 1));
  const auto& s = *d.data.spec;
  for (int step = 1; step <= s.steps(); ++step)
    for (int c = 0; c < s.n_p; ++c) h.push_back("p" + std::to_string(step) + "_" + std::to_string(c + 1));
  for (int c = 0; c < s.n_q; ++c) h.push_back("q" + std::to_string(c + 1));
  return h;
}

/// Columnar JSON: {"header": [...], "columns": [[...], ...]}.
inline nlohmann::json dataset_to_json(const Dataset& d) {
  auto columns = nlohmann::json::array();
  for (Eigen::Index c = 0; c < d.data.features.cols(); ++c) columns.push_back(vector_to_json(d.data.features.col(c)));
  for (Eigen::Index c = 0; c < d.data.labels.cols(); ++c) columns.push_back(vector_to_json(d.data.labels.col(c)));
  return {{"header", dataset_header(d)}, {"columns", std::move(columns)}};
}

inline nlohmann::json dataset_meta(const Dataset& d) {
  return {{"system", d.system},
          {"seed", d.seed},
          {"n_traj", d.n_traj()},
          {"spec", to_json(*d.data.spec)},
          {"parameter_box", to_json(d.parameter_box)}};
}

inline std::string meta_path(const std::string& path) { return path + ".meta.json"; }

inline Dataset dataset_from_json(const nlohmann::json& body, const nlohmann::json& meta) {
  Dataset d;
  d.system = meta.at("system").get<std::string>();
  d.seed = meta.at("seed").get<std::uint64_t>();
  d.parameter_box = box_from_json(meta.at("parameter_box"));
  d.data.spec = trajectory_spec_from_json(meta.at("spec"));
  const auto& cols = body.at("columns");
  const int n_k = d.parameter_box.dim();
  const int n_l = d.data.spec->label_dim();
  require(static_cast<int>(cols.size()) == n_k + n_l, "dataset: column count does not match the metadata");
  const int n = meta.at("n_traj").get<int>();
  d.data.features.resize(n, n_k);
  d.data.labels.resize(n, n_l);
  for (int c = 0; c < n_k + n_l; ++c) {
    const Vector col = vector_from_json(cols.at(static_cast<std::size_t>(c)));
    require(col.size() == n, "dataset: ragged column " + std::to_string(c));
    if (c < n_k) d.data.features.col(c) = col;
    else d.data.labels.col(c - n_k) = col;
  }
  d.data.validate();
  return d;
}

}  // namespace neuralparc

#pragma once

#include "neuralparc/common.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace neuralparc {

/// Time grid and channel layout of a trajectory family: workspace dimension
/// n_p, extra goal-state dimension n_q, final time t_f and timestep dt with
/// t_f an integer multiple of dt.
struct TrajectorySpec {
  int n_p = 2;
  int n_q = 0;
  double t_f = 1.0;
  double dt = 0.1;

  void validate() const {
    require(dt > 0.0, "TrajectorySpec: dt must be positive");
    require(n_p >= 1, "TrajectorySpec: n_p must be >= 1");
    require(n_q >= 0, "TrajectorySpec: n_q must be >= 0");
    const double ratio = t_f / dt;
    require(ratio >= 1.0 - 1e-9 && std::abs(ratio - std::round(ratio)) < 1e-9,
            "TrajectorySpec: t_f must be a positive integer multiple of dt");
  }

  /// Number of timesteps t_f / dt.
  int steps() const { return static_cast<int>(std::lround(t_f / dt)); }

  /// Network output length: (t_f/dt)·n_p + n_q.
  int label_dim() const { return steps() * n_p + n_q; }

  /// Time of grid index s (0..steps()).
  double time(int s) const { return s * dt; }

  bool operator==(const TrajectorySpec&) const = default;
};

inline nlohmann::json to_json(const TrajectorySpec& s) {
  return {{"n_p", s.n_p}, {"n_q", s.n_q}, {"t_f", s.t_f}, {"dt", s.dt}};
}

inline TrajectorySpec trajectory_spec_from_json(const nlohmann::json& j) {
  TrajectorySpec s{j.at("n_p").get<int>(), j.at("n_q").get<int>(), j.at("t_f").get<double>(),
                   j.at("dt").get<double>()};
  s.validate();
  return s;
}

}  // namespace neuralparc

#pragma once

#include "neuralparc/relu_network.hpp"
#include "neuralparc/rpm.hpp"
#include "neuralparc/trajectory_spec.hpp"

#include <vector>

namespace neuralparc {

/// Predicted workspace positions p̂(0), p̂(dt), ..., p̂(t_f) and goal states q̂.
struct Trajectory {
  std::vector<Vector> p;
  Vector q;
};

/// Row offset (0-based) of the block for grid step s >= 1 in the network output.
inline int position_row(const TrajectorySpec& spec, int s) { return (s - 1) * spec.n_p; }

/// Row offset of the goal-state block in the network output.
inline int goal_state_row(const TrajectorySpec& spec) { return spec.steps() * spec.n_p; }

/// ξ(k) plus p0 stacked on every position block; p̂(0) = p0.
inline Trajectory predict(const ReluNetwork& net, const TrajectorySpec& spec, const Vector& p0, const Vector& k) {
  require(net.output_dim() == spec.label_dim(), "predict: network output length does not match the spec");
  require(p0.size() == spec.n_p, "predict: p0 dimension mismatch");
  require(k.size() == net.input_dim(), "predict: k dimension mismatch");
  const Vector y = net.forward(k);
  Trajectory out;
  out.p.reserve(static_cast<std::size_t>(spec.steps()) + 1);
  out.p.push_back(p0);
  for (int s = 1; s <= spec.steps(); ++s) out.p.push_back(y.segment(position_row(spec, s), spec.n_p) + p0);
  out.q = y.segment(goal_state_row(spec), spec.n_q);
  return out;
}

/// Per-timestep affine maps of one region over the stacked input [p0; k]:
/// p̂(t) = C_t[s] [p0; k] + d_t[s], q̂ = C_q [p0; k] + d_q.
struct SlicedAffineMap {
  std::vector<Matrix> C_t;  // steps + 1 entries, each n_p x (n_p + n_k)
  std::vector<Vector> d_t;
  Matrix C_q;  // n_q x (n_p + n_k)
  Vector d_q;
  int region_index = 0;

  /// Stacked final-time map [C_tf; C_q], [d_tf; d_q].
  std::pair<Matrix, Vector> final_state_map() const {
    const auto& Cf = C_t.back();
    Matrix C(Cf.rows() + C_q.rows(), Cf.cols());
    C << Cf, C_q;
    Vector d(C.rows());
    d << d_t.back(), d_q;
    return {C, d};
  }
};

/// Row-block extraction from a region's map (C, d): identity workspace block
/// on every position slice, zero workspace block on the goal-state slice.
inline SlicedAffineMap slice(const Matrix& C, const Vector& d, const TrajectorySpec& spec, int region_index = 0) {
  require(C.rows() == spec.label_dim() && d.size() == spec.label_dim(),
          "slice: region map output length does not match the spec");
  const int np = spec.n_p;
  const auto nk = C.cols();
  SlicedAffineMap out;
  out.region_index = region_index;
  Matrix C0 = Matrix::Zero(np, np + nk);
  C0.leftCols(np) = Matrix::Identity(np, np);
  out.C_t.push_back(C0);
  out.d_t.push_back(Vector::Zero(np));
  for (int s = 1; s <= spec.steps(); ++s) {
    Matrix Cs(np, np + nk);
    Cs << Matrix::Identity(np, np), C.middleRows(position_row(spec, s), np);
    out.C_t.push_back(std::move(Cs));
    out.d_t.push_back(d.segment(position_row(spec, s), np));
  }
  out.C_q.resize(spec.n_q, np + nk);
  out.C_q << Matrix::Zero(spec.n_q, np), C.middleRows(goal_state_row(spec), spec.n_q);
  out.d_q = d.segment(goal_state_row(spec), spec.n_q);
  return out;
}

inline SlicedAffineMap slice(const AffineRegion& region, const TrajectorySpec& spec) {
  return slice(region.C, region.d, spec, region.index);
}

/// Linear interpolation between grid positions: p̂(t') for t <= t' <= t + dt.
inline Vector interpolate(const Vector& p_t, const Vector& p_next, double t, double dt, double t_query) {
  require(p_t.size() == p_next.size(), "interpolate: dimension mismatch");
  require(dt > 0.0, "interpolate: dt must be positive");
  require(t_query >= t - 1e-12 && t_query <= t + dt + 1e-12, "interpolate: query time outside [t, t + dt]");
  return p_t + (p_next - p_t) * ((t_query - t) / dt);
}

}  // namespace neuralparc

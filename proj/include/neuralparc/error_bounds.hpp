#pragma once

// Sampled modelling-error bounds between a trajectory model and a black-box
// system: per-channel maxima of the final error and of the interval error
// against the linearly interpolated prediction.

#include "neuralparc/blackbox.hpp"
#include "neuralparc/parallel.hpp"
#include "neuralparc/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <vector>

namespace neuralparc {

struct ErrorBounds {
  Vector e_final;      // n_p + n_q
  Matrix e_interval;   // steps x n_p, row s covers [s·dt, (s+1)·dt]
  int n_sample = 0;
  Hyperrectangle subdomain;
};

struct EstimateOptions {
  int n_sample = 10000;
  int n_substeps = 10;
  std::uint64_t seed = 0;
};

/// Error of one (p0, k, disturbance) sample.
struct SampleError {
  Vector final_error;  // |model - system| per channel at t_f
  Matrix interval;     // per-interval max over the sub-sample times
};

/// The n_substeps evenly spaced query times (both endpoints included) within
/// each interval, flattened in time order.
inline std::vector<double> substep_times(const TrajectorySpec& spec, int n_substeps) {
  std::vector<double> times;
  for (int s = 0; s < spec.steps(); ++s)
    for (int j = 0; j < n_substeps; ++j) {
      const double t = spec.time(s) + spec.dt * j / (n_substeps - 1);
      times.push_back(j == n_substeps - 1 ? spec.time(s + 1) : t);
    }
  return times;
}

inline SampleError sample_error(const BlackBoxSystem& system, const ReluNetwork& net, const TrajectorySpec& spec,
                                const Vector& p0, const Vector& k, std::uint64_t disturbance_seed, int n_substeps,
                                const std::vector<double>& times) {
  const auto model = predict(net, spec, p0, k);
  const auto truth = system.rollout(k, disturbance_seed, times);
  SampleError out;
  out.interval = Matrix::Zero(spec.steps(), spec.n_p);
  for (int s = 0; s < spec.steps(); ++s) {
    const auto& a = model.p[static_cast<std::size_t>(s)];
    const auto& b = model.p[static_cast<std::size_t>(s) + 1];
    for (int j = 0; j < n_substeps; ++j) {
      const auto idx = static_cast<std::size_t>(s * n_substeps + j);
      const Vector predicted = interpolate(a, b, spec.time(s), spec.dt, times[idx]);
      const Vector actual = truth.p[idx] + p0;
      out.interval.row(s) = out.interval.row(s).cwiseMax((predicted - actual).cwiseAbs().transpose());
    }
  }
  out.final_error.resize(spec.n_p + spec.n_q);
  out.final_error.head(spec.n_p) = (model.p.back() - (truth.p.back() + p0)).cwiseAbs();
  out.final_error.tail(spec.n_q) = (model.q - truth.q).cwiseAbs();
  return out;
}

/// Sample i of an estimation run draws p0, k and its disturbance seed from
/// streams keyed by (seed, i), so runs with more samples extend runs with
/// fewer.
struct SamplePoint {
  Vector p0, k;
  std::uint64_t disturbance_seed;
};

inline SamplePoint sample_point(const Hyperrectangle& P0, const Hyperrectangle& Kd, std::uint64_t seed, int i) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
  SamplePoint s;
  s.p0.resize(P0.dim());
  s.k.resize(Kd.dim());
  for (int c = 0; c < P0.dim(); ++c) s.p0(c) = rng.uniform(P0.lower()(c), P0.upper()(c));
  for (int c = 0; c < Kd.dim(); ++c) s.k(c) = rng.uniform(Kd.lower()(c), Kd.upper()(c));
  s.disturbance_seed = rng.next();
  return s;
}

inline std::vector<SampleError> sample_errors(const BlackBoxSystem& system, const ReluNetwork& net,
                                              const TrajectorySpec& spec, const Hyperrectangle& P0,
                                              const Hyperrectangle& Kd, const EstimateOptions& opt,
                                              std::vector<SamplePoint>* points = nullptr) {
  require(opt.n_sample >= 1, "estimate: n_sample must be >= 1");
  require(opt.n_substeps >= 2, "estimate: n_substeps must be >= 2");
  require(P0.dim() == spec.n_p, "estimate: P0 dimension mismatch");
  require(Kd.dim() == net.input_dim(), "estimate: K dimension mismatch");
  const auto times = substep_times(spec, opt.n_substeps);
  std::vector<SampleError> errors(static_cast<std::size_t>(opt.n_sample));
  std::vector<SamplePoint> pts(static_cast<std::size_t>(opt.n_sample));
  parallel_for(opt.n_sample, [&](int i) {
    auto& pt = pts[static_cast<std::size_t>(i)];
    pt = sample_point(P0, Kd, opt.seed, i);
    try {
      errors[static_cast<std::size_t>(i)] =
          sample_error(system, net, spec, pt.p0, pt.k, pt.disturbance_seed, opt.n_substeps, times);
    } catch (const std::exception& e) {
      throw std::runtime_error("estimate: sample " + std::to_string(i) + " failed: " + e.what());
    }
  });
  if (points) *points = std::move(pts);
  return errors;
}

inline ErrorBounds zero_bounds(const TrajectorySpec& spec, const Hyperrectangle& subdomain) {
  return {Vector::Zero(spec.n_p + spec.n_q), Matrix::Zero(spec.steps(), spec.n_p), 0, subdomain};
}

inline void absorb(ErrorBounds& b, const SampleError& e) {
  b.e_final = b.e_final.cwiseMax(e.final_error);
  b.e_interval = b.e_interval.cwiseMax(e.interval);
  ++b.n_sample;
}

inline ErrorBounds estimate(const BlackBoxSystem& system, const ReluNetwork& net, const TrajectorySpec& spec,
                            const Hyperrectangle& P0, const Hyperrectangle& Kd, const EstimateOptions& opt) {
  auto out = zero_bounds(spec, Kd);
  for (const auto& e : sample_errors(system, net, spec, P0, Kd, opt)) absorb(out, e);
  return out;
}

/// Origin-centred boxes: E_tf and one Ē_t per interval.
struct ErrorSets {
  Hyperrectangle final_set;
  std::vector<Hyperrectangle> interval_sets;
};

inline ErrorSets error_sets(const ErrorBounds& b) {
  ErrorSets out{Hyperrectangle::centred(b.e_final), {}};
  for (Eigen::Index s = 0; s < b.e_interval.rows(); ++s)
    out.interval_sets.push_back(Hyperrectangle::centred(b.e_interval.row(s).transpose()));
  return out;
}

// ---------------------------------------------------------------------------
// Partitioning of K

/// Grid of cells over K. Cells are half-open [lo, hi) except the last along
/// each axis, which is closed.
class KPartition {
 public:
  KPartition() = default;

  KPartition(Hyperrectangle K, std::vector<int> splits) : K_(std::move(K)), splits_(std::move(splits)) {
    require(static_cast<int>(splits_.size()) == K_.dim(), "partition: one split count per dimension");
    for (int s : splits_) require(s >= 1, "partition: splits must be >= 1");
  }

  const Hyperrectangle& domain() const { return K_; }
  const std::vector<int>& splits() const { return splits_; }

  int size() const {
    int n = 1;
    for (int s : splits_) n *= s;
    return n;
  }

  /// Cell c in row-major order over the axes (last axis fastest).
  Hyperrectangle cell(int c) const {
    require(c >= 0 && c < size(), "partition: cell index out of range");
    Vector lo(K_.dim()), hi(K_.dim());
    for (int d = K_.dim() - 1; d >= 0; --d) {
      const int s = splits_[static_cast<std::size_t>(d)];
      const int i = c % s;
      c /= s;
      const double w = (K_.upper()(d) - K_.lower()(d)) / s;
      lo(d) = K_.lower()(d) + i * w;
      hi(d) = i == s - 1 ? K_.upper()(d) : K_.lower()(d) + (i + 1) * w;
    }
    return {lo, hi};
  }

  int locate(const Vector& k) const {
    require(k.size() == K_.dim(), "partition: query dimension mismatch");
    require(K_.contains(k, 0.0), "partition: k lies outside K");
    int c = 0;
    for (int d = 0; d < K_.dim(); ++d) {
      const int s = splits_[static_cast<std::size_t>(d)];
      const double w = (K_.upper()(d) - K_.lower()(d)) / s;
      int i = w > 0.0 ? static_cast<int>(std::floor((k(d) - K_.lower()(d)) / w)) : 0;
      i = std::clamp(i, 0, s - 1);
      // Guard against rounding at interior cell edges.
      if (i > 0 && k(d) < cell_lower(d, i)) --i;
      if (i < s - 1 && k(d) >= cell_lower(d, i + 1)) ++i;
      c = c * s + i;
    }
    return c;
  }

 private:
  double cell_lower(int d, int i) const {
    const int s = splits_[static_cast<std::size_t>(d)];
    return K_.lower()(d) + i * (K_.upper()(d) - K_.lower()(d)) / s;
  }

  Hyperrectangle K_;
  std::vector<int> splits_;
};

struct PartitionedBounds {
  KPartition partition;
  ErrorBounds global;
  std::vector<ErrorBounds> cells;

  const ErrorBounds& at(const Vector& k) const { return cells[static_cast<std::size_t>(partition.locate(k))]; }
};

/// One sample set over K; each cell keeps the maxima of the samples that fall
/// inside it and the global bound is the maximum over all of them.
inline PartitionedBounds partition_and_estimate(const BlackBoxSystem& system, const ReluNetwork& net,
                                                const TrajectorySpec& spec, const Hyperrectangle& P0,
                                                const KPartition& partition, const EstimateOptions& opt) {
  std::vector<SamplePoint> points;
  const auto errors = sample_errors(system, net, spec, P0, partition.domain(), opt, &points);
  PartitionedBounds out;
  out.partition = partition;
  out.global = zero_bounds(spec, partition.domain());
  for (int c = 0; c < partition.size(); ++c) out.cells.push_back(zero_bounds(spec, partition.cell(c)));
  for (std::size_t i = 0; i < errors.size(); ++i) {
    absorb(out.global, errors[i]);
    absorb(out.cells[static_cast<std::size_t>(partition.locate(points[i].k))], errors[i]);
  }
  for (int c = 0; c < partition.size(); ++c)
    if (out.cells[static_cast<std::size_t>(c)].n_sample == 0)
      throw InputError("bounds: cell " + std::to_string(c) + " received no samples; raise n_sample or lower splits");
  return out;
}

// ---------------------------------------------------------------------------
// Validation on fresh samples

struct ValidationReport {
  int n_fresh = 0;
  int n_exceed = 0;     // samples with at least one channel above its bound
  double max_excess = 0.0;

  double fraction() const { return n_fresh > 0 ? static_cast<double>(n_exceed) / n_fresh : 0.0; }
  bool clean() const { return n_exceed == 0; }
};

/// Re-samples `factor` times as many fresh points (independent stream) and
/// counts bound exceedances against the cell bounds. Excesses up to `tol`
/// are round-off and not counted.
inline ValidationReport validate(const BlackBoxSystem& system, const ReluNetwork& net, const TrajectorySpec& spec,
                                 const Hyperrectangle& P0, const PartitionedBounds& bounds, const EstimateOptions& opt,
                                 int factor = 10, double tol = 1e-9) {
  EstimateOptions fresh = opt;
  fresh.n_sample = factor * opt.n_sample;
  fresh.seed = derive_seed(opt.seed, 0xf7e5);
  std::vector<SamplePoint> points;
  const auto errors = sample_errors(system, net, spec, P0, bounds.partition.domain(), fresh, &points);
  ValidationReport out;
  out.n_fresh = fresh.n_sample;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    const auto& b = bounds.at(points[i].k);
    const double excess = std::max((errors[i].final_error - b.e_final).maxCoeff(),
                                   (errors[i].interval - b.e_interval).maxCoeff());
    if (excess > tol) {
      ++out.n_exceed;
      out.max_excess = std::max(out.max_excess, excess);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON: {"e_final", "e_interval", "n_sample", "subdomain"}

inline nlohmann::json to_json(const ErrorBounds& b) {
  return {{"e_final", vector_to_json(b.e_final)},
          {"e_interval", matrix_to_json(b.e_interval)},
          {"n_sample", b.n_sample},
          {"subdomain", to_json(b.subdomain)}};
}

inline ErrorBounds error_bounds_from_json(const nlohmann::json& j) {
  ErrorBounds b;
  b.e_final = vector_from_json(j.at("e_final"));
  b.e_interval = matrix_from_json(j.at("e_interval"));
  b.n_sample = j.at("n_sample").get<int>();
  b.subdomain = box_from_json(j.at("subdomain"));
  require((b.e_final.array() >= 0.0).all() && (b.e_interval.array() >= 0.0).all(), "bounds: negative entry");
  return b;
}

inline nlohmann::json to_json(const ValidationReport& v) {
  return {{"n_fresh", v.n_fresh}, {"n_exceed", v.n_exceed}, {"fraction", v.fraction()}, {"max_excess", v.max_excess}};
}

inline nlohmann::json to_json(const PartitionedBounds& p) {
  auto cells = nlohmann::json::array();
  for (const auto& c : p.cells) cells.push_back(to_json(c));
  return {{"global", to_json(p.global)}, {"splits", p.partition.splits()}, {"cells", std::move(cells)}};
}

inline PartitionedBounds partitioned_bounds_from_json(const nlohmann::json& j) {
  PartitionedBounds p;
  p.global = error_bounds_from_json(j.at("global"));
  p.partition = KPartition(p.global.subdomain, j.at("splits").get<std::vector<int>>());
  for (const auto& c : j.at("cells")) p.cells.push_back(error_bounds_from_json(c));
  require(static_cast<int>(p.cells.size()) == p.partition.size(), "bounds: cell count does not match splits");
  return p;
}

}  // namespace neuralparc

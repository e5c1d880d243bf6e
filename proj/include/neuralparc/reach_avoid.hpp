#pragma once

// Online reach-avoid computation on the piecewise-affine form of a trajectory
// model: goal shrinking and obstacle buffering, per-region reach sets (Ω),
// per-region avoid sets (Λ pieces) and sampling of Ω \ Λ.

#include "neuralparc/ahpolytope.hpp"
#include "neuralparc/error_bounds.hpp"
#include "neuralparc/rpm.hpp"
#include "neuralparc/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace neuralparc {

struct Scenario {
  std::string system;
  Hyperrectangle P0;
  Hyperrectangle K;
  TrajectorySpec spec;
  HPolytope goal;                    // in R^{n_p + n_q}
  std::vector<HPolytope> obstacles;  // in R^{n_p}
  double agent_radius = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    spec.validate();
    require(P0.dim() == spec.n_p, "scenario: P0 must live in the workspace (n_p)");
    require(P0.contains(Vector::Zero(spec.n_p), 0.0), "scenario: P0 must contain the origin");
    require(goal.dim() == spec.n_p + spec.n_q, "scenario: goal dimension must be n_p + n_q");
    for (const auto& o : obstacles) require(o.dim() == spec.n_p, "scenario: obstacle dimension must be n_p");
    require(agent_radius >= 0.0, "scenario: agent_radius must be >= 0");
    require(agent_radius == 0.0 || spec.n_p == 2, "scenario: agent_radius needs a planar workspace");
  }
};

inline nlohmann::json to_json(const Scenario& s) {
  auto obstacles = nlohmann::json::array();
  for (const auto& o : s.obstacles) obstacles.push_back(to_json(o));
  return {{"system", s.system},     {"P0", to_json(s.P0)},         {"K", to_json(s.K)},
          {"spec", to_json(s.spec)}, {"goal", to_json(s.goal)},     {"obstacles", obstacles},
          {"agent_radius", s.agent_radius}, {"seed", s.seed}};
}

/// Missing "K" and "spec" entries fall back to the given defaults.
inline Scenario scenario_from_json(const nlohmann::json& j, const std::optional<Hyperrectangle>& default_K = {},
                                   const std::optional<TrajectorySpec>& default_spec = {}) {
  Scenario s;
  s.system = j.value("system", std::string{});
  s.P0 = box_from_json(j.at("P0"));
  if (j.contains("K")) s.K = box_from_json(j.at("K"));
  else if (default_K) s.K = *default_K;
  else throw InputError("scenario: missing K");
  if (j.contains("spec")) s.spec = trajectory_spec_from_json(j.at("spec"));
  else if (default_spec) s.spec = *default_spec;
  else throw InputError("scenario: missing spec");
  s.goal = hpolytope_from_json(j.at("goal"));
  for (const auto& o : j.value("obstacles", nlohmann::json::array())) s.obstacles.push_back(hpolytope_from_json(o));
  s.agent_radius = j.value("agent_radius", 0.0);
  s.seed = j.value("seed", std::uint64_t{0});
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Goal shrinking and obstacle buffering

struct PreparedSets {
  HPolytope goal;                               // G ⊖ E_tf
  bool goal_empty = false;
  std::vector<std::vector<HPolytope>> obstacles;  // [interval][obstacle]: (O ⊕ body) ⊕ Ē_t
};

/// Obstacles grown by the agent body (circumscribed octagon).
inline std::vector<HPolytope> body_buffered_obstacles(const Scenario& s) {
  std::vector<HPolytope> out;
  for (const auto& o : s.obstacles)
    out.push_back(s.agent_radius > 0.0 ? minkowski_buffer(o, circumscribed_octagon(s.agent_radius)) : o);
  return out;
}

inline PreparedSets prepare(const Scenario& s, const ErrorBounds& bounds,
                            const std::vector<HPolytope>* body_buffered = nullptr) {
  require(bounds.e_final.size() == s.goal.dim(), "prepare: final error length must be n_p + n_q");
  require(bounds.e_interval.rows() == s.spec.steps() && bounds.e_interval.cols() == s.spec.n_p,
          "prepare: interval error must be steps x n_p");
  const auto sets = error_sets(bounds);
  PreparedSets out;
  out.goal = pontryagin_diff(s.goal, sets.final_set);
  out.goal_empty = is_empty(out.goal);
  const auto grown = body_buffered ? *body_buffered : body_buffered_obstacles(s);
  for (const auto& E : sets.interval_sets) {
    std::vector<HPolytope> row;
    for (const auto& o : grown) row.push_back(minkowski_buffer(o, E));
    out.obstacles.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reach set

struct ReachSet {
  HPolytope omega;  // over [p0; k]
  int n_p = 0;
  int region_index = 0;
  bool empty = true;
};

/// Ω = {[p0; k] ∈ P0 × region | [C_tf; C_q][p0; k] + [d_tf; d_q] ∈ G̃}.
inline ReachSet compute_brs(const HPolytope& region, const SlicedAffineMap& sliced, const Scenario& s,
                            const HPolytope& goal) {
  require(region.dim() == sliced.C_q.cols() - s.spec.n_p, "compute_brs: region dimension mismatch");
  const auto [C, d] = sliced.final_state_map();
  ReachSet out;
  out.omega = preimage(goal, cartesian_product(s.P0.as_hpolytope(), region), C, d);
  out.n_p = s.spec.n_p;
  out.region_index = sliced.region_index;
  out.empty = is_empty(out.omega);
  return out;
}

// ---------------------------------------------------------------------------
// Avoid set

/// Workspace starts p0 whose step-`step` prediction lies in `obstacle` for
/// some k in the region: proj_{n_p} of the preimage over R^{n_p} × region.
inline AHPolytope avoid_base(const HPolytope& region, const SlicedAffineMap& sliced, int step,
                             const HPolytope& obstacle) {
  const int np = obstacle.dim();
  const auto lifted = preimage(obstacle, cartesian_product(HPolytope::universe(np), region),
                               sliced.C_t[static_cast<std::size_t>(step)], sliced.d_t[static_cast<std::size_t>(step)]);
  return project(lifted, np);
}

struct AvoidPiece {
  AHPolytope set;
  int step = 0;      // interval [step·dt, (step+1)·dt]
  int obstacle = 0;
};

struct AvoidSet {
  std::vector<AvoidPiece> pieces;  // nonempty pieces only
  int region_index = 0;
  int n_total = 0;
  int n_pruned = 0;
};

/// One piece per (interval, obstacle): proj(Ω) ∩ conv(B_t, B_{t+dt}), both
/// bases built against the same buffered obstacle of interval t. Empty pieces
/// are dropped.
inline AvoidSet compute_bas(const HPolytope& region, const SlicedAffineMap& sliced, const ReachSet& omega,
                            const std::vector<std::vector<HPolytope>>& obstacles) {
  AvoidSet out;
  out.region_index = sliced.region_index;
  const int steps = static_cast<int>(sliced.C_t.size()) - 1;
  require(static_cast<int>(obstacles.size()) == steps, "compute_bas: one obstacle list per interval expected");
  if (omega.empty) return out;
  const auto start_set = project(omega.omega, omega.n_p);
  for (int t = 0; t < steps; ++t) {
    const auto& row = obstacles[static_cast<std::size_t>(t)];
    for (std::size_t j = 0; j < row.size(); ++j) {
      ++out.n_total;
      const auto b0 = avoid_base(region, sliced, t, row[j]);
      const auto b1 = avoid_base(region, sliced, t + 1, row[j]);
      // conv(∅, ∅) = ∅: skip the larger hull LP when both bases are empty.
      if (is_empty_ah(b0) && is_empty_ah(b1)) {
        ++out.n_pruned;
        continue;
      }
      auto piece = intersect_ah(start_set, convex_hull_ah(b0, b1));
      if (is_empty_ah(piece)) {
        ++out.n_pruned;
        continue;
      }
      out.pieces.push_back({std::move(piece), t, static_cast<int>(j)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling Ω \ Λ

struct BrasSample {
  Vector p0;
  Vector k;
  int region_index = 0;
  int cell = 0;
  std::vector<std::uint8_t> certificate;  // per nonempty piece: 1 if p0 was found inside
};

/// Strict membership in Ω (rows tightened by kFeasTol·|row|).
inline bool inside_reach_set(const HPolytope& omega, const Vector& z) {
  const auto& A = omega.A();
  const auto& b = omega.b();
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    if (A.row(i).dot(z) > b(i) - kFeasTol * A.row(i).norm()) return false;
  return true;
}

struct SampleStats {
  int tried = 0;        // candidates inside Ω
  int drawn = 0;        // candidates drawn from the bounding box
};

/// Up to n_max candidates uniform in Ω (rejection from its bounding box);
/// keeps those whose p0 lies in no avoid piece.
inline std::vector<BrasSample> sample_bras(const ReachSet& omega, const AvoidSet& avoid, int n_max,
                                           std::uint64_t seed, SampleStats* stats = nullptr) {
  std::vector<BrasSample> out;
  SampleStats local;
  if (omega.empty || n_max <= 0) {
    if (stats) *stats = local;
    return out;
  }
  const auto box = bounding_box(omega.omega);
  if (!box) {
    if (stats) *stats = local;
    return out;
  }
  Rng rng(seed);
  const long max_draws = 200L * n_max;
  for (long draw = 0; draw < max_draws && local.tried < n_max; ++draw) {
    Vector z(box->dim());
    for (int i = 0; i < box->dim(); ++i) z(i) = rng.uniform(box->lower()(i), box->upper()(i));
    ++local.drawn;
    if (!inside_reach_set(omega.omega, z)) continue;
    ++local.tried;
    BrasSample s;
    s.region_index = omega.region_index;
    bool blocked = false;
    for (const auto& piece : avoid.pieces) {
      const bool hit = contains_point_ah(piece.set, z.head(omega.n_p), Boundary::Inclusive);
      s.certificate.push_back(hit ? 1 : 0);
      if (hit) {
        blocked = true;
        break;
      }
    }
    if (blocked) continue;
    s.p0 = z.head(omega.n_p);
    s.k = z.tail(z.size() - omega.n_p);
    out.push_back(std::move(s));
  }
  if (stats) *stats = local;
  return out;
}

// ---------------------------------------------------------------------------
// Region exploration

enum class SolveOutcome { Found, Exhausted, Budget, GoalInfeasible };

inline std::string to_string(SolveOutcome o) {
  switch (o) {
    case SolveOutcome::Found:
      return "found";
    case SolveOutcome::Exhausted:
      return "exhausted";
    case SolveOutcome::Budget:
      return "budget";
    case SolveOutcome::GoalInfeasible:
      return "goal_infeasible";
  }
  return "unknown";
}

struct SolveOptions {
  std::size_t budget_regions = 1000;
  double budget_seconds = 0.0;  // 0 = unlimited
  int samples_per_region = 50;
  RpmOptions rpm;
};

struct RegionRecord {
  int region_index = 0;
  int cell = 0;
  bool brs_empty = true;
  int n_pieces = 0;
  int n_pruned = 0;
  int samples_tried = 0;
  int n_found = 0;
  double seconds = 0.0;
};

struct SolveReport {
  SolveOutcome outcome = SolveOutcome::Exhausted;
  int regions_explored = 0;
  Vector seed_k;
  std::vector<RegionRecord> records;
  std::vector<BrasSample> samples;
  double seconds = 0.0;
};

/// Walks the PWA regions of the model over K from a seeded random k. In each
/// (region, bound cell) pair: Ω, then Λ, then up to samples_per_region draws.
/// Stops at the first pair that yields samples.
inline SolveReport solve(const Scenario& s, const ReluNetwork& net, const PartitionedBounds& bounds,
                         const SolveOptions& opt = {}) {
  s.validate();
  require(net.input_dim() == s.K.dim(), "solve: network input dimension must equal dim(K)");
  require(net.output_dim() == s.spec.label_dim(), "solve: network output does not match the trajectory spec");
  const auto clock_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  };

  SolveReport report;
  const auto& partition = bounds.partition;
  const auto body = body_buffered_obstacles(s);
  std::vector<PreparedSets> prepared;
  std::vector<HPolytope> cell_boxes;
  std::vector<char> cell_in_K;
  bool any_goal = false;
  for (int c = 0; c < partition.size(); ++c) {
    prepared.push_back(prepare(s, bounds.cells[static_cast<std::size_t>(c)], &body));
    const auto cell = partition.cell(c);
    cell_boxes.push_back(cell.as_hpolytope());
    cell_in_K.push_back(!is_empty(intersect(cell_boxes.back(), s.K.as_hpolytope())));
    any_goal = any_goal || (!prepared.back().goal_empty && cell_in_K.back());
  }
  if (!any_goal) {
    report.outcome = SolveOutcome::GoalInfeasible;
    report.seconds = elapsed();
    return report;
  }

  Rng rng(derive_seed(s.seed, 0x5eed));
  report.seed_k.resize(s.K.dim());
  for (int i = 0; i < s.K.dim(); ++i) report.seed_k(i) = rng.uniform(s.K.lower()(i), s.K.upper()(i));

  RegionFrontier frontier(net, s.K, report.seed_k, opt.rpm);
  while (true) {
    if (static_cast<std::size_t>(report.regions_explored) >= opt.budget_regions ||
        (opt.budget_seconds > 0.0 && elapsed() > opt.budget_seconds)) {
      report.outcome = frontier.exhausted() ? SolveOutcome::Exhausted : SolveOutcome::Budget;
      break;
    }
    auto region = frontier.next();
    if (!region) {
      report.outcome = SolveOutcome::Exhausted;
      break;
    }
    ++report.regions_explored;
    const auto sliced = slice(*region, s.spec);
    const auto compact = region->compact();
    bool found = false;
    for (int c = 0; c < partition.size(); ++c) {
      const auto& prep = prepared[static_cast<std::size_t>(c)];
      if (prep.goal_empty || !cell_in_K[static_cast<std::size_t>(c)]) continue;
      const auto t0 = std::chrono::steady_clock::now();
      HPolytope piece_region = compact;
      if (partition.size() > 1) {
        piece_region = intersect(compact, cell_boxes[static_cast<std::size_t>(c)]);
        if (is_empty(piece_region)) continue;
      }
      RegionRecord rec;
      rec.region_index = region->index;
      rec.cell = c;
      const auto omega = compute_brs(piece_region, sliced, s, prep.goal);
      rec.brs_empty = omega.empty;
      if (!omega.empty) {
        const auto avoid = compute_bas(piece_region, sliced, omega, prep.obstacles);
        rec.n_pieces = avoid.n_total;
        rec.n_pruned = avoid.n_pruned;
        SampleStats stats;
        const auto seed = derive_seed(s.seed, static_cast<std::uint64_t>(region->index) * 4096 + c);
        auto samples = sample_bras(omega, avoid, opt.samples_per_region, seed, &stats);
        rec.samples_tried = stats.tried;
        rec.n_found = static_cast<int>(samples.size());
        for (auto& smp : samples) {
          smp.cell = c;
          report.samples.push_back(std::move(smp));
        }
        found = found || !samples.empty();
      }
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      report.records.push_back(rec);
      if (found) break;
    }
    if (found) {
      report.outcome = SolveOutcome::Found;
      break;
    }
  }
  report.seconds = elapsed();
  return report;
}

// ---------------------------------------------------------------------------
// JSON. Wall-clock times are kept out of the main report so reruns are
// byte-identical; timing_json() carries them separately.

inline nlohmann::json to_json(const BrasSample& s) {
  return {{"p0", vector_to_json(s.p0)},
          {"k", vector_to_json(s.k)},
          {"region", s.region_index},
          {"cell", s.cell},
          {"certificate", s.certificate}};
}

inline BrasSample bras_sample_from_json(const nlohmann::json& j) {
  BrasSample s;
  s.p0 = vector_from_json(j.at("p0"));
  s.k = vector_from_json(j.at("k"));
  s.region_index = j.at("region").get<int>();
  s.cell = j.value("cell", 0);
  s.certificate = j.value("certificate", std::vector<std::uint8_t>{});
  return s;
}

inline nlohmann::json to_json(const SolveReport& r) {
  auto regions = nlohmann::json::array();
  for (const auto& rec : r.records)
    regions.push_back({{"region", rec.region_index},
                       {"cell", rec.cell},
                       {"brs_empty", rec.brs_empty},
                       {"n_pieces", rec.n_pieces},
                       {"n_pruned", rec.n_pruned},
                       {"samples_tried", rec.samples_tried},
                       {"found", rec.n_found}});
  auto samples = nlohmann::json::array();
  for (const auto& s : r.samples) samples.push_back(to_json(s));
  return {{"outcome", to_string(r.outcome)},
          {"regions_explored", r.regions_explored},
          {"seed_k", vector_to_json(r.seed_k)},
          {"regions", std::move(regions)},
          {"samples", std::move(samples)},
          {"first_sample", r.samples.empty() ? nlohmann::json(nullptr) : to_json(r.samples.front())}};
}

inline nlohmann::json timing_json(const SolveReport& r) {
  auto per_region = nlohmann::json::array();
  for (const auto& rec : r.records)
    per_region.push_back({{"region", rec.region_index}, {"cell", rec.cell}, {"seconds", rec.seconds}});
  return {{"total_seconds", r.seconds}, {"regions", std::move(per_region)}};
}

}  // namespace neuralparc

#pragma once

// Offline/online pipeline commands. Each command reads its upstream
// artifacts, writes its own artifact plus "<artifact>.manifest.json" holding
// the command config, a hash of that config and content hashes of the inputs.
// Nothing time- or path-dependent goes into JSON artifacts; wall-clock times
// live in a separate timing file.

#include "neuralparc/blackbox.hpp"
#include "neuralparc/error_bounds.hpp"
#include "neuralparc/polygon2d.hpp"
#include "neuralparc/reach_avoid.hpp"
#include "neuralparc/svg.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace neuralparc::pipeline {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kInternal = 1, kMissingArtifact = 2, kNoSample = 3 };

/// Upstream artifact absent or inconsistent with its neighbours.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// File helpers

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("missing artifact: " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void require_artifact(const std::string& path) {
  if (!fs::is_regular_file(path)) throw ArtifactError("missing artifact: " + path);
}

inline nlohmann::json read_json(const std::string& path) {
  const auto text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ArtifactError("malformed JSON in " + path + ": " + e.what());
  }
}

inline void write_file(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

inline void write_json(const std::string& path, const nlohmann::json& j, int indent = 1) {
  write_file(path, j.dump(indent) + "\n");
}

inline std::string file_hash(const std::string& path) { return fnv1a_hex(read_file(path)); }

inline std::string manifest_path(const std::string& artifact) { return artifact + ".manifest.json"; }

inline void write_manifest(const std::string& artifact, const std::string& command, const nlohmann::json& config,
                           const nlohmann::json& inputs, const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json m = {{"command", command},
                      {"config", config},
                      {"config_hash", fnv1a_hex(config.dump())},
                      {"inputs", inputs},
                      {"artifact_hash", file_hash(artifact)}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  write_json(manifest_path(artifact), m);
}

// ---------------------------------------------------------------------------
// collect

struct CollectConfig {
  std::string system = "drift2d";
  int n = 10000;
  std::uint64_t seed = 0;
  std::string output = "data.json";

  nlohmann::json json() const { return {{"system", system}, {"n", n}, {"seed", seed}}; }
};

inline int cmd_collect(const CollectConfig& cfg) {
  const auto system = builtin(cfg.system);
  const auto data = collect(*system, system->parameter_box(), cfg.n, cfg.seed);
  write_json(cfg.output, dataset_to_json(data), -1);
  write_json(meta_path(cfg.output), dataset_meta(data));
  write_manifest(cfg.output, "collect", cfg.json(), nlohmann::json::object());
  return kOk;
}

inline Dataset load_dataset(const std::string& path) {
  return dataset_from_json(read_json(path), read_json(meta_path(path)));
}

// ---------------------------------------------------------------------------
// train

struct TrainConfig {
  std::string data = "data.json";
  std::vector<int> widths{8, 8, 8, 8};
  int epochs = 1000;
  double learning_rate = 1e-3;
  int batch_size = 0;
  std::uint64_t seed = 0;
  std::string output = "net.json";

  nlohmann::json json() const {
    return {{"widths", widths}, {"epochs", epochs}, {"learning_rate", learning_rate}, {"batch_size", batch_size},
            {"seed", seed}};
  }
};

/// What downstream commands need to know about a trained model.
struct ModelInfo {
  std::string system;
  TrajectorySpec spec;
  Hyperrectangle parameter_box;
};

inline int cmd_train(const TrainConfig& cfg) {
  const auto data = load_dataset(cfg.data);
  TrainOptions opt;
  opt.hidden_widths = cfg.widths;
  opt.epochs = cfg.epochs;
  opt.learning_rate = cfg.learning_rate;
  opt.batch_size = cfg.batch_size;
  opt.seed = cfg.seed;
  const auto result = train(data.data, opt);
  save(result.network, cfg.output);
  const nlohmann::json model = {{"system", data.system},
                                {"spec", to_json(*data.data.spec)},
                                {"parameter_box", to_json(data.parameter_box)},
                                {"network_hash", network_hash(result.network)},
                                {"final_mse", result.final_mse}};
  write_manifest(cfg.output, "train", cfg.json(), {{"data", file_hash(cfg.data)}}, {{"model", model}});
  return kOk;
}

inline ModelInfo load_model_info(const std::string& net_path) {
  const auto m = read_json(manifest_path(net_path));
  if (!m.contains("model")) throw ArtifactError("network manifest has no model section: " + manifest_path(net_path));
  const auto& j = m.at("model");
  return {j.at("system").get<std::string>(), trajectory_spec_from_json(j.at("spec")),
          box_from_json(j.at("parameter_box"))};
}

// ---------------------------------------------------------------------------
// bounds

struct BoundsConfig {
  std::string net = "net.json";
  int n_sample = 10000;
  int substeps = 10;
  std::vector<int> splits{1};  // one entry broadcasts to every K dimension
  std::uint64_t seed = 0;
  double p0_half_width = 1.0;
  int validation_factor = 10;  // 0 skips validation
  std::string output = "bounds.json";

  nlohmann::json json() const {
    return {{"n_sample", n_sample},       {"substeps", substeps}, {"splits", splits}, {"seed", seed},
            {"p0_half_width", p0_half_width}, {"validation_factor", validation_factor}};
  }
};

struct LoadedBounds {
  PartitionedBounds bounds;
  std::string network_hash;
  std::optional<ValidationReport> validation;
};

inline int cmd_bounds(const BoundsConfig& cfg) {
  require_artifact(cfg.net);
  const auto net = load_network(cfg.net);
  const auto info = load_model_info(cfg.net);
  const auto system = builtin(info.system);
  const int nk = info.parameter_box.dim();
  require(cfg.splits.size() == 1 || static_cast<int>(cfg.splits.size()) == nk,
          "bounds: --splits needs one value or one per K dimension");
  const std::vector<int> splits = cfg.splits.size() == 1 ? std::vector<int>(static_cast<std::size_t>(nk), cfg.splits[0])
                                                         : cfg.splits;
  const Hyperrectangle P0(Vector::Constant(info.spec.n_p, -cfg.p0_half_width),
                          Vector::Constant(info.spec.n_p, cfg.p0_half_width));
  EstimateOptions opt;
  opt.n_sample = cfg.n_sample;
  opt.n_substeps = cfg.substeps;
  opt.seed = cfg.seed;
  const auto bounds = partition_and_estimate(*system, net, info.spec, P0, KPartition(info.parameter_box, splits), opt);
  auto j = to_json(bounds);
  j["network_hash"] = network_hash(net);
  j["system"] = info.system;
  j["P0"] = to_json(P0);
  if (cfg.validation_factor > 0) j["validation"] = to_json(validate(*system, net, info.spec, P0, bounds, opt,
                                                                    cfg.validation_factor));
  write_json(cfg.output, j);
  write_manifest(cfg.output, "bounds", cfg.json(), {{"net", file_hash(cfg.net)}});
  return kOk;
}

inline LoadedBounds load_bounds(const std::string& path) {
  const auto j = read_json(path);
  LoadedBounds out;
  out.bounds = partitioned_bounds_from_json(j);
  out.network_hash = j.value("network_hash", std::string{});
  if (j.contains("validation")) {
    const auto& v = j.at("validation");
    out.validation = ValidationReport{v.at("n_fresh").get<int>(), v.at("n_exceed").get<int>(),
                                      v.at("max_excess").get<double>()};
  }
  return out;
}

// ---------------------------------------------------------------------------
// solve

struct SolveConfig {
  std::string scenario = "scenario.json";
  std::string net = "net.json";
  std::string bounds = "bounds.json";
  std::size_t budget_regions = 1000;
  double budget_seconds = 0.0;
  int samples_per_region = 50;
  std::string output = "report";

  nlohmann::json json() const {
    return {{"budget_regions", budget_regions}, {"budget_seconds", budget_seconds},
            {"samples_per_region", samples_per_region}};
  }
};

inline std::string report_file(const std::string& dir) { return (fs::path(dir) / "solve.json").string(); }

inline Scenario load_scenario(const std::string& path, const ModelInfo& info) {
  auto s = scenario_from_json(read_json(path), info.parameter_box, info.spec);
  if (s.system.empty()) s.system = info.system;
  if (s.system != info.system)
    throw ArtifactError("scenario targets '" + s.system + "' but the network was trained on '" + info.system + "'");
  if (!(s.spec == info.spec)) throw ArtifactError("scenario trajectory spec differs from the network's");
  return s;
}

inline std::vector<Point2> planar_path(const Trajectory& tr) {
  std::vector<Point2> out;
  for (const auto& p : tr.p) out.emplace_back(p(0), p(1));
  return out;
}

inline int cmd_solve(const SolveConfig& cfg, std::ostream& log = std::cerr) {
  require_artifact(cfg.net);
  const auto net = load_network(cfg.net);
  const auto info = load_model_info(cfg.net);
  const auto loaded = load_bounds(cfg.bounds);
  if (loaded.network_hash != network_hash(net))
    throw ArtifactError("bounds were estimated for a different network (hash mismatch)");
  const auto scenario = load_scenario(cfg.scenario, info);
  const auto& domain = loaded.bounds.partition.domain();
  require(domain.contains(scenario.K.lower(), 1e-12) && domain.contains(scenario.K.upper(), 1e-12),
          "solve: scenario K must lie inside the K the bounds cover");

  SolveOptions opt;
  opt.budget_regions = cfg.budget_regions;
  opt.budget_seconds = cfg.budget_seconds;
  opt.samples_per_region = cfg.samples_per_region;
  const auto report = solve(scenario, net, loaded.bounds, opt);

  const bool certified = loaded.validation.has_value() && loaded.validation->clean();
  auto j = to_json(report);
  j["scenario"] = to_json(scenario);
  j["certified"] = certified;
  if (loaded.validation) j["validation"] = to_json(*loaded.validation);
  if (!report.samples.empty()) {
    const auto& first = report.samples.front();
    const auto tr = predict(net, scenario.spec, first.p0, first.k);
    auto path = nlohmann::json::array();
    for (const auto& p : tr.p) path.push_back(vector_to_json(p));
    j["predicted"] = path;
    j["tube"] = matrix_to_json(loaded.bounds.cells[static_cast<std::size_t>(first.cell)].e_interval);
  }
  const auto file = report_file(cfg.output);
  write_json(file, j);
  write_json((fs::path(cfg.output) / "timing.json").string(), timing_json(report));
  if (scenario.spec.n_p == 2) {
    PlotData plot;
    if (!report.samples.empty()) {
      const auto& first = report.samples.front();
      plot.predicted = planar_path(predict(net, scenario.spec, first.p0, first.k));
      plot.tube = loaded.bounds.cells[static_cast<std::size_t>(first.cell)].e_interval;
    }
    write_file((fs::path(cfg.output) / "plot.svg").string(), plot_scenario(scenario, plot));
  }
  write_manifest(file, "solve", cfg.json(),
                 {{"scenario", file_hash(cfg.scenario)}, {"net", file_hash(cfg.net)}, {"bounds", file_hash(cfg.bounds)}});
  log << "solve: " << to_string(report.outcome) << " after " << report.regions_explored << " regions, "
      << report.samples.size() << " samples" << (certified ? "" : " (bounds not certified)") << "\n";
  return report.outcome == SolveOutcome::Found ? kOk : kNoSample;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyConfig {
  std::string report = "report";  // directory or solve.json
  int rollouts = 100;
  std::uint64_t seed = 0x7e51;
  std::string output;  // default: verify.json next to the report

  nlohmann::json json() const { return {{"rollouts", rollouts}, {"seed", seed}}; }
};

struct RolloutOutcome {
  bool reached = false;
  bool avoided = false;
  double min_clearance = std::numeric_limits<double>::infinity();
};

/// Fine-grid rollout (the integrator's own step) checked against the true
/// goal and the obstacles grown by the agent radius.
inline RolloutOutcome check_rollout(const BlackBoxSystem& system, const Scenario& s,
                                    const std::vector<std::vector<Point2>>& obstacle_polys, const Vector& p0,
                                    const Vector& k, std::uint64_t disturbance_seed,
                                    std::vector<Point2>* path = nullptr) {
  const auto& spec = s.spec;
  const int fine = spec.steps() * 20;
  std::vector<double> times;
  for (int i = 0; i <= fine; ++i) times.push_back(spec.t_f * i / fine);
  const auto r = system.rollout(k, disturbance_seed, times);
  RolloutOutcome out;
  Vector z(spec.n_p + spec.n_q);
  z << r.p.back() + p0, r.q;
  out.reached = s.goal.contains(z, 0.0);
  out.avoided = true;
  if (spec.n_p == 2) {
    for (std::size_t i = 0; i + 1 < r.p.size(); ++i) {
      const Point2 a = (r.p[i] + p0).head<2>();
      const Point2 b = (r.p[i + 1] + p0).head<2>();
      for (const auto& poly : obstacle_polys)
        out.min_clearance = std::min(out.min_clearance, segment_polygon_distance(a, b, poly) - s.agent_radius);
    }
    out.avoided = out.min_clearance > 0.0;
  } else if (!s.obstacles.empty()) {
    for (const auto& p : r.p)
      for (const auto& o : s.obstacles) out.avoided = out.avoided && !o.contains(p + p0, 0.0);
  }
  if (path)
    for (const auto& p : r.p) path->emplace_back((p + p0)(0), spec.n_p > 1 ? (p + p0)(1) : 0.0);
  return out;
}

inline std::uint64_t verify_disturbance_seed(std::uint64_t seed, std::size_t sample, int rollout) {
  return derive_seed(derive_seed(seed, 0x7e51f1), sample * 1000003u + static_cast<std::uint64_t>(rollout));
}

inline int cmd_verify(const VerifyConfig& cfg, std::ostream& log = std::cerr) {
  const std::string file = fs::is_directory(cfg.report) ? report_file(cfg.report) : cfg.report;
  const auto rep = read_json(file);
  const auto scenario = scenario_from_json(rep.at("scenario"));
  const auto system = builtin(scenario.system);
  std::vector<BrasSample> samples;
  for (const auto& s : rep.at("samples")) samples.push_back(bras_sample_from_json(s));

  std::vector<std::vector<Point2>> polys;
  if (scenario.spec.n_p == 2)
    for (const auto& o : scenario.obstacles) polys.push_back(polygon_vertices(o));

  const int R = cfg.rollouts;
  std::vector<RolloutOutcome> outcomes(samples.size() * static_cast<std::size_t>(R));
  parallel_for(static_cast<int>(outcomes.size()), [&](int idx) {
    const auto i = static_cast<std::size_t>(idx / R);
    outcomes[static_cast<std::size_t>(idx)] = check_rollout(*system, scenario, polys, samples[i].p0, samples[i].k,
                                                            verify_disturbance_seed(cfg.seed, i, idx % R));
  });

  auto per_sample = nlohmann::json::array();
  int successes = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    int reached = 0, avoided = 0, ok = 0;
    double clearance = std::numeric_limits<double>::infinity();
    for (int r = 0; r < R; ++r) {
      const auto& o = outcomes[i * static_cast<std::size_t>(R) + static_cast<std::size_t>(r)];
      reached += o.reached;
      avoided += o.avoided;
      ok += o.reached && o.avoided;
      clearance = std::min(clearance, o.min_clearance);
    }
    successes += ok;
    nlohmann::json e = {{"reached", reached}, {"avoided", avoided}, {"success", ok}};
    if (std::isfinite(clearance)) e["min_clearance"] = clearance;
    per_sample.push_back(e);
  }
  const int total = static_cast<int>(outcomes.size());
  const nlohmann::json out = {{"n_samples", samples.size()},
                              {"rollouts_per_sample", R},
                              {"successes", successes},
                              {"total", total},
                              {"all_success", successes == total},
                              {"certified", rep.value("certified", false)},
                              {"per_sample", per_sample}};
  const std::string out_path =
      cfg.output.empty() ? (fs::path(file).parent_path() / "verify.json").string() : cfg.output;
  write_json(out_path, out);
  write_manifest(out_path, "verify", cfg.json(), {{"report", file_hash(file)}});

  if (scenario.spec.n_p == 2 && !samples.empty()) {
    PlotData plot;
    if (rep.contains("predicted")) {
      for (const auto& p : rep.at("predicted")) plot.predicted.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
      plot.tube = matrix_from_json(rep.at("tube"));
    }
    for (int r = 0; r < std::min(R, 20); ++r) {
      std::vector<Point2> path;
      check_rollout(*system, scenario, polys, samples[0].p0, samples[0].k, verify_disturbance_seed(cfg.seed, 0, r),
                    &path);
      plot.rollouts.push_back(std::move(path));
    }
    write_file((fs::path(out_path).parent_path() / "verify.svg").string(), plot_scenario(scenario, plot));
  }
  log << "verify: " << successes << "/" << total << " rollouts reached the goal without collision\n";
  return kOk;
}

/// Maps exceptions escaping a command to the documented exit codes.
template <typename Fn>
int run_command(Fn&& fn, std::ostream& log = std::cerr) {
  try {
    return fn();
  } catch (const ArtifactError& e) {
    log << "error: " << e.what() << "\n";
    return kMissingArtifact;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace neuralparc::pipeline

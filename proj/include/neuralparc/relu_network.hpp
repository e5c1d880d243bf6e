#pragma once

#include "neuralparc/hpolytope.hpp"
#include "neuralparc/trajectory_spec.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace neuralparc {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DenseLayer {
  Matrix W;  // n_out x n_in
  Vector w;  // n_out
};

/// Flattened per-hidden-neuron activity, layer by layer. 1 = active
/// (preactivation >= 0, ties count as active), 0 = inactive.
using ActivationPattern = std::vector<std::uint8_t>;

/// Fully connected feed-forward network: ReLU on every hidden layer, affine
/// output layer.
class ReluNetwork {
 public:
  ReluNetwork() = default;

  explicit ReluNetwork(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    require(!layers_.empty(), "ReluNetwork: needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& L = layers_[i];
      require(L.W.rows() == L.w.size(), "ReluNetwork: layer " + std::to_string(i) + " bias length mismatch");
      if (i > 0)
        require(L.W.cols() == layers_[i - 1].W.rows(),
                "ReluNetwork: layer " + std::to_string(i) + " input width mismatch");
    }
  }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  int depth() const { return static_cast<int>(layers_.size()); }
  int input_dim() const { return static_cast<int>(layers_.front().W.cols()); }
  int output_dim() const { return static_cast<int>(layers_.back().W.rows()); }

  /// n(0), ..., n(d).
  std::vector<int> widths() const {
    std::vector<int> out{input_dim()};
    for (const auto& L : layers_) out.push_back(static_cast<int>(L.W.rows()));
    return out;
  }

  int hidden_neurons() const {
    int n = 0;
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) n += static_cast<int>(layers_[i].W.rows());
    return n;
  }

  Vector forward(const Vector& x) const {
    require(x.size() == input_dim(), "forward: input has length " + std::to_string(x.size()) + ", expected " +
                                         std::to_string(input_dim()));
    Vector h = x;
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i)
      h = (layers_[i].W * h + layers_[i].w).cwiseMax(0.0);
    return layers_.back().W * h + layers_.back().w;
  }

  ActivationPattern activation_pattern(const Vector& x) const {
    require(x.size() == input_dim(), "activation_pattern: dimension mismatch");
    ActivationPattern pattern;
    pattern.reserve(static_cast<std::size_t>(hidden_neurons()));
    Vector h = x;
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
      Vector z = layers_[i].W * h + layers_[i].w;
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        const bool active = z(j) >= 0.0;
        pattern.push_back(active ? 1 : 0);
        if (!active) z(j) = 0.0;
      }
      h = std::move(z);
    }
    return pattern;
  }

  bool operator==(const ReluNetwork& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& a = layers_[i];
      const auto& b = other.layers_[i];
      if (a.W.rows() != b.W.rows() || a.W.cols() != b.W.cols() || a.W != b.W || a.w != b.w) return false;
    }
    return true;
  }

 private:
  std::vector<DenseLayer> layers_;
};

// ---------------------------------------------------------------------------
// Serialization: {"version": 1, "widths": [...], "layers": [{"W", "w"}, ...]}

inline constexpr int kWeightFileVersion = 1;

inline nlohmann::json to_json(const ReluNetwork& net) {
  auto layers = nlohmann::json::array();
  for (const auto& L : net.layers()) layers.push_back({{"W", matrix_to_json(L.W)}, {"w", vector_to_json(L.w)}});
  return {{"version", kWeightFileVersion}, {"widths", net.widths()}, {"layers", layers}};
}

inline ReluNetwork relu_network_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("version") && j.contains("layers"), "weight file: missing fields");
  const int version = j.at("version").get<int>();
  require(version == kWeightFileVersion, "weight file: unsupported version " + std::to_string(version));
  std::vector<DenseLayer> layers;
  for (const auto& L : j.at("layers")) layers.push_back({matrix_from_json(L.at("W")), vector_from_json(L.at("w"))});
  ReluNetwork net(std::move(layers));
  if (j.contains("widths"))
    require(j.at("widths").get<std::vector<int>>() == net.widths(), "weight file: widths disagree with layers");
  return net;
}

inline std::string serialize(const ReluNetwork& net) { return to_json(net).dump(1) + "\n"; }

inline std::string network_hash(const ReluNetwork& net) { return fnv1a_hex(to_json(net).dump()); }

inline void save(const ReluNetwork& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize(net);
}

inline ReluNetwork load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open weight file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed weight file " + path + ": " + e.what());
  }
  return relu_network_from_json(j);
}

// ---------------------------------------------------------------------------
// Supervised fitting

/// Features k (rows) and stacked labels (p(dt), ..., p(t_f), q_{t_f}) (rows).
struct TrainingSet {
  Matrix features;  // n x n_k
  Matrix labels;    // n x label_dim
  std::optional<TrajectorySpec> spec;

  int size() const { return static_cast<int>(features.rows()); }

  void validate() const {
    require(features.rows() == labels.rows(), "TrainingSet: feature and label row counts differ");
    if (spec) {
      spec->validate();
      require(labels.cols() == spec->label_dim(), "TrainingSet: label length must be (t_f/dt)·n_p + n_q");
    }
  }
};

struct TrainOptions {
  std::vector<int> hidden_widths{8};
  int epochs = 1000;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  /// 0 selects full batch below kFullBatchLimit samples and 256 otherwise.
  int batch_size = 0;
  /// Train on standardised features/labels and fold the affine scaling back
  /// into the first and last layers.
  bool standardize = true;
};

inline constexpr int kFullBatchLimit = 10000;

struct TrainResult {
  ReluNetwork network;
  std::vector<double> loss_history;  // per epoch, in standardised units
  double final_mse = 0.0;            // in label units
};

namespace detail {

struct Standardizer {
  Vector feature_mean, feature_scale, label_mean, label_scale;
};

inline Standardizer fit_standardizer(const TrainingSet& data, bool enabled) {
  Standardizer s;
  const auto nf = data.features.cols(), nl = data.labels.cols();
  s.feature_mean = Vector::Zero(nf);
  s.feature_scale = Vector::Ones(nf);
  s.label_mean = Vector::Zero(nl);
  s.label_scale = Vector::Ones(nl);
  if (!enabled) return s;
  auto fill = [](const Matrix& M, Vector& mean, Vector& scale) {
    mean = M.colwise().mean().transpose();
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      const double var = (M.col(c).array() - mean(c)).square().mean();
      scale(c) = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
  };
  fill(data.features, s.feature_mean, s.feature_scale);
  fill(data.labels, s.label_mean, s.label_scale);
  return s;
}

inline std::vector<DenseLayer> initial_layers(int n_in, const std::vector<int>& hidden, int n_out, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  int prev = n_in;
  std::vector<int> outs = hidden;
  outs.push_back(n_out);
  for (int width : outs) {
    DenseLayer L{Matrix(width, prev), Vector(width)};
    const double wb = std::sqrt(6.0 / prev);
    const double bb = 1.0 / std::sqrt(static_cast<double>(prev));
    for (Eigen::Index i = 0; i < L.W.rows(); ++i)
      for (Eigen::Index j = 0; j < L.W.cols(); ++j) L.W(i, j) = rng.uniform(-wb, wb);
    for (Eigen::Index i = 0; i < L.w.size(); ++i) L.w(i) = rng.uniform(-bb, bb);
    layers.push_back(std::move(L));
    prev = width;
  }
  return layers;
}

// Maps a network acting on standardised data to one acting on raw data.
inline ReluNetwork fold_standardizer(std::vector<DenseLayer> layers, const Standardizer& s) {
  auto& first = layers.front();
  const Vector inv = s.feature_scale.cwiseInverse();
  first.w -= first.W * s.feature_mean.cwiseProduct(inv);
  first.W = first.W * inv.asDiagonal();
  auto& last = layers.back();
  last.W = s.label_scale.asDiagonal() * last.W;
  last.w = s.label_scale.cwiseProduct(last.w) + s.label_mean;
  return ReluNetwork(std::move(layers));
}

struct AdamState {
  std::vector<Matrix> mW, vW;
  std::vector<Vector> mb, vb;
  long step = 0;
};

}  // namespace detail

/// The seeded starting point of train() (already mapped to raw data units).
inline ReluNetwork initial_network(const TrainingSet& data, const TrainOptions& opt) {
  const auto s = detail::fit_standardizer(data, opt.standardize);
  return detail::fold_standardizer(
      detail::initial_layers(static_cast<int>(data.features.cols()), opt.hidden_widths,
                             static_cast<int>(data.labels.cols()), opt.seed),
      s);
}

/// Adam on mean-squared error. Deterministic per seed.
inline TrainResult train(const TrainingSet& data, const TrainOptions& opt) {
  data.validate();
  require(data.size() > 0, "train: empty training set");
  for (int w : opt.hidden_widths) require(w >= 1, "train: hidden widths must be positive");

  const auto stdz = detail::fit_standardizer(data, opt.standardize);
  // Column-major sample matrices: one sample per column.
  const Matrix X = ((data.features.rowwise() - stdz.feature_mean.transpose()).array().rowwise() /
                    stdz.feature_scale.transpose().array())
                       .matrix()
                       .transpose();
  const Matrix Y = ((data.labels.rowwise() - stdz.label_mean.transpose()).array().rowwise() /
                    stdz.label_scale.transpose().array())
                       .matrix()
                       .transpose();
  const int n = data.size();
  const int n_out = static_cast<int>(Y.rows());

  auto layers = detail::initial_layers(static_cast<int>(X.rows()), opt.hidden_widths, n_out, opt.seed);
  const std::size_t depth = layers.size();
  detail::AdamState adam;
  for (const auto& L : layers) {
    adam.mW.push_back(Matrix::Zero(L.W.rows(), L.W.cols()));
    adam.vW.push_back(Matrix::Zero(L.W.rows(), L.W.cols()));
    adam.mb.push_back(Vector::Zero(L.w.size()));
    adam.vb.push_back(Vector::Zero(L.w.size()));
  }
  const int batch = opt.batch_size > 0 ? std::min(opt.batch_size, n) : (n < kFullBatchLimit ? n : 256);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(opt.seed, 0x5eed));

  std::vector<Matrix> acts(depth + 1);
  std::vector<Matrix> gW(depth);
  std::vector<Vector> gb(depth);
  TrainResult result;

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    if (batch < n)
      for (int i = n - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[static_cast<std::size_t>(shuffle_rng.below(static_cast<std::uint64_t>(i) + 1))]);
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += batch) {
      const int bs = std::min(batch, n - start);
      Matrix Xb(X.rows(), bs), Yb(n_out, bs);
      for (int c = 0; c < bs; ++c) {
        const int idx = batch < n ? order[static_cast<std::size_t>(start + c)] : start + c;
        Xb.col(c) = X.col(idx);
        Yb.col(c) = Y.col(idx);
      }
      acts[0] = Xb;
      for (std::size_t l = 0; l < depth; ++l) {
        Matrix z = (layers[l].W * acts[l]).colwise() + layers[l].w;
        acts[l + 1] = l + 1 < depth ? Matrix(z.cwiseMax(0.0)) : z;
      }
      Matrix delta = acts[depth] - Yb;
      const double norm = 1.0 / (static_cast<double>(bs) * n_out);
      const double loss = delta.squaredNorm() * norm;
      if (!std::isfinite(loss)) throw TrainingError("train: loss became NaN/inf at epoch " + std::to_string(epoch));
      epoch_loss += loss * bs;
      delta *= 2.0 * norm;
      for (std::size_t l = depth; l-- > 0;) {
        gW[l] = delta * acts[l].transpose();
        gb[l] = delta.rowwise().sum();
        if (l > 0) {
          Matrix back = layers[l].W.transpose() * delta;
          delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
        }
      }
      ++adam.step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
      for (std::size_t l = 0; l < depth; ++l) {
        adam.mW[l] = beta1 * adam.mW[l] + (1 - beta1) * gW[l];
        adam.vW[l] = beta2 * adam.vW[l] + (1 - beta2) * gW[l].cwiseAbs2();
        adam.mb[l] = beta1 * adam.mb[l] + (1 - beta1) * gb[l];
        adam.vb[l] = beta2 * adam.vb[l] + (1 - beta2) * gb[l].cwiseAbs2();
        layers[l].W.array() -= opt.learning_rate * (adam.mW[l].array() / c1) /
                               ((adam.vW[l].array() / c2).sqrt() + eps);
        layers[l].w.array() -= opt.learning_rate * (adam.mb[l].array() / c1) /
                               ((adam.vb[l].array() / c2).sqrt() + eps);
      }
    }
    result.loss_history.push_back(epoch_loss / n);
  }

  result.network = detail::fold_standardizer(std::move(layers), stdz);
  double sse = 0.0;
  for (int i = 0; i < n; ++i)
    sse += (result.network.forward(data.features.row(i).transpose()) - data.labels.row(i).transpose()).squaredNorm();
  result.final_mse = sse / (static_cast<double>(n) * n_out);
  if (!std::isfinite(result.final_mse)) throw TrainingError("train: final MSE is not finite");
  return result;
}

}  // namespace neuralparc

#pragma once

// Exact piecewise-affine decomposition of a ReLU network over a box domain by
// marching from region to neighbouring region across activation hyperplanes.

#include "neuralparc/hpolytope.hpp"
#include "neuralparc/relu_network.hpp"

#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <vector>

namespace neuralparc {

/// One linear piece of the network: on `region` the network equals C x + d.
/// The first `neuron_rows` rows of region are the neuron hyperplanes (row i
/// belongs to hidden neuron i of the flattened pattern); the remaining rows
/// are the domain box faces.
struct AffineRegion {
  HPolytope region;
  Matrix C;
  Vector d;
  ActivationPattern pattern;
  int index = 0;
  int neuron_rows = 0;
  std::vector<int> essential;  // filled by the marcher when the region is expanded

  /// Essential neuron rows plus the domain rows: the same set as `region`
  /// with fewer constraints. Requires `essential` to be populated.
  HPolytope compact() const {
    const int n = region.dim();
    const int domain_rows = region.num_constraints() - neuron_rows;
    Matrix A(static_cast<Eigen::Index>(essential.size()) + domain_rows, n);
    Vector b(A.rows());
    Eigen::Index r = 0;
    for (int i : essential) {
      A.row(r) = region.A().row(i);
      b(r++) = region.b()(i);
    }
    A.bottomRows(domain_rows) = region.A().bottomRows(domain_rows);
    b.tail(domain_rows) = region.b().tail(domain_rows);
    return {A, b};
  }
};

struct RpmOptions {
  /// Regions with a smaller inscribed radius are treated as measure zero.
  double min_chebyshev_radius = 1e-8;
  double push_initial = 1e-6;
  double push_max = 1e-3;
  int push_attempts = 10;
  std::size_t max_regions = 100000;
};

namespace detail {

struct MaskedComposition {
  Matrix pre_A;  // one row per hidden neuron: preactivation = pre_A x + pre_b
  Vector pre_b;
  Matrix C;
  Vector d;
};

inline MaskedComposition compose(const ReluNetwork& net, const ActivationPattern& pattern) {
  const int n = net.input_dim();
  MaskedComposition out;
  out.pre_A.resize(net.hidden_neurons(), n);
  out.pre_b.resize(net.hidden_neurons());
  Matrix M = Matrix::Identity(n, n);
  Vector m = Vector::Zero(n);
  Eigen::Index row = 0;
  const auto& layers = net.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    Matrix Z = layers[l].W * M;
    Vector z = layers[l].W * m + layers[l].w;
    for (Eigen::Index j = 0; j < Z.rows(); ++j, ++row) {
      out.pre_A.row(row) = Z.row(j);
      out.pre_b(row) = z(j);
      if (!pattern[static_cast<std::size_t>(row)]) {
        Z.row(j).setZero();
        z(j) = 0.0;
      }
    }
    M = std::move(Z);
    m = std::move(z);
  }
  out.C = layers.back().W * M;
  out.d = layers.back().W * m + layers.back().w;
  return out;
}

}  // namespace detail

/// The piece of the network containing `seed`: the domain intersected with
/// s_ij·(preactivation of neuron ij) >= 0 for every hidden neuron.
inline AffineRegion region_for_pattern(const ReluNetwork& net, const ActivationPattern& pattern,
                                       const Hyperrectangle& domain) {
  require(static_cast<int>(pattern.size()) == net.hidden_neurons(), "region_for_pattern: pattern length mismatch");
  require(domain.dim() == net.input_dim(), "region_for_pattern: domain dimension mismatch");
  const auto comp = detail::compose(net, pattern);
  const int h = net.hidden_neurons();
  const int n = net.input_dim();
  Matrix A(h + 2 * n, n);
  Vector b(h + 2 * n);
  for (int i = 0; i < h; ++i) {
    const double sign = pattern[static_cast<std::size_t>(i)] ? -1.0 : 1.0;
    A.row(i) = sign * comp.pre_A.row(i);
    b(i) = -sign * comp.pre_b(i);
  }
  const auto box = domain.as_hpolytope();
  A.bottomRows(2 * n) = box.A();
  b.tail(2 * n) = box.b();
  AffineRegion r;
  r.region = HPolytope(A, b);
  r.C = comp.C;
  r.d = comp.d;
  r.pattern = pattern;
  r.neuron_rows = h;
  return r;
}

inline AffineRegion region_at(const ReluNetwork& net, const Vector& seed, const Hyperrectangle& domain) {
  require(seed.size() == net.input_dim(), "region_at: seed dimension mismatch");
  require(domain.contains(seed, 0.0), "region_at: seed lies outside the domain");
  return region_for_pattern(net, net.activation_pattern(seed), domain);
}

/// Indices of the neuron rows that are facets of the region (sequential
/// elimination, so removing every unreported row leaves the set unchanged).
/// Domain rows are never reported.
inline std::vector<int> essential_constraints(const AffineRegion& r) {
  const auto& A = r.region.A();
  const auto& b = r.region.b();
  const int n = r.region.dim();
  const int total = r.region.num_constraints();
  require(!is_empty(r.region), "essential_constraints: region is empty");

  // Box of the domain, recovered from its 2n trailing rows.
  const int domain_rows = total - r.neuron_rows;
  Vector lo = Vector::Constant(n, -std::numeric_limits<double>::infinity());
  Vector hi = Vector::Constant(n, std::numeric_limits<double>::infinity());
  if (domain_rows == 2 * n) {
    hi = b.segment(r.neuron_rows, n);
    lo = -b.segment(r.neuron_rows + n, n);
  }
  const bool have_box = lo.allFinite() && hi.allFinite();

  std::vector<char> active(static_cast<std::size_t>(total), 1);
  for (int i = 0; i < r.neuron_rows; ++i) {
    const Vector a = A.row(i).transpose();
    const double nrm = a.norm();
    if (nrm < 1e-12) {
      active[static_cast<std::size_t>(i)] = 0;
      continue;
    }
    if (have_box) {
      const double box_max = a.dot(0.5 * (lo + hi)) + a.cwiseAbs().dot(0.5 * (hi - lo));
      if (box_max <= b(i)) {
        active[static_cast<std::size_t>(i)] = 0;
        continue;
      }
    }
  }
  std::vector<int> out;
  for (int i = 0; i < r.neuron_rows; ++i) {
    if (!active[static_cast<std::size_t>(i)]) continue;
    const Vector a = A.row(i).transpose();
    const double nrm = a.norm();
    std::vector<Eigen::Index> rows;
    for (int j = 0; j < total; ++j)
      if (j != i && active[static_cast<std::size_t>(j)]) rows.push_back(j);
    Matrix As(static_cast<Eigen::Index>(rows.size()) + 1, n);
    Vector bs(As.rows());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      As.row(static_cast<Eigen::Index>(k)) = A.row(rows[k]);
      bs(static_cast<Eigen::Index>(k)) = b(rows[k]);
    }
    As.row(As.rows() - 1) = a.transpose();
    bs(bs.size() - 1) = b(i) + nrm;
    const auto res = solve({a, As, bs, std::nullopt, std::nullopt});
    if (res.optimal() && res.value > b(i) + kFeasTol * nrm) {
      out.push_back(i);
    } else {
      active[static_cast<std::size_t>(i)] = 0;
    }
  }
  return out;
}

/// The region across neuron row `row`, found by re-seeding just beyond the
/// Chebyshev centre of the shared facet. nullopt when the row is a domain
/// face, the facet is degenerate, or no valid re-seed point was found.
inline std::optional<AffineRegion> neighbor(const ReluNetwork& net, const AffineRegion& r, int row,
                                            const Hyperrectangle& domain, const RpmOptions& opt = {}) {
  require(row >= 0 && row < r.region.num_constraints(), "neighbor: row out of range");
  if (row >= r.neuron_rows) return std::nullopt;
  const auto& A = r.region.A();
  const auto& b = r.region.b();
  const int n = r.region.dim();
  const int total = r.region.num_constraints();
  const Vector a = A.row(row).transpose();
  const double nrm = a.norm();
  if (nrm < 1e-12) return std::nullopt;

  // Facet Chebyshev centre: max rho s.t. a_j x + rho |a_j| <= b_j (j != row),
  // a_row x = b_row, 0 <= rho <= 1.
  Matrix F(total - 1 + 4, n + 1);
  Vector f(F.rows());
  Eigen::Index k = 0;
  for (int j = 0; j < total; ++j) {
    if (j == row) continue;
    F.row(k).head(n) = A.row(j);
    F(k, n) = A.row(j).norm();
    f(k++) = b(j);
  }
  F.row(k).head(n) = a.transpose();
  F(k, n) = 0.0;
  f(k++) = b(row);
  F.row(k).head(n) = -a.transpose();
  F(k, n) = 0.0;
  f(k++) = -b(row);
  F.row(k).setZero();
  F(k, n) = -1.0;
  f(k++) = 0.0;
  F.row(k).setZero();
  F(k, n) = 1.0;
  f(k++) = 1.0;
  Vector c = Vector::Zero(n + 1);
  c(n) = 1.0;
  const auto res = solve({c, F, f, std::nullopt, std::nullopt});
  if (!res.optimal() || res.witness(n) <= 0.0) return std::nullopt;
  const Vector centre = res.witness.head(n);
  const double rho = res.witness(n);
  const Vector outward = a / nrm;

  const double growth = opt.push_attempts > 1
                            ? std::pow(opt.push_max / opt.push_initial, 1.0 / (opt.push_attempts - 1))
                            : 1.0;
  double eps = std::min(opt.push_initial, 0.25 * rho);
  for (int attempt = 0; attempt < opt.push_attempts; ++attempt, eps *= growth) {
    if (eps > 0.5 * rho && attempt > 0) break;
    const Vector x = centre + eps * outward;
    if (!domain.contains(x, 0.0)) return std::nullopt;
    auto pattern = net.activation_pattern(x);
    if (pattern[static_cast<std::size_t>(row)] == r.pattern[static_cast<std::size_t>(row)]) continue;
    auto next = region_for_pattern(net, pattern, domain);
    const auto ball = chebyshev_ball(next.region);
    if (!ball || ball->radius < opt.min_chebyshev_radius) continue;
    return next;
  }
  return std::nullopt;
}

/// Breadth-first frontier over regions, discovery order = index order.
class RegionFrontier {
 public:
  RegionFrontier(const ReluNetwork& net, const Hyperrectangle& domain, const Vector& seed, RpmOptions opt = {})
      : net_(net), domain_(domain), opt_(opt) {
    require(domain.dim() == net.input_dim(), "RegionFrontier: domain dimension mismatch");
    require(domain.contains(seed, 0.0), "RegionFrontier: seed lies outside the domain");
    Rng rng(0x7e7e);
    Vector x = seed;
    for (int attempt = 0; attempt < 20; ++attempt) {
      auto r = region_at(net, x, domain);
      const auto ball = chebyshev_ball(r.region);
      if (ball && ball->radius >= opt_.min_chebyshev_radius) {
        push(std::move(r));
        return;
      }
      // Seed sits on a measure-zero piece; nudge it into a neighbouring cell.
      for (int i = 0; i < x.size(); ++i)
        x(i) = std::clamp(seed(i) + rng.uniform(-1e-5, 1e-5) * (attempt + 1), domain.lower()(i), domain.upper()(i));
    }
    throw SolverError("RegionFrontier: could not find a full-dimensional region at the seed");
  }

  /// Next region in discovery order, with its essential rows populated and
  /// its unseen neighbours queued. nullopt once the domain is exhausted.
  std::optional<AffineRegion> next() {
    if (queue_.empty()) return std::nullopt;
    AffineRegion r = std::move(queue_.front());
    queue_.pop_front();
    r.essential = essential_constraints(r);
    for (int row : r.essential) {
      if (discovered_.size() >= opt_.max_regions) {
        truncated_ = true;
        break;
      }
      auto nb = neighbor(net_, r, row, domain_, opt_);
      if (nb && !discovered_.count(nb->pattern)) push(std::move(*nb));
    }
    return r;
  }

  bool exhausted() const { return queue_.empty(); }
  bool truncated() const { return truncated_; }
  std::size_t discovered() const { return discovered_.size(); }

 private:
  void push(AffineRegion r) {
    r.index = static_cast<int>(discovered_.size());
    discovered_.insert(r.pattern);
    queue_.push_back(std::move(r));
  }

  const ReluNetwork& net_;
  Hyperrectangle domain_;
  RpmOptions opt_;
  std::set<ActivationPattern> discovered_;
  std::deque<AffineRegion> queue_;
  bool truncated_ = false;
};

struct Enumeration {
  std::vector<AffineRegion> regions;
  bool complete = true;  // false when stopped early or capped
};

/// All regions reachable from the seed. `stop` is consulted after each region
/// is produced; returning true ends the walk early.
inline Enumeration enumerate_all(const ReluNetwork& net, const Hyperrectangle& domain, const Vector& seed,
                                 const std::function<bool(const AffineRegion&)>& stop = {},
                                 const RpmOptions& opt = {}) {
  RegionFrontier frontier(net, domain, seed, opt);
  Enumeration out;
  while (auto r = frontier.next()) {
    out.regions.push_back(std::move(*r));
    if (stop && stop(out.regions.back())) {
      out.complete = frontier.exhausted() && !frontier.truncated();
      return out;
    }
  }
  out.complete = !frontier.truncated();
  return out;
}

inline nlohmann::json to_json(const AffineRegion& r) {
  return {{"index", r.index},
          {"pattern", r.pattern},
          {"A", matrix_to_json(r.region.A())},
          {"b", vector_to_json(r.region.b())},
          {"C", matrix_to_json(r.C)},
          {"d", vector_to_json(r.d)}};
}

}  // namespace neuralparc

#pragma once
// Multiscale significance-run analysis (MSRA): detects a smooth filament in
// a point cloud on [0,1]^2. The unit square is tiled, per dyadic scale j, by
// anisotropic vertical-sided parallelograms indexed by horizontal position
// k, altitude l1, and slope l2; a region is significant when its point count
// exceeds N*, and the detector thresholds the longest good-continuation path
// of significant regions across all scales up to the covering scale c_J.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "philox.hpp"
#include "pseudo_tree.hpp"
#include "stats.hpp"

namespace bernet {

struct ScenePoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const ScenePoint&, const ScenePoint&) = default;
};

// -------------------------------------------------------------------------
// Scene generation: uniform background, optionally contaminated by a
// sinusoid curve with an audited smoothness certificate.
// -------------------------------------------------------------------------

struct CurveSpec {
  double amplitude = 0.0;  // f(x) = 1/2 + amplitude * sin(2 pi freq x + phase)
  double frequency = 1.0;
  double phase = 0.0;
  double alpha = 2.0;
  double beta = 1.0;
  double slope_cap = 1.0;    // required |f'| bound S
  double holder_ratio = 0.0; // audited max |f'(x)-f'(y)| / (alpha beta |x-y|^(alpha-1))
  double slope_max = 0.0;    // audited max |f'|

  double value(double x) const {
    return 0.5 + amplitude * std::sin(2.0 * std::numbers::pi * frequency * x + phase);
  }
  double derivative(double x) const {
    return amplitude * 2.0 * std::numbers::pi * frequency *
           std::cos(2.0 * std::numbers::pi * frequency * x + phase);
  }
};

struct Scene {
  std::vector<ScenePoint> points;
  bool alternative = false;
  double eps = 0.0;
  CurveSpec curve;  // meaningful only when alternative
};

namespace detail {

// Numerical smoothness audit on a uniform grid: the worst pairwise ratio
// |f'(x)-f'(y)| / (alpha beta |x-y|^(alpha-1)) and the worst |f'|. Both are
// linear in the curve amplitude, which the generator exploits to rescale.
inline std::pair<double, double> holder_audit(const CurveSpec& c, int grid_n = 4096) {
  std::vector<double> fp(static_cast<std::size_t>(grid_n));
  const double h = 1.0 / double(grid_n - 1);
  double slope_max = 0.0;
  for (int i = 0; i < grid_n; ++i) {
    fp[std::size_t(i)] = c.derivative(double(i) * h);
    slope_max = std::max(slope_max, std::abs(fp[std::size_t(i)]));
  }
  std::vector<double> dist_pow(static_cast<std::size_t>(grid_n), 0.0);
  for (int k = 1; k < grid_n; ++k)
    dist_pow[std::size_t(k)] = std::pow(double(k) * h, c.alpha - 1.0);
  double ratio = 0.0;
  for (int i = 0; i < grid_n; ++i)
    for (int k = 1; k < grid_n - i; ++k) {
      const double num = std::abs(fp[std::size_t(i + k)] - fp[std::size_t(i)]);
      ratio = std::max(ratio, num / (c.alpha * c.beta * dist_pow[std::size_t(k)]));
    }
  return {ratio, slope_max};
}

// Draws sinusoid parameters and rescales the amplitude until the smoothness
// certificate holds with margin 0.9 and the slope stays within S. Flat or
// failing draws resample; persistent failure is an error.
inline CurveSpec generate_curve(double alpha, double beta, double S,
                                const CounterStream& stream) {
  for (uint64_t attempt = 0; attempt < 32; ++attempt) {
    CurveSpec c;
    c.alpha = alpha;
    c.beta = beta;
    c.slope_cap = S;
    c.amplitude = 0.05 + 0.40 * uniform01(stream, 3 * attempt);
    c.frequency = 0.5 + 1.5 * uniform01(stream, 3 * attempt + 1);
    c.phase = 2.0 * std::numbers::pi * uniform01(stream, 3 * attempt + 2);
    auto [ratio, slope] = holder_audit(c);
    const double scale =
        std::min({1.0, ratio > 0.0 ? 0.9 / ratio : 1.0,
                  slope > 0.0 ? S / slope : 1.0});
    if (scale < 1.0) {
      c.amplitude *= scale * (1.0 - 1e-12);
      std::tie(ratio, slope) = holder_audit(c);
    }
    if (ratio <= 0.9 && slope <= S && c.amplitude >= 0.01) {
      c.holder_ratio = ratio;
      c.slope_max = slope;
      return c;
    }
  }
  throw std::domain_error("sample_scene: curve failed the smoothness audit");
}

}  // namespace detail

// N points on [0,1]^2. Point i consumes words 3i (x), 3i+1 (y), 3i+2
// (mixture coin) of the kScene stream; the curve draws live on stream 1 of
// the same domain. The null generator consumes the identical words, so
// eps = 0 reproduces the null scene bit for bit under the same seed.
inline Scene sample_scene(uint64_t N, double alpha, double beta, double S,
                          double eps, uint64_t seed, bool alternative) {
  if (N < 1) throw std::invalid_argument("sample_scene: N must be >= 1");
  if (!(eps >= 0.0 && eps <= 1.0))
    throw std::invalid_argument("sample_scene: eps must lie in [0,1]");
  if (!(alpha > 1.0 && alpha <= 2.0))
    throw std::invalid_argument("sample_scene: alpha must lie in (1,2]");
  if (!(beta > 0.0)) throw std::invalid_argument("sample_scene: beta must be positive");
  if (!(S >= 1.0)) throw std::invalid_argument("sample_scene: S must be >= 1");

  Scene scene;
  scene.alternative = alternative;
  scene.eps = alternative ? eps : 0.0;
  const CounterStream pts(seed, RngDomain::kScene, 0);
  if (alternative)
    scene.curve = detail::generate_curve(alpha, beta, S,
                                         CounterStream(seed, RngDomain::kScene, 1));

  scene.points.resize(std::size_t(N));
  for (uint64_t i = 0; i < N; ++i) {
    const double x = uniform01(pts, 3 * i);
    const double y = uniform01(pts, 3 * i + 1);
    const double coin = uniform01(pts, 3 * i + 2);
    if (alternative && coin < eps)
      scene.points[std::size_t(i)] = {x, scene.curve.value(x)};
    else
      scene.points[std::size_t(i)] = {x, y};
  }
  return scene;
}

// -------------------------------------------------------------------------
// Region family at one scale.
// -------------------------------------------------------------------------

struct ScaleGeometry {
  int j = 0;
  int J = 0;
  double S = 1.0;

  long long k_count() const { return 1LL << j; }
  long long l1_count() const { return 1LL << (J - j + 1); }
  long long l2_max() const {
    return (long long)std::floor(S * std::ldexp(1.0, J - 2 * j + 1));
  }
  double omega() const { return std::ldexp(1.0, -j); }
  double height() const { return std::ldexp(1.0, j - J + 1); }   // t
  double delta1() const { return std::ldexp(1.0, j - J - 1); }   // t/4
  double delta2() const { return std::ldexp(1.0, 2 * j - J - 1); } // t/(4 omega)
  long long region_count() const {
    return k_count() * l1_count() * (2 * l2_max() + 1);
  }
};

inline ScaleGeometry scale_geometry(int j, int J, double S) {
  if (J < 1 || J > 30)
    throw std::invalid_argument("scale_geometry: J must lie in [1,30]");
  if (j < 0 || j > J)
    throw std::invalid_argument("scale_geometry: scale out of range");
  if (!(S >= 1.0)) throw std::invalid_argument("scale_geometry: S must be >= 1");
  return ScaleGeometry{j, J, S};
}

struct MsraRegion {
  int j = 0;
  long long k = 0;
  long long l1 = 0;
  long long l2 = 0;
};

inline double region_center_x(const ScaleGeometry& g, const MsraRegion& r) {
  return (double(r.k) + 0.5) * g.omega();
}
inline double region_center_y(const ScaleGeometry& g, const MsraRegion& r) {
  return double(r.l1) * g.delta1();
}
inline double region_slope(const ScaleGeometry& g, const MsraRegion& r) {
  return double(r.l2) * g.delta2();
}

// Vertical-sided parallelogram membership; boundary points count as inside.
inline bool region_contains(const ScaleGeometry& g, const MsraRegion& r,
                            double x, double y) {
  const double dx = x - region_center_x(g, r);
  if (std::abs(dx) > g.omega() / 2.0) return false;
  const double dy = y - region_center_y(g, r) - region_slope(g, r) * dx;
  return std::abs(dy) <= g.height() / 2.0;
}

// Good-continuation successors (k+1, l1+l2+u, l2+v), |u| <= 4, |v| <= 4,
// restricted to valid index ranges.
inline std::vector<MsraRegion> region_successors(const ScaleGeometry& g,
                                                 const MsraRegion& r) {
  std::vector<MsraRegion> out;
  if (r.k + 1 >= g.k_count()) return out;
  for (int u = -4; u <= 4; ++u)
    for (int v = -4; v <= 4; ++v) {
      const long long l1 = r.l1 + r.l2 + u;
      const long long l2 = r.l2 + v;
      if (l1 < 0 || l1 >= g.l1_count()) continue;
      if (l2 < -g.l2_max() || l2 > g.l2_max()) continue;
      out.push_back({g.j, r.k + 1, l1, l2});
    }
  return out;
}

namespace detail {

// Counting core: for every region at scale g with a positive point count,
// invokes fn(k, l1, l2, count). Points are bucketed into closed x-slabs
// (slab boundaries belong to both neighbors), and per (k, l2) the counts
// over all altitudes come from one difference-array sweep of the projected
// altitudes, so work is O(points * slopes + regions) rather than
// O(points * regions).
template <typename Fn>
void for_each_counted_region(const std::vector<ScenePoint>& points,
                             const ScaleGeometry& g, Fn&& fn) {
  std::vector<ScenePoint> sorted = points;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScenePoint& a, const ScenePoint& b) { return a.x < b.x; });

  const double omega = g.omega();
  const double t = g.height();
  const double d1 = g.delta1();
  const double d2 = g.delta2();
  const long long l1n = g.l1_count();
  const long long l2m = g.l2_max();
  std::vector<int32_t> diff(std::size_t(l1n) + 1, 0);

  for (long long k = 0; k < g.k_count(); ++k) {
    const double x_lo = double(k) * omega;
    const double x_hi = double(k + 1) * omega;
    const auto first = std::lower_bound(
        sorted.begin(), sorted.end(), x_lo,
        [](const ScenePoint& p, double v) { return p.x < v; });
    const auto last = std::upper_bound(
        sorted.begin(), sorted.end(), x_hi,
        [](double v, const ScenePoint& p) { return v < p.x; });
    if (first == last) continue;
    const double cx = (double(k) + 0.5) * omega;

    for (long long l2 = -l2m; l2 <= l2m; ++l2) {
      const double s = double(l2) * d2;
      std::fill(diff.begin(), diff.end(), 0);
      for (auto it = first; it != last; ++it) {
        const double yhat = it->y - s * (it->x - cx);
        long long lo = (long long)std::ceil((yhat - t / 2.0) / d1);
        long long hi = (long long)std::floor((yhat + t / 2.0) / d1);
        lo = std::max(lo, 0LL);
        hi = std::min(hi, l1n - 1);
        if (lo > hi) continue;
        ++diff[std::size_t(lo)];
        --diff[std::size_t(hi) + 1];
      }
      int32_t running = 0;
      for (long long l1 = 0; l1 < l1n; ++l1) {
        running += diff[std::size_t(l1)];
        if (running > 0) fn(k, l1, l2, uint32_t(running));
      }
    }
  }
}

}  // namespace detail

// Dense per-region counts for oracle-scale instances; index layout
// ((k * l1_count + l1) * (2 l2_max + 1)) + (l2 + l2_max).
inline std::vector<uint32_t> region_counts_dense(
    const std::vector<ScenePoint>& points, const ScaleGeometry& g) {
  if (g.region_count() > (1LL << 24))
    throw std::invalid_argument(
        "region_counts_dense: region family too large for dense output");
  std::vector<uint32_t> counts(std::size_t(g.region_count()), 0);
  const long long stride = 2 * g.l2_max() + 1;
  detail::for_each_counted_region(
      points, g, [&](long long k, long long l1, long long l2, uint32_t c) {
        counts[std::size_t((k * g.l1_count() + l1) * stride +
                           (l2 + g.l2_max()))] = c;
      });
  return counts;
}

// -------------------------------------------------------------------------
// Significance graph and the longest significant path.
// -------------------------------------------------------------------------

struct SignificantNode {
  long long k = 0;
  long long l1 = 0;
  long long l2 = 0;
  uint32_t count = 0;
};

struct SignificanceGraph {
  ScaleGeometry geometry;
  int N_star = 0;
  // Significant regions only (s(R) = 1), ascending (k, l2, l1); every other
  // region of the family carries label 0 and is omitted.
  std::vector<SignificantNode> nodes;
};

inline SignificanceGraph build_significance_graph(
    const std::vector<ScenePoint>& points, int j, int J, double S,
    int N_star) {
  if (N_star < 0)
    throw std::invalid_argument("build_significance_graph: N_star must be >= 0");
  SignificanceGraph graph;
  graph.geometry = scale_geometry(j, J, S);
  graph.N_star = N_star;
  detail::for_each_counted_region(
      points, graph.geometry,
      [&](long long k, long long l1, long long l2, uint32_t c) {
        if (c > uint32_t(N_star)) graph.nodes.push_back({k, l1, l2, c});
      });
  return graph;
}

// Longest path of significant, good-continuation-connected regions: the
// reach-window DP over columns k, walked on the sparse significant set via
// the 81 admissible predecessors of each node. Node order is normalized
// internally, so hand-built graphs need not be sorted.
inline long long longest_significant_path(const SignificanceGraph& graph) {
  const ScaleGeometry& g = graph.geometry;
  const uint64_t stride = uint64_t(2 * g.l2_max() + 1);
  const auto key = [&](long long l1, long long l2) {
    return uint64_t(l1) * stride + uint64_t(l2 + g.l2_max());
  };

  std::vector<SignificantNode> nodes = graph.nodes;
  std::sort(nodes.begin(), nodes.end(),
            [](const SignificantNode& a, const SignificantNode& b) {
              return std::tie(a.k, a.l1, a.l2) < std::tie(b.k, b.l1, b.l2);
            });

  long long best = 0;
  std::unordered_map<uint64_t, long long> prev, cur;
  std::size_t i = 0;
  for (long long k = 0; k < g.k_count() && i < nodes.size(); ++k) {
    cur.clear();
    while (i < nodes.size() && nodes[i].k == k) {
      const SignificantNode& node = nodes[i];
      long long reach = 0;
      if (!prev.empty())
        for (int v = -4; v <= 4; ++v)
          for (int u = -4; u <= 4; ++u) {
            const long long pl2 = node.l2 - v;
            if (pl2 < -g.l2_max() || pl2 > g.l2_max()) continue;
            const long long pl1 = node.l1 - pl2 - u;
            if (pl1 < 0 || pl1 >= g.l1_count()) continue;
            const auto it = prev.find(key(pl1, pl2));
            if (it != prev.end()) reach = std::max(reach, it->second);
          }
      const long long len = 1 + reach;
      cur[key(node.l1, node.l2)] = len;
      best = std::max(best, len);
      ++i;
    }
    prev.swap(cur);
  }
  return best;
}

// -------------------------------------------------------------------------
// Thresholds and the decision rule.
// -------------------------------------------------------------------------

struct MsraThresholds {
  int N_star = 0;          // counting threshold
  double p0 = 0.0;         // P(Poisson(2) > N_star), the null node probability
  double L_star = 0.0;     // decision threshold on the longest path
  double p_star = 0.0;     // per-region significance needed along the tube
  double lambda_star = 0.0;
  double T_star = 0.0;     // contamination constant
  double delta3 = 0.0;
  int c_J = 0;             // covering scale cap
  int J = 0;
  double phi_p0 = 0.0;     // decay rate of the 81-neighbor lattice at p0
  uint64_t phi_seed = 0;   // seed of the cached decay-rate fit
};

// Covering-scale cap when alpha and beta are unknown.
inline int msra_scale_cap_agnostic(int J) {
  return int(std::ceil(0.5001 * double(J)));
}

inline constexpr uint64_t kMsraPhiSeed = 20260814u;

// Decay rate of the depth-first survival probability on the d = 2,
// C = (4,4) lattice (81 forward neighbors) at node probability p0. One
// slope fit at a pinned seed; callers cache the result in the thresholds
// record. The deep-subcritical start (survival ~ p0 per column) needs a
// large population before the splitting estimator's relative error stays
// inside the fit window's cap out to double-digit depths.
inline PhiFit msra_phi_fit(double p0, uint64_t seed = kMsraPhiSeed,
                           int threads = 0) {
  PseudoTreeConfig cfg;
  cfg.C = {4, 4};
  cfg.p = p0;
  std::vector<long long> ks(16);
  for (int k = 1; k <= 16; ++k) ks[std::size_t(k - 1)] = k;
  return phi_fit(theta_series(cfg, ks, 262144, seed, threads));
}

inline MsraThresholds compute_thresholds(uint64_t N, double alpha, double beta,
                                         double S, double delta3,
                                         double phi_p0 = 0.0,
                                         uint64_t phi_seed = kMsraPhiSeed,
                                         int threads = 0) {
  if (N < 2) throw std::invalid_argument("compute_thresholds: N must be >= 2");
  if (!(alpha > 1.0 && alpha <= 2.0))
    throw std::invalid_argument("compute_thresholds: alpha must lie in (1,2]");
  if (!(beta > 0.0))
    throw std::invalid_argument("compute_thresholds: beta must be positive");
  if (!(S >= 1.0)) throw std::invalid_argument("compute_thresholds: S must be >= 1");
  if (!(delta3 > 0.0))
    throw std::invalid_argument("compute_thresholds: delta3 must be positive");

  MsraThresholds th;
  th.delta3 = delta3;
  th.J = int(std::ceil(std::log2(double(N))));

  // Counting threshold: smallest N* with P(Poisson(2) > N*) below the
  // 81-neighbor critical bound 1/81.
  th.N_star = 0;
  while (!(poisson_tail(2.0, th.N_star) < 1.0 / 81.0)) ++th.N_star;
  th.p0 = poisson_tail(2.0, th.N_star);

  th.c_J = int(std::ceil((double(th.J) + std::log2(beta)) / (alpha + 1.0)));
  if (th.c_J < 0) th.c_J = 0;
  if (th.c_J > th.J) th.c_J = th.J;

  th.phi_seed = phi_seed;
  th.phi_p0 = phi_p0 > 0.0 ? phi_p0 : msra_phi_fit(th.p0, phi_seed, threads).phi_hat;
  if (!(th.phi_p0 > 0.0))
    throw std::domain_error("compute_thresholds: decay-rate fit returned zero");

  th.L_star = (1.0 + delta3) * 2.0 * double(th.J) * std::log(2.0) / th.phi_p0;
  th.p_star = std::exp(-th.phi_p0 * double(th.c_J) * (1.0 - delta3) /
                       (2.0 * double(th.J) * (1.0 + delta3)));

  // Smallest lambda on a geometric grid whose Poisson tail beats p_star.
  double lambda = 0.25;
  while (!(poisson_tail(lambda, th.N_star) > th.p_star)) {
    lambda *= 1.01;
    if (lambda > 1e4)
      throw std::domain_error(
          "compute_thresholds: no lambda satisfies the tail inequality");
  }
  th.lambda_star = lambda;
  th.T_star = 2.0 * th.lambda_star * std::pow(beta, 1.0 / (1.0 + alpha)) *
              std::sqrt(1.0 + S * S);
  return th;
}

struct MsraDecision {
  bool reject = false;
  long long statistic = 0;  // max over scales of the longest significant path
  double threshold = 0.0;   // L_star
  int best_scale = 0;       // scale attaining the maximum
  std::vector<long long> per_scale;  // lengths for j = 0..c_J
};

inline MsraDecision msra_test(const std::vector<ScenePoint>& points,
                              const MsraThresholds& th, int J, double S) {
  if (J != th.J)
    throw std::invalid_argument("msra_test: J disagrees with the thresholds record");
  MsraDecision d;
  d.threshold = th.L_star;
  d.per_scale.resize(std::size_t(th.c_J) + 1, 0);
  for (int j = 0; j <= th.c_J; ++j) {
    const SignificanceGraph graph =
        build_significance_graph(points, j, J, S, th.N_star);
    const long long len = longest_significant_path(graph);
    d.per_scale[std::size_t(j)] = len;
    if (len > d.statistic) {
      d.statistic = len;
      d.best_scale = j;
    }
  }
  d.reject = double(d.statistic) > th.L_star;
  return d;
}

// -------------------------------------------------------------------------
// Serialization.
// -------------------------------------------------------------------------

inline void write_scene_csv(std::ostream& out, const Scene& scene) {
  out << "x,y\n";
  out.precision(17);
  for (const ScenePoint& p : scene.points) out << p.x << ',' << p.y << '\n';
}

inline std::vector<ScenePoint> read_scene_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,y", 0) != 0)
    throw std::invalid_argument("scene CSV must start with an x,y header");
  std::vector<ScenePoint> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("scene CSV row must be x,y");
    points.push_back(
        {std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
  }
  return points;
}

inline void to_json(nlohmann::json& j, const MsraThresholds& t) {
  j = {{"N_star", t.N_star},
       {"p0", t.p0},
       {"L_star", t.L_star},
       {"p_star", t.p_star},
       {"lambda_star", t.lambda_star},
       {"T_star", t.T_star},
       {"delta3", t.delta3},
       {"c_J", t.c_J},
       {"J", t.J},
       {"phi_p0", t.phi_p0},
       {"phi_seed", t.phi_seed}};
}

inline void from_json(const nlohmann::json& j, MsraThresholds& t) {
  j.at("N_star").get_to(t.N_star);
  j.at("p0").get_to(t.p0);
  j.at("L_star").get_to(t.L_star);
  j.at("p_star").get_to(t.p_star);
  j.at("lambda_star").get_to(t.lambda_star);
  j.at("T_star").get_to(t.T_star);
  j.at("delta3").get_to(t.delta3);
  j.at("c_J").get_to(t.c_J);
  j.at("J").get_to(t.J);
  j.at("phi_p0").get_to(t.phi_p0);
  j.at("phi_seed").get_to(t.phi_seed);
}

inline void to_json(nlohmann::json& j, const MsraDecision& d) {
  j = {{"decision", d.reject ? "reject" : "accept"},
       {"statistic", d.statistic},
       {"threshold", d.threshold},
       {"scale", d.best_scale},
       {"per_scale", d.per_scale}};
}

}  // namespace bernet

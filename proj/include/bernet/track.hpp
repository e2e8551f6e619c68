#pragma once
// Target-tracking pipeline: a hidden occupancy field over m locations
// evolves through n time steps (emergence / left / stay / right / vanish,
// collisions clamped to one), observed through additive Gaussian noise.
// The detector thresholds the observations and tests the longest significant
// run of the resulting m-by-n Bernoulli net with reach 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "longest_run.hpp"
#include "markov_exact.hpp"
#include "net.hpp"
#include "philox.hpp"
#include "stats.hpp"

namespace bernet {

struct TrackConfig {
  int m = 1;          // locations
  long long n = 1;    // observed time steps
  double p0 = 0.0;    // emergence at an empty location
  double p1 = 0.0;    // shift left
  double p2 = 0.0;    // stay
  double p3 = 0.0;    // shift right
  double sigma = 1.0; // observation noise std
  uint64_t seed = 0;

  void validate() const {
    if (m < 1) throw std::invalid_argument("TrackConfig: m must be >= 1");
    if (n < 1) throw std::invalid_argument("TrackConfig: n must be >= 1");
    for (double q : {p0, p1, p2, p3})
      if (!(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument(
            "TrackConfig: probabilities must lie in [0,1]");
    if (!(p1 + p2 + p3 < 1.0 || (p1 + p2 + p3 == 1.0 && p0 == 0.0)))
      throw std::invalid_argument("TrackConfig: p1 + p2 + p3 must be < 1");
    if (!(sigma >= 0.0))
      throw std::invalid_argument("TrackConfig: sigma must be nonnegative");
    if (uint64_t(m) * uint64_t(n) > (uint64_t(1) << 32))
      throw std::invalid_argument("TrackConfig: scene exceeds 2^32 cells");
  }
};

struct TrackScene {
  TrackConfig config;
  std::vector<uint8_t> X;  // occupancy, X[(t-1)*m + (j-1)], t=1..n, j=1..m
  std::vector<double> Z;   // observations, same layout

  bool x_at(long long t, int j) const {
    return X[std::size_t(t - 1) * std::size_t(config.m) + std::size_t(j - 1)] !=
           0;
  }
  double z_at(long long t, int j) const {
    return Z[std::size_t(t - 1) * std::size_t(config.m) + std::size_t(j - 1)];
  }
};

// Evolves the occupancy field from x0 (all-empty when omitted) through n
// steps and adds noise. Transition (t, j) consumes word (t-1)*m + (j-1) of
// the kTrack stream; observation (t, j) consumes block (t-1)*m + (j-1) of
// the kNoise stream. The H0 scene is the p0 = 0, empty-x0 special case.
inline TrackScene simulate_track(const TrackConfig& cfg,
                                 const std::vector<uint8_t>& x0 = {}) {
  cfg.validate();
  if (!x0.empty() && x0.size() != std::size_t(cfg.m))
    throw std::invalid_argument("simulate_track: x0 must have m entries");

  TrackScene scene;
  scene.config = cfg;
  const std::size_t cells = std::size_t(cfg.n) * std::size_t(cfg.m);
  scene.X.assign(cells, 0);
  scene.Z.assign(cells, 0.0);

  const CounterStream moves(cfg.seed, RngDomain::kTrack, 0);
  const CounterStream noise(cfg.seed, RngDomain::kNoise, 0);
  const uint64_t thr_emerge = bernoulli_threshold(cfg.p0);

  std::vector<uint8_t> prev(x0.empty() ? std::vector<uint8_t>(std::size_t(cfg.m), 0)
                                       : x0);
  std::vector<uint8_t> next(std::size_t(cfg.m), 0);
  for (long long t = 1; t <= cfg.n; ++t) {
    std::fill(next.begin(), next.end(), 0);
    for (int j = 0; j < cfg.m; ++j) {
      const uint64_t word =
          moves.word32(uint64_t(t - 1) * uint64_t(cfg.m) + uint64_t(j));
      if (!prev[std::size_t(j)]) {
        if (word < thr_emerge) next[std::size_t(j)] = 1;  // newly emerging
        continue;
      }
      const double u = u32_to_unit(uint32_t(word));
      if (u < cfg.p1) {
        if (j > 0) next[std::size_t(j - 1)] = 1;  // off the edge: vanishes
      } else if (u < cfg.p1 + cfg.p2) {
        next[std::size_t(j)] = 1;
      } else if (u < cfg.p1 + cfg.p2 + cfg.p3) {
        if (j + 1 < cfg.m) next[std::size_t(j + 1)] = 1;
      }  // else: vanishes
    }
    for (int j = 0; j < cfg.m; ++j) {
      const std::size_t cell =
          std::size_t(t - 1) * std::size_t(cfg.m) + std::size_t(j);
      scene.X[cell] = next[std::size_t(j)];
      scene.Z[cell] = double(next[std::size_t(j)]) +
                      cfg.sigma * gaussian01(noise, uint64_t(cell));
    }
    prev.swap(next);
  }
  return scene;
}

enum class TrackMode { kFixedM, kInflating };

struct TrackDecision {
  bool reject = false;
  long long statistic = 0;  // longest significant run of the binarized scene
  double threshold = 0.0;
  double z_star = 0.0;        // observation cutoff
  double p_significant = 0.0; // P(noise > z_star) = p_target
  TrackMode mode = TrackMode::kFixedM;
};

// Thresholds the raw observations at Z* = sigma * Phi^{-1}(1 - p_target),
// runs the reach-1 longest-run DP over the m-by-n binarized net (time is
// the column axis), and compares against the mode's decision threshold:
// fixed-m uses (1+delta4) log_{1/rho(m,p_target)} n with the exact rho
// (m <= 12); inflating uses (1+delta4) log(mn)/phi_hat.
inline TrackDecision track_test(const std::vector<double>& z, int m,
                                long long n, double sigma, double p_target,
                                TrackMode mode, double delta4 = 0.1,
                                double phi_hat = 0.0) {
  if (m < 1 || n < 1)
    throw std::invalid_argument("track_test: m and n must be >= 1");
  if (z.size() != std::size_t(m) * std::size_t(n))
    throw std::invalid_argument("track_test: z must have m*n entries");
  if (!(sigma > 0.0))
    throw std::invalid_argument("track_test: sigma must be positive");
  if (!(p_target > 0.0 && p_target < 1.0 / 3.0))
    throw std::invalid_argument("track_test: p_target must lie in (0, 1/3)");
  if (!(delta4 > 0.0))
    throw std::invalid_argument("track_test: delta4 must be positive");

  TrackDecision decision;
  decision.mode = mode;
  decision.p_significant = p_target;
  decision.z_star = sigma * normal_quantile(1.0 - p_target);

  NetConfig cfg;
  cfg.n = n;
  cfg.row_dims = {{m, 1}};
  cfg.p = p_target;
  Net net(cfg);
  for (long long t = 1; t <= n; ++t)
    for (int j = 0; j < m; ++j)
      if (z[std::size_t(t - 1) * std::size_t(m) + std::size_t(j)] >
          decision.z_star)
        net.set(t - 1, uint64_t(j), true);
  decision.statistic = longest_run_length(net);

  if (mode == TrackMode::kFixedM) {
    if (m > 12)
      throw std::invalid_argument(
          "track_test: fixed-m mode requires m <= 12 (exact rho)");
    const double rho = rho_exact(m, 1, p_target).rho;
    decision.threshold =
        (1.0 + delta4) * std::log(double(n)) / (-std::log(rho));
  } else {
    if (!(phi_hat > 0.0))
      throw std::invalid_argument(
          "track_test: inflating mode requires phi_hat > 0");
    decision.threshold =
        (1.0 + delta4) * std::log(double(m) * double(n)) / phi_hat;
  }
  decision.reject = double(decision.statistic) > decision.threshold;
  return decision;
}

inline TrackDecision track_test(const TrackScene& scene, double p_target,
                                TrackMode mode, double delta4 = 0.1,
                                double phi_hat = 0.0) {
  return track_test(scene.Z, scene.config.m, scene.config.n,
                    scene.config.sigma, p_target, mode, delta4, phi_hat);
}

// Frame-major CSV: header `t,location,x,z`, t ascending then location.
inline void write_track_csv(std::ostream& out, const TrackScene& scene) {
  out << "t,location,x,z\n";
  out.precision(17);
  for (long long t = 1; t <= scene.config.n; ++t)
    for (int j = 1; j <= scene.config.m; ++j)
      out << t << ',' << j << ',' << int(scene.x_at(t, j)) << ','
          << scene.z_at(t, j) << '\n';
}

inline void to_json(nlohmann::json& j, const TrackConfig& c) {
  j = {{"m", c.m},   {"n", c.n},   {"p0", c.p0},       {"p1", c.p1},
       {"p2", c.p2}, {"p3", c.p3}, {"sigma", c.sigma}, {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, TrackConfig& c) {
  j.at("m").get_to(c.m);
  j.at("n").get_to(c.n);
  j.at("p0").get_to(c.p0);
  j.at("p1").get_to(c.p1);
  j.at("p2").get_to(c.p2);
  j.at("p3").get_to(c.p3);
  j.at("sigma").get_to(c.sigma);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
}

inline void to_json(nlohmann::json& j, const TrackDecision& d) {
  j = {{"decision", d.reject ? "reject" : "accept"},
       {"statistic", d.statistic},
       {"threshold", d.threshold},
       {"z_star", d.z_star},
       {"p_significant", d.p_significant},
       {"mode", d.mode == TrackMode::kFixedM ? "fixed-m" : "inflating"}};
}

}  // namespace bernet

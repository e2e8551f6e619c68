#pragma once
// Anomalous-run hypothesis test on a Bernoulli net: under the null every
// node is Bernoulli(p0); under the alternative the nodes of one hidden
// connected chain are redrawn at p1 > p0. The test rejects when the longest
// significant run exceeds log(nm)/phi(p0).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "longest_run.hpp"
#include "net.hpp"
#include "parallel.hpp"
#include "philox.hpp"

namespace bernet {

struct AnomalyScenario {
  NetConfig base;   // null-model lattice; base.p plays the role of p0
  double p1 = 1.0;  // significance probability on the planted chain

  // p1 = p0 is admitted so the null-equivalence diagnostic can run; a real
  // alternative needs p1 > p0.
  void validate() const {
    base.validate();
    if (!(p1 >= base.p && p1 <= 1.0))
      throw std::invalid_argument(
          "AnomalyScenario: p1 must lie in [p0, 1]");
  }
};

struct AnomalyOutcome {
  double type1_rate = 0.0;   // P(reject | null)
  double type2_rate = 0.0;   // P(accept | planted chain)
  double threshold = 0.0;    // log(nm)/phi_p0
  bool separated = false;    // log_{1/p1}|L| exceeds the threshold
  uint64_t replicates = 0;
};

namespace detail {

// Random monotone chain spanning all n columns: per-axis start row uniform,
// then per-column steps uniform in [-C, C], clamped to the lattice. Draws
// come from the replicate's kChain stream: words 0..d-1 seed the start,
// word d + (col-1)*d + axis moves axis `axis` entering column col+1.
inline std::vector<NodeCoord> random_monotone_chain(const NetConfig& cfg,
                                                    const CounterStream& chain) {
  const int d = cfg.dim();
  std::vector<NodeCoord> nodes(std::size_t(cfg.n));
  NodeCoord at;
  at.col = 1;
  at.rows.resize(std::size_t(d));
  for (int a = 0; a < d; ++a) {
    const int m = cfg.row_dims[a].m;
    at.rows[a] = 1 + int(uint64_t(chain.word32(uint64_t(a))) % uint64_t(m));
  }
  nodes[0] = at;
  for (long long col = 2; col <= cfg.n; ++col) {
    at.col = col;
    for (int a = 0; a < d; ++a) {
      const int C = cfg.row_dims[a].C;
      const int span = 2 * C + 1;
      const uint64_t w = chain.word32(uint64_t(d) +
                                      uint64_t(col - 2) * uint64_t(d) +
                                      uint64_t(a));
      const int step = int(w % uint64_t(span)) - C;
      at.rows[a] =
          std::min(cfg.row_dims[a].m, std::max(1, at.rows[a] + step));
    }
    nodes[std::size_t(col - 1)] = at;
  }
  return nodes;
}

}  // namespace detail

// Runs `replicates` paired experiments. Null replicate i draws a fresh net
// at p0; alternative replicate i plants a fresh random chain and redraws its
// nodes at p1 (chain and redraw words share the replicate's kChain stream:
// redraw for column c uses word d*n + (c-1)). Rejection rule in both arms:
// longest run > log(nm)/phi_p0.
inline AnomalyOutcome plant_and_test_anomaly(const AnomalyScenario& scenario,
                                             double phi_p0,
                                             uint64_t replicates, uint64_t seed,
                                             int threads = 0) {
  scenario.validate();
  if (!(phi_p0 > 0.0))
    throw std::domain_error(
        "plant_and_test_anomaly: phi_p0 must be positive (subcritical p0)");
  if (replicates < 1 || replicates > (uint64_t(1) << 32))
    throw std::invalid_argument(
        "plant_and_test_anomaly: replicates must lie in [1, 2^32]");

  const NetConfig& cfg = scenario.base;
  const double threshold =
      std::log(double(cfg.node_count())) / phi_p0;
  const int d = cfg.dim();
  const uint64_t thr1 = bernoulli_threshold(scenario.p1);

  std::vector<uint8_t> reject_null(std::size_t(replicates), 0);
  std::vector<uint8_t> reject_alt(std::size_t(replicates), 0);
  parallel_for(
      std::size_t(replicates), resolve_threads(threads),
      [&](std::size_t lo, std::size_t hi) {
        NetConfig rc = cfg;
        for (std::size_t i = lo; i < hi; ++i) {
          rc.seed = replicate_seed(seed, uint64_t(i));
          Net net = generate_net(rc, 1);
          reject_null[i] =
              double(longest_run_length(net)) > threshold ? 1 : 0;

          const CounterStream chain(rc.seed, RngDomain::kChain, 0);
          const std::vector<NodeCoord> planted =
              detail::random_monotone_chain(rc, chain);
          for (long long col = 1; col <= rc.n; ++col) {
            const uint64_t w = chain.word32(uint64_t(d) * uint64_t(rc.n) +
                                            uint64_t(col - 1));
            const bool sig = uint64_t(w) < thr1;
            const NodeCoord& node = planted[std::size_t(col - 1)];
            net.set(node.col - 1, Net::row_linear(rc, node.rows), sig);
          }
          reject_alt[i] =
              double(longest_run_length(net)) > threshold ? 1 : 0;
        }
      });

  uint64_t rejected0 = 0, rejected1 = 0;
  for (uint8_t r : reject_null) rejected0 += r;
  for (uint8_t r : reject_alt) rejected1 += r;

  AnomalyOutcome out;
  out.replicates = replicates;
  out.threshold = threshold;
  out.type1_rate = double(rejected0) / double(replicates);
  out.type2_rate = double(replicates - rejected1) / double(replicates);
  // Separation condition: the chain's own longest run, ~log_{1/p1}|L| with
  // |L| = n, must clear the rejection threshold. p1 = 1 separates whenever
  // the chain itself does (its run length is n).
  out.separated = scenario.p1 >= 1.0
                      ? double(cfg.n) > threshold
                      : std::log(double(cfg.n)) / (-std::log(scenario.p1)) >
                            threshold;
  return out;
}

inline void to_json(nlohmann::json& j, const AnomalyOutcome& o) {
  j = {{"type1_rate", o.type1_rate},
       {"type2_rate", o.type2_rate},
       {"threshold", o.threshold},
       {"separated", o.separated},
       {"replicates", o.replicates}};
}

}  // namespace bernet

#pragma once
// Limit-theorem evaluation for the Bernoulli net: Poisson approximation of
// the across probability, growth-region membership, the inflating-rate law
// for |L0|/log(mn), the Gumbel-type fluctuation fit at fixed m, and a
// frontier Monte Carlo for across probabilities at widths far beyond the
// exact column-state recursion.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "longest_run.hpp"
#include "markov_exact.hpp"
#include "net.hpp"
#include "parallel.hpp"
#include "philox.hpp"
#include "stats.hpp"

namespace bernet {

// -------------------------------------------------------------------------
// Poisson approximation: P_n(m,p) ~ 1 - exp(-m * theta_n). The across event
// is asymptotically a union of ~m near-independent cone survivals, so the
// count of surviving cones is approximately Poisson(m * theta_n).
// -------------------------------------------------------------------------

inline double poisson_approx_across(long long m, double theta_n) {
  if (m < 1)
    throw std::invalid_argument("poisson_approx_across: m must be >= 1");
  if (!(theta_n >= 0.0 && theta_n <= 1.0))
    throw std::invalid_argument(
        "poisson_approx_across: theta_n must lie in [0,1]");
  return -std::expm1(-double(m) * theta_n);
}

// -------------------------------------------------------------------------
// Growth region: c1 * n^(1+delta1) <= m <= c2 * exp[n * (phi - delta2)].
// The upper envelope only outgrows the lower one when delta2 < phi; with
// delta2 >= phi the region empties out for every large n.
// -------------------------------------------------------------------------

struct InflatingRegion {
  double c1 = 1.0;
  double c2 = 1.0;
  double delta1 = 0.1;
  double delta2 = 0.1;
  double phi = 0.5;

  friend bool operator==(const InflatingRegion&,
                         const InflatingRegion&) = default;

  void validate() const {
    if (!(c1 > 0.0) || !(c2 > 0.0))
      throw std::invalid_argument("InflatingRegion: c1 and c2 must be positive");
    if (!(delta1 > 0.0) || !(delta2 > 0.0))
      throw std::invalid_argument(
          "InflatingRegion: delta1 and delta2 must be positive");
    if (!(phi > 0.0))
      throw std::invalid_argument("InflatingRegion: phi must be positive");
  }

  double lower_envelope(long long n) const {
    return c1 * std::pow(double(n), 1.0 + delta1);
  }
  double upper_envelope(long long n) const {
    return c2 * std::exp(double(n) * (phi - delta2));
  }
  // True when the polynomial lower envelope must eventually exceed the
  // (then bounded) upper envelope, i.e. the region is empty for large n.
  bool eventually_empty() const { return delta2 >= phi; }
};

inline bool region_membership(const InflatingRegion& region, long long m,
                              long long n) {
  region.validate();
  if (m < 1 || n < 1)
    throw std::invalid_argument("region_membership: m and n must be >= 1");
  const double mm = double(m);
  return region.lower_envelope(n) <= mm && mm <= region.upper_envelope(n);
}

// -------------------------------------------------------------------------
// Inflating-rate law: |L0(m,n)| / log(mn) -> 1/phi(p). rate_sweep records
// the empirical mean ratio along a size ladder next to the 1/phi_hat target.
// -------------------------------------------------------------------------

struct RateEntry {
  long long m = 0;
  long long n = 0;
  double mean_ratio = 0.0;
  double stderr_value = 0.0;
  uint64_t replicates = 0;

  friend bool operator==(const RateEntry&, const RateEntry&) = default;
};

struct RateTable {
  int C = 1;
  double p = 0.0;
  double phi_hat = 0.0;
  double target_ratio = 0.0;  // 1/phi_hat, the limit the ratios approach
  std::vector<RateEntry> entries;
};

// Replicate r of ladder entry e regenerates the net under
// replicate_seed(seed, (e << 32) | r), so every cell is replayable in
// isolation and the table is identical for every worker count.
inline RateTable rate_sweep(int C, double p, double phi_hat,
                            const std::vector<std::pair<long long, long long>>& sizes,
                            uint64_t replicates, uint64_t seed,
                            int threads = 0) {
  if (C < 1) throw std::invalid_argument("rate_sweep: C must be >= 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("rate_sweep: p must lie in [0,1]");
  if (!(phi_hat > 0.0))
    throw std::invalid_argument("rate_sweep: phi_hat must be positive");
  if (sizes.empty())
    throw std::invalid_argument("rate_sweep: size sequence must be nonempty");
  if (replicates < 1 || replicates > (uint64_t(1) << 32))
    throw std::invalid_argument(
        "rate_sweep: replicates must lie in [1, 2^32]");
  for (std::size_t e = 0; e < sizes.size(); ++e) {
    const auto& [m, n] = sizes[e];
    if (m < 1 || n < 1)
      throw std::invalid_argument("rate_sweep: sizes must be positive");
    if (m * n < 2)
      throw std::invalid_argument("rate_sweep: need m*n >= 2 (log(mn) > 0)");
    if (e > 0 && m * n <= sizes[e - 1].first * sizes[e - 1].second)
      throw std::invalid_argument("rate_sweep: sizes must increase in m*n");
  }

  RateTable table;
  table.C = C;
  table.p = p;
  table.phi_hat = phi_hat;
  table.target_ratio = 1.0 / phi_hat;
  for (std::size_t e = 0; e < sizes.size(); ++e) {
    const auto& [m, n] = sizes[e];
    NetConfig cfg;
    cfg.n = n;
    cfg.row_dims = {{int(m), C}};
    cfg.p = p;
    const double lg = std::log(double(m) * double(n));
    std::vector<double> ratio(std::size_t(replicates), 0.0);
    parallel_for(std::size_t(replicates), resolve_threads(threads),
                 [&](std::size_t lo, std::size_t hi) {
                   NetConfig rc = cfg;
                   for (std::size_t i = lo; i < hi; ++i) {
                     rc.seed =
                         replicate_seed(seed, (uint64_t(e) << 32) | uint64_t(i));
                     ratio[i] =
                         double(longest_run_length(generate_net(rc, 1))) / lg;
                   }
                 });
    RunningStat st;
    for (double x : ratio) st.add(x);  // fixed order: thread-count invariant
    table.entries.push_back({m, n, st.mean, st.stderror(), replicates});
  }
  return table;
}

// -------------------------------------------------------------------------
// Gumbel-type fluctuation law at fixed m: P(|L0| - log_{1/rho} n < t) is
// approximately exp(-A1 * rho^t). gumbel_fit estimates A1 by maximum
// likelihood over the integer sample of |L0| and reports the KS distance of
// the fitted law as goodness of fit. rho comes from the exact column-state
// recursion so the fit isolates A1.
// -------------------------------------------------------------------------

struct GumbelFit {
  int m = 1;
  int C = 1;
  double p = 0.0;
  long long n = 0;
  double rho = 0.0;
  double A1 = 0.0;
  double ks_distance = 0.0;
  uint64_t replicates = 0;
};

namespace detail {

// Log-likelihood of A1 for integer lengths with model
// P(|L0| = l) = exp(-A1 * rho^(l+1-c)) - exp(-A1 * rho^(l-c)), c = log_{1/rho} n.
// Each term is strictly concave in A1, so the sum has a unique maximizer.
inline double gumbel_loglik(double a, const std::map<long, uint64_t>& counts,
                            double rho, double c) {
  double ll = 0.0;
  for (const auto& [len, cnt] : counts) {
    const double u = std::pow(rho, double(len) + 1.0 - c);
    const double v = std::pow(rho, double(len) - c);
    // P = exp(-a*u) - exp(-a*v) = exp(-a*u) * (1 - exp(-a*(v-u))), v > u.
    const double gap = a * (v - u);
    double logp;
    if (gap > 1e-12)
      logp = -a * u + std::log1p(-std::exp(-gap));
    else  // 1 - e^-gap ~ gap for tiny gaps; keeps the tail finite
      logp = -a * u + std::log(std::max(gap, 1e-300));
    ll += double(cnt) * logp;
  }
  return ll;
}

}  // namespace detail

inline GumbelFit gumbel_fit(int m, int C, double p, long long n,
                            uint64_t replicates, uint64_t seed,
                            int threads = 0) {
  if (m < 1 || m > 12)
    throw std::invalid_argument("gumbel_fit: m must lie in [1,12]");
  if (C < 1) throw std::invalid_argument("gumbel_fit: C must be >= 1");
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("gumbel_fit: p must lie in (0,1)");
  if (n < 2) throw std::invalid_argument("gumbel_fit: n must be >= 2");
  if (replicates < 2 || replicates > (uint64_t(1) << 32))
    throw std::invalid_argument("gumbel_fit: replicates must lie in [2, 2^32]");

  GumbelFit fit;
  fit.m = m;
  fit.C = C;
  fit.p = p;
  fit.n = n;
  fit.replicates = replicates;
  fit.rho = rho_exact(m, C, p).rho;

  NetConfig cfg;
  cfg.n = n;
  cfg.row_dims = {{m, C}};
  cfg.p = p;
  std::vector<long> lengths(std::size_t(replicates), 0);
  parallel_for(std::size_t(replicates), resolve_threads(threads),
               [&](std::size_t lo, std::size_t hi) {
                 NetConfig rc = cfg;
                 for (std::size_t i = lo; i < hi; ++i) {
                   rc.seed = replicate_seed(seed, uint64_t(i));
                   lengths[i] = long(longest_run_length(generate_net(rc, 1)));
                 }
               });

  std::map<long, uint64_t> counts;
  for (long len : lengths) ++counts[len];
  if (counts.size() < 2)
    throw std::domain_error("gumbel_fit: degenerate sample (all lengths equal)");

  // c = log_{1/rho} n; the centering that turns lengths into fluctuations t.
  const double c = std::log(double(n)) / (-std::log(fit.rho));

  // Ternary search on log(A1): the log-likelihood is strictly concave.
  double lo = std::log(1e-12), hi = std::log(1e12);
  for (int it = 0; it < 300; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (detail::gumbel_loglik(std::exp(m1), counts, fit.rho, c) <
        detail::gumbel_loglik(std::exp(m2), counts, fit.rho, c))
      lo = m1;
    else
      hi = m2;
  }
  fit.A1 = std::exp(0.5 * (lo + hi));

  const double A1 = fit.A1, rho = fit.rho;
  fit.ks_distance = ks_distance_integer(lengths, [&](long v) {
    // P(|L0| <= v) = P(|L0| < v+1) = exp(-A1 * rho^(v+1-c)).
    return std::exp(-A1 * std::pow(rho, double(v) + 1.0 - c));
  });
  return fit;
}

// -------------------------------------------------------------------------
// Frontier Monte Carlo for across probabilities. Tracks the set of rows
// reachable by significant runs column by column; survival through k columns
// is exactly the across event for length k, so nested survival frequencies
// estimate the whole curve P_1 >= P_2 >= ... >= P_n in one pass. Usable at
// widths (m ~ thousands) far beyond the 2^m exact recursion.
// -------------------------------------------------------------------------

struct AcrossCurve {
  int m = 1;
  int C = 1;
  double p = 0.0;
  long long n = 0;
  uint64_t replicates = 0;
  std::vector<double> p_hat;  // p_hat[k-1] estimates P_k for k = 1..n
  double rho_hat = 0.0;       // p_hat[n-1] / p_hat[n-2]; NaN when undefined

  // The terminal ratio exists only while some replicate reaches column n-1.
  bool rho_defined() const { return !std::isnan(rho_hat); }
};

namespace detail {

// Columns survived by the significant frontier of one replicate net. Node
// (col, r) consumes word col*m + r of the replicate's kNet stream, matching
// generate_net, so the depth agrees with a reachability sweep of that net.
inline long long across_depth(int m, int C, double p, long long n,
                              uint64_t net_seed) {
  const uint64_t thr = bernoulli_threshold(p);
  if (thr == 0) return 0;
  const CounterStream stream(net_seed, RngDomain::kNet, 0);
  const std::size_t words = std::size_t((m + 63) / 64);
  const uint64_t tail_mask =
      (m % 64) ? ((uint64_t(1) << (m % 64)) - 1) : ~uint64_t(0);
  std::vector<uint64_t> frontier(words, 0), column(words, 0);

  PhiloxBlock blk{};
  uint64_t have = ~uint64_t(0);
  const auto read_column = [&](long long col) {
    std::fill(column.begin(), column.end(), 0);
    for (int r = 0; r < m; ++r) {
      const uint64_t node = uint64_t(col) * uint64_t(m) + uint64_t(r);
      if ((node >> 2) != have) {
        have = node >> 2;
        blk = stream.block(have);
      }
      if (uint64_t(blk[node & 3]) < thr)
        column[std::size_t(r >> 6)] |= uint64_t(1) << (r & 63);
    }
  };

  read_column(0);
  frontier = column;
  if (std::all_of(frontier.begin(), frontier.end(),
                  [](uint64_t w) { return w == 0; }))
    return 0;

  std::vector<uint64_t> dilated(words, 0);
  for (long long col = 1; col < n; ++col) {
    // Dilate by the reach window: C one-step spreads along the row axis.
    dilated = frontier;
    for (int step = 0; step < C; ++step) {
      uint64_t carry_up = 0, carry_dn = 0;
      for (std::size_t w = 0; w < words; ++w) {
        const uint64_t cur = dilated[w];
        const uint64_t up = (cur << 1) | carry_up;
        carry_up = cur >> 63;
        dilated[w] |= up;
      }
      for (std::size_t w = words; w-- > 0;) {
        const uint64_t cur = dilated[w];
        const uint64_t dn = (cur >> 1) | (carry_dn << 63);
        carry_dn = cur & 1;
        dilated[w] |= dn;
      }
      dilated[words - 1] &= tail_mask;
    }
    read_column(col);
    bool alive = false;
    for (std::size_t w = 0; w < words; ++w) {
      frontier[w] = dilated[w] & column[w];
      alive |= frontier[w] != 0;
    }
    if (!alive) return col;  // survived columns 1..col, died entering col+1
  }
  return n;
}

}  // namespace detail

// Replicate i regenerates its net under replicate_seed(seed, i); survival
// depths are tallied in replicate order, so the curve is worker-count
// invariant. rho_hat is NaN when no replicate survives n-1 columns.
inline AcrossCurve across_prob_mc(int m, int C, double p, long long n,
                                  uint64_t replicates, uint64_t seed,
                                  int threads = 0) {
  if (m < 1) throw std::invalid_argument("across_prob_mc: m must be >= 1");
  if (C < 1) throw std::invalid_argument("across_prob_mc: C must be >= 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("across_prob_mc: p must lie in [0,1]");
  if (n < 2) throw std::invalid_argument("across_prob_mc: n must be >= 2");
  if (replicates < 1 || replicates > (uint64_t(1) << 32))
    throw std::invalid_argument(
        "across_prob_mc: replicates must lie in [1, 2^32]");

  std::vector<long long> depth(std::size_t(replicates), 0);
  parallel_for(std::size_t(replicates), resolve_threads(threads),
               [&](std::size_t lo, std::size_t hi) {
                 for (std::size_t i = lo; i < hi; ++i)
                   depth[i] = detail::across_depth(
                       m, C, p, n, replicate_seed(seed, uint64_t(i)));
               });

  std::vector<uint64_t> at_least(std::size_t(n) + 1, 0);
  for (long long d : depth) ++at_least[std::size_t(d)];
  for (std::size_t k = n; k-- > 0;) at_least[k] += at_least[k + 1];

  AcrossCurve curve;
  curve.m = m;
  curve.C = C;
  curve.p = p;
  curve.n = n;
  curve.replicates = replicates;
  curve.p_hat.resize(std::size_t(n));
  for (long long k = 1; k <= n; ++k)
    curve.p_hat[std::size_t(k - 1)] =
        double(at_least[std::size_t(k)]) / double(replicates);
  curve.rho_hat =
      curve.p_hat[std::size_t(n - 2)] > 0.0
          ? curve.p_hat[std::size_t(n - 1)] / curve.p_hat[std::size_t(n - 2)]
          : std::numeric_limits<double>::quiet_NaN();
  return curve;
}

// -------------------------------------------------------------------------
// Serialization.
// -------------------------------------------------------------------------

inline void write_rate_csv(std::ostream& out, const RateTable& table) {
  out << "m,n,mean_ratio,stderr,replicates,target_ratio\n";
  out.precision(17);
  for (const RateEntry& e : table.entries)
    out << e.m << ',' << e.n << ',' << e.mean_ratio << ',' << e.stderr_value
        << ',' << e.replicates << ',' << table.target_ratio << '\n';
}

inline void to_json(nlohmann::json& j, const InflatingRegion& r) {
  j = {{"c1", r.c1},
       {"c2", r.c2},
       {"delta1", r.delta1},
       {"delta2", r.delta2},
       {"phi", r.phi}};
}

inline void from_json(const nlohmann::json& j, InflatingRegion& r) {
  j.at("c1").get_to(r.c1);
  j.at("c2").get_to(r.c2);
  j.at("delta1").get_to(r.delta1);
  j.at("delta2").get_to(r.delta2);
  j.at("phi").get_to(r.phi);
}

inline void to_json(nlohmann::json& j, const RateEntry& e) {
  j = {{"m", e.m},
       {"n", e.n},
       {"mean_ratio", e.mean_ratio},
       {"stderr", e.stderr_value},
       {"replicates", e.replicates}};
}

inline void to_json(nlohmann::json& j, const RateTable& t) {
  j = {{"C", t.C},
       {"p", t.p},
       {"phi_hat", t.phi_hat},
       {"target_ratio", t.target_ratio},
       {"entries", t.entries}};
}

inline void to_json(nlohmann::json& j, const GumbelFit& f) {
  j = {{"m", f.m},           {"C", f.C},
       {"p", f.p},           {"n", f.n},
       {"rho", f.rho},       {"A1", f.A1},
       {"ks_distance", f.ks_distance}, {"replicates", f.replicates}};
}

inline void to_json(nlohmann::json& j, const AcrossCurve& c) {
  j = {{"m", c.m},
       {"C", c.C},
       {"p", c.p},
       {"n", c.n},
       {"replicates", c.replicates},
       {"p_hat", c.p_hat}};
  if (c.rho_defined())
    j["rho_hat"] = c.rho_hat;
  else
    j["rho_hat"] = nullptr;
}

}  // namespace bernet

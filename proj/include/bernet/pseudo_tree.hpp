#pragma once

// Pseudo-tree lattice: cone-shaped oriented site percolation rooted at a
// single origin.  Column i holds the nodes whose transverse coordinates lie
// in the box [-i*C_1, i*C_1] x ... x [-i*C_d, i*C_d]; oriented edges go from
// column i to column i+1 with per-axis jumps bounded by C_a.  The module
// estimates theta_k (probability the origin starts a significant run of
// length >= k), fits the decay rate phi with its sandwich constants, and
// brackets the critical probability.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include <bernet/parallel.hpp>
#include <bernet/philox.hpp>
#include <bernet/stats.hpp>

namespace bernet {

struct PseudoTreeConfig {
  std::vector<int> C;
  double p = 0.0;

  int dim() const { return static_cast<int>(C.size()); }

  void validate() const {
    if (C.empty()) throw std::invalid_argument("PseudoTreeConfig: C must be nonempty");
    for (int c : C)
      if (c < 1) throw std::invalid_argument("PseudoTreeConfig: every C_a must be >= 1");
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("PseudoTreeConfig: p must lie in [0,1]");
  }

  bool operator==(const PseudoTreeConfig&) const = default;
};

struct ThetaEntry {
  long long k = 0;
  double estimate = 0.0;
  double stderr_value = 0.0;
  long long replicates = 0;
};

struct ThetaSeries {
  PseudoTreeConfig config;
  std::vector<ThetaEntry> entries;
};

struct PhiFit {
  double phi_hat = 0.0;
  long long k_min = 0;
  long long k_max = 0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double ratio_estimate = 0.0;
};

struct PcBracket {
  double lower = 0.0;
  double upper = 1.0;
  long long depth = 0;
  double survival_threshold = 0.0;
};

namespace detail {

// Geometry of one cone column: mixed-radix box with axis 0 most significant.
struct ConeBox {
  std::vector<long long> width;
  std::vector<long long> stride;
  long long cells = 1;
};

inline ConeBox cone_box(const std::vector<int>& C, long long col) {
  ConeBox box;
  const std::size_t d = C.size();
  box.width.resize(d);
  box.stride.resize(d);
  for (std::size_t a = 0; a < d; ++a) box.width[a] = 2 * col * C[a] + 1;
  long long s = 1;
  for (std::size_t a = d; a-- > 0;) {
    box.stride[a] = s;
    s *= box.width[a];
  }
  box.cells = s;
  return box;
}

// All linear-index deltas of the window, valid because the cone grows by
// exactly C_a per axis per column: a child coordinate never leaves the box.
inline std::vector<long long> window_offsets(const std::vector<int>& C,
                                             const ConeBox& next) {
  const std::size_t d = C.size();
  std::vector<long long> offs;
  long long count = 1;
  for (int c : C) count *= 2LL * c + 1;
  offs.reserve(static_cast<std::size_t>(count));
  std::vector<int> delta(d);
  for (std::size_t a = 0; a < d; ++a) delta[a] = -C[a];
  while (true) {
    long long off = 0;
    for (std::size_t a = 0; a < d; ++a)
      off += (delta[a] + C[a]) * next.stride[a];
    offs.push_back(off);
    std::size_t a = d;
    while (a-- > 0) {
      if (delta[a] < C[a]) {
        ++delta[a];
        break;
      }
      delta[a] = -C[a];
      if (a == 0) return offs;
    }
  }
}

inline std::size_t word_count(long long cells) {
  return static_cast<std::size_t>((cells + 63) / 64);
}

// Re-expresses a parent cell index of box(col) in the strides of box(col+1).
// The +C_a index shift from the widening cone is carried by window_offsets
// (whose entries are (delta_a + C_a) * stride), so the base uses the raw
// coordinates: base + offset = coord_a + delta_a + C_a per axis, which always
// lands inside the next box.
inline long long rebase_index(long long idx, const ConeBox& cur,
                              const ConeBox& next) {
  long long base = 0;
  for (std::size_t a = 0; a < cur.width.size(); ++a) {
    const long long coord = idx / cur.stride[a];
    idx -= coord * cur.stride[a];
    base += coord * next.stride[a];
  }
  return base;
}

// One column step of the frontier: dilate by the connectivity window into the
// next (wider) box, then keep only nodes drawn significant.  Node draws are
// indexed by cone_offset_next + cell index so that any node's state is
// recomputable independently of traversal order.
inline void advance_frontier(const ConeBox& cur_box,
                             const std::vector<uint64_t>& cur,
                             const ConeBox& next_box,
                             const std::vector<long long>& offsets,
                             std::vector<uint64_t>& next,
                             uint64_t cone_offset_next,
                             const CounterStream& stream, uint64_t threshold) {
  next.assign(word_count(next_box.cells), 0);
  for (std::size_t w = 0; w < cur.size(); ++w) {
    uint64_t word = cur[w];
    while (word) {
      const int bit = std::countr_zero(word);
      word &= word - 1;
      const long long idx = static_cast<long long>(w) * 64 + bit;
      const long long base = rebase_index(idx, cur_box, next_box);
      for (const long long off : offsets) {
        const long long child = base + off;
        next[static_cast<std::size_t>(child >> 6)] |= uint64_t(1)
                                                      << (child & 63);
      }
    }
  }
  for (std::size_t w = 0; w < next.size(); ++w) {
    uint64_t word = next[w];
    while (word) {
      const int bit = std::countr_zero(word);
      word &= word - 1;
      const long long idx = static_cast<long long>(w) * 64 + bit;
      const uint64_t draw =
          cone_offset_next + static_cast<uint64_t>(idx);
      if (stream.word32(draw) >= threshold)
        next[w] &= ~(uint64_t(1) << bit);
    }
  }
}

inline bool any_bit(const std::vector<uint64_t>& bits) {
  for (uint64_t w : bits)
    if (w) return true;
  return false;
}

// Population size below which the estimator switches to fixed-effort
// multilevel splitting (clone surviving frontiers, track the product of stage
// survival fractions).  Splitting is only worthwhile with a reasonably large
// population.
inline constexpr long long kSplitTrigger = 50;
inline constexpr long long kSplitMinPopulation = 200;

}  // namespace detail

// Monte Carlo theta estimates on a shared replicate population marched column
// by column, recording an entry at every k in `ks` (sorted, distinct, >= 1).
// Deep in the subcritical phase the naive population dies out long before
// interesting k; when the survivor count drops below a fixed trigger the
// estimator resamples the survivors back up to full population size and
// multiplies the stage survival fractions together (fixed-effort splitting).
// Estimates are deterministic given (seed, replicates) and independent of the
// worker count.
inline ThetaSeries theta_series(const PseudoTreeConfig& config,
                                const std::vector<long long>& ks,
                                long long replicates, uint64_t seed,
                                int threads = 0) {
  config.validate();
  if (ks.empty()) throw std::invalid_argument("theta_series: empty k grid");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1) throw std::invalid_argument("theta_series: k must be >= 1");
    if (i > 0 && ks[i] <= ks[i - 1])
      throw std::invalid_argument("theta_series: k grid must be strictly increasing");
  }
  if (replicates < 1)
    throw std::invalid_argument("theta_series: replicates must be >= 1");

  const long long n = replicates;
  const long long k_max = ks.back();
  const uint64_t threshold = bernoulli_threshold(config.p);
  const int nthreads = resolve_threads(threads);

  ThetaSeries series;
  series.config = config;

  // Column 0: the origin alone.
  detail::ConeBox cur_box = detail::cone_box(config.C, 0);
  std::vector<std::vector<uint64_t>> frontier(static_cast<std::size_t>(n));
  uint64_t stage = 0;
  parallel_for(static_cast<std::size_t>(n), nthreads,
               [&](std::size_t lo, std::size_t hi) {
                 for (std::size_t i = lo; i < hi; ++i) {
                   const CounterStream stream(
                       seed, RngDomain::kTreeNode,
                       stage * static_cast<uint64_t>(n) + i);
                   frontier[i].assign(1, stream.word32(0) < threshold ? 1u : 0u);
                 }
               });

  long long alive = 0;
  for (const auto& f : frontier) alive += detail::any_bit(f) ? 1 : 0;

  double log_weight = 0.0;
  double relvar_done = 0.0;
  uint64_t cone_offset = 1;  // nodes in columns 0..current
  std::size_t next_k = 0;

  const auto record = [&](long long k, long long alive_now) {
    const double f = static_cast<double>(alive_now) / static_cast<double>(n);
    const double est = std::exp(log_weight) * f;
    double se = 0.0;
    if (alive_now == 0) {
      se = std::exp(log_weight) / static_cast<double>(n);  // resolution floor
    } else {
      const double relvar =
          relvar_done + (1.0 - f) / (static_cast<double>(n) * f);
      se = est * std::sqrt(std::max(relvar, 0.0));
    }
    series.entries.push_back(ThetaEntry{k, est, se, n});
  };

  if (ks[next_k] == 1) {
    record(1, alive);
    ++next_k;
  }

  for (long long col = 0; col + 1 <= k_max - 1 && next_k < ks.size(); ++col) {
    if (alive == 0) break;
    const detail::ConeBox next_box = detail::cone_box(config.C, col + 1);
    const auto offsets = detail::window_offsets(config.C, next_box);
    parallel_for(
        static_cast<std::size_t>(n), nthreads,
        [&](std::size_t lo, std::size_t hi) {
          std::vector<uint64_t> next;
          for (std::size_t i = lo; i < hi; ++i) {
            if (!detail::any_bit(frontier[i])) {
              frontier[i].assign(detail::word_count(next_box.cells), 0);
              continue;
            }
            const CounterStream stream(seed, RngDomain::kTreeNode,
                                       stage * static_cast<uint64_t>(n) + i);
            detail::advance_frontier(cur_box, frontier[i], next_box,
                                     offsets, next, cone_offset, stream,
                                     threshold);
            frontier[i] = std::move(next);
            next.clear();
          }
        });
    cone_offset += static_cast<uint64_t>(next_box.cells);
    cur_box = next_box;

    alive = 0;
    for (const auto& f : frontier) alive += detail::any_bit(f) ? 1 : 0;

    const long long k_here = col + 2;  // columns 0..col+1 span k_here columns
    while (next_k < ks.size() && ks[next_k] == k_here) {
      record(k_here, alive);
      ++next_k;
    }

    const bool more_columns = k_here < k_max;
    if (alive > 0 && alive < detail::kSplitTrigger && more_columns &&
        n >= detail::kSplitMinPopulation) {
      std::vector<std::size_t> survivors;
      survivors.reserve(static_cast<std::size_t>(alive));
      for (std::size_t i = 0; i < frontier.size(); ++i)
        if (detail::any_bit(frontier[i])) survivors.push_back(i);
      const double f = static_cast<double>(alive) / static_cast<double>(n);
      relvar_done += (1.0 - f) / (static_cast<double>(n) * f);
      log_weight += std::log(f);
      std::vector<std::vector<uint64_t>> resampled(frontier.size());
      for (std::size_t i = 0; i < frontier.size(); ++i)
        resampled[i] = frontier[survivors[i % survivors.size()]];
      frontier = std::move(resampled);
      alive = n;
      ++stage;
    }
  }

  // Population extinct: every remaining grid point has estimate zero.
  for (; next_k < ks.size(); ++next_k) record(ks[next_k], 0);
  return series;
}

inline ThetaEntry theta_mc(const PseudoTreeConfig& config, long long k,
                           long long replicates, uint64_t seed,
                           int threads = 0) {
  return theta_series(config, {k}, replicates, seed, threads).entries.front();
}

// Exact theta_k by distribution recursion over reachable-significant subsets
// of each cone column.  The 24-node cap keeps every column at <= 13 cells for
// k >= 3; k <= 2 is handled in closed form (origin open, and for k = 2 at
// least one node of the fully reachable first column open).
inline double theta_exact(const PseudoTreeConfig& config, long long k) {
  config.validate();
  if (k < 1) throw std::invalid_argument("theta_exact: k must be >= 1");
  long long nodes = 0;
  for (long long col = 0; col < k; ++col) {
    nodes += detail::cone_box(config.C, col).cells;
    if (nodes > 24)
      throw std::domain_error(
          "theta_exact: instance too large (more than 24 nodes)");
  }
  const double p = config.p;
  const double q = 1.0 - p;
  if (k == 1) return p;
  if (p == 0.0) return 0.0;
  const long long first_width = detail::cone_box(config.C, 1).cells;
  if (k == 2) return p * (1.0 - std::pow(q, static_cast<double>(first_width)));

  detail::ConeBox cur_box = detail::cone_box(config.C, 0);
  std::vector<double> dist{q, p};  // over subsets of {origin}
  for (long long col = 0; col + 1 <= k - 1; ++col) {
    const detail::ConeBox next_box = detail::cone_box(config.C, col + 1);
    // Window masks of each current cell inside the next box.
    const auto offsets = detail::window_offsets(config.C, next_box);
    std::vector<uint32_t> window(static_cast<std::size_t>(cur_box.cells), 0);
    for (long long idx = 0; idx < cur_box.cells; ++idx) {
      const long long base =
          detail::rebase_index(idx, cur_box, next_box);
      for (const long long off : offsets)
        window[static_cast<std::size_t>(idx)] |= uint32_t(1) << (base + off);
    }
    std::vector<double> next(std::size_t(1) << next_box.cells, 0.0);
    for (std::size_t s = 0; s < dist.size(); ++s) {
      const double mass = dist[s];
      if (mass == 0.0) continue;
      uint32_t reach = 0;
      uint32_t bits = static_cast<uint32_t>(s);
      while (bits) {
        reach |= window[static_cast<std::size_t>(std::countr_zero(bits))];
        bits &= bits - 1;
      }
      const int r = std::popcount(reach);
      uint32_t sub = reach;
      while (true) {
        const int ones = std::popcount(sub);
        next[sub] += mass * std::pow(p, ones) * std::pow(q, r - ones);
        if (sub == 0) break;
        sub = (sub - 1) & reach;
      }
    }
    dist = std::move(next);
    cur_box = next_box;
  }
  double survive = 0.0;
  for (std::size_t s = 1; s < dist.size(); ++s) survive += dist[s];
  return survive;
}

inline ThetaSeries theta_series_exact(const PseudoTreeConfig& config,
                                      const std::vector<long long>& ks) {
  ThetaSeries series;
  series.config = config;
  for (const long long k : ks)
    series.entries.push_back(ThetaEntry{k, theta_exact(config, k), 0.0, 1});
  return series;
}

// Least-squares fit of the decay rate over a data-driven window:
//   k_max = largest k whose relative standard error is below `rel_se_cap`;
//   k_min = max(8, smallest k past which successive ratio estimates vary by
//           less than 10%).
// phi_hat is the negated slope of log(theta_k) against k on the window
// (clamped at zero: supercritical series fit flat up to noise), the sigma
// constants are the tightest values closing the k^{-d}/k^{+d} sandwich on the
// window, and ratio_estimate is the last adjacent-ratio cross-check.
inline PhiFit phi_fit(const ThetaSeries& series, double rel_se_cap = 0.2) {
  series.config.validate();
  if (!(rel_se_cap > 0.0))
    throw std::invalid_argument("phi_fit: rel_se_cap must be positive");
  struct Usable {
    long long k;
    double estimate;
  };
  std::vector<Usable> usable;
  for (const auto& e : series.entries) {
    if (e.estimate <= 0.0) continue;
    if (e.stderr_value / e.estimate >= rel_se_cap) continue;
    usable.push_back(Usable{e.k, e.estimate});
  }
  if (usable.size() < 4)
    throw std::domain_error(
        "phi_fit: insufficient usable entries (all-zero or too-noisy tail); "
        "increase replicates or splitting effort");

  // Per-gap geometric ratios between consecutive usable entries.
  std::vector<double> ratio(usable.size() - 1);
  for (std::size_t i = 0; i + 1 < usable.size(); ++i) {
    const double gap = static_cast<double>(usable[i + 1].k - usable[i].k);
    ratio[i] = std::pow(usable[i + 1].estimate / usable[i].estimate, 1.0 / gap);
  }
  // Smallest index t such that every later successive ratio changes by < 10%.
  std::size_t stable = ratio.size() >= 2 ? ratio.size() - 1 : 0;
  for (std::size_t t = 0; t + 1 < ratio.size(); ++t) {
    bool ok = true;
    for (std::size_t i = t; i + 1 < ratio.size(); ++i)
      if (std::abs(ratio[i + 1] - ratio[i]) >= 0.1 * ratio[i]) {
        ok = false;
        break;
      }
    if (ok) {
      stable = t;
      break;
    }
  }
  const long long k_min = std::max<long long>(8, usable[stable].k);
  const long long k_max = usable.back().k;

  std::vector<double> xs, ys;
  for (const auto& u : usable)
    if (u.k >= k_min && u.k <= k_max) {
      xs.push_back(static_cast<double>(u.k));
      ys.push_back(std::log(u.estimate));
    }
  if (xs.size() < 2)
    throw std::domain_error(
        "phi_fit: fit window holds fewer than two usable entries; extend the "
        "k grid or increase replicates");

  const LineFit line = least_squares(xs, ys);
  PhiFit fit;
  fit.phi_hat = std::max(0.0, -line.slope);
  fit.k_min = k_min;
  fit.k_max = k_max;
  fit.ratio_estimate = ratio.back();

  const double d = static_cast<double>(series.config.dim());
  double sigma1 = std::numeric_limits<double>::infinity();
  double sigma2 = 0.0;
  for (const auto& u : usable) {
    if (u.k < k_min || u.k > k_max) continue;
    const double kk = static_cast<double>(u.k);
    const double core = std::exp(-kk * fit.phi_hat);
    sigma1 = std::min(sigma1, u.estimate * std::pow(kk, d) / core);
    sigma2 = std::max(sigma2, u.estimate * std::pow(kk, -d) / core);
  }
  fit.sigma1 = sigma1;
  fit.sigma2 = sigma2;
  return fit;
}

// Pathwise monotonicity audit between two coupled series (same seed, so every
// node uses the same uniform draw thresholded at each p): domination must be
// exact, not merely statistical.
inline bool monotonicity_check(const ThetaSeries& a, const ThetaSeries& b) {
  if (a.config.C != b.config.C)
    throw std::invalid_argument("monotonicity_check: mismatched connectivity");
  if (a.entries.size() != b.entries.size())
    throw std::invalid_argument("monotonicity_check: mismatched k grids");
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    if (a.entries[i].k != b.entries[i].k)
      throw std::invalid_argument("monotonicity_check: mismatched k grids");
  if (a.config.p > b.config.p)
    throw std::invalid_argument(
        "monotonicity_check: first series must have the smaller p");
  for (std::size_t i = 0; i < a.entries.size(); ++i)
    if (a.entries[i].estimate > b.entries[i].estimate) return false;
  return true;
}

namespace detail {

// Depth-K survival estimate used by the bracket search.  Coupled across p via
// shared node draws (stream = replicate, word = node index), which makes the
// estimate exactly nondecreasing in p.
inline double survival_estimate(const std::vector<int>& C, double p,
                                long long depth, long long replicates,
                                uint64_t seed, int nthreads) {
  const uint64_t threshold = bernoulli_threshold(p);
  std::vector<char> alive(static_cast<std::size_t>(replicates), 0);
  parallel_for(
      static_cast<std::size_t>(replicates), nthreads,
      [&](std::size_t lo_i, std::size_t hi_i) {
        for (std::size_t i = lo_i; i < hi_i; ++i) {
          const CounterStream stream(seed, RngDomain::kTreeNode, i);
          ConeBox box = cone_box(C, 0);
          std::vector<uint64_t> cur(
              1, stream.word32(0) < threshold ? uint64_t(1) : uint64_t(0));
          uint64_t offset = 1;
          bool ok = cur[0] != 0;
          for (long long col = 0; ok && col + 1 <= depth - 1; ++col) {
            const ConeBox next_box = cone_box(C, col + 1);
            const auto offsets = window_offsets(C, next_box);
            std::vector<uint64_t> next;
            advance_frontier(box, cur, next_box, offsets, next, offset,
                             stream, threshold);
            offset += static_cast<uint64_t>(next_box.cells);
            cur = std::move(next);
            box = next_box;
            ok = any_bit(cur);
          }
          alive[i] = ok ? 1 : 0;
        }
      });
  long long count = 0;
  for (char c : alive) count += c;
  return static_cast<double>(count) / static_cast<double>(replicates);
}

}  // namespace detail

// Brackets the critical probability by bisecting the depth-K survival curve
// against `survival_threshold`.  The returned lower end never falls below the
// theoretical bound 1/prod(2*C_a + 1).
inline PcBracket pc_bracket(const std::vector<int>& C, long long depth,
                            double survival_threshold, long long replicates,
                            uint64_t seed, int threads = 0) {
  PseudoTreeConfig probe{C, 0.5};
  probe.validate();
  if (depth < 32) throw std::invalid_argument("pc_bracket: depth must be >= 32");
  if (!(survival_threshold > 0.0 && survival_threshold < 1.0))
    throw std::invalid_argument("pc_bracket: threshold must lie in (0,1)");
  if (replicates < 1)
    throw std::invalid_argument("pc_bracket: replicates must be >= 1");
  const int nthreads = resolve_threads(threads);

  double lo = 0.0, hi = 1.0;
  if (!(detail::survival_estimate(C, hi, depth, replicates, seed, nthreads) >
        survival_threshold))
    throw std::logic_error("pc_bracket: survival at p=1 below threshold");
  for (int iter = 0; iter < 20; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double est =
        detail::survival_estimate(C, mid, depth, replicates, seed, nthreads);
    if (est > survival_threshold)
      hi = mid;
    else
      lo = mid;
  }

  double bound = 1.0;
  for (int c : C) bound *= 2.0 * c + 1.0;
  bound = 1.0 / bound;

  PcBracket bracket;
  bracket.lower = std::max(lo, bound);
  bracket.upper = std::max(hi, bracket.lower);
  bracket.depth = depth;
  bracket.survival_threshold = survival_threshold;
  return bracket;
}

inline void write_theta_csv(std::ostream& out, const ThetaSeries& series) {
  out << "k,estimate,stderr,replicates\n";
  for (const auto& e : series.entries)
    out << e.k << ',' << e.estimate << ',' << e.stderr_value << ','
        << e.replicates << '\n';
}

inline void to_json(nlohmann::json& j, const PseudoTreeConfig& cfg) {
  j = nlohmann::json{{"C", cfg.C}, {"p", cfg.p}};
}

inline void from_json(const nlohmann::json& j, PseudoTreeConfig& cfg) {
  j.at("C").get_to(cfg.C);
  j.at("p").get_to(cfg.p);
  cfg.validate();
}

inline void to_json(nlohmann::json& j, const ThetaEntry& e) {
  j = nlohmann::json{{"k", e.k},
                     {"estimate", e.estimate},
                     {"stderr", e.stderr_value},
                     {"replicates", e.replicates}};
}

inline void to_json(nlohmann::json& j, const ThetaSeries& s) {
  j = nlohmann::json{{"config", s.config}, {"entries", s.entries}};
}

inline void to_json(nlohmann::json& j, const PhiFit& f) {
  j = nlohmann::json{{"phi_hat", f.phi_hat},
                     {"k_window", {f.k_min, f.k_max}},
                     {"sigma1", f.sigma1},
                     {"sigma2", f.sigma2},
                     {"ratio_estimate", f.ratio_estimate}};
}

inline void to_json(nlohmann::json& j, const PcBracket& b) {
  j = nlohmann::json{{"lower", b.lower},
                     {"upper", b.upper},
                     {"depth", b.depth},
                     {"threshold", b.survival_threshold}};
}

}  // namespace bernet

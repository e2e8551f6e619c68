#pragma once

// Longest significant run |L0| of a net, by dynamic programming over
// columns: Y(r, j) = z(r, j) * (1 + max of Y over the window of r in column
// j-1), with Y(r, 0) = z(r, 0). The maximum of Y over all nodes is the
// longest chain's node count; work is (window size) * nodes.
//
// A path query retains the full Y table and backtracks; length-only queries
// keep a two-column rolling buffer. Backtracking resolves ties toward the
// smallest transverse index (lexicographic), and the run endpoint is the
// first maximizer in (column, row) scan order, so paths are reproducible.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "bernet/net.hpp"
#include "bernet/parallel.hpp"
#include "bernet/philox.hpp"

namespace bernet {

struct RunResult {
  long long length = 0;
  std::vector<NodeCoord> path;  // empty iff length == 0
};

namespace detail {

// Per-axis strides of the lexicographic row flattening (axis 0 most
// significant; last axis contiguous).
inline std::vector<uint64_t> row_strides(const NetConfig& cfg) {
  const std::size_t d = cfg.row_dims.size();
  std::vector<uint64_t> stride(d, 1);
  for (std::size_t k = d - 1; k > 0; --k)
    stride[k - 1] = stride[k] * uint64_t(cfg.row_dims[k].m);
  return stride;
}

// Scratch space for window walks, reused across nodes.
struct WindowScratch {
  std::vector<int> lo, hi, cur;
  explicit WindowScratch(std::size_t d) : lo(d), hi(d), cur(d) {}
};

// Walks the transverse window of the (0-based) multi-index `idx`, invoking
// f(linear index) in ascending lexicographic order.
template <typename F>
void for_each_in_window(const NetConfig& cfg, const std::vector<uint64_t>& stride,
                        const std::vector<int>& idx, WindowScratch& w, F&& f) {
  const std::size_t d = cfg.row_dims.size();
  uint64_t lin = 0;
  for (std::size_t k = 0; k < d; ++k) {
    const RowDim& rd = cfg.row_dims[k];
    w.lo[k] = std::max(0, idx[k] - rd.C);
    w.hi[k] = std::min(rd.m - 1, idx[k] + rd.C);
    w.cur[k] = w.lo[k];
    lin += uint64_t(w.lo[k]) * stride[k];
  }
  while (true) {
    f(lin);
    std::size_t k = d;
    while (k > 0 && w.cur[k - 1] == w.hi[k - 1]) {
      --k;
      lin -= uint64_t(w.cur[k] - w.lo[k]) * stride[k];
      w.cur[k] = w.lo[k];
    }
    if (k == 0) break;
    ++w.cur[k - 1];
    lin += stride[k - 1];
  }
}

// Advances a 0-based multi-index in lexicographic order (last axis fastest).
inline void advance_multi_index(const NetConfig& cfg, std::vector<int>& idx) {
  for (std::size_t k = cfg.row_dims.size(); k > 0; --k) {
    if (++idx[k - 1] < cfg.row_dims[k - 1].m) return;
    idx[k - 1] = 0;
  }
}

// Decodes a linear row index to its 0-based multi-index.
inline void decode_row(const std::vector<uint64_t>& stride, uint64_t r,
                       std::vector<int>& idx) {
  for (std::size_t k = 0; k < stride.size(); ++k) {
    idx[k] = int(r / stride[k]);
    r %= stride[k];
  }
}

}  // namespace detail

// Longest run length only; O(rows) memory via a rolling column buffer.
inline long long longest_run_length(const Net& net) {
  const NetConfig& cfg = net.config();
  const uint64_t rows = cfg.rows_total();
  const auto stride = detail::row_strides(cfg);
  const std::size_t d = cfg.row_dims.size();
  detail::WindowScratch w(d);

  std::vector<int32_t> prev(rows, 0), now(rows, 0);
  int32_t best = 0;
  std::vector<int> idx(d, 0);
  for (long long col = 0; col < cfg.n; ++col) {
    std::fill(idx.begin(), idx.end(), 0);
    for (uint64_t r = 0; r < rows; ++r) {
      int32_t y = 0;
      if (net.get(col, r)) {
        int32_t reach = 0;
        if (col > 0)
          detail::for_each_in_window(cfg, stride, idx, w, [&](uint64_t pr) {
            if (prev[pr] > reach) reach = prev[pr];
          });
        y = 1 + reach;
        if (y > best) best = y;
      }
      now[r] = y;
      detail::advance_multi_index(cfg, idx);
    }
    prev.swap(now);
  }
  return best;
}

// Longest run with a witness path (full DP table retained for backtracking).
inline RunResult longest_run_dp(const Net& net) {
  const NetConfig& cfg = net.config();
  const uint64_t rows = cfg.rows_total();
  const auto stride = detail::row_strides(cfg);
  const std::size_t d = cfg.row_dims.size();
  detail::WindowScratch w(d);

  std::vector<int32_t> y(std::size_t(cfg.n) * rows, 0);
  int32_t best = 0;
  long long best_col = -1;
  uint64_t best_row = 0;
  std::vector<int> idx(d, 0);
  for (long long col = 0; col < cfg.n; ++col) {
    const int32_t* prev = col > 0 ? &y[std::size_t(col - 1) * rows] : nullptr;
    int32_t* now = &y[std::size_t(col) * rows];
    std::fill(idx.begin(), idx.end(), 0);
    for (uint64_t r = 0; r < rows; ++r) {
      if (net.get(col, r)) {
        int32_t reach = 0;
        if (prev)
          detail::for_each_in_window(cfg, stride, idx, w, [&](uint64_t pr) {
            if (prev[pr] > reach) reach = prev[pr];
          });
        now[r] = 1 + reach;
        if (now[r] > best) {  // strict: keep the first maximizer in scan order
          best = now[r];
          best_col = col;
          best_row = r;
        }
      }
      detail::advance_multi_index(cfg, idx);
    }
  }

  RunResult res;
  res.length = best;
  if (best == 0) return res;

  const auto coord_of = [&](long long col, uint64_t r) {
    NodeCoord c;
    c.col = col + 1;
    c.rows.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
      c.rows[k] = int(r / stride[k]) + 1;
      r %= stride[k];
    }
    return c;
  };

  std::vector<NodeCoord> path;
  path.reserve(std::size_t(best));
  long long col = best_col;
  uint64_t r = best_row;
  std::vector<int> ridx(d);
  path.push_back(coord_of(col, r));
  for (int32_t want = best - 1; want > 0; --want) {
    const int32_t* prev = &y[std::size_t(col - 1) * rows];
    detail::decode_row(stride, r, ridx);
    uint64_t chosen = rows;  // first (smallest) predecessor attaining want
    detail::for_each_in_window(cfg, stride, ridx, w, [&](uint64_t pr) {
      if (chosen == rows && prev[pr] == want) chosen = pr;
    });
    --col;
    r = chosen;
    path.push_back(coord_of(col, r));
  }
  std::reverse(path.begin(), path.end());
  res.path = std::move(path);
  return res;
}

// Exact maximum chain length by exhaustive depth-first enumeration of every
// significant chain; deliberately shares no machinery with the DP so it can
// serve as its oracle. Guarded to tiny nets.
inline long long longest_run_bruteforce(const Net& net) {
  const NetConfig& cfg = net.config();
  if (cfg.node_count() > 64)
    throw std::invalid_argument("longest_run_bruteforce: net exceeds 64 nodes");

  const uint64_t rows = cfg.rows_total();
  const auto stride = detail::row_strides(cfg);
  const std::size_t d = cfg.row_dims.size();

  long long best = 0;
  // Depth-first extension; next-column candidates enumerated per axis, each
  // recursion level owning its candidate buffer.
  const std::function<void(long long, const std::vector<int>&, long long)> walk =
      [&](long long col, const std::vector<int>& at, long long len) {
        if (len > best) best = len;
        if (col + 1 >= cfg.n) return;
        std::vector<int> nxt(d);
        const std::function<void(std::size_t)> axis = [&](std::size_t k) {
          if (k == d) {
            uint64_t lin = 0;
            for (std::size_t a = 0; a < d; ++a)
              lin += uint64_t(nxt[a]) * stride[a];
            if (net.get(col + 1, lin)) walk(col + 1, nxt, len + 1);
            return;
          }
          const RowDim& rd = cfg.row_dims[k];
          const int a = std::max(0, at[k] - rd.C);
          const int b = std::min(rd.m - 1, at[k] + rd.C);
          for (int v = a; v <= b; ++v) {
            nxt[k] = v;
            axis(k + 1);
          }
        };
        axis(0);
      };

  std::vector<int> idx(d, 0);
  for (long long col = 0; col < cfg.n; ++col) {
    std::fill(idx.begin(), idx.end(), 0);
    for (uint64_t r = 0; r < rows; ++r) {
      if (net.get(col, r)) walk(col, idx, 1);
      detail::advance_multi_index(cfg, idx);
    }
  }
  return best;
}

struct LengthHistogram {
  NetConfig config;
  uint64_t replicates = 0;
  std::map<long long, uint64_t> counts;
};

// Distribution of |L0| over independent replicates; replicate i regenerates
// the net under replicate_seed(config.seed, i), so any subset is replayable
// and the merged histogram is identical for every worker count.
inline LengthHistogram length_distribution(const NetConfig& cfg,
                                           uint64_t replicates,
                                           int threads = 0) {
  cfg.validate();
  if (replicates < 1)
    throw std::invalid_argument("length_distribution: replicates must be >= 1");

  LengthHistogram hist;
  hist.config = cfg;
  hist.replicates = replicates;
  std::mutex merge;
  parallel_for(std::size_t(replicates), resolve_threads(threads),
               [&](std::size_t lo, std::size_t hi) {
                 std::map<long long, uint64_t> local;
                 NetConfig rc = cfg;
                 for (std::size_t i = lo; i < hi; ++i) {
                   rc.seed = replicate_seed(cfg.seed, i);
                   ++local[longest_run_length(generate_net(rc, 1))];
                 }
                 const std::lock_guard<std::mutex> lock(merge);
                 for (const auto& [len, cnt] : local) hist.counts[len] += cnt;
               });
  return hist;
}

// Plot-ready CSV: header `length,count`, ascending lengths.
inline void write_histogram_csv(std::ostream& out, const LengthHistogram& hist) {
  out << "length,count\n";
  for (const auto& [len, cnt] : hist.counts) out << len << ',' << cnt << '\n';
}

}  // namespace bernet

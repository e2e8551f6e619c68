#pragma once

// Bernoulli net lattice: seeded node states plus the oriented connectivity
// relation every other module builds on.
//
// A net has n columns of nodes with transverse shape m_1 x ... x m_d; each
// node is significant (open) with probability p, independently. A node in
// column j connects forward to the nodes of column j+1 whose transverse
// offset along axis k is at most C_k, clamped at the row boundaries.
//
// Coordinates are 1-based at this interface; storage is 0-based, with the
// transverse coordinate flattened lexicographically (axis 0 most
// significant) and bit-packed per column.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bernet/parallel.hpp"
#include "bernet/philox.hpp"

namespace bernet {

// Row extent and forward connectivity range along one transverse axis.
struct RowDim {
  int m = 1;  // rows along this axis (>= 1)
  int C = 1;  // reach along this axis (>= 1)

  friend bool operator==(const RowDim&, const RowDim&) = default;
};

struct NetConfig {
  long long n = 1;               // column count
  std::vector<RowDim> row_dims;  // one entry per transverse axis, nonempty
  double p = 0.5;                // node significance probability
  uint64_t seed = 0;

  friend bool operator==(const NetConfig&, const NetConfig&) = default;

  int dim() const { return int(row_dims.size()); }

  uint64_t rows_total() const {
    uint64_t total = 1;
    for (const RowDim& rd : row_dims) total *= uint64_t(rd.m);
    return total;
  }

  uint64_t node_count() const { return uint64_t(n) * rows_total(); }

  void validate() const {
    if (n < 1) throw std::invalid_argument("NetConfig: n must be >= 1");
    if (row_dims.empty())
      throw std::invalid_argument("NetConfig: row_dims must be nonempty");
    for (const RowDim& rd : row_dims) {
      if (rd.m < 1 || rd.C < 1)
        throw std::invalid_argument("NetConfig: m and C must be >= 1");
    }
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("NetConfig: p must lie in [0,1]");
    if (node_count() > (uint64_t(1) << 40))
      throw std::invalid_argument("NetConfig: lattice exceeds 2^40 nodes");
  }
};

// 1-based node coordinate: column first, then one row index per axis.
struct NodeCoord {
  long long col = 1;
  std::vector<int> rows;

  friend bool operator==(const NodeCoord&, const NodeCoord&) = default;
};

// Realized lattice of node states. Immutable by convention after generation
// (safe to share across threads); set() exists for oracles and for planting
// alternatives on a private copy.
class Net {
 public:
  explicit Net(const NetConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    rows_ = cfg_.rows_total();
    words_per_col_ = std::size_t((rows_ + 63) / 64);
    bits_.assign(std::size_t(cfg_.n) * words_per_col_, 0);
  }

  const NetConfig& config() const { return cfg_; }
  uint64_t rows_total() const { return rows_; }

  // 0-based accessors over (column, flattened transverse index).
  bool get(long long col, uint64_t r) const {
    const std::size_t w = std::size_t(col) * words_per_col_ + std::size_t(r >> 6);
    return (bits_[w] >> (r & 63)) & 1;
  }

  void set(long long col, uint64_t r, bool v) {
    const std::size_t w = std::size_t(col) * words_per_col_ + std::size_t(r >> 6);
    const uint64_t mask = uint64_t(1) << (r & 63);
    if (v)
      bits_[w] |= mask;
    else
      bits_[w] &= ~mask;
  }

  // 1-based accessor for external coordinates.
  bool state_at(const NodeCoord& c) const {
    return get(c.col - 1, row_linear(cfg_, c.rows));
  }

  // Flattens 1-based per-axis rows lexicographically (axis 0 most
  // significant), so ascending linear index equals ascending (rows...) order.
  static uint64_t row_linear(const NetConfig& cfg, const std::vector<int>& rows) {
    if (int(rows.size()) != cfg.dim())
      throw std::out_of_range("Net: coordinate arity mismatch");
    uint64_t idx = 0;
    for (int k = 0; k < cfg.dim(); ++k) {
      if (rows[k] < 1 || rows[k] > cfg.row_dims[k].m)
        throw std::out_of_range("Net: row coordinate out of bounds");
      idx = idx * uint64_t(cfg.row_dims[k].m) + uint64_t(rows[k] - 1);
    }
    return idx;
  }

  friend bool operator==(const Net&, const Net&) = default;

 private:
  NetConfig cfg_;
  uint64_t rows_ = 0;
  std::size_t words_per_col_ = 0;
  std::vector<uint64_t> bits_;
};

// Generates the seeded lattice. Node (col, r) consumes word col*rows + r of
// the kNet counter stream, so every state is a pure function of
// (config, seed) regardless of worker count; raising p with a fixed seed can
// only turn nodes on (shared uniforms, monotone threshold).
inline Net generate_net(const NetConfig& cfg, int threads = 0) {
  cfg.validate();
  Net net(cfg);
  const CounterStream stream(cfg.seed, RngDomain::kNet, 0);
  const uint64_t thr = bernoulli_threshold(cfg.p);
  if (thr == 0) return net;
  const uint64_t rows = cfg.rows_total();

  parallel_for(std::size_t(cfg.n), resolve_threads(threads),
               [&](std::size_t lo, std::size_t hi) {
                 PhiloxBlock blk{};
                 uint64_t have = ~uint64_t(0);
                 for (std::size_t col = lo; col < hi; ++col) {
                   for (uint64_t r = 0; r < rows; ++r) {
                     const uint64_t node = uint64_t(col) * rows + r;
                     if ((node >> 2) != have) {
                       have = node >> 2;
                       blk = stream.block(have);
                     }
                     if (uint64_t(blk[node & 3]) < thr)
                       net.set((long long)(col), r, true);
                   }
                 }
               });
  return net;
}

// All forward neighbors of `coord`: column col+1, per-axis offsets up to C_k,
// clamped to [1, m_k]. Emitted in ascending lexicographic row order.
inline std::vector<NodeCoord> neighbors(const NetConfig& cfg,
                                        const NodeCoord& coord) {
  cfg.validate();
  if (coord.col < 1 || coord.col > cfg.n)
    throw std::out_of_range("neighbors: column out of bounds");
  Net::row_linear(cfg, coord.rows);  // bounds + arity check
  if (coord.col == cfg.n)
    throw std::out_of_range("neighbors: last column has no successors");

  const int d = cfg.dim();
  std::vector<int> lo(d), hi(d), cur(d);
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) {
    lo[k] = std::max(1, coord.rows[k] - cfg.row_dims[k].C);
    hi[k] = std::min(cfg.row_dims[k].m, coord.rows[k] + cfg.row_dims[k].C);
    total *= std::size_t(hi[k] - lo[k] + 1);
  }

  std::vector<NodeCoord> out;
  out.reserve(total);
  cur = lo;
  while (true) {
    out.push_back({coord.col + 1, cur});
    int k = d - 1;
    while (k >= 0 && cur[k] == hi[k]) {
      cur[k] = lo[k];
      --k;
    }
    if (k < 0) break;
    ++cur[k];
  }
  return out;
}

}  // namespace bernet

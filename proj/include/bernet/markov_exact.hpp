#pragma once

// Exact across probabilities P_k(m,p) and the conditional across probability
// rho(m,p) for small m, via the distribution of the reachable-row subset.
//
// State: the set S of rows in the current column reachable by an across run
// from column 1. One column later the state is B intersect reach(S), where B
// is the next column's significant set and reach(S) dilates S by C (clamped).
// Since rows outside reach(S) never enter the next state, the transition
// probability factorizes row-by-row over reach(S), and summing over
// predecessor states reduces to a superset-sum (zeta) transform:
//
//   dist'[S'] = (p/q)^|S'| * sum_{T superset of S'} A[T],
//   A[T]      = q^|T| * sum_{S : reach(S)=T} dist[S],
//
// costing m*2^m per column instead of the 4^m state-pattern double loop.
// The empty set is absorbing; P_k = 1 - dist_k[empty].
//
// The chain is kept conditioned on survival (nonempty state) with the log of
// the survival mass tracked separately, so P_k underflow never corrupts the
// conditional distribution and each step's renormalizer is exactly
// rho_k = P_k / P_{k-1}.

#include <bit>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "bernet/longest_run.hpp"
#include "bernet/net.hpp"

namespace bernet {

class ColumnStateModel {
 public:
  ColumnStateModel(int m, int C, double p) : m_(m), c_(C), p_(p) {
    if (m < 1 || m > 12)
      throw std::invalid_argument("ColumnStateModel: m must lie in [1,12]");
    if (C < 1) throw std::invalid_argument("ColumnStateModel: C must be >= 1");
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument("ColumnStateModel: p must lie in (0,1)");

    const int full = 1 << m;
    reach_.resize(std::size_t(full));
    std::vector<uint32_t> window(static_cast<std::size_t>(m), 0u);
    for (int s = 0; s < m; ++s) {
      uint32_t w = 0;
      for (int t = std::max(0, s - C); t <= std::min(m - 1, s + C); ++t)
        w |= uint32_t(1) << t;
      window[std::size_t(s)] = w;
    }
    reach_[0] = 0;
    for (int mask = 1; mask < full; ++mask)
      reach_[std::size_t(mask)] =
          reach_[std::size_t(mask & (mask - 1))] |
          window[std::size_t(std::countr_zero(unsigned(mask)))];

    pow_q_.resize(std::size_t(m) + 1);
    pow_pq_.resize(std::size_t(m) + 1);
    pow_q_[0] = pow_pq_[0] = 1.0;
    for (int j = 1; j <= m; ++j) {
      pow_q_[std::size_t(j)] = pow_q_[std::size_t(j) - 1] * (1.0 - p);
      pow_pq_[std::size_t(j)] = pow_pq_[std::size_t(j) - 1] * (p / (1.0 - p));
    }

    // First-column law conditioned on being nonempty: P_1 = 1 - q^m.
    cond_.assign(std::size_t(full), 0.0);
    const double p1 = -std::expm1(double(m) * std::log1p(-p));
    for (int s = 1; s < full; ++s)
      cond_[std::size_t(s)] = pow_pq_[std::size_t(std::popcount(unsigned(s)))] *
                              pow_q_[std::size_t(m)] / p1;
    log_mass_ = std::log(p1);
    k_ = 1;
  }

  int m() const { return m_; }
  int C() const { return c_; }
  double p() const { return p_; }
  long long columns() const { return k_; }
  double log_survival() const { return log_mass_; }
  double survival() const { return std::exp(log_mass_); }

  // Advances one column; returns rho_k = P_k / P_{k-1} for the new k.
  double step() {
    const int full = 1 << m_;
    std::vector<double> a(std::size_t(full), 0.0);
    for (int s = 1; s < full; ++s) {
      if (cond_[std::size_t(s)] == 0.0) continue;
      const uint32_t t = reach_[std::size_t(s)];
      a[t] += cond_[std::size_t(s)] *
              pow_q_[std::size_t(std::popcount(t))];
    }
    // Superset-sum zeta transform: a[T] <- sum over supersets of T.
    for (int b = 0; b < m_; ++b)
      for (int t = 0; t < full; ++t)
        if (!(t >> b & 1)) a[std::size_t(t)] += a[std::size_t(t | (1 << b))];

    double sigma = 0.0;
    for (int s = 1; s < full; ++s) {
      cond_[std::size_t(s)] =
          pow_pq_[std::size_t(std::popcount(unsigned(s)))] * a[std::size_t(s)];
      sigma += cond_[std::size_t(s)];
    }
    for (int s = 1; s < full; ++s) cond_[std::size_t(s)] /= sigma;
    log_mass_ += std::log(sigma);
    ++k_;
    return sigma;
  }

  // Unconditioned distribution over subsets; entry 0 is the absorbed mass.
  std::vector<double> dist() const {
    const double pk = survival();
    std::vector<double> d(cond_.size());
    d[0] = 1.0 - pk;
    for (std::size_t s = 1; s < cond_.size(); ++s) d[s] = cond_[s] * pk;
    return d;
  }

 private:
  int m_;
  int c_;
  double p_;
  long long k_ = 1;
  double log_mass_ = 0.0;
  std::vector<uint32_t> reach_;
  std::vector<double> cond_;
  std::vector<double> pow_q_, pow_pq_;
};

// Exact P_k(m,p) = P(|L0(m,k)| = k): probability of an across over exactly
// k columns.
inline double across_prob_exact(int m, int C, double p, long long k) {
  if (m < 1 || m > 12)
    throw std::invalid_argument("across_prob_exact: m must lie in [1,12]");
  if (k < 1) throw std::invalid_argument("across_prob_exact: k must be >= 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("across_prob_exact: p must lie in [0,1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  ColumnStateModel model(m, C, p);
  for (long long j = 1; j < k; ++j) model.step();
  return model.survival();
}

struct RhoEstimate {
  int m = 0;
  int C = 0;
  double p = 0.0;
  double rho = 0.0;
  long long k_converged = 0;
  double tol = 0.0;
};

// Limiting conditional across probability rho(m,p) = lim P_k / P_{k-1},
// iterated until successive ratios differ by less than tol. The conditioned
// chain converges geometrically, so the successive-difference criterion is
// reliable; k_converged records where it fired.
inline RhoEstimate rho_exact(int m, int C, double p, double tol = 1e-7) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("rho_exact: p must lie in (0,1)");
  if (tol <= 0.0) throw std::invalid_argument("rho_exact: tol must be > 0");
  ColumnStateModel model(m, C, p);
  const long long cap = 100000;
  double prev = -1.0;
  while (model.columns() < cap) {
    const double cur = model.step();
    if (prev >= 0.0 && std::abs(cur - prev) < tol)
      return {m, C, p, cur, model.columns(), tol};
    prev = cur;
  }
  throw std::runtime_error(
      "rho_exact: no convergence within step cap (tol too tight?)");
}

// Theorem-style bracketing of P(|L0(m,n)| < k):
//   (1 - P_k)^(n-k+1)  <=  P(|L0| < k)  <=  (1 - q^m P_k)^(n-k+1).
// The upper bound is vacuous (1) as p -> 1 since q^m P_k vanishes.
inline std::pair<double, double> stab_bounds(int m, long long n, int C,
                                             double p, long long k) {
  if (k < 1 || k > n)
    throw std::invalid_argument("stab_bounds: need 1 <= k <= n");
  const double pk = across_prob_exact(m, C, p, k);
  const double reps = double(n - k + 1);
  const double lower = std::pow(1.0 - pk, reps);
  const double upper = std::pow(1.0 - std::pow(1.0 - p, m) * pk, reps);
  return {lower, upper};
}

// Exact pmf of |L0(m,n)| by enumerating all 2^{mn} configurations; the
// distribution-level oracle for everything above.
inline std::vector<double> longest_run_dist_bruteforce(int m, long long n,
                                                       int C, double p) {
  if (m < 1 || n < 1 || int64_t(m) * n > 22)
    throw std::invalid_argument("longest_run_dist_bruteforce: need m*n <= 22");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("longest_run_dist_bruteforce: bad p");

  const int nodes = int(m * n);
  std::vector<double> weight(std::size_t(nodes) + 1);
  for (int ones = 0; ones <= nodes; ++ones)
    weight[std::size_t(ones)] =
        std::pow(p, ones) * std::pow(1.0 - p, nodes - ones);

  NetConfig cfg;
  cfg.n = n;
  cfg.row_dims = {{m, C}};
  cfg.p = p;
  Net net(cfg);

  std::vector<double> pmf(std::size_t(n) + 1, 0.0);
  for (uint64_t conf = 0; conf < (uint64_t(1) << nodes); ++conf) {
    for (int i = 0; i < nodes; ++i)
      net.set(i / m, uint64_t(i % m), (conf >> i) & 1);
    pmf[std::size_t(longest_run_length(net))] +=
        weight[std::size_t(std::popcount(conf))];
  }
  return pmf;
}

struct RhoCell {
  int m = 0;
  double p = 0.0;
  double rho = 0.0;
  long long k_converged = 0;
};

// rho over an (m, p) grid; cells are independent and evaluated in order.
inline std::vector<RhoCell> rho_grid(const std::vector<int>& ms,
                                     const std::vector<double>& ps, int C,
                                     double tol = 1e-7) {
  std::vector<RhoCell> cells;
  cells.reserve(ms.size() * ps.size());
  for (int m : ms)
    for (double p : ps) {
      const RhoEstimate est = rho_exact(m, C, p, tol);
      cells.push_back({m, p, est.rho, est.k_converged});
    }
  return cells;
}

inline void write_rho_csv(std::ostream& out, const std::vector<RhoCell>& cells) {
  out << "m,p,rho,k_converged\n";
  for (const RhoCell& c : cells)
    out << c.m << ',' << c.p << ',' << c.rho << ',' << c.k_converged << '\n';
}

}  // namespace bernet

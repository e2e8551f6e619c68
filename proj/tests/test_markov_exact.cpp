#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "bernet/longest_run.hpp"
#include "bernet/markov_exact.hpp"
#include "bernet/net.hpp"
#include "bernet/stats.hpp"

namespace {

using namespace bernet;

// Reference one-column transition, straight from the definition: next state
// S' = B intersect reach(S) summed over all 2^m patterns B. O(4^m), kept
// independent of the library's superset-sum implementation.
std::vector<double> direct_step(int m, int C, double p,
                                const std::vector<double>& dist) {
  const int full = 1 << m;
  std::vector<int> reach(full, 0);
  for (int mask = 0; mask < full; ++mask)
    for (int s = 0; s < m; ++s)
      if (mask >> s & 1)
        for (int t = std::max(0, s - C); t <= std::min(m - 1, s + C); ++t)
          reach[mask] |= 1 << t;

  std::vector<double> next(full, 0.0);
  for (int s = 0; s < full; ++s) {
    if (dist[s] == 0.0) continue;
    for (int b = 0; b < full; ++b) {
      const double w =
          std::pow(p, std::popcount(unsigned(b))) *
          std::pow(1 - p, m - std::popcount(unsigned(b)));
      next[b & reach[s]] += dist[s] * w;
    }
  }
  return next;
}

double exact_pk_bruteforce(int m, int k, int C, double p) {
  // P_k(m,p) = P(|L0(m,k)| = k): the top bin of the exact pmf at n = k.
  const auto pmf = longest_run_dist_bruteforce(m, k, C, p);
  return pmf.at(std::size_t(k));
}

}  // namespace

TEST_CASE("column-state step matches the definitional transition", "[markov]") {
  const int m = 3, C = 1;
  const double p = 0.37;
  ColumnStateModel model(m, C, p);

  // Unconditioned law after the first column.
  std::vector<double> dist(8);
  for (int s = 0; s < 8; ++s)
    dist[std::size_t(s)] = std::pow(p, std::popcount(unsigned(s))) *
                           std::pow(1 - p, 3 - std::popcount(unsigned(s)));

  for (int step = 0; step < 3; ++step) {
    dist = direct_step(m, C, p, dist);
    model.step();
    const auto got = model.dist();
    for (int s = 0; s < 8; ++s) {
      CAPTURE(step, s);
      CHECK(got[std::size_t(s)] == Catch::Approx(dist[std::size_t(s)]).margin(1e-14));
    }
  }
}

TEST_CASE("single-row across probability is p^k", "[markov]") {
  for (double p : {0.1, 0.4, 0.8}) {
    for (int k = 1; k <= 20; k += 6) {
      CHECK(across_prob_exact(1, 1, p, k) ==
            Catch::Approx(std::pow(p, k)).epsilon(1e-12));
      CHECK(across_prob_exact(1, 3, p, k) ==
            Catch::Approx(std::pow(p, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("one-column across probability is 1-(1-p)^m", "[markov]") {
  for (int m : {1, 4, 9})
    for (double p : {0.0, 0.25, 0.7, 1.0})
      CHECK(across_prob_exact(m, 1, p, 1) ==
            Catch::Approx(1.0 - std::pow(1.0 - p, m)).margin(1e-13));
}

TEST_CASE("across probability equals exhaustive enumeration", "[markov]") {
  // Every (m, k, C, p) cell small enough for the 2^{mk} oracle.
  for (int C : {1, 2}) {
    for (int m : {2, 3}) {
      for (int k = 2; k <= 4; ++k) {
        for (double p : {0.2, 0.5, 0.7}) {
          CAPTURE(C, m, k, p);
          CHECK(across_prob_exact(m, C, p, k) ==
                Catch::Approx(exact_pk_bruteforce(m, k, C, p)).margin(1e-10));
        }
      }
    }
  }
  // The spec'd spot instance at full oracle size.
  CHECK(across_prob_exact(3, 1, 0.3, 4) ==
        Catch::Approx(exact_pk_bruteforce(3, 4, 1, 0.3)).margin(1e-10));
}

TEST_CASE("exact pmf: closed forms, normalization, and MC agreement", "[markov]") {
  const double p = 0.3, q = 0.7;
  const auto pmf = longest_run_dist_bruteforce(1, 2, 1, p);
  REQUIRE(pmf.size() == 3);
  CHECK(pmf[0] == Catch::Approx(q * q).epsilon(1e-12));
  CHECK(pmf[1] == Catch::Approx(2 * p * q).epsilon(1e-12));
  CHECK(pmf[2] == Catch::Approx(p * p).epsilon(1e-12));

  for (double pp : {0.2, 0.5, 0.8}) {
    const auto f = longest_run_dist_bruteforce(3, 4, 1, pp);
    double total = 0;
    for (double v : f) total += v;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
  }

  CHECK_THROWS_AS(longest_run_dist_bruteforce(5, 5, 1, 0.5),
                  std::invalid_argument);

  // Monte Carlo cross-check, 10^6 replicates against the exact pmf.
  const auto exact = longest_run_dist_bruteforce(2, 3, 1, 0.5);
  NetConfig cfg;
  cfg.n = 3;
  cfg.row_dims = {{2, 1}};
  cfg.p = 0.5;
  cfg.seed = 606;
  const auto hist = length_distribution(cfg, 1000000);
  for (std::size_t len = 0; len < exact.size(); ++len) {
    const double freq = double(hist.counts.count(static_cast<long long>(len))
                                   ? hist.counts.at(static_cast<long long>(len))
                                   : 0) /
                        1e6;
    const double se = binomial_stderr(exact[len], 1000000);
    CAPTURE(len);
    CHECK(std::abs(freq - exact[len]) <= 4 * se + 1e-9);
  }
}

TEST_CASE("stability bounds sandwich the exact distribution", "[markov]") {
  // Degenerate p: the lower bound collapses to the truth at both ends; the
  // Theorem upper bound is vacuous at p=1 since q^m P_k vanishes.
  auto [lo0, hi0] = stab_bounds(3, 5, 1, 0.0, 3);
  CHECK(lo0 == 1.0);
  CHECK(hi0 == 1.0);
  auto [lo1, hi1] = stab_bounds(3, 5, 1, 1.0, 3);
  CHECK(lo1 == 0.0);
  CHECK(hi1 == 1.0);

  for (double p : {0.2, 0.3, 0.5}) {
    const auto pmf = longest_run_dist_bruteforce(3, 5, 1, p);
    for (int k = 2; k <= 5; ++k) {
      double below = 0;
      for (int len = 0; len < k; ++len) below += pmf[std::size_t(len)];
      const auto [lo, hi] = stab_bounds(3, 5, 1, p, k);
      CAPTURE(p, k);
      CHECK(lo <= below + 1e-12);
      CHECK(below <= hi + 1e-12);
    }
  }
}

TEST_CASE("distribution stays normalized over long horizons", "[markov]") {
  ColumnStateModel model(5, 1, 0.3);
  for (int step = 0; step < 500; ++step) model.step();
  const auto dist = model.dist();
  double total = 0;
  for (double v : dist) total += v;
  CHECK(total == Catch::Approx(1.0).margin(1e-12));
  // Deep subcritical decay actually happened: per-column survival is about
  // 0.66, so 500 columns put the mass near exp(-208).  The log channel stays
  // finite even where the linear value underflows toward zero.
  CHECK(std::isfinite(model.log_survival()));
  CHECK(model.log_survival() < -200.0);
  CHECK(model.log_survival() > -230.0);
  CHECK(model.survival() < 1e-80);
  CHECK(model.columns() == 501);
}

TEST_CASE("across probabilities are monotone in k, p, and m", "[markov]") {
  for (int m : {2, 4}) {
    double prev = 1.0;
    for (int k = 1; k <= 12; ++k) {
      const double cur = across_prob_exact(m, 1, 0.35, k);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
  }
  for (int k : {3, 7}) {
    for (int m : {1, 3, 5}) {
      double prev = -1.0;
      for (double p = 0.1; p < 0.95; p += 0.1) {
        const double cur = across_prob_exact(m, 1, p, k);
        CHECK(cur >= prev - 1e-12);
        prev = cur;
      }
    }
    for (double p : {0.25, 0.6}) {
      double prev = -1.0;
      for (int m = 1; m <= 8; ++m) {
        const double cur = across_prob_exact(m, 1, p, k);
        CHECK(cur >= prev - 1e-12);
        prev = cur;
      }
    }
  }
}

namespace {

// Independent oracle for the ratio limit: dense power iteration over the full
// subset lattice, written without the zeta-transform factorization used by the
// implementation.  The ratio of successive total masses converges to the same
// limit as the across-probability ratios.
double rho_power_iteration_oracle(int m, int C, double p) {
  const int full = 1 << m;
  const double q = 1.0 - p;
  std::vector<uint32_t> reach(static_cast<std::size_t>(full), 0u);
  for (int S = 1; S < full; ++S) {
    uint32_t r = 0;
    for (int s = 0; s < m; ++s) {
      if (!((S >> s) & 1)) continue;
      for (int t = std::max(0, s - C); t <= std::min(m - 1, s + C); ++t)
        r |= uint32_t(1) << t;
    }
    reach[static_cast<std::size_t>(S)] = r;
  }
  std::vector<double> v(static_cast<std::size_t>(full), 0.0);
  for (int S = 1; S < full; ++S)
    v[static_cast<std::size_t>(S)] =
        std::pow(p, std::popcount(unsigned(S))) *
        std::pow(q, m - std::popcount(unsigned(S)));
  double ratio = 0.0;
  for (int iter = 0; iter < 2000; ++iter) {
    std::vector<double> next(static_cast<std::size_t>(full), 0.0);
    for (int S = 1; S < full; ++S) {
      const double mass = v[static_cast<std::size_t>(S)];
      if (mass == 0.0) continue;
      const uint32_t R = reach[static_cast<std::size_t>(S)];
      const int nR = std::popcount(R);
      // Enumerate sub-masks of R, including the empty (absorbing) one.
      uint32_t sub = R;
      while (true) {
        if (sub != 0) {
          const int ones = std::popcount(sub);
          next[sub] += mass * std::pow(p, ones) * std::pow(q, nR - ones);
        }
        if (sub == 0) break;
        sub = (sub - 1) & R;
      }
    }
    double total = 0.0;
    for (double x : next) total += x;
    ratio = total;  // v was normalized, so the new total is the step ratio
    for (double& x : next) x /= total;
    v = std::move(next);
  }
  return ratio;
}

}  // namespace

TEST_CASE("rho converges to the ratio limit of the across chain", "[markov]") {
  // The published four-digit grid for this model was produced by a different
  // conditioning (a stationarized one-step chain); the ratio limit computed
  // here differs from it in the third decimal for some cells.  The grid
  // comparison therefore lives in the acceptance suite under its pinned
  // tolerance, while this test pins the ratio limit itself against an
  // independently coded dense power iteration.
  for (const auto& [m, p] : std::vector<std::pair<int, double>>{
           {3, 0.37}, {4, 0.3}, {4, 0.1}, {5, 0.6}}) {
    const RhoEstimate est = rho_exact(m, 1, p);
    const double oracle = rho_power_iteration_oracle(m, 1, p);
    CHECK(est.rho == Catch::Approx(oracle).margin(1e-6));
    CHECK(est.k_converged >= 2);
  }
  const RhoEstimate c = rho_exact(1, 1, 0.45);
  CHECK(c.rho == Catch::Approx(0.45).margin(1e-9));
}

TEST_CASE("rho is monotone and the estimate is well-formed", "[markov]") {
  double prev_p = 0.0;
  for (double p : {0.1, 0.3, 0.5}) {
    const double r = rho_exact(4, 1, p).rho;
    CHECK(r > prev_p - 1e-12);
    CHECK(r > 0.0);
    CHECK(r < 1.0);
    prev_p = r;
  }
  CHECK(rho_exact(4, 1, 0.3).rho <= rho_exact(8, 1, 0.3).rho + 1e-12);

  CHECK_THROWS_AS(rho_exact(13, 1, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(rho_exact(4, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(rho_exact(4, 1, 1.0), std::invalid_argument);
}

TEST_CASE("rho grid emits the documented CSV", "[markov]") {
  const auto cells = rho_grid({1, 2}, {0.3, 0.5}, 1, 1e-7);
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].m == 1);
  CHECK(cells[0].p == 0.3);
  CHECK(cells[0].rho == Catch::Approx(0.3).margin(1e-9));

  std::ostringstream out;
  write_rho_csv(out, cells);
  const std::string text = out.str();
  CHECK(text.rfind("m,p,rho,k_converged\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}

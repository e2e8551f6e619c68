#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <bernet/markov_exact.hpp>
#include <bernet/stats.hpp>
#include <bernet/track.hpp>

using namespace bernet;

namespace {

// Independent long-run oracle for a single site (m = 1): empty -> occupied
// with probability p0; occupied survives only through the stay draw (left
// and right both fall off the edge), so occupied -> occupied with
// probability p2. Batch means absorb the serial correlation.
struct LongRunEstimate {
  double mean = 0.0;
  double se = 0.0;
};

LongRunEstimate single_site_oracle(double p0, double p1, double p2,
                                   std::size_t steps, std::size_t batches,
                                   uint64_t seed) {
  (void)p1;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  bool occupied = false;
  const std::size_t batch_len = steps / batches;
  RunningStat batch_means;
  for (std::size_t b = 0; b < batches; ++b) {
    std::size_t hits = 0;
    for (std::size_t s = 0; s < batch_len; ++s) {
      occupied = occupied ? unif(rng) < p2 : unif(rng) < p0;
      hits += occupied ? 1 : 0;
    }
    batch_means.add(double(hits) / double(batch_len));
  }
  return {batch_means.mean, batch_means.stderror()};
}

LongRunEstimate batched_mean(const std::vector<uint8_t>& x,
                             std::size_t batches) {
  const std::size_t batch_len = x.size() / batches;
  RunningStat batch_means;
  for (std::size_t b = 0; b < batches; ++b) {
    std::size_t hits = 0;
    for (std::size_t s = 0; s < batch_len; ++s)
      hits += x[b * batch_len + s] ? 1 : 0;
    batch_means.add(double(hits) / double(batch_len));
  }
  return {batch_means.mean, batch_means.stderror()};
}

// Reach-1 longest-run recursion over the binarized scene, written directly
// against the time-major layout as an independent check of the statistic.
long long run_length_oracle(const std::vector<uint8_t>& sig, int m,
                            long long n) {
  std::vector<long long> prev(std::size_t(m), 0), cur(std::size_t(m), 0);
  long long best = 0;
  for (long long t = 0; t < n; ++t) {
    for (int j = 0; j < m; ++j) {
      if (!sig[std::size_t(t) * std::size_t(m) + std::size_t(j)]) {
        cur[std::size_t(j)] = 0;
        continue;
      }
      long long reach = 0;
      if (t > 0)
        for (int dj = -1; dj <= 1; ++dj) {
          const int jj = j + dj;
          if (jj >= 0 && jj < m)
            reach = std::max(reach, prev[std::size_t(jj)]);
        }
      cur[std::size_t(j)] = 1 + reach;
      best = std::max(best, cur[std::size_t(j)]);
    }
    prev.swap(cur);
  }
  return best;
}

}  // namespace

TEST_CASE("occupancy stays boolean under heavy traffic", "[track]") {
  TrackConfig cfg;
  cfg.m = 10;
  cfg.n = 2000;
  cfg.p0 = 0.3;
  cfg.p1 = 0.45;
  cfg.p2 = 0.0;
  cfg.p3 = 0.45;
  cfg.sigma = 1.0;
  cfg.seed = 11;

  const TrackScene scene = simulate_track(cfg);
  REQUIRE(scene.X.size() == std::size_t(cfg.m) * std::size_t(cfg.n));
  REQUIRE(scene.Z.size() == scene.X.size());
  for (uint8_t x : scene.X) REQUIRE((x == 0 || x == 1));

  // Deterministic reruns.
  const TrackScene again = simulate_track(cfg);
  REQUIRE(scene.X == again.X);
  REQUIRE(scene.Z == again.Z);

  // Lots of collisions happened (otherwise the clamp is untested): with
  // p0 = 0.3 the field is busy, so occupancy should be substantial.
  std::size_t occupied = 0;
  for (uint8_t x : scene.X) occupied += x;
  REQUIRE(occupied > scene.X.size() / 10);
}

TEST_CASE("empty null scene is pure noise", "[track]") {
  TrackConfig cfg;
  cfg.m = 7;
  cfg.n = 50;
  cfg.p0 = 0.0;
  cfg.p1 = 0.2;
  cfg.p2 = 0.5;
  cfg.p3 = 0.2;
  cfg.sigma = 2.5;
  cfg.seed = 77;

  const TrackScene scene = simulate_track(cfg);
  for (uint8_t x : scene.X) REQUIRE(x == 0);

  const CounterStream noise(cfg.seed, RngDomain::kNoise, 0);
  for (std::size_t cell = 0; cell < scene.Z.size(); ++cell)
    REQUIRE(scene.Z[cell] == cfg.sigma * gaussian01(noise, uint64_t(cell)));
}

TEST_CASE("a stay-forever target persists in place", "[track]") {
  TrackConfig cfg;
  cfg.m = 5;
  cfg.n = 64;
  cfg.p0 = 0.0;
  cfg.p1 = 0.0;
  cfg.p2 = 1.0;
  cfg.p3 = 0.0;
  cfg.sigma = 0.5;
  cfg.seed = 3;

  std::vector<uint8_t> x0(5, 0);
  x0[2] = 1;  // location 3
  const TrackScene scene = simulate_track(cfg, x0);
  for (long long t = 1; t <= cfg.n; ++t)
    for (int j = 1; j <= cfg.m; ++j)
      REQUIRE(scene.x_at(t, j) == (j == 3));
}

TEST_CASE("single-site occupancy matches the birth-death oracle", "[track]") {
  TrackConfig cfg;
  cfg.m = 1;
  cfg.n = 1000000;
  cfg.p0 = 0.01;
  cfg.p1 = 0.2;
  cfg.p2 = 0.5;
  cfg.p3 = 0.2;
  cfg.sigma = 0.0;
  cfg.seed = 20260814;

  const TrackScene scene = simulate_track(cfg);
  const LongRunEstimate mc = batched_mean(scene.X, 100);
  const LongRunEstimate oracle =
      single_site_oracle(cfg.p0, cfg.p1, cfg.p2, 1000000, 100, 555);

  const double joint = std::sqrt(mc.se * mc.se + oracle.se * oracle.se);
  REQUIRE(std::abs(mc.mean - oracle.mean) <= 3.0 * joint);

  // Both agree with the two-state stationary value p0/(p0 + 1 - p2).
  const double stationary = cfg.p0 / (cfg.p0 + 1.0 - cfg.p2);
  REQUIRE(std::abs(mc.mean - stationary) <= 4.0 * mc.se);
  REQUIRE(std::abs(oracle.mean - stationary) <= 4.0 * oracle.se);
}

TEST_CASE("track test applies the threshold rule deterministically",
          "[track]") {
  // All-zero observations: nothing clears Z*, statistic 0, accept.
  const std::vector<double> flat(std::size_t(4) * 20, 0.0);
  const TrackDecision quiet =
      track_test(flat, 4, 20, 1.0, 0.3, TrackMode::kFixedM);
  REQUIRE(quiet.statistic == 0);
  REQUIRE_FALSE(quiet.reject);
  REQUIRE_THAT(quiet.z_star,
               Catch::Matchers::WithinAbs(normal_quantile(0.7), 1e-12));
  REQUIRE(quiet.p_significant == 0.3);

  // A constant bright row is a run of full length and must reject.
  std::vector<double> bright(std::size_t(4) * 20, 0.0);
  for (long long t = 0; t < 20; ++t) bright[std::size_t(t) * 4 + 2] = 10.0;
  const TrackDecision loud =
      track_test(bright, 4, 20, 1.0, 0.3, TrackMode::kFixedM);
  REQUIRE(loud.statistic == 20);
  REQUIRE(loud.reject);

  // Statistic against the independent recursion on random observations.
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss(0.0, 2.0);
  const int m = 5;
  const long long n = 30;
  std::vector<double> z(std::size_t(m) * std::size_t(n));
  for (double& v : z) v = gauss(rng);
  const TrackDecision d = track_test(z, m, n, 2.0, 0.25, TrackMode::kFixedM);
  std::vector<uint8_t> sig(z.size(), 0);
  for (std::size_t i = 0; i < z.size(); ++i)
    sig[i] = z[i] > d.z_star ? 1 : 0;
  REQUIRE(d.statistic == run_length_oracle(sig, m, n));
}

TEST_CASE("track thresholds follow the mode formulas", "[track]") {
  const std::vector<double> z(std::size_t(6) * 40, 0.0);

  const TrackDecision fixed =
      track_test(z, 6, 40, 1.0, 0.25, TrackMode::kFixedM, 0.1);
  const double rho = rho_exact(6, 1, 0.25).rho;
  REQUIRE_THAT(fixed.threshold,
               Catch::Matchers::WithinAbs(
                   1.1 * std::log(40.0) / (-std::log(rho)), 1e-9));

  const TrackDecision infl =
      track_test(z, 6, 40, 1.0, 0.25, TrackMode::kInflating, 0.1, 0.7);
  REQUIRE_THAT(infl.threshold,
               Catch::Matchers::WithinAbs(1.1 * std::log(240.0) / 0.7, 1e-9));

  REQUIRE_THROWS_AS(track_test(z, 6, 40, 1.0, 0.25, TrackMode::kInflating),
                    std::invalid_argument);  // phi_hat missing
  REQUIRE_THROWS_AS(
      track_test(std::vector<double>(13 * 4, 0.0), 13, 4, 1.0, 0.25,
                 TrackMode::kFixedM),
      std::invalid_argument);  // m too large for exact rho
  REQUIRE_THROWS_AS(track_test(z, 6, 40, 1.0, 1.0 / 3.0, TrackMode::kFixedM),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(track_test(z, 6, 40, 0.0, 0.25, TrackMode::kFixedM),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(track_test(z, 6, 41, 1.0, 0.25, TrackMode::kFixedM),
                    std::invalid_argument);  // size mismatch
  REQUIRE_THROWS_AS(track_test(z, 6, 40, 1.0, 0.25, TrackMode::kFixedM, 0.0),
                    std::invalid_argument);  // delta4

  // Scene overload forwards the scene's own dimensions and sigma.
  TrackConfig cfg;
  cfg.m = 6;
  cfg.n = 40;
  cfg.p0 = 0.05;
  cfg.p1 = 0.1;
  cfg.p2 = 0.6;
  cfg.p3 = 0.1;
  cfg.sigma = 1.0;
  cfg.seed = 8;
  const TrackScene scene = simulate_track(cfg);
  const TrackDecision via_scene = track_test(scene, 0.25, TrackMode::kFixedM);
  const TrackDecision via_raw =
      track_test(scene.Z, 6, 40, 1.0, 0.25, TrackMode::kFixedM);
  REQUIRE(via_scene.statistic == via_raw.statistic);
  REQUIRE(via_scene.reject == via_raw.reject);
  REQUIRE(via_scene.threshold == via_raw.threshold);
}

TEST_CASE("planted persistent target is detected", "[track]") {
  TrackConfig cfg;
  cfg.m = 8;
  cfg.n = 64;
  cfg.p0 = 0.0;
  cfg.p1 = 0.0;
  cfg.p2 = 1.0;
  cfg.p3 = 0.0;
  cfg.sigma = 0.5;

  std::vector<uint8_t> x0(8, 0);
  x0[4] = 1;

  int rejects = 0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    cfg.seed = 9000 + uint64_t(s);
    const TrackScene scene = simulate_track(cfg, x0);
    if (track_test(scene, 0.2, TrackMode::kFixedM).reject) ++rejects;
  }
  REQUIRE(rejects >= int(0.95 * seeds));
}

TEST_CASE("track config validation and serialization", "[track]") {
  TrackConfig cfg;
  cfg.m = 3;
  cfg.n = 4;
  cfg.p0 = 0.1;
  cfg.p1 = 0.3;
  cfg.p2 = 0.3;
  cfg.p3 = 0.3;
  cfg.sigma = 1.0;
  cfg.seed = 5;
  REQUIRE_NOTHROW(cfg.validate());

  TrackConfig bad = cfg;
  bad.p3 = 0.5;  // sum > 1
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.p3 = 0.4;  // sum == 1 but p0 > 0
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.p0 = 0.0;  // sum == 1 with p0 == 0: the deterministic example
  REQUIRE_NOTHROW(bad.validate());
  bad = cfg;
  bad.p1 = -0.1;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.sigma = -1.0;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.m = 0;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);

  const TrackScene scene = simulate_track(cfg);
  std::ostringstream csv;
  write_track_csv(csv, scene);
  std::istringstream in(csv.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  REQUIRE(line == "t,location,x,z");
  std::size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  REQUIRE(rows == std::size_t(cfg.m) * std::size_t(cfg.n));

  nlohmann::json j = cfg;
  TrackConfig back = j.get<TrackConfig>();
  REQUIRE(back.m == cfg.m);
  REQUIRE(back.n == cfg.n);
  REQUIRE(back.p2 == cfg.p2);
  REQUIRE(back.seed == cfg.seed);

  const TrackDecision d =
      track_test(scene.Z, cfg.m, cfg.n, cfg.sigma, 0.3, TrackMode::kInflating,
                 0.1, 0.7);
  nlohmann::json dj = d;
  REQUIRE((dj.at("decision") == "reject" || dj.at("decision") == "accept"));
  REQUIRE(dj.at("mode") == "inflating");
  REQUIRE(dj.at("statistic").is_number_integer());
  REQUIRE(dj.at("threshold").is_number());
  REQUIRE(dj.at("z_star").is_number());
}

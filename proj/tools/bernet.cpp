// bernet: command-line driver for the oriented Bernoulli-net toolkit.
//
// Seventeen subcommands cover lattice simulation, longest-run extraction,
// pseudo-tree survival estimation, exact transfer-matrix limits, asymptotic
// diagnostics, and the three detection pipelines (anomaly, filament, track).
//
// Shared contract across subcommands:
//   --seed / --out / --format {csv,json} / --threads / --config
// Flags beat --config JSON values, which beat built-in defaults; the fully
// resolved configuration is echoed in the run manifest. Data outputs are a
// pure function of (command, config, seed): re-running with the manifest's
// configuration reproduces byte-identical files at any --threads. When --out
// is given, a sidecar <out>.manifest.json records the resolved run plus
// timestamps and FNV-1a digests of every file written; timestamps live only
// in the sidecar so the data files themselves stay reproducible.
//
// Exit codes: 0 success, 1 usage/configuration error, 2 numerical or
// precondition failure.

#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "bernet/anomaly.hpp"
#include "bernet/asymptotics.hpp"
#include "bernet/longest_run.hpp"
#include "bernet/markov_exact.hpp"
#include "bernet/msra.hpp"
#include "bernet/net.hpp"
#include "bernet/net_io.hpp"
#include "bernet/pseudo_tree.hpp"
#include "bernet/track.hpp"

namespace bernet {

// CLI-facing JSON mappings for result types whose home headers stay free of
// the JSON dependency. Defined in the library namespace so argument-dependent
// lookup finds them from nlohmann.
inline void to_json(nlohmann::json& j, const NodeCoord& c) {
  j = nlohmann::json{{"col", c.col}, {"rows", c.rows}};
}

inline void to_json(nlohmann::json& j, const RunResult& r) {
  j = nlohmann::json{{"length", r.length}, {"path", r.path}};
}

inline void to_json(nlohmann::json& j, const LengthHistogram& h) {
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& [len, cnt] : h.counts)
    counts.push_back(nlohmann::json::array({len, cnt}));
  j = nlohmann::json{
      {"config", h.config}, {"replicates", h.replicates}, {"counts", counts}};
}

inline void to_json(nlohmann::json& j, const RhoEstimate& e) {
  j = nlohmann::json{{"m", e.m},     {"C", e.C},
                     {"p", e.p},     {"rho", e.rho},
                     {"k_converged", e.k_converged}, {"tol", e.tol}};
}

inline void to_json(nlohmann::json& j, const RhoCell& c) {
  j = nlohmann::json{
      {"m", c.m}, {"p", c.p}, {"rho", c.rho}, {"k_converged", c.k_converged}};
}

}  // namespace bernet

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr uint64_t kDefaultSeed = 20260814;

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string iso8601_utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct CommonOpts {
  uint64_t seed = kDefaultSeed;
  std::string out;
  std::string format = "csv";
  int threads = 0;
  std::string config_path;
};

// Post-parse merge of --config JSON under explicit flags. Each bound option
// falls back to the config value only when the flag was not typed.
struct ConfigMerge {
  std::vector<std::function<void(const nlohmann::json&)>> actions;

  template <typename T>
  CLI::Option* bind(CLI::Option* opt, T& target, std::string key) {
    actions.push_back(
        [opt, &target, key = std::move(key)](const nlohmann::json& cfg) {
          if (opt->count() == 0 && cfg.contains(key))
            target = cfg.at(key).get<T>();
        });
    return opt;
  }

  void apply(const std::string& path) const {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in)
      throw std::invalid_argument("cannot open config file: " + path);
    const nlohmann::json cfg = nlohmann::json::parse(in);
    if (!cfg.is_object())
      throw std::invalid_argument("config file must hold a JSON object: " +
                                  path);
    for (const auto& a : actions) a(cfg);
  }
};

void add_common(CLI::App* sub, CommonOpts& c, ConfigMerge& m) {
  m.bind(sub->add_option("--seed", c.seed, "Master RNG seed")
             ->capture_default_str(),
         c.seed, "seed");
  sub->add_option("--out", c.out,
                  "Output file; omitted means stdout (no manifest sidecar)");
  sub->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  m.bind(sub->add_option("--threads", c.threads,
                         "Worker threads (0 = BERNET_THREADS or hardware)")
             ->capture_default_str(),
         c.threads, "threads");
  sub->add_option("--config", c.config_path,
                  "JSON file of defaults; explicit flags win");
}

struct ExtraFile {
  std::string path;
  std::string bytes;
};

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open output file: " + path);
  f << bytes;
  if (!f) throw std::runtime_error("failed writing output file: " + path);
}

// Renders the payload in the requested format, routes it to stdout or --out,
// and, when writing files, drops the manifest sidecar with timestamps and
// digests. The embedded manifest is timestamp-free by design.
void emit(const CommonOpts& c, const std::string& command,
          const nlohmann::json& resolved_config, const std::string& payload_key,
          const nlohmann::json& payload, const std::string& csv,
          const std::string& started, const std::vector<ExtraFile>& extras = {}) {
  const nlohmann::json core{{"command", command},
                            {"config", resolved_config},
                            {"seed", c.seed},
                            {"version", kVersion}};
  std::string text;
  if (c.format == "json") {
    const nlohmann::json doc{{"manifest", core}, {payload_key, payload}};
    text = doc.dump(2);
    text.push_back('\n');
  } else {
    text = csv;
  }

  for (const ExtraFile& e : extras) write_file(e.path, e.bytes);

  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  write_file(c.out, text);

  nlohmann::json outputs = nlohmann::json::array();
  auto record = [&outputs](const std::string& path, const std::string& bytes) {
    outputs.push_back({{"path", path},
                       {"bytes", bytes.size()},
                       {"digest", "fnv1a64:" + hex64(fnv1a64(bytes))}});
  };
  record(c.out, text);
  for (const ExtraFile& e : extras) record(e.path, e.bytes);

  nlohmann::json side = core;
  side["started"] = started;
  side["finished"] = iso8601_utc_now();
  side["outputs"] = outputs;
  write_file(c.out + ".manifest.json", side.dump(2) + "\n");
}

long long as_count(double reps, const char* what) {
  if (!(reps >= 1.0) || reps > 9.0e18)
    throw std::invalid_argument(std::string(what) +
                                " must be a positive count");
  return static_cast<long long>(std::llround(reps));
}

std::vector<int> broadcast_bounds(std::vector<int> C, std::size_t axes) {
  if (C.size() == 1 && axes > 1) C.assign(axes, C[0]);
  if (C.size() != axes)
    throw std::invalid_argument(
        "--C must list one bound per axis (or one shared bound)");
  return C;
}

bernet::NetConfig make_net_config(const std::vector<int>& m,
                                  std::vector<int> C, long long n, double p,
                                  uint64_t seed) {
  if (m.empty())
    throw std::invalid_argument("--m requires at least one axis extent");
  C = broadcast_bounds(std::move(C), m.size());
  bernet::NetConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.seed = seed;
  cfg.row_dims.reserve(m.size());
  for (std::size_t a = 0; a < m.size(); ++a)
    cfg.row_dims.push_back({m[a], C[a]});
  cfg.validate();
  return cfg;
}

nlohmann::json net_flags_json(const std::vector<int>& m,
                              const std::vector<int>& C, long long n,
                              double p) {
  return nlohmann::json{{"m", m}, {"C", C}, {"n", n}, {"p", p}};
}

std::vector<bernet::NodeCoord> significant_nodes(const bernet::Net& net) {
  const bernet::NetConfig& cfg = net.config();
  const std::vector<uint64_t> stride = bernet::detail::row_strides(cfg);
  std::vector<bernet::NodeCoord> nodes;
  for (long long col = 0; col < cfg.n; ++col)
    for (uint64_t r = 0; r < cfg.rows_total(); ++r) {
      if (!net.get(col, r)) continue;
      bernet::NodeCoord c;
      c.col = col + 1;
      c.rows.resize(cfg.row_dims.size());
      for (std::size_t a = 0; a < stride.size(); ++a)
        c.rows[a] =
            int(r / stride[a] % uint64_t(cfg.row_dims[a].m)) + 1;
      nodes.push_back(std::move(c));
    }
  return nodes;
}

std::string coord_csv(const bernet::NetConfig& cfg,
                      const std::vector<bernet::NodeCoord>& nodes) {
  std::ostringstream out;
  out << "col";
  for (std::size_t a = 1; a <= cfg.row_dims.size(); ++a) out << ",row" << a;
  out << '\n';
  for (const bernet::NodeCoord& c : nodes) {
    out << c.col;
    for (int r : c.rows) out << ',' << r;
    out << '\n';
  }
  return out.str();
}

std::ostringstream precise_row() {
  std::ostringstream out;
  out.precision(17);
  return out;
}

std::pair<long long, long long> parse_size(const std::string& s) {
  const std::size_t x = s.find('x');
  if (x == std::string::npos || x == 0 || x + 1 == s.size())
    throw std::invalid_argument("--size entries must look like 128x128: " + s);
  try {
    return {std::stoll(s.substr(0, x)), std::stoll(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw std::invalid_argument("--size entries must look like 128x128: " + s);
  }
}

// ---------------------------------------------------------------------------
// net-core commands

struct NetState {
  CommonOpts common;
  ConfigMerge merge;
  std::vector<int> m{8};
  std::vector<int> C{1};
  long long n = 32;
  double p = 0.2;
};

std::shared_ptr<NetState> add_net_flags(CLI::App* sub) {
  auto st = std::make_shared<NetState>();
  add_common(sub, st->common, st->merge);
  st->merge.bind(sub->add_option("--m", st->m, "Rows per transverse axis")
                     ->capture_default_str(),
                 st->m, "m");
  st->merge.bind(
      sub->add_option("--C", st->C, "Per-axis jump bound (broadcast if one)")
          ->capture_default_str(),
      st->C, "C");
  st->merge.bind(sub->add_option("--n", st->n, "Columns")->capture_default_str(),
                 st->n, "n");
  st->merge.bind(
      sub->add_option("--p", st->p, "Significance probability")
          ->capture_default_str(),
      st->p, "p");
  return st;
}

void register_simulate_net(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "simulate-net", "Generate a seeded lattice and list significant nodes");
  auto st = add_net_flags(sub);
  sub->callback([st] {
    st->merge.apply(st->common.config_path);
    const std::string started = iso8601_utc_now();
    const bernet::NetConfig cfg =
        make_net_config(st->m, st->C, st->n, st->p, st->common.seed);
    const bernet::Net net = bernet::generate_net(cfg, st->common.threads);
    const std::vector<bernet::NodeCoord> nodes = significant_nodes(net);
    const nlohmann::json payload{
        {"config", cfg}, {"count", nodes.size()}, {"nodes", nodes}};
    emit(st->common, "simulate-net", net_flags_json(st->m, st->C, st->n, st->p),
         "net", payload, coord_csv(cfg, nodes), started);
  });
}

void register_longest_run(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "longest-run", "Longest significant run of a seeded lattice");
  auto st = add_net_flags(sub);
  sub->callback([st] {
    st->merge.apply(st->common.config_path);
    const std::string started = iso8601_utc_now();
    const bernet::NetConfig cfg =
        make_net_config(st->m, st->C, st->n, st->p, st->common.seed);
    const bernet::RunResult run =
        bernet::longest_run_dp(bernet::generate_net(cfg, st->common.threads));
    const nlohmann::json payload{
        {"config", cfg}, {"length", run.length}, {"path", run.path}};
    emit(st->common, "longest-run", net_flags_json(st->m, st->C, st->n, st->p),
         "run", payload, coord_csv(cfg, run.path), started);
  });
}

void register_hist(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "hist", "Longest-run length distribution over replicates");
  auto st = add_net_flags(sub);
  auto reps = std::make_shared<double>(1000);
  st->merge.bind(sub->add_option("--reps", *reps, "Replicates")
                     ->capture_default_str(),
                 *reps, "reps");
  sub->callback([st, reps] {
    st->merge.apply(st->common.config_path);
    const std::string started = iso8601_utc_now();
    const bernet::NetConfig cfg =
        make_net_config(st->m, st->C, st->n, st->p, st->common.seed);
    const long long r = as_count(*reps, "--reps");
    const bernet::LengthHistogram hist =
        bernet::length_distribution(cfg, uint64_t(r), st->common.threads);
    nlohmann::json resolved = net_flags_json(st->m, st->C, st->n, st->p);
    resolved["reps"] = r;
    std::ostringstream csv;
    bernet::write_histogram_csv(csv, hist);
    emit(st->common, "hist", resolved, "histogram", hist, csv.str(), started);
  });
}

// ---------------------------------------------------------------------------
// pseudo-tree commands

struct TreeState {
  CommonOpts common;
  ConfigMerge merge;
  std::vector<int> C{1};
  double p = 0.2;
  long long kmax = 16;
  std::vector<long long> ks;
  double reps = 4096;
};

std::shared_ptr<TreeState> add_tree_flags(CLI::App* sub) {
  auto st = std::make_shared<TreeState>();
  add_common(sub, st->common, st->merge);
  st->merge.bind(sub->add_option("--C", st->C, "Per-axis jump bound")
                     ->capture_default_str(),
                 st->C, "C");
  st->merge.bind(sub->add_option("--p", st->p, "Significance probability")
                     ->capture_default_str(),
                 st->p, "p");
  st->merge.bind(
      sub->add_option("--kmax", st->kmax, "Depth grid 1..kmax")
          ->capture_default_str(),
      st->kmax, "kmax");
  st->merge.bind(
      sub->add_option("--ks", st->ks, "Explicit depth grid (overrides --kmax)"),
      st->ks, "ks");
  st->merge.bind(sub->add_option("--reps", st->reps, "Replicates per depth")
                     ->capture_default_str(),
                 st->reps, "reps");
  return st;
}

bernet::ThetaSeries run_theta(const TreeState& st, nlohmann::json& resolved) {
  std::vector<long long> ks = st.ks;
  if (ks.empty()) {
    if (st.kmax < 1)
      throw std::invalid_argument("--kmax must be >= 1");
    for (long long k = 1; k <= st.kmax; ++k) ks.push_back(k);
  }
  const long long reps = as_count(st.reps, "--reps");
  resolved = nlohmann::json{
      {"C", st.C}, {"p", st.p}, {"ks", ks}, {"reps", reps}};
  return bernet::theta_series(bernet::PseudoTreeConfig{st.C, st.p}, ks, reps,
                              st.common.seed, st.common.threads);
}

void register_theta(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "theta", "Pseudo-tree survival curve theta_k by Monte Carlo");
  auto st = add_tree_flags(sub);
  sub->callback([st] {
    st->merge.apply(st->common.config_path);
    const std::string started = iso8601_utc_now();
    nlohmann::json resolved;
    const bernet::ThetaSeries series = run_theta(*st, resolved);
    std::ostringstream csv;
    bernet::write_theta_csv(csv, series);
    emit(st->common, "theta", resolved, "theta", series, csv.str(), started);
  });
}

void register_phi(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "phi", "Survival decay rate fitted from a theta curve");
  auto st = add_tree_flags(sub);
  auto relse = std::make_shared<double>(0.2);
  st->merge.bind(
      sub->add_option("--relse", *relse,
                      "Relative standard-error cap for usable depths")
          ->capture_default_str(),
      *relse, "relse");
  sub->callback([st, relse] {
    st->merge.apply(st->common.config_path);
    const std::string started = iso8601_utc_now();
    nlohmann::json resolved;
    const bernet::ThetaSeries series = run_theta(*st, resolved);
    resolved["relse"] = *relse;
    const bernet::PhiFit fit = bernet::phi_fit(series, *relse);
    const nlohmann::json payload{{"fit", fit}, {"theta", series}};
    auto csv = precise_row();
    csv << "phi_hat,k_min,k_max,sigma1,sigma2,ratio_estimate\n"
        << fit.phi_hat << ',' << fit.k_min << ',' << fit.k_max << ','
        << fit.sigma1 << ',' << fit.sigma2 << ',' << fit.ratio_estimate
        << '\n';
    emit(st->common, "phi", resolved, "phi", payload, csv.str(), started);
  });
}

void register_pc(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "pc", "Bisection bracket for the critical probability");
  auto st = std::make_shared<TreeState>();
  add_common(sub, st->common, st->merge);
  st->merge.bind(sub->add_option("--C", st->C, "Per-axis jump bound")
                     ->capture_default_str(),
                 st->C, "C");
  auto depth = std::make_shared<long long>(64);
  auto threshold = std::make_shared<double>(0.05);
  st->merge.bind(sub->add_option("--depth", *depth, "Survival depth probed")
                     ->capture_default_str(),
                 *depth, "depth");
  st->merge.bind(
      sub->add_option("--threshold", *threshold,
                      "Survival frequency separating sub- from supercritical")
          ->capture_default_str(),
      *threshold, "threshold");
  st->merge.bind(sub->add_option("--reps", st->reps, "Replicates per probe")
                     ->capture_default_str(),
                 st->reps, "reps");
  sub->callback([st, depth, threshold] {
    st->merge.apply(st->common.config_path);
    const std::string started = iso8601_utc_now();
    const long long reps = as_count(st->reps, "--reps");
    const nlohmann::json resolved{{"C", st->C},
                                  {"depth", *depth},
                                  {"threshold", *threshold},
                                  {"reps", reps}};
    const bernet::PcBracket bracket = bernet::pc_bracket(
        st->C, *depth, *threshold, reps, st->common.seed, st->common.threads);
    auto csv = precise_row();
    csv << "lower,upper,depth,threshold\n"
        << bracket.lower << ',' << bracket.upper << ',' << bracket.depth << ','
        << bracket.survival_threshold << '\n';
    emit(st->common, "pc", resolved, "pc", bracket, csv.str(), started);
  });
}

// ---------------------------------------------------------------------------
// markov-exact commands

void register_rho_exact(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "rho-exact", "Limiting conditional across probability rho(m,p)");
  auto common = std::make_shared<CommonOpts>();
  auto merge = std::make_shared<ConfigMerge>();
  add_common(sub, *common, *merge);
  auto m = std::make_shared<int>(4);
  auto C = std::make_shared<int>(1);
  auto p = std::make_shared<double>(0.2);
  auto tol = std::make_shared<double>(1e-7);
  merge->bind(sub->add_option("--m", *m, "Rows")->capture_default_str(), *m,
              "m");
  merge->bind(sub->add_option("--C", *C, "Jump bound")->capture_default_str(),
              *C, "C");
  merge->bind(
      sub->add_option("--p", *p, "Significance probability")
          ->capture_default_str(),
      *p, "p");
  merge->bind(
      sub->add_option("--tol", *tol, "Convergence tolerance on the ratio")
          ->capture_default_str(),
      *tol, "tol");
  sub->callback([common, merge, m, C, p, tol] {
    merge->apply(common->config_path);
    const std::string started = iso8601_utc_now();
    const nlohmann::json resolved{
        {"m", *m}, {"C", *C}, {"p", *p}, {"tol", *tol}};
    const bernet::RhoEstimate est = bernet::rho_exact(*m, *C, *p, *tol);
    std::ostringstream csv;
    bernet::write_rho_csv(csv, {{est.m, est.p, est.rho, est.k_converged}});
    emit(*common, "rho-exact", resolved, "rho", est, csv.str(), started);
  });
}

void register_table1(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "table1",
      "Reference grid of rho(m,p) for m in {4,8,10}, p in 0.1..0.6, C = 1");
  auto common = std::make_shared<CommonOpts>();
  auto merge = std::make_shared<ConfigMerge>();
  add_common(sub, *common, *merge);
  auto tol = std::make_shared<double>(1e-7);
  merge->bind(
      sub->add_option("--tol", *tol, "Convergence tolerance on the ratio")
          ->capture_default_str(),
      *tol, "tol");
  sub->callback([common, merge, tol] {
    merge->apply(common->config_path);
    const std::string started = iso8601_utc_now();
    const nlohmann::json resolved{{"tol", *tol}};
    const std::vector<bernet::RhoCell> cells = bernet::rho_grid(
        {4, 8, 10}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, 1, *tol);
    std::ostringstream csv;
    bernet::write_rho_csv(csv, cells);
    emit(*common, "table1", resolved, "table", cells, csv.str(), started);
  });
}

void register_stab_bounds(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "stab-bounds",
      "Sandwich bounds on P(longest run < k) from exact across probabilities");
  auto common = std::make_shared<CommonOpts>();
  auto merge = std::make_shared<ConfigMerge>();
  add_common(sub, *common, *merge);
  auto m = std::make_shared<int>(4);
  auto C = std::make_shared<int>(1);
  auto n = std::make_shared<long long>(32);
  auto p = std::make_shared<double>(0.2);
  auto kmin = std::make_shared<long long>(1);
  auto kmax = std::make_shared<long long>(0);
  merge->bind(sub->add_option("--m", *m, "Rows")->capture_default_str(), *m,
              "m");
  merge->bind(sub->add_option("--C", *C, "Jump bound")->capture_default_str(),
              *C, "C");
  merge->bind(sub->add_option("--n", *n, "Columns")->capture_default_str(), *n,
              "n");
  merge->bind(
      sub->add_option("--p", *p, "Significance probability")
          ->capture_default_str(),
      *p, "p");
  merge->bind(sub->add_option("--kmin", *kmin, "Smallest run length")
                  ->capture_default_str(),
              *kmin, "kmin");
  merge->bind(
      sub->add_option("--kmax", *kmax, "Largest run length (0 = n)"),
      *kmax, "kmax");
  sub->callback([common, merge, m, C, n, p, kmin, kmax] {
    merge->apply(common->config_path);
    const std::string started = iso8601_utc_now();
    const long long hi = (*kmax == 0) ? *n : *kmax;
    const nlohmann::json resolved{{"m", *m},       {"C", *C},
                                  {"n", *n},       {"p", *p},
                                  {"kmin", *kmin}, {"kmax", hi}};
    nlohmann::json entries = nlohmann::json::array();
    auto csv = precise_row();
    csv << "k,lower,upper\n";
    for (long long k = *kmin; k <= hi; ++k) {
      const auto [lo, up] = bernet::stab_bounds(*m, *n, *C, *p, k);
      entries.push_back({{"k", k}, {"lower", lo}, {"upper", up}});
      csv << k << ',' << lo << ',' << up << '\n';
    }
    const nlohmann::json payload{
        {"m", *m}, {"C", *C}, {"n", *n}, {"p", *p}, {"entries", entries}};
    emit(*common, "stab-bounds", resolved, "bounds", payload, csv.str(),
         started);
  });
}

// ---------------------------------------------------------------------------
// asymptotics commands

void register_poisson_approx(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "poisson-approx",
      "Poisson approximation of the across probability over m rows");
  auto common = std::make_shared<CommonOpts>();
  auto merge = std::make_shared<ConfigMerge>();
  add_common(sub, *common, *merge);
  auto m = std::make_shared<long long>(2000);
  auto n = std::make_shared<long long>(30);
  auto C = std::make_shared<int>(1);
  auto p = std::make_shared<double>(0.2);
  auto reps = std::make_shared<double>(100000);
  auto theta = std::make_shared<double>(-1.0);
  merge->bind(sub->add_option("--m", *m, "Rows")->capture_default_str(), *m,
              "m");
  merge->bind(
      sub->add_option("--n", *n, "Columns (survival depth)")
          ->capture_default_str(),
      *n, "n");
  merge->bind(sub->add_option("--C", *C, "Jump bound")->capture_default_str(),
              *C, "C");
  merge->bind(
      sub->add_option("--p", *p, "Significance probability")
          ->capture_default_str(),
      *p, "p");
  merge->bind(
      sub->add_option("--reps", *reps, "Monte Carlo replicates for theta")
          ->capture_default_str(),
      *reps, "reps");
  merge->bind(sub->add_option("--theta", *theta,
                              "Use this survival probability instead of MC"),
              *theta, "theta");
  sub->callback([common, merge, m, n, C, p, reps, theta] {
    merge->apply(common->config_path);
    const std::string started = iso8601_utc_now();
    double th = *theta;
    double se = 0.0;
    long long r = 0;
    if (th < 0.0) {
      r = as_count(*reps, "--reps");
      const bernet::ThetaEntry entry =
          bernet::theta_mc(bernet::PseudoTreeConfig{{*C}, *p}, *n, r,
                           common->seed, common->threads);
      th = entry.estimate;
      se = entry.stderr_value;
    }
    const double approx = bernet::poisson_approx_across(*m, th);
    nlohmann::json resolved{
        {"m", *m}, {"n", *n}, {"C", *C}, {"p", *p}, {"reps", r}};
    if (*theta >= 0.0) resolved["theta"] = *theta;
    const nlohmann::json payload{{"m", *m},
                                 {"n", *n},
                                 {"theta", th},
                                 {"theta_stderr", se},
                                 {"approx", approx},
                                 {"replicates", r}};
    auto csv = precise_row();
    csv << "m,n,theta,approx\n"
        << *m << ',' << *n << ',' << th << ',' << approx << '\n';
    emit(*common, "poisson-approx", resolved, "poisson", payload, csv.str(),
         started);
  });
}

void register_rate_check(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "rate-check",
      "Mean longest run over log(mn) across a ladder of lattice sizes");
  auto common = std::make_shared<CommonOpts>();
  auto merge = std::make_shared<ConfigMerge>();
  add_common(sub, *common, *merge);
  auto C = std::make_shared<int>(1);
  auto p = std::make_shared<double>(0.2);
  auto phi = std::make_shared<double>(0.0);
  auto sizes = std::make_shared<std::vector<std::string>>(
      std::vector<std::string>{"64x64", "128x128", "256x256"});
  auto reps = std::make_shared<double>(200);
  merge->bind(sub->add_option("--C", *C, "Jump bound")->capture_default_str(),
              *C, "C");
  merge->bind(
      sub->add_option("--p", *p, "Significance probability")
          ->capture_default_str(),
      *p, "p");
  merge->bind(sub->add_option("--phi", *phi,
                              "Fitted decay rate (target ratio is 1/phi)"),
              *phi, "phi");
  merge->bind(sub->add_option("--size", *sizes, "Lattice sizes, e.g. 64x64")
                  ->capture_default_str(),
              *sizes, "size");
  merge->bind(sub->add_option("--reps", *reps, "Replicates per size")
                  ->capture_default_str(),
              *reps, "reps");
  sub->callback([common, merge, C, p, phi, sizes, reps] {
    merge->apply(common->config_path);
    const std::string started = iso8601_utc_now();
    if (!(*phi > 0.0))
      throw std::invalid_argument("rate-check requires --phi > 0");
    std::vector<std::pair<long long, long long>> grid;
    for (const std::string& s : *sizes) grid.push_back(parse_size(s));
    const long long r = as_count(*reps, "--reps");
    const nlohmann::json resolved{{"C", *C},
                                  {"p", *p},
                                  {"phi", *phi},
                                  {"size", *sizes},
                                  {"reps", r}};
    const bernet::RateTable table = bernet::rate_sweep(
        *C, *p, *phi, grid, uint64_t(r), common->seed, common->threads);
    std::ostringstream csv;
    bernet::write_rate_csv(csv, table);
    emit(*common, "rate-check", resolved, "rates", table, csv.str(), started);
  });
}

void register_gumbel(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "gumbel", "Gumbel-type fit of the longest-run law at fixed m");
  auto common = std::make_shared<CommonOpts>();
  auto merge = std::make_shared<ConfigMerge>();
  add_common(sub, *common, *merge);
  auto m = std::make_shared<int>(4);
  auto C = std::make_shared<int>(1);
  auto p = std::make_shared<double>(0.2);
  auto n = std::make_shared<long long>(1024);
  auto reps = std::make_shared<double>(2000);
  merge->bind(sub->add_option("--m", *m, "Rows")->capture_default_str(), *m,
              "m");
  merge->bind(sub->add_option("--C", *C, "Jump bound")->capture_default_str(),
              *C, "C");
  merge->bind(
      sub->add_option("--p", *p, "Significance probability")
          ->capture_default_str(),
      *p, "p");
  merge->bind(sub->add_option("--n", *n, "Columns")->capture_default_str(), *n,
              "n");
  merge->bind(sub->add_option("--reps", *reps, "Replicates")
                  ->capture_default_str(),
              *reps, "reps");
  sub->callback([common, merge, m, C, p, n, reps] {
    merge->apply(common->config_path);
    const std::string started = iso8601_utc_now();
    const long long r = as_count(*reps, "--reps");
    const nlohmann::json resolved{
        {"m", *m}, {"C", *C}, {"p", *p}, {"n", *n}, {"reps", r}};
    const bernet::GumbelFit fit = bernet::gumbel_fit(
        *m, *C, *p, *n, uint64_t(r), common->seed, common->threads);
    auto csv = precise_row();
    csv << "m,C,p,n,rho,A1,ks_distance,replicates\n"
        << fit.m << ',' << fit.C << ',' << fit.p << ',' << fit.n << ','
        << fit.rho << ',' << fit.A1 << ',' << fit.ks_distance << ','
        << fit.replicates << '\n';
    emit(*common, "gumbel", resolved, "gumbel", fit, csv.str(), started);
  });
}

// ---------------------------------------------------------------------------
// detection commands

void register_detect_anomaly(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "detect-anomaly",
      "Type I/II rates of the log-threshold test against a planted chain");
  auto common = std::make_shared<CommonOpts>();
  auto merge = std::make_shared<ConfigMerge>();
  add_common(sub, *common, *merge);
  auto m = std::make_shared<std::vector<int>>(std::vector<int>{8});
  auto C = std::make_shared<std::vector<int>>(std::vector<int>{1});
  auto n = std::make_shared<long long>(64);
  auto p0 = std::make_shared<double>(0.2);
  auto p1 = std::make_shared<double>(0.8);
  auto phi = std::make_shared<double>(0.0);
  auto reps = std::make_shared<double>(200);
  merge->bind(sub->add_option("--m", *m, "Rows per transverse axis")
                  ->capture_default_str(),
              *m, "m");
  merge->bind(sub->add_option("--C", *C, "Per-axis jump bound")
                  ->capture_default_str(),
              *C, "C");
  merge->bind(sub->add_option("--n", *n, "Columns")->capture_default_str(), *n,
              "n");
  merge->bind(sub->add_option("--p0", *p0, "Background probability")
                  ->capture_default_str(),
              *p0, "p0");
  merge->bind(sub->add_option("--p1", *p1, "Chain probability")
                  ->capture_default_str(),
              *p1, "p1");
  merge->bind(
      sub->add_option("--phi", *phi, "Fitted decay rate at p0 (required)"),
      *phi, "phi");
  merge->bind(sub->add_option("--reps", *reps, "Paired replicates")
                  ->capture_default_str(),
              *reps, "reps");
  sub->callback([common, merge, m, C, n, p0, p1, phi, reps] {
    merge->apply(common->config_path);
    const std::string started = iso8601_utc_now();
    if (!(*phi > 0.0))
      throw std::invalid_argument("detect-anomaly requires --phi > 0");
    const long long r = as_count(*reps, "--reps");
    nlohmann::json resolved = net_flags_json(*m, *C, *n, *p0);
    resolved.erase("p");
    resolved["p0"] = *p0;
    resolved["p1"] = *p1;
    resolved["phi"] = *phi;
    resolved["reps"] = r;
    const bernet::AnomalyScenario scenario{
        make_net_config(*m, *C, *n, *p0, common->seed), *p1};
    const bernet::AnomalyOutcome outcome = bernet::plant_and_test_anomaly(
        scenario, *phi, uint64_t(r), common->seed, common->threads);
    auto csv = precise_row();
    csv << "type1_rate,type2_rate,threshold,separated,replicates\n"
        << outcome.type1_rate << ',' << outcome.type2_rate << ','
        << outcome.threshold << ',' << (outcome.separated ? 1 : 0) << ','
        << outcome.replicates << '\n';
    emit(*common, "detect-anomaly", resolved, "anomaly", outcome, csv.str(),
         started);
  });
}

struct FilamentState {
  CommonOpts common;
  ConfigMerge merge;
  std::string in_path;
  long long N = 2048;
  double eps = -1.0;  // negative = auto-calibrated under --alternative
  bool alternative = false;
  double alpha = 2.0;
  double beta = 1.0;
  double S = 1.0;
  double delta3 = 0.1;
  double phi = 0.0;
  uint64_t phi_seed = bernet::kMsraPhiSeed;
  std::string scene_out;
};

void add_msra_flags(CLI::App* sub, FilamentState& st) {
  st.merge.bind(
      sub->add_option("--alpha", st.alpha, "Smoothness exponent, in (1,2]")
          ->capture_default_str(),
      st.alpha, "alpha");
  st.merge.bind(sub->add_option("--beta", st.beta, "Smoothness constant")
                    ->capture_default_str(),
                st.beta, "beta");
  st.merge.bind(sub->add_option("--S", st.S, "Slope cap, >= 1")
                    ->capture_default_str(),
                st.S, "S");
  st.merge.bind(sub->add_option("--delta3", st.delta3, "Calibration slack")
                    ->capture_default_str(),
                st.delta3, "delta3");
  st.merge.bind(
      sub->add_option("--phi", st.phi,
                      "Decay rate at the node probability (0 = fit now)")
          ->capture_default_str(),
      st.phi, "phi");
  st.merge.bind(sub->add_option("--phi-seed", st.phi_seed,
                                "Seed of the cached decay-rate fit")
                    ->capture_default_str(),
                st.phi_seed, "phi_seed");
}

void register_thresholds(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "thresholds", "Calibrated constants for the multiscale filament test");
  auto st = std::make_shared<FilamentState>();
  add_common(sub, st->common, st->merge);
  st->merge.bind(sub->add_option("--N", st->N, "Scene size")
                     ->capture_default_str(),
                 st->N, "N");
  add_msra_flags(sub, *st);
  sub->callback([st] {
    st->merge.apply(st->common.config_path);
    const std::string started = iso8601_utc_now();
    if (st->N < 2) throw std::invalid_argument("--N must be >= 2");
    const bernet::MsraThresholds th = bernet::compute_thresholds(
        uint64_t(st->N), st->alpha, st->beta, st->S, st->delta3, st->phi,
        st->phi_seed, st->common.threads);
    const nlohmann::json resolved{
        {"N", st->N},         {"alpha", st->alpha}, {"beta", st->beta},
        {"S", st->S},         {"delta3", st->delta3},
        {"phi", th.phi_p0},   {"phi_seed", st->phi_seed}};
    auto csv = precise_row();
    csv << "J,c_J,N_star,p0,L_star,p_star,lambda_star,T_star,delta3,phi_p0,"
           "phi_seed\n"
        << th.J << ',' << th.c_J << ',' << th.N_star << ',' << th.p0 << ','
        << th.L_star << ',' << th.p_star << ',' << th.lambda_star << ','
        << th.T_star << ',' << th.delta3 << ',' << th.phi_p0 << ','
        << th.phi_seed << '\n';
    emit(st->common, "thresholds", resolved, "thresholds", th, csv.str(),
         started);
  });
}

void register_detect_filament(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "detect-filament",
      "Multiscale significance test for a smooth curve in a point scene");
  auto st = std::make_shared<FilamentState>();
  add_common(sub, st->common, st->merge);
  st->merge.bind(sub->add_option("--in", st->in_path,
                                 "Scene CSV (x,y); skips generation"),
                 st->in_path, "in");
  st->merge.bind(
      sub->add_option("--N", st->N, "Scene size when generating")
          ->capture_default_str(),
      st->N, "N");
  st->merge.bind(
      sub->add_option("--eps", st->eps,
                      "On-curve fraction; default 2*T_star*N^(-2/3) under "
                      "--alternative, else 0"),
      st->eps, "eps");
  st->merge.bind(sub->add_flag("--alternative", st->alternative,
                               "Generate under the alternative (curve present)"),
                 st->alternative, "alternative");
  add_msra_flags(sub, *st);
  sub->add_option("--scene-out", st->scene_out,
                  "Also write the analyzed scene as CSV");
  sub->callback([st] {
    st->merge.apply(st->common.config_path);
    const std::string started = iso8601_utc_now();

    std::vector<bernet::ScenePoint> points;
    double eps_used = 0.0;
    if (!st->in_path.empty()) {
      std::ifstream in(st->in_path);
      if (!in)
        throw std::invalid_argument("cannot open scene file: " + st->in_path);
      points = bernet::read_scene_csv(in);
      if (points.empty())
        throw std::invalid_argument("scene file holds no points: " +
                                    st->in_path);
    } else if (st->N < 1) {
      throw std::invalid_argument("--N must be >= 1");
    }
    const uint64_t N =
        st->in_path.empty() ? uint64_t(st->N) : uint64_t(points.size());

    const bernet::MsraThresholds th = bernet::compute_thresholds(
        N, st->alpha, st->beta, st->S, st->delta3, st->phi, st->phi_seed,
        st->common.threads);

    bernet::Scene scene;
    if (st->in_path.empty()) {
      eps_used = st->eps >= 0.0
                     ? st->eps
                     : (st->alternative
                            ? std::min(1.0, 2.0 * th.T_star *
                                                std::pow(double(N), -2.0 / 3.0))
                            : 0.0);
      scene = bernet::sample_scene(N, st->alpha, st->beta, st->S, eps_used,
                                   st->common.seed, st->alternative);
      points = scene.points;
    } else {
      scene.points = points;
    }

    const bernet::MsraDecision decision =
        bernet::msra_test(points, th, th.J, st->S);

    nlohmann::json resolved{{"N", N},
                            {"alpha", st->alpha},
                            {"beta", st->beta},
                            {"S", st->S},
                            {"delta3", st->delta3},
                            {"phi", th.phi_p0},
                            {"phi_seed", st->phi_seed}};
    if (!st->in_path.empty()) {
      resolved["in"] = st->in_path;
    } else {
      resolved["eps"] = eps_used;
      resolved["alternative"] = st->alternative;
    }

    nlohmann::json payload = decision;
    payload["seed"] = st->common.seed;
    payload["thresholds"] = th;

    std::vector<ExtraFile> extras;
    if (!st->scene_out.empty()) {
      std::ostringstream sc;
      bernet::write_scene_csv(sc, scene);
      extras.push_back({st->scene_out, sc.str()});
    }

    auto csv = precise_row();
    csv << "decision,statistic,threshold,scale\n"
        << (decision.reject ? "reject" : "accept") << ',' << decision.statistic
        << ',' << decision.threshold << ',' << decision.best_scale << '\n';
    emit(st->common, "detect-filament", resolved, "decision", payload,
         csv.str(), started, extras);
  });
}

// ---------------------------------------------------------------------------
// track commands

struct TrackState {
  CommonOpts common;
  ConfigMerge merge;
  int m = 8;
  long long n = 64;
  double p0 = 0.05;
  double p1 = 0.1;
  double p2 = 0.7;
  double p3 = 0.1;
  double sigma = 1.0;
  std::vector<int> init;
};

std::shared_ptr<TrackState> add_track_flags(CLI::App* sub) {
  auto st = std::make_shared<TrackState>();
  add_common(sub, st->common, st->merge);
  st->merge.bind(sub->add_option("--m", st->m, "Locations")
                     ->capture_default_str(),
                 st->m, "m");
  st->merge.bind(sub->add_option("--n", st->n, "Time steps")
                     ->capture_default_str(),
                 st->n, "n");
  st->merge.bind(sub->add_option("--p0", st->p0, "Emergence probability")
                     ->capture_default_str(),
                 st->p0, "p0");
  st->merge.bind(sub->add_option("--p1", st->p1, "Shift-left probability")
                     ->capture_default_str(),
                 st->p1, "p1");
  st->merge.bind(sub->add_option("--p2", st->p2, "Stay probability")
                     ->capture_default_str(),
                 st->p2, "p2");
  st->merge.bind(sub->add_option("--p3", st->p3, "Shift-right probability")
                     ->capture_default_str(),
                 st->p3, "p3");
  st->merge.bind(sub->add_option("--sigma", st->sigma, "Noise std")
                     ->capture_default_str(),
                 st->sigma, "sigma");
  st->merge.bind(sub->add_option("--init", st->init,
                                 "Initially occupied locations (1-based)"),
                 st->init, "init");
  return st;
}

bernet::TrackConfig make_track_config(const TrackState& st) {
  bernet::TrackConfig cfg;
  cfg.m = st.m;
  cfg.n = st.n;
  cfg.p0 = st.p0;
  cfg.p1 = st.p1;
  cfg.p2 = st.p2;
  cfg.p3 = st.p3;
  cfg.sigma = st.sigma;
  cfg.seed = st.common.seed;
  return cfg;
}

std::vector<uint8_t> make_track_init(const TrackState& st) {
  if (st.init.empty()) return {};
  std::vector<uint8_t> x0(std::size_t(st.m), 0);
  for (int j : st.init) {
    if (j < 1 || j > st.m)
      throw std::invalid_argument("--init locations must lie in [1, m]");
    x0[std::size_t(j - 1)] = 1;
  }
  return x0;
}

nlohmann::json track_flags_json(const TrackState& st) {
  return nlohmann::json{{"m", st.m},   {"n", st.n},   {"p0", st.p0},
                        {"p1", st.p1}, {"p2", st.p2}, {"p3", st.p3},
                        {"sigma", st.sigma}, {"init", st.init}};
}

void register_track_sim(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "track-sim", "Simulate the birth/shift/death scene with Gaussian noise");
  auto st = add_track_flags(sub);
  sub->callback([st] {
    st->merge.apply(st->common.config_path);
    const std::string started = iso8601_utc_now();
    const bernet::TrackConfig cfg = make_track_config(*st);
    const bernet::TrackScene scene =
        bernet::simulate_track(cfg, make_track_init(*st));
    const nlohmann::json payload{
        {"config", cfg}, {"x", scene.X}, {"z", scene.Z}};
    std::ostringstream csv;
    bernet::write_track_csv(csv, scene);
    emit(st->common, "track-sim", track_flags_json(*st), "scene", payload,
         csv.str(), started);
  });
}

// Parses a track CSV (t,location,x,z) back into observations; the grid must
// be complete. Returns m, n, and the z layout used by track_test.
std::tuple<int, long long, std::vector<double>> read_track_csv(
    std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line != "t,location,x,z")
    throw std::invalid_argument("track file must start with t,location,x,z: " +
                                path);
  struct Cell {
    long long t;
    int j;
    double z;
  };
  std::vector<Cell> cells;
  long long n = 0;
  int m = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f0, f1, f2, f3;
    if (!std::getline(row, f0, ',') || !std::getline(row, f1, ',') ||
        !std::getline(row, f2, ',') || !std::getline(row, f3))
      throw std::invalid_argument("malformed track row: " + line);
    Cell c{};
    try {
      c.t = std::stoll(f0);
      c.j = std::stoi(f1);
      c.z = std::stod(f3);
    } catch (const std::exception&) {
      throw std::invalid_argument("malformed track row: " + line);
    }
    if (c.t < 1 || c.j < 1)
      throw std::invalid_argument("track coordinates must be 1-based: " + line);
    n = std::max(n, c.t);
    m = std::max(m, c.j);
    cells.push_back(c);
  }
  if (cells.empty())
    throw std::invalid_argument("track file holds no rows: " + path);
  std::vector<double> z(std::size_t(m) * std::size_t(n), 0.0);
  std::vector<char> seen(z.size(), 0);
  for (const Cell& c : cells) {
    const std::size_t idx =
        std::size_t(c.t - 1) * std::size_t(m) + std::size_t(c.j - 1);
    z[idx] = c.z;
    seen[idx] = 1;
  }
  for (char s : seen)
    if (!s)
      throw std::invalid_argument("track file must cover the full grid: " +
                                  path);
  return {m, n, std::move(z)};
}

void register_track_test(CLI::App& app) {
  CLI::App* sub = app.add_subcommand(
      "track-test",
      "Longest-run detection of a persistent target in a noisy scene");
  auto st = add_track_flags(sub);
  auto in_path = std::make_shared<std::string>();
  auto p_target = std::make_shared<double>(0.2);
  auto mode = std::make_shared<std::string>("fixed-m");
  auto delta4 = std::make_shared<double>(0.1);
  auto phi = std::make_shared<double>(0.0);
  st->merge.bind(sub->add_option("--in", *in_path,
                                 "Track CSV (t,location,x,z); skips simulation"),
                 *in_path, "in");
  st->merge.bind(
      sub->add_option("--p-target", *p_target,
                      "Per-cell exceedance probability, in (0, 1/3)")
          ->capture_default_str(),
      *p_target, "p_target");
  st->merge.bind(sub->add_option("--mode", *mode, "Threshold regime")
                     ->check(CLI::IsMember({"fixed-m", "inflating"}))
                     ->capture_default_str(),
                 *mode, "mode");
  st->merge.bind(sub->add_option("--delta4", *delta4, "Threshold slack")
                     ->capture_default_str(),
                 *delta4, "delta4");
  st->merge.bind(sub->add_option("--phi", *phi,
                                 "Decay rate at p-target (inflating mode)"),
                 *phi, "phi");
  sub->callback([st, in_path, p_target, mode, delta4, phi] {
    st->merge.apply(st->common.config_path);
    const std::string started = iso8601_utc_now();
    const bernet::TrackMode tm = (*mode == "fixed-m")
                                     ? bernet::TrackMode::kFixedM
                                     : bernet::TrackMode::kInflating;
    bernet::TrackDecision decision;
    nlohmann::json resolved;
    if (!in_path->empty()) {
      std::ifstream in(*in_path);
      if (!in)
        throw std::invalid_argument("cannot open track file: " + *in_path);
      const auto [m, n, z] = read_track_csv(in, *in_path);
      decision =
          bernet::track_test(z, m, n, st->sigma, *p_target, tm, *delta4, *phi);
      resolved = nlohmann::json{{"in", *in_path}, {"sigma", st->sigma}};
    } else {
      const bernet::TrackScene scene =
          bernet::simulate_track(make_track_config(*st), make_track_init(*st));
      decision = bernet::track_test(scene, *p_target, tm, *delta4, *phi);
      resolved = track_flags_json(*st);
    }
    resolved["p_target"] = *p_target;
    resolved["mode"] = *mode;
    resolved["delta4"] = *delta4;
    resolved["phi"] = *phi;

    nlohmann::json payload = decision;
    payload["seed"] = st->common.seed;

    auto csv = precise_row();
    csv << "decision,statistic,threshold,z_star,p_significant,mode\n"
        << (decision.reject ? "reject" : "accept") << ',' << decision.statistic
        << ',' << decision.threshold << ',' << decision.z_star << ','
        << decision.p_significant << ',' << *mode << '\n';
    emit(st->common, "track-test", resolved, "decision", payload, csv.str(),
         started);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "bernet: oriented Bernoulli-net simulation and detection toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  register_simulate_net(app);
  register_longest_run(app);
  register_hist(app);
  register_theta(app);
  register_phi(app);
  register_pc(app);
  register_rho_exact(app);
  register_table1(app);
  register_stab_bounds(app);
  register_poisson_approx(app);
  register_rate_check(app);
  register_gumbel(app);
  register_detect_anomaly(app);
  register_detect_filament(app);
  register_thresholds(app);
  register_track_sim(app);
  register_track_test(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

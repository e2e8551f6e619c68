#pragma once

// Serialization for lattice configurations and realized nets.
//
// NetConfig maps to a JSON object {n, row_dims: [[m, C], ...], p, seed}.
// Nets dump to a compact bit stream with a 16-byte little-endian header
// (magic "BNET", version, axis count, n, rows per column) followed by the
// node bits in column-major order (bit i = node i, i = col*rows + r), LSB
// first within each byte. The dump exists for golden tests and replay, so
// loading cross-checks the header against the caller's config.

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "bernet/net.hpp"

namespace bernet {

inline constexpr char kNetDumpMagic[4] = {'B', 'N', 'E', 'T'};
inline constexpr uint16_t kNetDumpVersion = 1;

inline void to_json(nlohmann::json& j, const RowDim& rd) {
  j = nlohmann::json::array({rd.m, rd.C});
}

inline void from_json(const nlohmann::json& j, RowDim& rd) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("NetConfig: row_dims entries must be [m, C]");
  rd.m = j[0].get<int>();
  rd.C = j[1].get<int>();
}

inline void to_json(nlohmann::json& j, const NetConfig& cfg) {
  j = nlohmann::json{{"n", cfg.n},
                     {"row_dims", cfg.row_dims},
                     {"p", cfg.p},
                     {"seed", cfg.seed}};
}

inline void from_json(const nlohmann::json& j, NetConfig& cfg) {
  cfg.n = j.at("n").get<long long>();
  cfg.row_dims = j.at("row_dims").get<std::vector<RowDim>>();
  cfg.p = j.at("p").get<double>();
  cfg.seed = j.at("seed").get<uint64_t>();
  cfg.validate();
}

namespace detail {

inline void put_u16(std::ostream& out, uint16_t v) {
  const char b[2] = {char(v & 0xFF), char(v >> 8)};
  out.write(b, 2);
}

inline void put_u32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = char((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

inline uint16_t take_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return uint16_t(b[0] | unsigned(b[1]) << 8);
}

inline uint32_t take_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace detail

inline void dump_net(const Net& net, std::ostream& out) {
  const NetConfig& cfg = net.config();
  out.write(kNetDumpMagic, 4);
  detail::put_u16(out, kNetDumpVersion);
  detail::put_u16(out, uint16_t(cfg.dim()));
  detail::put_u32(out, uint32_t(cfg.n));
  detail::put_u32(out, uint32_t(cfg.rows_total()));

  const uint64_t rows = cfg.rows_total();
  const uint64_t nodes = cfg.node_count();
  uint8_t byte = 0;
  for (uint64_t i = 0; i < nodes; ++i) {
    if (net.get((long long)(i / rows), i % rows)) byte |= uint8_t(1u << (i % 8));
    if ((i % 8) == 7 || i + 1 == nodes) {
      out.put(char(byte));
      byte = 0;
    }
  }
}

inline Net load_net(std::istream& in, const NetConfig& cfg) {
  cfg.validate();
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kNetDumpMagic, 4))
    throw std::runtime_error("load_net: bad magic");
  if (detail::take_u16(in) != kNetDumpVersion)
    throw std::runtime_error("load_net: unsupported version");
  const uint16_t dims = detail::take_u16(in);
  const uint32_t n = detail::take_u32(in);
  const uint32_t rows = detail::take_u32(in);
  if (!in || dims != uint16_t(cfg.dim()) || n != uint32_t(cfg.n) ||
      rows != uint32_t(cfg.rows_total()))
    throw std::runtime_error("load_net: header does not match config");

  Net net(cfg);
  const uint64_t nodes = cfg.node_count();
  int have = 0;
  uint8_t byte = 0;
  for (uint64_t i = 0; i < nodes; ++i) {
    if (have == 0) {
      int c = in.get();
      if (c < 0) throw std::runtime_error("load_net: truncated payload");
      byte = uint8_t(c);
      have = 8;
    }
    if (byte & 1) net.set((long long)(i / rows), i % rows, true);
    byte >>= 1;
    --have;
  }
  return net;
}

}  // namespace bernet

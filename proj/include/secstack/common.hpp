// Copyright 2026 The secstack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SECSTACK_COMMON_HPP
#define SECSTACK_COMMON_HPP

#include <array>
#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace secstack {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Time on whichever clock drives a component (simulated or wall), in
/// microseconds since that clock's origin.
using Micros = std::chrono::microseconds;
using TimePoint = Micros;

using NodeId = std::uint16_t;

enum class Errc : std::uint16_t {
  InvalidArgument = 1,
  DuplicateName,
  UnknownNeighbor,
  NoNeighbor,
  AckTimeout,
  UnknownKey,
  DatagramTooLarge,
  ReassemblyTimeout,
  OverlapMismatch,
  AddrInUse,
  PayloadTooLarge,
  StackDown,
  Timeout,
  RegistryFull,
  Exists,
  InvalidCredential,
  NotFound,
  StaleSecret,
  ParseError,
  HandshakeFailed,
  EmptyPsk,
  SeqExhausted,
  AuthFailed,
  ReplayDetected,
  DecodeError,
  UnknownBackend,
  UdpSockInUse,
  TooManyTags,
  EmptyTagList,
  NotServer,
  NotClient,
  NoCredentials,
  SessionTableFull,
  SessionClosed,
  IoError,
  SendFailed,
  Closed,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  explicit Error(Errc code) : Error(code, std::string(errc_name(code))) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Datagram endpoint. In simulated mode `addr` is a node id; in loopback
/// mode it is an IPv4 address in host byte order.
struct Endpoint {
  std::uint32_t addr = 0;
  std::uint16_t port = 0;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

std::string to_string(const Endpoint& ep);

inline constexpr std::uint32_t kLoopbackAddr = 0x7F000001;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimePoint now() const = 0;
};

/// Monotonic wall clock.
class SteadyClock final : public Clock {
 public:
  TimePoint now() const override;
  static SteadyClock& instance();
};

/// Seeded RNG threaded through everything that needs randomness so runs are
/// reproducible. Not a CSPRNG.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) using the top 53 bits, identical across standard
  /// libraries.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  void fill(std::span<std::uint8_t> out);
  template <std::size_t N>
  std::array<std::uint8_t, N> bytes() {
    std::array<std::uint8_t, N> out{};
    fill(out);
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

std::string to_hex(ByteView data);
/// Throws Errc::ParseError on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Big-endian helpers used by every wire codec in the project.
inline void put_be16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}
inline void put_be24(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}
inline void put_be48(Bytes& out, std::uint64_t v) {
  for (int shift = 40; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}
inline std::uint16_t get_be16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}
inline std::uint32_t get_be24(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 16) | (std::uint32_t{p[1]} << 8) | p[2];
}
inline std::uint64_t get_be48(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 6; ++i) v = (v << 8) | p[i];
  return v;
}
inline void append(Bytes& out, ByteView data) { out.insert(out.end(), data.begin(), data.end()); }

}  // namespace secstack

#endif  // SECSTACK_COMMON_HPP

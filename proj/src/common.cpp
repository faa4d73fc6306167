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

#include "secstack/common.hpp"

#include <cstring>

namespace secstack {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::UnknownNeighbor: return "UnknownNeighbor";
    case Errc::NoNeighbor: return "NoNeighbor";
    case Errc::AckTimeout: return "AckTimeout";
    case Errc::UnknownKey: return "UnknownKey";
    case Errc::DatagramTooLarge: return "DatagramTooLarge";
    case Errc::ReassemblyTimeout: return "ReassemblyTimeout";
    case Errc::OverlapMismatch: return "OverlapMismatch";
    case Errc::AddrInUse: return "AddrInUse";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::StackDown: return "StackDown";
    case Errc::Timeout: return "Timeout";
    case Errc::RegistryFull: return "RegistryFull";
    case Errc::Exists: return "Exists";
    case Errc::InvalidCredential: return "InvalidCredential";
    case Errc::NotFound: return "NotFound";
    case Errc::StaleSecret: return "StaleSecret";
    case Errc::ParseError: return "ParseError";
    case Errc::HandshakeFailed: return "HandshakeFailed";
    case Errc::EmptyPsk: return "EmptyPsk";
    case Errc::SeqExhausted: return "SeqExhausted";
    case Errc::AuthFailed: return "AuthFailed";
    case Errc::ReplayDetected: return "ReplayDetected";
    case Errc::DecodeError: return "DecodeError";
    case Errc::UnknownBackend: return "UnknownBackend";
    case Errc::UdpSockInUse: return "UdpSockInUse";
    case Errc::TooManyTags: return "TooManyTags";
    case Errc::EmptyTagList: return "EmptyTagList";
    case Errc::NotServer: return "NotServer";
    case Errc::NotClient: return "NotClient";
    case Errc::NoCredentials: return "NoCredentials";
    case Errc::SessionTableFull: return "SessionTableFull";
    case Errc::SessionClosed: return "SessionClosed";
    case Errc::IoError: return "IoError";
    case Errc::SendFailed: return "SendFailed";
    case Errc::Closed: return "Closed";
  }
  return "Unknown";
}

std::string to_string(const Endpoint& ep) {
  if (ep.addr > 0xFFFF) {
    return std::to_string(ep.addr >> 24) + "." + std::to_string((ep.addr >> 16) & 0xFF) + "." +
           std::to_string((ep.addr >> 8) & 0xFF) + "." + std::to_string(ep.addr & 0xFF) + ":" +
           std::to_string(ep.port);
  }
  return "node" + std::to_string(ep.addr) + ":" + std::to_string(ep.port);
}

TimePoint SteadyClock::now() const {
  return std::chrono::duration_cast<Micros>(std::chrono::steady_clock::now().time_since_epoch());
}

SteadyClock& SteadyClock::instance() {
  static SteadyClock clock;
  return clock;
}

void Rng::fill(std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t word = engine_();
    std::size_t n = std::min<std::size_t>(8, out.size() - i);
    std::memcpy(out.data() + i, &word, n);
    i += n;
  }
}

std::string to_hex(ByteView data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

namespace {
int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error(Errc::ParseError, "odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::ParseError, "invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

}  // namespace secstack

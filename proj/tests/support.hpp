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

// Shared fixtures for the test binaries.

#ifndef SECSTACK_TESTS_SUPPORT_HPP
#define SECSTACK_TESTS_SUPPORT_HPP

#include <functional>
#include <string>

#include "secstack/credman.hpp"
#include "secstack/sock_dtls.hpp"
#include "secstack/sock_udp.hpp"

namespace secstack::test {

inline const std::string kClientIdentity = "Client_identity";
inline const Bytes kPsk = {0x73, 0x65, 0x63, 0x72, 0x65, 0x74, 0x50, 0x53, 0x4b};  // "secretPSK"

/// A secret store plus a registry, the way an application would own them.
struct Keyring {
  credman::SecretStore store;
  credman::Registry registry;

  explicit Keyring(std::size_t capacity = credman::kCredmanMax) : registry(capacity) {}

  CredentialTag add(credman::CredmanTag tag, const std::string& identity, ByteView key) {
    registry.add(credman::Credential::psk(tag, identity, store.put(key)));
    return {tag, credman::CredentialType::Psk};
  }
};

/// Handshake retransmission for tests that run on the wall clock.
inline dtls::RetransmitPolicy fast_retransmit() {
  return {std::chrono::milliseconds(20), std::chrono::milliseconds(200), 7};
}

inline DtlsSockOptions sock_options(std::uint64_t seed, dtls::RetransmitPolicy policy = {}) {
  DtlsSockOptions o;
  o.rng_seed = seed;
  o.retransmit = policy;
  return o;
}

/// Registers a simulator task that drives `server`, answering every
/// application payload with `reply(payload)`.
inline link::Simulator::TaskId serve(link::Simulator& sim, DtlsSock& server,
                                     std::function<Bytes(const Bytes&)> reply = {}) {
  return sim.add_task([&server, reply] {
    std::size_t n = server.service();
    while (auto m = server.try_recv(Micros::zero())) {
      server.send(m->first, reply ? reply(m->second) : m->second);
      ++n;
    }
    return n > 0;
  });
}

inline Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

/// Application datagrams carried by a wire trace, in order: the unfragmented
/// frames' bytes with the network and transport headers removed.
inline std::vector<Bytes> wire_payloads(const std::vector<link::WireRecord>& trace) {
  std::vector<Bytes> out;
  for (const auto& w : trace) {
    if (w.frame.frag) continue;
    if (w.frame.bytes.size() < kIpHeaderLen + kUdpHeaderLen) continue;
    out.emplace_back(w.frame.bytes.begin() + kIpHeaderLen + kUdpHeaderLen, w.frame.bytes.end());
  }
  return out;
}

}  // namespace secstack::test

#endif  // SECSTACK_TESTS_SUPPORT_HPP

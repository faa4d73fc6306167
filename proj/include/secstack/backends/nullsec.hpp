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

// nullsec: no confidentiality. Records are header || plaintext with replay
// checking. The single round-trip handshake is authenticated with the PSK
// so that identity selection and wrong-key failures behave the same as
// with mini-dtls.
//
//   C->S  hello: 0x01 client_random(32) identity<0..255> auth(12)
//   S->C  ack:   0x02 server_random(32) auth(12)
//
// auth = HMAC-SHA-256(psk, label || client_random || identity-or-server_random)[0..12)

#ifndef SECSTACK_BACKENDS_NULLSEC_HPP
#define SECSTACK_BACKENDS_NULLSEC_HPP

#include "secstack/dtls_backend.hpp"

namespace secstack::dtls::nullsec {

inline constexpr std::size_t kRecordOverhead = kRecordHeaderLen;
inline constexpr std::uint8_t kHello = 1;
inline constexpr std::uint8_t kAck = 2;

std::array<std::uint8_t, 12> client_auth(ByteView psk, const Random& client_random, ByteView identity);
std::array<std::uint8_t, 12> server_auth(ByteView psk, const Random& client_random, const Random& server_random);

class NullSecBackend final : public Backend {
 public:
  BackendId id() const override { return BackendId::NullSec; }
  std::size_t record_overhead() const override { return kRecordOverhead; }
  std::size_t handshake_round_trips() const override { return 1; }
  DatagramKind classify(ByteView datagram) const override;
  StepResult handshake_step(const HandshakeState& state, std::optional<ByteView> incoming, TimePoint now,
                            Rng& rng, CredentialResolver& creds) const override;
  ListenResult listen(const ServerSecret& secret, const Endpoint& from, ByteView datagram, TimePoint now,
                      Rng& rng, CredentialResolver& creds, const RetransmitPolicy& policy,
                      bool accept) const override;
  Bytes protect(RecordState& rs, ByteView plaintext) const override;
  Unprotected unprotect(RecordState& rs, ByteView datagram) const override;
  Bytes close_notify(RecordState& rs) const override;
};

}  // namespace secstack::dtls::nullsec

#endif  // SECSTACK_BACKENDS_NULLSEC_HPP

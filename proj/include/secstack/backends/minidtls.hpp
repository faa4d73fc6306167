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

// mini-dtls: a reduced DTLS 1.2 PSK profile with AES-128-CCM-8 records.
//
// Flights (one datagram each):
//   1  C->S  ClientHello
//   2  S->C  HelloVerifyRequest(cookie)
//   3  C->S  ClientHello(cookie)
//   4  S->C  ServerHello, ServerHelloDone
//   5  C->S  ClientKeyExchange(psk_identity), ChangeCipherSpec, Finished
//   6  S->C  ChangeCipherSpec, Finished
//
// Every handshake message fits one record; there is no handshake message
// fragmentation, and messages are capped at 512 bytes.

#ifndef SECSTACK_BACKENDS_MINIDTLS_HPP
#define SECSTACK_BACKENDS_MINIDTLS_HPP

#include "secstack/dtls_backend.hpp"

namespace secstack::dtls::minidtls {

inline constexpr std::size_t kHandshakeHeaderLen = 12;
inline constexpr std::size_t kMaxHandshakeMessage = 512;
inline constexpr std::size_t kCookieLen = 16;
/// TLS_PSK_WITH_AES_128_CCM_8
inline constexpr std::uint16_t kCipherSuite = 0xC0A8;
inline constexpr std::size_t kRecordOverhead = kRecordHeaderLen + 8;

enum class HsType : std::uint8_t {
  ClientHello = 1,
  ServerHello = 2,
  HelloVerifyRequest = 3,
  ServerHelloDone = 14,
  ClientKeyExchange = 16,
  Finished = 20,
};

/// msg_type(1) length(3) message_seq(2) fragment_offset(3)=0
/// fragment_length(3)=length, then the body.
struct HandshakeMessage {
  HsType type = HsType::ClientHello;
  std::uint16_t message_seq = 0;
  Bytes body;
};

/// Throws Errc::InvalidArgument if the message exceeds the cap.
Bytes encode_handshake(const HandshakeMessage& msg);
/// Exactly one unfragmented message; nullopt otherwise.
std::optional<HandshakeMessage> decode_handshake(ByteView fragment);

struct ClientHello {
  Random random{};
  Bytes cookie;
};

/// version(2) random(32) session_id<0> cookie<0..32> cipher_suites<2>
/// compression_methods<1>
Bytes encode_client_hello(const ClientHello& ch);
std::optional<ClientHello> decode_client_hello(ByteView body);

/// version(2) cookie<1..32>
Bytes encode_hello_verify_request(ByteView cookie);
std::optional<Bytes> decode_hello_verify_request(ByteView body);

/// version(2) random(32) session_id<0> cipher_suite(2) compression(1)
Bytes encode_server_hello(const Random& server_random);
std::optional<Random> decode_server_hello(ByteView body);

/// psk_identity<0..2^16-1>
Bytes encode_client_key_exchange(ByteView identity);
std::optional<Bytes> decode_client_key_exchange(ByteView body);

/// First 16 bytes of HMAC-SHA-256(key, addr(4) || port(2) || client_random).
Bytes make_cookie(const ServerSecret& secret, const Endpoint& client, const Random& client_random);

/// iv(4) || epoch(2) || seq(6)
std::array<std::uint8_t, 12> record_nonce(ByteView iv, std::uint16_t epoch, std::uint64_t seq);

/// header || ciphertext || tag, written with the sender's key. The header is
/// the associated data; its length field covers ciphertext and tag.
/// Throws Errc::SeqExhausted when seq >= 2^48.
Bytes protect_record(const RecordKeys& keys, Role sender, ContentType type, std::uint16_t epoch,
                     std::uint64_t seq, ByteView plaintext);

/// Opens one record written by the peer of `receiver`, then checks and
/// updates `window`. The window is only touched when the record
/// authenticates.
Unprotected open_record(const RecordKeys& keys, Role receiver, ReplayWindow& window, const RecordView& record);
Unprotected unprotect_record(const RecordKeys& keys, Role receiver, ReplayWindow& window, ByteView record);

class MiniDtlsBackend final : public Backend {
 public:
  BackendId id() const override { return BackendId::MiniDtls; }
  std::size_t record_overhead() const override { return kRecordOverhead; }
  std::size_t handshake_round_trips() const override { return 3; }
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

}  // namespace secstack::dtls::minidtls

#endif  // SECSTACK_BACKENDS_MINIDTLS_HPP

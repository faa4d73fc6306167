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

// Interface between the secure socket and a security backend.
//
// A backend is stateless. Per-session state lives in HandshakeState and
// RecordState values owned by the caller, and every transition takes the
// current time and an RNG as arguments, so a transition depends on nothing
// but its inputs.
//
// Both built-in backends share the DTLS 1.2 record header
//
//   type(1) version(2)=FE FD epoch(2) sequence(6) length(2)
//
// The wire format is DTLS-like but not interoperable with real DTLS peers.

#ifndef SECSTACK_DTLS_BACKEND_HPP
#define SECSTACK_DTLS_BACKEND_HPP

#include <memory>
#include <optional>
#include <vector>

#include "secstack/common.hpp"
#include "secstack/credman.hpp"

namespace secstack::dtls {

enum class BackendId : std::uint8_t { MiniDtls, NullSec };

std::string_view to_string(BackendId id);
/// Accepts "minidtls" and "nullsec". Throws Errc::UnknownBackend.
BackendId parse_backend_id(std::string_view name);

enum class Role : std::uint8_t { Client, Server };

enum class Phase : std::uint8_t { Idle, HelloSent, CookieReceived, KeyExchange, Finished, Failed };

enum class FailReason : std::uint8_t {
  None,
  BadCookie,
  UnknownPskIdentity,
  Timeout,
  DecodeError,
  BadFinished,
  PeerBusy,
  MissingCredential,
};

std::string_view to_string(Phase phase);
std::string_view to_string(FailReason reason);

/// Thrown for handshake failures that surface through the socket API.
class HandshakeError : public Error {
 public:
  explicit HandshakeError(FailReason reason)
      : Error(Errc::HandshakeFailed, "handshake failed: " + std::string(to_string(reason))), reason_(reason) {}
  FailReason reason() const noexcept { return reason_; }

 private:
  FailReason reason_;
};

enum class ContentType : std::uint8_t {
  ChangeCipherSpec = 20,
  Alert = 21,
  Handshake = 22,
  ApplicationData = 23,
};

namespace alert {
inline constexpr std::uint8_t kWarning = 1;
inline constexpr std::uint8_t kFatal = 2;
inline constexpr std::uint8_t kCloseNotify = 0;
inline constexpr std::uint8_t kDecodeError = 50;
inline constexpr std::uint8_t kDecryptError = 51;
inline constexpr std::uint8_t kInternalError = 80;
inline constexpr std::uint8_t kUnknownPskIdentity = 115;
}  // namespace alert

using Random = std::array<std::uint8_t, 32>;

struct RecordKeys {
  std::array<std::uint8_t, 16> client_write_key{};
  std::array<std::uint8_t, 16> server_write_key{};
  std::array<std::uint8_t, 4> client_iv{};
  std::array<std::uint8_t, 4> server_iv{};
  std::array<std::uint8_t, 48> master_secret{};
  friend bool operator==(const RecordKeys&, const RecordKeys&) = default;
};

/// premaster = u16(n) || zeros(n) || u16(n) || psk
/// master    = PRF(premaster, "master secret", client_random || server_random)[0..48)
/// key block = PRF(master, "key expansion", server_random || client_random)
///             split as client key, server key, client iv, server iv.
/// Throws Errc::EmptyPsk.
RecordKeys derive_keys(ByteView psk, const Random& client_random, const Random& server_random);

/// 12-byte Finished verify_data.
std::array<std::uint8_t, 12> finished_verify_data(const RecordKeys& keys, Role sender, ByteView transcript);

inline constexpr std::size_t kRecordHeaderLen = 13;
inline constexpr std::uint16_t kRecordVersion = 0xFEFD;
inline constexpr std::uint64_t kMaxSeq = (std::uint64_t{1} << 48) - 1;

struct RecordHeader {
  ContentType type = ContentType::Handshake;
  std::uint16_t epoch = 0;
  std::uint64_t seq = 0;
  std::uint16_t length = 0;
  friend bool operator==(const RecordHeader&, const RecordHeader&) = default;
};

void encode_record_header(const RecordHeader& h, Bytes& out);

struct RecordView {
  RecordHeader header;
  ByteView header_bytes;
  ByteView fragment;
};

/// Splits a datagram into records. Empty if any record is malformed.
std::optional<std::vector<RecordView>> split_records(ByteView datagram);

/// Sliding anti-replay window over the last 64 sequence numbers.
class ReplayWindow {
 public:
  static constexpr std::uint64_t kSize = 64;

  bool acceptable(std::uint64_t seq) const;
  void mark(std::uint64_t seq);
  /// acceptable() then mark(); returns false (and does not mark) on replay.
  bool check_and_mark(std::uint64_t seq);

  std::optional<std::uint64_t> highest() const {
    return any_ ? std::optional<std::uint64_t>(highest_) : std::nullopt;
  }
  std::uint64_t bitmask() const { return mask_; }

  friend bool operator==(const ReplayWindow&, const ReplayWindow&) = default;

 private:
  bool any_ = false;
  std::uint64_t highest_ = 0;
  // Bit i set: highest_ - i has been seen.
  std::uint64_t mask_ = 0;
};

/// Per-session record protection state.
struct RecordState {
  Role role = Role::Client;
  RecordKeys keys;
  std::uint16_t epoch = 1;
  std::uint64_t next_send_seq = 0;
  ReplayWindow replay;
};

enum class RecordStatus : std::uint8_t { Ok, AuthFailed, ReplayDetected, DecodeError, PeerClosed };

std::string_view to_string(RecordStatus status);

struct Unprotected {
  RecordStatus status = RecordStatus::DecodeError;
  Bytes plaintext;
};

/// What a received datagram is, as far as the socket needs to know.
enum class DatagramKind : std::uint8_t {
  Invalid,
  /// Opens a new handshake; goes to listen() on a server.
  ClientHello,
  /// Handshake traffic for an existing association.
  Handshake,
  /// Protected traffic for an established session.
  Record,
};

struct RetransmitPolicy {
  Micros initial = std::chrono::seconds(1);
  Micros max = std::chrono::seconds(60);
  std::uint8_t max_retransmissions = 7;
};

/// Credential the backend may use for one handshake.
struct ResolvedPsk {
  credman::CredmanTag tag = 0;
  Bytes identity;
  credman::SecretView secret;
};

class CredentialResolver {
 public:
  virtual ~CredentialResolver() = default;
  /// Credential a client presents.
  virtual std::optional<ResolvedPsk> client_psk() = 0;
  /// Credential matching the identity a client presented.
  virtual std::optional<ResolvedPsk> server_psk(ByteView identity) = 0;
};

/// Resolves over a list of registered (tag, type) pairs: clients use the
/// first PSK tag that resolves, servers match on identity.
class RegistryResolver final : public CredentialResolver {
 public:
  RegistryResolver(const credman::Registry& registry,
                   std::vector<std::pair<credman::CredmanTag, credman::CredentialType>> tags);
  std::optional<ResolvedPsk> client_psk() override;
  std::optional<ResolvedPsk> server_psk(ByteView identity) override;

 private:
  const credman::Registry& registry_;
  std::vector<std::pair<credman::CredmanTag, credman::CredentialType>> tags_;
};

/// A handshake message kept for retransmission; re-encoded with a fresh
/// record sequence number each time it is sent.
struct FlightRecord {
  ContentType type = ContentType::Handshake;
  std::uint16_t epoch = 0;
  Bytes fragment;  // plaintext
};

struct HandshakeState {
  Role role = Role::Client;
  Phase phase = Phase::Idle;
  FailReason failure = FailReason::None;

  std::vector<FlightRecord> flight_buf;
  RetransmitPolicy policy;
  Micros retx_timeout{};
  std::uint8_t retx_count = 0;
  std::optional<TimePoint> next_timer;

  Random client_random{};
  Random server_random{};
  Bytes cookie;
  Bytes identity;
  Bytes transcript;
  std::uint64_t epoch0_seq = 0;
  std::uint16_t next_message_seq = 0;
  credman::CredmanTag credential_tag = 0;
  Endpoint peer;
  RecordState record;
};

struct HandshakeEvent {
  enum class Kind : std::uint8_t { SessionEstablished, Failed, Retransmitted, Restart };
  Kind kind = Kind::SessionEstablished;
  FailReason reason = FailReason::None;
};

struct StepResult {
  HandshakeState state;
  std::vector<Bytes> outgoing;
  std::vector<HandshakeEvent> events;

  bool has(HandshakeEvent::Kind kind) const;
};

/// Server-wide secret keying the stateless cookie.
struct ServerSecret {
  std::array<std::uint8_t, 32> cookie_key{};
  static ServerSecret generate(Rng& rng);
};

struct ListenResult {
  std::vector<Bytes> outgoing;
  /// Set only once the client proved reachability (or the backend has no
  /// cookie exchange) and the caller allowed a new association.
  std::optional<HandshakeState> state;
  std::vector<HandshakeEvent> events;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendId id() const = 0;
  /// Bytes added to an application payload by protect().
  virtual std::size_t record_overhead() const = 0;
  /// Round trips a loss-free handshake takes.
  virtual std::size_t handshake_round_trips() const = 0;

  virtual DatagramKind classify(ByteView datagram) const = 0;

  /// Fresh client state in phase Idle. The first handshake_step() with no
  /// input sends the opening flight.
  virtual HandshakeState client_init(const Endpoint& server, const RetransmitPolicy& policy) const;

  /// Pure transition. `incoming` is a datagram from the peer, or empty for
  /// a timer tick / start.
  virtual StepResult handshake_step(const HandshakeState& state, std::optional<ByteView> incoming,
                                    TimePoint now, Rng& rng, CredentialResolver& creds) const = 0;

  /// Server front door for datagrams from endpoints without an association.
  /// `accept` is false when the caller has no room for a new session.
  virtual ListenResult listen(const ServerSecret& secret, const Endpoint& from, ByteView datagram,
                              TimePoint now, Rng& rng, CredentialResolver& creds,
                              const RetransmitPolicy& policy, bool accept) const = 0;

  /// Throws Errc::SeqExhausted.
  virtual Bytes protect(RecordState& rs, ByteView plaintext) const = 0;
  virtual Unprotected unprotect(RecordState& rs, ByteView datagram) const = 0;
  virtual Bytes close_notify(RecordState& rs) const = 0;
};

// Helpers shared by the backends.
namespace detail {
Bytes plain_record(ContentType type, std::uint16_t epoch, std::uint64_t seq, ByteView fragment);
Bytes alert_record(std::uint8_t level, std::uint8_t description, std::uint64_t seq);
FailReason reason_for_alert(std::uint8_t description);
void arm_timer(HandshakeState& st, TimePoint now);
}  // namespace detail

}  // namespace secstack::dtls

#endif  // SECSTACK_DTLS_BACKEND_HPP

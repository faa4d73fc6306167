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

// Secure datagram socket on top of UdpSock.
//
// Client:  create -> register_credential_tags -> establish_session -> send/recv
// Server:  create -> register_credential_tags -> init_server -> recv/send
//
// The socket only talks to the Backend interface. Which backend runs is
// decided by whoever constructs the socket.
//
// A DtlsSock must be driven by one thread at a time.

#ifndef SECSTACK_SOCK_DTLS_HPP
#define SECSTACK_SOCK_DTLS_HPP

#include <deque>

#include "secstack/credman.hpp"
#include "secstack/dtls_backend.hpp"
#include "secstack/sock_udp.hpp"

namespace secstack {

using CredentialTag = std::pair<credman::CredmanTag, credman::CredentialType>;

struct DtlsSockOptions {
  std::size_t max_sessions = 4;
  dtls::RetransmitPolicy retransmit;
  /// Seeds handshake randomness; 0 draws a seed from std::random_device.
  std::uint64_t rng_seed = 0;
};

/// Handle to one session slot. Stale once the session is closed.
struct DtlsSession {
  std::uint16_t slot = 0;
  std::uint32_t generation = 0;
  Endpoint remote;
  friend bool operator==(const DtlsSession&, const DtlsSession&) = default;
};

struct DtlsSessionInfo {
  Endpoint remote;
  CredentialTag credential_used;
  std::uint16_t epoch = 0;
  std::uint64_t next_send_seq = 0;
  dtls::ReplayWindow replay;
};

struct DtlsSockStats {
  std::uint64_t handshakes_completed = 0;
  std::uint64_t handshakes_failed = 0;
  std::uint64_t hello_before_init = 0;
  std::uint64_t replay_drops = 0;
  std::uint64_t auth_drops = 0;
  std::uint64_t decode_drops = 0;
  std::uint64_t busy_rejects = 0;
};

class DtlsSock {
 public:
  static constexpr std::size_t kMaxTags = 4;

  /// Takes exclusive use of `udp`. Throws Errc::UdpSockInUse.
  DtlsSock(UdpSock& udp, std::shared_ptr<const dtls::Backend> backend, dtls::Role role,
           const credman::Registry& registry, DtlsSockOptions opts = {});
  ~DtlsSock();
  DtlsSock(const DtlsSock&) = delete;
  DtlsSock& operator=(const DtlsSock&) = delete;

  /// Appends to the registered list. Throws EmptyTagList, TooManyTags.
  void register_credential_tags(const std::vector<CredentialTag>& tags);
  /// Throws NotServer, NoCredentials.
  void init_server();

  /// Throws NotClient, NoCredentials, Timeout, SessionTableFull,
  /// dtls::HandshakeError.
  DtlsSession establish_session(const Endpoint& remote, Micros timeout);

  /// Throws SessionClosed, PayloadTooLarge.
  std::size_t send(const DtlsSession& session, ByteView data);
  /// Next application payload from any session. Throws Errc::Timeout.
  std::pair<DtlsSession, Bytes> recv(Micros timeout);
  std::optional<std::pair<DtlsSession, Bytes>> try_recv(Micros timeout);

  /// Handles every queued datagram and due timer without waiting. Returns
  /// how many were handled. Lets a simulator task drive a server.
  std::size_t service();

  void close_session(const DtlsSession& session);
  /// Closes every session and releases the UDP port.
  void destroy();

  /// Throws SessionClosed.
  DtlsSessionInfo info(const DtlsSession& session) const;
  bool is_open(const DtlsSession& session) const;
  std::size_t session_count() const;
  std::size_t pending_handshakes() const;
  std::vector<DtlsSession> sessions() const;

  const DtlsSockStats& stats() const { return stats_; }
  dtls::BackendId backend_id() const { return backend_->id(); }
  dtls::Role role() const { return role_; }
  std::size_t max_payload() const { return max_payload_; }
  const std::vector<CredentialTag>& tags() const { return tags_; }

 private:
  struct Slot {
    bool used = false;
    bool established = false;
    std::uint32_t generation = 0;
    dtls::HandshakeState hs;
  };

  Slot* find_slot(const Endpoint& remote);
  Slot* free_slot();
  Slot& checked(const DtlsSession& s);
  const Slot& checked(const DtlsSession& s) const;
  DtlsSession handle(const Slot& s) const;
  void release(Slot& s);
  void require_open() const;

  void transmit(const Endpoint& to, const std::vector<Bytes>& datagrams);
  void apply(Slot& s, dtls::StepResult r);
  void handle_datagram(Datagram d);
  std::size_t tick_timers(TimePoint now);
  std::optional<TimePoint> earliest_timer() const;
  /// Waits for one datagram or timer until `deadline`; returns false once
  /// the deadline has passed.
  bool pump_once(TimePoint deadline);

  UdpSock& udp_;
  std::shared_ptr<const dtls::Backend> backend_;
  dtls::Role role_;
  std::size_t max_payload_;
  const credman::Registry& registry_;
  DtlsSockOptions opts_;
  Rng rng_;
  dtls::ServerSecret secret_;
  std::vector<CredentialTag> tags_;
  std::vector<Slot> slots_;
  std::deque<std::pair<DtlsSession, Bytes>> ready_;
  bool server_ready_ = false;
  bool destroyed_ = false;
  DtlsSockStats stats_;
};

}  // namespace secstack

#endif  // SECSTACK_SOCK_DTLS_HPP

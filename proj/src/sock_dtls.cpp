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

#include "secstack/sock_dtls.hpp"

#include <random>

namespace secstack {

using dtls::HandshakeEvent;

namespace {

std::uint64_t seed_from(std::uint64_t requested) {
  if (requested != 0) return requested;
  std::random_device rd;
  return (std::uint64_t{rd()} << 32) ^ rd();
}

TimePoint deadline_after(TimePoint now, Micros timeout) {
  if (timeout == Micros::max() || now > TimePoint::max() - timeout) return TimePoint::max();
  return now + std::max(timeout, Micros::zero());
}

}  // namespace

DtlsSock::DtlsSock(UdpSock& udp, std::shared_ptr<const dtls::Backend> backend, dtls::Role role,
                   const credman::Registry& registry, DtlsSockOptions opts)
    : udp_(udp),
      backend_(std::move(backend)),
      role_(role),
      max_payload_(0),
      registry_(registry),
      opts_(opts),
      rng_(seed_from(opts.rng_seed)) {
  if (!backend_) throw Error(Errc::UnknownBackend, "no backend given");
  max_payload_ = kMaxUdpPayload - backend_->record_overhead();
  if (udp_.wrapped_) throw Error(Errc::UdpSockInUse, "UDP socket already used by a DTLS sock");
  if (!udp_.is_open()) throw Error(Errc::Closed, "UDP socket is closed");
  if (opts_.max_sessions == 0) throw Error(Errc::InvalidArgument, "max_sessions must be positive");
  if (role_ == dtls::Role::Server) secret_ = dtls::ServerSecret::generate(rng_);
  slots_.resize(opts_.max_sessions);
  udp_.wrapped_ = true;
}

DtlsSock::~DtlsSock() { destroy(); }

void DtlsSock::require_open() const {
  if (destroyed_) throw Error(Errc::Closed, "DTLS sock destroyed");
}

void DtlsSock::register_credential_tags(const std::vector<CredentialTag>& tags) {
  require_open();
  if (tags.empty()) throw Error(Errc::EmptyTagList, "no credential tags given");
  if (tags_.size() + tags.size() > kMaxTags) {
    throw Error(Errc::TooManyTags, "at most " + std::to_string(kMaxTags) + " credential tags");
  }
  tags_.insert(tags_.end(), tags.begin(), tags.end());
}

void DtlsSock::init_server() {
  require_open();
  if (role_ != dtls::Role::Server) throw Error(Errc::NotServer, "init_server on a client sock");
  if (tags_.empty()) throw Error(Errc::NoCredentials, "register credential tags first");
  server_ready_ = true;
}

DtlsSock::Slot* DtlsSock::find_slot(const Endpoint& remote) {
  for (auto& s : slots_) {
    if (s.used && s.hs.peer == remote) return &s;
  }
  return nullptr;
}

DtlsSock::Slot* DtlsSock::free_slot() {
  for (auto& s : slots_) {
    if (!s.used) return &s;
  }
  return nullptr;
}

DtlsSession DtlsSock::handle(const Slot& s) const {
  return {static_cast<std::uint16_t>(&s - slots_.data()), s.generation, s.hs.peer};
}

const DtlsSock::Slot& DtlsSock::checked(const DtlsSession& session) const {
  if (session.slot < slots_.size()) {
    const Slot& s = slots_[session.slot];
    if (s.used && s.established && s.generation == session.generation) return s;
  }
  throw Error(Errc::SessionClosed, "session is closed");
}

DtlsSock::Slot& DtlsSock::checked(const DtlsSession& session) {
  return const_cast<Slot&>(static_cast<const DtlsSock&>(*this).checked(session));
}

void DtlsSock::release(Slot& s) {
  s.used = false;
  s.established = false;
  ++s.generation;
  s.hs = {};
}

void DtlsSock::transmit(const Endpoint& to, const std::vector<Bytes>& datagrams) {
  for (const auto& d : datagrams) {
    try {
      udp_.send(to, d);
    } catch (const Error&) {
      // Handshake traffic is retransmitted by the state machine.
    }
  }
}

void DtlsSock::apply(Slot& s, dtls::StepResult r) {
  transmit(r.state.peer, r.outgoing);
  s.hs = std::move(r.state);
  for (const auto& e : r.events) {
    if (e.kind == HandshakeEvent::Kind::SessionEstablished && !s.established) {
      s.established = true;
      ++stats_.handshakes_completed;
    } else if (e.kind == HandshakeEvent::Kind::Failed) {
      ++stats_.handshakes_failed;
      // A client keeps the failed slot so establish_session can report why.
      if (role_ == dtls::Role::Server) release(s);
      return;
    }
  }
}

void DtlsSock::handle_datagram(Datagram d) {
  dtls::RegistryResolver resolver(registry_, tags_);
  TimePoint now = udp_.clock().now();
  Slot* s = find_slot(d.from);

  switch (backend_->classify(d.data)) {
    case dtls::DatagramKind::Invalid:
      ++stats_.decode_drops;
      return;

    case dtls::DatagramKind::Record: {
      if (!s || !s->established) {
        ++stats_.decode_drops;
        return;
      }
      dtls::Unprotected u = backend_->unprotect(s->hs.record, d.data);
      switch (u.status) {
        case dtls::RecordStatus::Ok: ready_.emplace_back(handle(*s), std::move(u.plaintext)); break;
        case dtls::RecordStatus::PeerClosed: release(*s); break;
        case dtls::RecordStatus::AuthFailed: ++stats_.auth_drops; break;
        case dtls::RecordStatus::ReplayDetected: ++stats_.replay_drops; break;
        case dtls::RecordStatus::DecodeError: ++stats_.decode_drops; break;
      }
      return;
    }

    case dtls::DatagramKind::Handshake:
      if (s) apply(*s, backend_->handshake_step(s->hs, ByteView(d.data), now, rng_, resolver));
      return;

    case dtls::DatagramKind::ClientHello: {
      if (role_ == dtls::Role::Client) {
        if (s) apply(*s, backend_->handshake_step(s->hs, ByteView(d.data), now, rng_, resolver));
        return;
      }
      if (!server_ready_) {
        ++stats_.hello_before_init;
        return;
      }
      if (s) {
        dtls::StepResult r = backend_->handshake_step(s->hs, ByteView(d.data), now, rng_, resolver);
        if (!r.has(HandshakeEvent::Kind::Restart)) {
          apply(*s, std::move(r));
          return;
        }
        release(*s);
      }
      Slot* slot = free_slot();
      dtls::ListenResult lr =
          backend_->listen(secret_, d.from, d.data, now, rng_, resolver, opts_.retransmit, slot != nullptr);
      transmit(d.from, lr.outgoing);
      if (!lr.state) {
        for (const auto& e : lr.events) {
          if (e.reason == dtls::FailReason::PeerBusy) {
            ++stats_.busy_rejects;
          } else if (e.kind == HandshakeEvent::Kind::Failed) {
            ++stats_.handshakes_failed;
          }
        }
        return;
      }
      slot->used = true;
      slot->established = false;
      slot->hs = std::move(*lr.state);
      for (const auto& e : lr.events) {
        if (e.kind == HandshakeEvent::Kind::SessionEstablished && !slot->established) {
          slot->established = true;
          ++stats_.handshakes_completed;
        }
      }
      return;
    }
  }
}

std::optional<TimePoint> DtlsSock::earliest_timer() const {
  std::optional<TimePoint> t;
  for (const auto& s : slots_) {
    if (s.used && s.hs.next_timer && (!t || *s.hs.next_timer < *t)) t = s.hs.next_timer;
  }
  return t;
}

std::size_t DtlsSock::tick_timers(TimePoint now) {
  dtls::RegistryResolver resolver(registry_, tags_);
  std::size_t fired = 0;
  for (auto& s : slots_) {
    if (s.used && s.hs.next_timer && now >= *s.hs.next_timer) {
      apply(s, backend_->handshake_step(s.hs, std::nullopt, now, rng_, resolver));
      ++fired;
    }
  }
  return fired;
}

std::size_t DtlsSock::service() {
  require_open();
  std::size_t n = 0;
  while (auto d = udp_.poll_raw(Micros::zero())) {
    handle_datagram(std::move(*d));
    ++n;
  }
  return n + tick_timers(udp_.clock().now());
}

bool DtlsSock::pump_once(TimePoint deadline) {
  const Clock& clock = udp_.clock();
  TimePoint now = clock.now();
  TimePoint until = deadline;
  if (auto t = earliest_timer(); t && *t < until) until = *t;
  Micros wait = until > now ? until - now : Micros::zero();
  if (auto d = udp_.poll_raw(wait)) handle_datagram(std::move(*d));
  tick_timers(clock.now());
  return clock.now() < deadline;
}

DtlsSession DtlsSock::establish_session(const Endpoint& remote, Micros timeout) {
  require_open();
  if (role_ != dtls::Role::Client) throw Error(Errc::NotClient, "establish_session on a server sock");
  if (tags_.empty()) throw Error(Errc::NoCredentials, "register credential tags first");
  if (Slot* existing = find_slot(remote)) {
    if (existing->established) return handle(*existing);
    release(*existing);
  }
  Slot* s = free_slot();
  if (!s) throw Error(Errc::SessionTableFull, "no free session slot");

  const Clock& clock = udp_.clock();
  TimePoint deadline = deadline_after(clock.now(), timeout);
  s->used = true;
  s->established = false;
  s->hs = backend_->client_init(remote, opts_.retransmit);
  {
    dtls::RegistryResolver resolver(registry_, tags_);
    apply(*s, backend_->handshake_step(s->hs, std::nullopt, clock.now(), rng_, resolver));
  }

  while (true) {
    if (s->established) return handle(*s);
    if (s->hs.phase == dtls::Phase::Failed) {
      dtls::FailReason reason = s->hs.failure;
      release(*s);
      if (reason == dtls::FailReason::PeerBusy) {
        throw Error(Errc::SessionTableFull, "server session table is full");
      }
      throw dtls::HandshakeError(reason);
    }
    if (clock.now() >= deadline) {
      release(*s);
      throw Error(Errc::Timeout, "handshake with " + to_string(remote) + " timed out");
    }
    pump_once(deadline);
  }
}

std::size_t DtlsSock::send(const DtlsSession& session, ByteView data) {
  require_open();
  Slot& s = checked(session);
  if (data.size() > max_payload_) {
    throw Error(Errc::PayloadTooLarge, std::to_string(data.size()) + " bytes exceeds " +
                                           std::to_string(max_payload_));
  }
  Bytes record = backend_->protect(s.hs.record, data);
  udp_.send(s.hs.peer, record);
  return data.size();
}

std::optional<std::pair<DtlsSession, Bytes>> DtlsSock::try_recv(Micros timeout) {
  require_open();
  TimePoint deadline = deadline_after(udp_.clock().now(), timeout);
  while (true) {
    if (!ready_.empty()) {
      auto out = std::move(ready_.front());
      ready_.pop_front();
      return out;
    }
    if (!pump_once(deadline) && ready_.empty()) return std::nullopt;
  }
}

std::pair<DtlsSession, Bytes> DtlsSock::recv(Micros timeout) {
  auto r = try_recv(timeout);
  if (!r) throw Error(Errc::Timeout, "no record within timeout");
  return std::move(*r);
}

void DtlsSock::close_session(const DtlsSession& session) {
  if (session.slot >= slots_.size()) return;
  Slot& s = slots_[session.slot];
  if (!s.used || s.generation != session.generation) return;
  if (s.established && !destroyed_) {
    try {
      udp_.send(s.hs.peer, backend_->close_notify(s.hs.record));
    } catch (const Error&) {
      // close_notify is best effort.
    }
  }
  release(s);
}

void DtlsSock::destroy() {
  if (destroyed_) return;
  for (auto& s : slots_) {
    if (s.used) close_session(handle(s));
  }
  ready_.clear();
  udp_.close();
  udp_.wrapped_ = false;
  destroyed_ = true;
}

DtlsSessionInfo DtlsSock::info(const DtlsSession& session) const {
  const Slot& s = checked(session);
  return {s.hs.peer,
          {s.hs.credential_tag, credman::CredentialType::Psk},
          s.hs.record.epoch,
          s.hs.record.next_send_seq,
          s.hs.record.replay};
}

bool DtlsSock::is_open(const DtlsSession& session) const {
  if (session.slot >= slots_.size()) return false;
  const Slot& s = slots_[session.slot];
  return s.used && s.established && s.generation == session.generation;
}

std::size_t DtlsSock::session_count() const {
  std::size_t n = 0;
  for (const auto& s : slots_) n += s.used && s.established ? 1 : 0;
  return n;
}

std::size_t DtlsSock::pending_handshakes() const {
  std::size_t n = 0;
  for (const auto& s : slots_) n += s.used && !s.established ? 1 : 0;
  return n;
}

std::vector<DtlsSession> DtlsSock::sessions() const {
  std::vector<DtlsSession> out;
  for (const auto& s : slots_) {
    if (s.used && s.established) out.push_back(handle(s));
  }
  return out;
}

}  // namespace secstack

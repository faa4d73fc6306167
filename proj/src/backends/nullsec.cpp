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

#include "secstack/backends/nullsec.hpp"

#include <algorithm>

#include "secstack/crypto.hpp"

namespace secstack::dtls::nullsec {

namespace {

std::array<std::uint8_t, 12> auth(ByteView psk, std::string_view label, const Random& cr, ByteView tail) {
  Bytes input(label.begin(), label.end());
  input.insert(input.end(), cr.begin(), cr.end());
  append(input, tail);
  auto mac = crypto::hmac_sha256(psk, input);
  std::array<std::uint8_t, 12> out{};
  std::copy_n(mac.begin(), 12, out.begin());
  return out;
}

struct Hello {
  Random client_random{};
  Bytes identity;
  ByteView auth;
};

std::optional<Hello> decode_hello(ByteView f) {
  if (f.size() < 1 + 32 + 1 + 12 || f[0] != kHello) return std::nullopt;
  std::size_t id_len = f[33];
  if (f.size() != 1 + 32 + 1 + id_len + 12) return std::nullopt;
  Hello h;
  std::copy_n(f.begin() + 1, 32, h.client_random.begin());
  h.identity.assign(f.begin() + 34, f.begin() + 34 + static_cast<std::ptrdiff_t>(id_len));
  h.auth = f.subspan(34 + id_len, 12);
  return h;
}

const RecordView* handshake_record(const std::vector<RecordView>& recs) {
  const RecordView& r = recs.front();
  if (r.header.type != ContentType::Handshake || r.header.epoch != 0 || r.fragment.empty()) return nullptr;
  return &r;
}

void send_flight(HandshakeState& st, std::vector<Bytes>& out) {
  Bytes dgram;
  for (const auto& fr : st.flight_buf) append(dgram, detail::plain_record(fr.type, 0, st.epoch0_seq++, fr.fragment));
  out.push_back(std::move(dgram));
}

void fail(StepResult& r, FailReason why) {
  r.state.phase = Phase::Failed;
  r.state.failure = why;
  r.state.next_timer.reset();
  r.state.flight_buf.clear();
  r.events.push_back({HandshakeEvent::Kind::Failed, why});
}

}  // namespace

std::array<std::uint8_t, 12> client_auth(ByteView psk, const Random& client_random, ByteView identity) {
  return auth(psk, "nullsec client", client_random, identity);
}

std::array<std::uint8_t, 12> server_auth(ByteView psk, const Random& client_random, const Random& server_random) {
  return auth(psk, "nullsec server", client_random, server_random);
}

DatagramKind NullSecBackend::classify(ByteView datagram) const {
  auto recs = split_records(datagram);
  if (!recs) return DatagramKind::Invalid;
  const RecordView& r = recs->front();
  switch (r.header.type) {
    case ContentType::Handshake:
      if (r.header.epoch == 0 && !r.fragment.empty() && r.fragment[0] == kHello) return DatagramKind::ClientHello;
      return DatagramKind::Handshake;
    case ContentType::Alert:
      return r.header.epoch == 0 ? DatagramKind::Handshake : DatagramKind::Record;
    case ContentType::ApplicationData:
      return DatagramKind::Record;
    default:
      return DatagramKind::Invalid;
  }
}

StepResult NullSecBackend::handshake_step(const HandshakeState& state, std::optional<ByteView> incoming,
                                          TimePoint now, Rng& rng, CredentialResolver& creds) const {
  StepResult r{state, {}, {}};
  auto& st = r.state;
  if (st.phase == Phase::Failed) return r;

  if (!incoming) {
    if (st.role == Role::Client && st.phase == Phase::Idle) {
      auto psk = creds.client_psk();
      if (!psk) {
        fail(r, FailReason::MissingCredential);
        return r;
      }
      if (psk->identity.size() > 255) {
        fail(r, FailReason::DecodeError);
        return r;
      }
      st.client_random = rng.bytes<32>();
      st.identity = psk->identity;
      st.credential_tag = psk->tag;
      Bytes hello{kHello};
      hello.insert(hello.end(), st.client_random.begin(), st.client_random.end());
      hello.push_back(static_cast<std::uint8_t>(st.identity.size()));
      append(hello, st.identity);
      auto a = client_auth(psk->secret.bytes(), st.client_random, st.identity);
      hello.insert(hello.end(), a.begin(), a.end());
      st.flight_buf = {{ContentType::Handshake, 0, std::move(hello)}};
      st.phase = Phase::HelloSent;
      st.retx_count = 0;
      st.retx_timeout = st.policy.initial;
      send_flight(st, r.outgoing);
      detail::arm_timer(st, now);
      return r;
    }
    if (!st.next_timer || now < *st.next_timer) return r;
    if (st.retx_count >= st.policy.max_retransmissions) {
      fail(r, FailReason::Timeout);
      return r;
    }
    ++st.retx_count;
    st.retx_timeout = std::min(st.retx_timeout * 2, st.policy.max);
    send_flight(st, r.outgoing);
    detail::arm_timer(st, now);
    r.events.push_back({HandshakeEvent::Kind::Retransmitted});
    return r;
  }

  auto recs = split_records(*incoming);
  if (!recs) return r;
  const RecordView& first = recs->front();
  if (first.header.type == ContentType::Alert && first.header.epoch == 0) {
    if (st.phase != Phase::Finished && first.fragment.size() == 2 && first.fragment[0] == alert::kFatal) {
      fail(r, detail::reason_for_alert(first.fragment[1]));
    }
    return r;
  }
  const RecordView* hs = handshake_record(*recs);
  if (!hs) return r;

  if (st.role == Role::Server) {
    auto hello = decode_hello(hs->fragment);
    if (!hello) return r;
    if (hello->client_random != st.client_random) {
      r.events.push_back({HandshakeEvent::Kind::Restart});
    } else {
      send_flight(st, r.outgoing);  // the ack was lost
      r.events.push_back({HandshakeEvent::Kind::Retransmitted});
    }
    return r;
  }

  if (st.phase != Phase::HelloSent) return r;
  ByteView f = hs->fragment;
  if (f.size() != 1 + 32 + 12 || f[0] != kAck) return r;
  auto psk = creds.client_psk();
  if (!psk) {
    fail(r, FailReason::MissingCredential);
    return r;
  }
  std::copy_n(f.begin() + 1, 32, st.server_random.begin());
  auto expected = server_auth(psk->secret.bytes(), st.client_random, st.server_random);
  if (!crypto::equal(f.subspan(33, 12), expected)) {
    fail(r, FailReason::BadFinished);
    return r;
  }
  st.record.keys = derive_keys(psk->secret.bytes(), st.client_random, st.server_random);
  st.record.role = Role::Client;
  st.record.epoch = 1;
  st.record.next_send_seq = 0;
  st.phase = Phase::Finished;
  st.next_timer.reset();
  st.flight_buf.clear();
  r.events.push_back({HandshakeEvent::Kind::SessionEstablished});
  return r;
}

ListenResult NullSecBackend::listen(const ServerSecret&, const Endpoint& from, ByteView datagram, TimePoint,
                                    Rng& rng, CredentialResolver& creds, const RetransmitPolicy& policy,
                                    bool accept) const {
  ListenResult res;
  auto recs = split_records(datagram);
  if (!recs) return res;
  const RecordView* hs = handshake_record(*recs);
  if (!hs) return res;
  auto hello = decode_hello(hs->fragment);
  if (!hello) return res;
  auto reject = [&](std::uint8_t desc, FailReason why) {
    res.outgoing.push_back(detail::alert_record(alert::kFatal, desc, hs->header.seq));
    res.events.push_back({HandshakeEvent::Kind::Failed, why});
    return res;
  };
  auto psk = creds.server_psk(hello->identity);
  if (!psk) return reject(alert::kUnknownPskIdentity, FailReason::UnknownPskIdentity);
  if (!crypto::equal(hello->auth, client_auth(psk->secret.bytes(), hello->client_random, hello->identity))) {
    return reject(alert::kDecryptError, FailReason::BadFinished);
  }
  if (!accept) return reject(alert::kInternalError, FailReason::PeerBusy);

  HandshakeState st;
  st.role = Role::Server;
  st.policy = policy;
  st.retx_timeout = policy.initial;
  st.peer = from;
  st.client_random = hello->client_random;
  st.server_random = rng.bytes<32>();
  st.identity = hello->identity;
  st.credential_tag = psk->tag;
  st.record.keys = derive_keys(psk->secret.bytes(), st.client_random, st.server_random);
  st.record.role = Role::Server;
  st.record.epoch = 1;
  st.epoch0_seq = hs->header.seq;
  Bytes ack{kAck};
  ack.insert(ack.end(), st.server_random.begin(), st.server_random.end());
  auto a = server_auth(psk->secret.bytes(), st.client_random, st.server_random);
  ack.insert(ack.end(), a.begin(), a.end());
  st.flight_buf = {{ContentType::Handshake, 0, std::move(ack)}};
  st.phase = Phase::Finished;
  send_flight(st, res.outgoing);
  res.events.push_back({HandshakeEvent::Kind::SessionEstablished});
  res.state = std::move(st);
  return res;
}

Bytes NullSecBackend::protect(RecordState& rs, ByteView plaintext) const {
  if (rs.next_send_seq > kMaxSeq) throw Error(Errc::SeqExhausted, "record sequence space exhausted");
  if (plaintext.size() > 0xFFFF) throw Error(Errc::PayloadTooLarge, "record too large");
  return detail::plain_record(ContentType::ApplicationData, rs.epoch, rs.next_send_seq++, plaintext);
}

Unprotected NullSecBackend::unprotect(RecordState& rs, ByteView datagram) const {
  Unprotected u;
  auto recs = split_records(datagram);
  if (!recs || recs->size() != 1) return u;
  const RecordView& rec = recs->front();
  if (rec.header.epoch != rs.epoch) return u;
  if (rec.header.type != ContentType::ApplicationData && rec.header.type != ContentType::Alert) return u;
  if (!rs.replay.check_and_mark(rec.header.seq)) {
    u.status = RecordStatus::ReplayDetected;
    return u;
  }
  if (rec.header.type == ContentType::Alert) {
    u.status = RecordStatus::PeerClosed;
    return u;
  }
  u.status = RecordStatus::Ok;
  u.plaintext.assign(rec.fragment.begin(), rec.fragment.end());
  return u;
}

Bytes NullSecBackend::close_notify(RecordState& rs) const {
  const std::uint8_t body[2] = {alert::kWarning, alert::kCloseNotify};
  return detail::plain_record(ContentType::Alert, rs.epoch, rs.next_send_seq++, body);
}

}  // namespace secstack::dtls::nullsec

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

#include "secstack/backends/minidtls.hpp"

#include <algorithm>

#include "secstack/crypto.hpp"

namespace secstack::dtls::minidtls {

namespace {

constexpr std::uint8_t kCcsBody[1] = {1};

// Building a cipher context costs about as much as sealing a short record,
// so the last few keys used on this thread keep theirs.
const crypto::Ccm8& cipher_for(const std::array<std::uint8_t, 16>& key) {
  struct Entry {
    std::array<std::uint8_t, 16> key{};
    std::unique_ptr<crypto::Ccm8> cipher;
  };
  thread_local std::array<Entry, 4> cache;
  thread_local std::size_t next = 0;
  for (auto& e : cache) {
    if (e.cipher && e.key == key) return *e.cipher;
  }
  Entry& e = cache[next++ % cache.size()];
  e.key = key;
  e.cipher = std::make_unique<crypto::Ccm8>(ByteView(key));
  return *e.cipher;
}

struct Reader {
  ByteView data;
  std::size_t pos = 0;
  bool ok = true;

  std::size_t left() const { return data.size() - pos; }
  std::uint8_t u8() {
    if (left() < 1) {
      ok = false;
      return 0;
    }
    return data[pos++];
  }
  std::uint16_t u16() {
    if (left() < 2) {
      ok = false;
      return 0;
    }
    pos += 2;
    return get_be16(data.data() + pos - 2);
  }
  ByteView take(std::size_t n) {
    if (left() < n) {
      ok = false;
      return {};
    }
    pos += n;
    return data.subspan(pos - n, n);
  }
  bool done() const { return ok && pos == data.size(); }
};

FlightRecord hs_record(HsType type, std::uint16_t seq, Bytes body) {
  return {ContentType::Handshake, 0, encode_handshake({type, seq, std::move(body)})};
}

void emit(HandshakeState& st, std::vector<Bytes>& out) {
  Bytes dgram;
  for (const auto& fr : st.flight_buf) {
    Bytes rec = fr.epoch == 0 ? detail::plain_record(fr.type, 0, st.epoch0_seq++, fr.fragment)
                              : protect_record(st.record.keys, st.role, fr.type, fr.epoch,
                                               st.record.next_send_seq++, fr.fragment);
    append(dgram, rec);
  }
  out.push_back(std::move(dgram));
}

void new_flight(HandshakeState& st, std::vector<FlightRecord> flight, TimePoint now, std::vector<Bytes>& out,
                bool timer = true) {
  st.flight_buf = std::move(flight);
  st.retx_count = 0;
  st.retx_timeout = st.policy.initial;
  emit(st, out);
  if (timer) {
    detail::arm_timer(st, now);
  } else {
    st.next_timer.reset();
  }
}

void fail(StepResult& r, FailReason why, std::optional<std::uint8_t> alert_desc = std::nullopt) {
  auto& st = r.state;
  st.phase = Phase::Failed;
  st.failure = why;
  st.next_timer.reset();
  st.flight_buf.clear();
  if (alert_desc) r.outgoing.push_back(detail::alert_record(alert::kFatal, *alert_desc, st.epoch0_seq++));
  r.events.push_back({HandshakeEvent::Kind::Failed, why});
}

void on_timer(StepResult& r, TimePoint now) {
  auto& st = r.state;
  if (!st.next_timer || now < *st.next_timer) return;
  if (st.retx_count >= st.policy.max_retransmissions) {
    fail(r, FailReason::Timeout);
    return;
  }
  ++st.retx_count;
  st.retx_timeout = std::min(st.retx_timeout * 2, st.policy.max);
  emit(st, r.outgoing);
  detail::arm_timer(st, now);
  r.events.push_back({HandshakeEvent::Kind::Retransmitted});
}

void retransmit_now(StepResult& r) {
  emit(r.state, r.outgoing);
  r.events.push_back({HandshakeEvent::Kind::Retransmitted});
}

std::optional<HandshakeMessage> plain_message(const RecordView& rec) {
  if (rec.header.type != ContentType::Handshake || rec.header.epoch != 0) return std::nullopt;
  return decode_handshake(rec.fragment);
}

const RecordView* find_record(const std::vector<RecordView>& recs, ContentType type, std::uint16_t epoch) {
  for (const auto& r : recs) {
    if (r.header.type == type && r.header.epoch == epoch) return &r;
  }
  return nullptr;
}

bool is_valid_ccs(const RecordView* rec) { return rec && rec->fragment.size() == 1 && rec->fragment[0] == 1; }

// Opens and checks a peer Finished carried in an epoch-1 record.
bool check_finished(HandshakeState& st, const RecordView& rec, Role peer, ByteView transcript, Bytes& message) {
  Unprotected u = open_record(st.record.keys, st.role, st.record.replay, rec);
  if (u.status != RecordStatus::Ok) return false;
  auto msg = decode_handshake(u.plaintext);
  if (!msg || msg->type != HsType::Finished || msg->message_seq != 3 || msg->body.size() != 12) return false;
  auto expected = finished_verify_data(st.record.keys, peer, transcript);
  if (!crypto::equal(msg->body, expected)) return false;
  message = std::move(u.plaintext);
  return true;
}

void client_start(StepResult& r, TimePoint now, Rng& rng) {
  auto& st = r.state;
  st.client_random = rng.bytes<32>();
  st.next_message_seq = 1;
  st.phase = Phase::HelloSent;
  new_flight(st, {hs_record(HsType::ClientHello, 0, encode_client_hello({st.client_random, {}}))}, now,
             r.outgoing);
}

void client_receive(StepResult& r, const std::vector<RecordView>& recs, TimePoint now, CredentialResolver& creds) {
  auto& st = r.state;
  auto first = plain_message(recs[0]);

  switch (st.phase) {
    case Phase::HelloSent: {
      if (!first || first->type != HsType::HelloVerifyRequest) return;
      auto cookie = decode_hello_verify_request(first->body);
      if (!cookie) return fail(r, FailReason::DecodeError, alert::kDecodeError);
      st.cookie = std::move(*cookie);
      Bytes ch2 = encode_handshake({HsType::ClientHello, 1, encode_client_hello({st.client_random, st.cookie})});
      st.transcript = ch2;
      st.next_message_seq = 2;
      st.phase = Phase::CookieReceived;
      new_flight(st, {{ContentType::Handshake, 0, std::move(ch2)}}, now, r.outgoing);
      return;
    }
    case Phase::CookieReceived: {
      if (!first) return;
      if (first->type == HsType::HelloVerifyRequest) {
        auto cookie = decode_hello_verify_request(first->body);
        if (cookie && *cookie == st.cookie) return;  // answer to a repeated first hello
        return fail(r, FailReason::BadCookie);
      }
      if (first->type != HsType::ServerHello) return;
      auto sr = decode_server_hello(first->body);
      auto done = recs.size() >= 2 ? plain_message(recs[1]) : std::nullopt;
      if (!sr || !done || done->type != HsType::ServerHelloDone || !done->body.empty()) {
        return fail(r, FailReason::DecodeError, alert::kDecodeError);
      }
      auto psk = creds.client_psk();
      if (!psk) return fail(r, FailReason::MissingCredential);

      st.server_random = *sr;
      st.identity = psk->identity;
      st.credential_tag = psk->tag;
      st.record.keys = derive_keys(psk->secret.bytes(), st.client_random, st.server_random);
      st.record.role = Role::Client;
      st.record.epoch = 1;
      st.record.next_send_seq = 0;

      append(st.transcript, recs[0].fragment);
      append(st.transcript, recs[1].fragment);
      Bytes cke = encode_handshake({HsType::ClientKeyExchange, 2, encode_client_key_exchange(st.identity)});
      append(st.transcript, cke);
      auto vd = finished_verify_data(st.record.keys, Role::Client, st.transcript);
      Bytes fin = encode_handshake({HsType::Finished, 3, Bytes(vd.begin(), vd.end())});
      append(st.transcript, fin);
      st.next_message_seq = 4;
      st.phase = Phase::KeyExchange;
      new_flight(st,
                 {{ContentType::Handshake, 0, std::move(cke)},
                  {ContentType::ChangeCipherSpec, 0, Bytes(std::begin(kCcsBody), std::end(kCcsBody))},
                  {ContentType::Handshake, 1, std::move(fin)}},
                 now, r.outgoing);
      return;
    }
    case Phase::KeyExchange: {
      if (first && first->type == HsType::ServerHello) return retransmit_now(r);  // flight 5 was lost
      const RecordView* fin = find_record(recs, ContentType::Handshake, 1);
      if (!fin || !is_valid_ccs(find_record(recs, ContentType::ChangeCipherSpec, 0))) return;
      Bytes message;
      if (!check_finished(st, *fin, Role::Server, st.transcript, message)) {
        return fail(r, FailReason::BadFinished, alert::kDecryptError);
      }
      st.phase = Phase::Finished;
      st.next_timer.reset();
      st.flight_buf.clear();
      st.transcript.clear();
      r.events.push_back({HandshakeEvent::Kind::SessionEstablished});
      return;
    }
    default:
      return;
  }
}

void server_receive(StepResult& r, const std::vector<RecordView>& recs, CredentialResolver& creds) {
  auto& st = r.state;
  auto first = plain_message(recs[0]);
  if (!first) return;

  if (first->type == HsType::ClientHello) {
    auto ch = decode_client_hello(first->body);
    if (!ch) return;
    if (ch->random != st.client_random) {
      r.events.push_back({HandshakeEvent::Kind::Restart});
    } else if (st.phase == Phase::KeyExchange) {
      retransmit_now(r);  // flight 4 was lost
    }
    return;
  }
  if (first->type != HsType::ClientKeyExchange) return;
  if (st.phase == Phase::Finished) return retransmit_now(r);  // flight 6 was lost
  if (st.phase != Phase::KeyExchange) return;

  auto identity = decode_client_key_exchange(first->body);
  if (!identity) return fail(r, FailReason::DecodeError, alert::kDecodeError);
  const RecordView* fin = find_record(recs, ContentType::Handshake, 1);
  if (!fin || !is_valid_ccs(find_record(recs, ContentType::ChangeCipherSpec, 0))) return;
  auto psk = creds.server_psk(*identity);
  if (!psk) return fail(r, FailReason::UnknownPskIdentity, alert::kUnknownPskIdentity);

  st.identity = std::move(*identity);
  st.credential_tag = psk->tag;
  st.record.keys = derive_keys(psk->secret.bytes(), st.client_random, st.server_random);
  st.record.role = Role::Server;
  st.record.epoch = 1;
  st.record.next_send_seq = 0;

  append(st.transcript, recs[0].fragment);
  Bytes client_fin;
  if (!check_finished(st, *fin, Role::Client, st.transcript, client_fin)) {
    return fail(r, FailReason::BadFinished, alert::kDecryptError);
  }
  append(st.transcript, client_fin);
  auto vd = finished_verify_data(st.record.keys, Role::Server, st.transcript);
  Bytes server_fin = encode_handshake({HsType::Finished, 3, Bytes(vd.begin(), vd.end())});
  st.transcript.clear();
  st.phase = Phase::Finished;
  // The last flight is resent only when the client repeats its own.
  new_flight(st,
             {{ContentType::ChangeCipherSpec, 0, Bytes(std::begin(kCcsBody), std::end(kCcsBody))},
              {ContentType::Handshake, 1, std::move(server_fin)}},
             TimePoint{}, r.outgoing, false);
  r.events.push_back({HandshakeEvent::Kind::SessionEstablished});
}

}  // namespace

Bytes encode_handshake(const HandshakeMessage& msg) {
  if (kHandshakeHeaderLen + msg.body.size() > kMaxHandshakeMessage) {
    throw Error(Errc::InvalidArgument, "handshake message exceeds 512 bytes");
  }
  auto len = static_cast<std::uint32_t>(msg.body.size());
  Bytes out;
  out.reserve(kHandshakeHeaderLen + len);
  out.push_back(static_cast<std::uint8_t>(msg.type));
  put_be24(out, len);
  put_be16(out, msg.message_seq);
  put_be24(out, 0);
  put_be24(out, len);
  append(out, msg.body);
  return out;
}

std::optional<HandshakeMessage> decode_handshake(ByteView fragment) {
  if (fragment.size() < kHandshakeHeaderLen || fragment.size() > kMaxHandshakeMessage) return std::nullopt;
  const std::uint8_t* p = fragment.data();
  std::uint32_t len = get_be24(p + 1);
  if (get_be24(p + 6) != 0 || get_be24(p + 9) != len || fragment.size() != kHandshakeHeaderLen + len) {
    return std::nullopt;
  }
  HandshakeMessage m;
  m.type = static_cast<HsType>(p[0]);
  m.message_seq = get_be16(p + 4);
  m.body.assign(p + kHandshakeHeaderLen, p + fragment.size());
  return m;
}

Bytes encode_client_hello(const ClientHello& ch) {
  Bytes out;
  put_be16(out, kRecordVersion);
  out.insert(out.end(), ch.random.begin(), ch.random.end());
  out.push_back(0);
  out.push_back(static_cast<std::uint8_t>(ch.cookie.size()));
  append(out, ch.cookie);
  put_be16(out, 2);
  put_be16(out, kCipherSuite);
  out.push_back(1);
  out.push_back(0);
  return out;
}

std::optional<ClientHello> decode_client_hello(ByteView body) {
  Reader r{body};
  if (r.u16() != kRecordVersion) return std::nullopt;
  ClientHello ch;
  ByteView random = r.take(32);
  std::size_t sid_len = r.u8();
  if (sid_len > 32) return std::nullopt;
  r.take(sid_len);
  std::size_t cookie_len = r.u8();
  if (cookie_len > 32) return std::nullopt;
  ByteView cookie = r.take(cookie_len);
  std::size_t suites_len = r.u16();
  if (suites_len < 2 || suites_len % 2 != 0) return std::nullopt;
  ByteView suites = r.take(suites_len);
  std::size_t comp_len = r.u8();
  ByteView comp = r.take(comp_len);
  if (!r.done()) return std::nullopt;
  bool suite_ok = false;
  for (std::size_t i = 0; i + 1 < suites.size(); i += 2) suite_ok |= get_be16(suites.data() + i) == kCipherSuite;
  bool null_comp = std::find(comp.begin(), comp.end(), 0) != comp.end();
  if (!suite_ok || !null_comp) return std::nullopt;
  std::copy(random.begin(), random.end(), ch.random.begin());
  ch.cookie.assign(cookie.begin(), cookie.end());
  return ch;
}

Bytes encode_hello_verify_request(ByteView cookie) {
  Bytes out;
  put_be16(out, kRecordVersion);
  out.push_back(static_cast<std::uint8_t>(cookie.size()));
  append(out, cookie);
  return out;
}

std::optional<Bytes> decode_hello_verify_request(ByteView body) {
  Reader r{body};
  if (r.u16() != kRecordVersion) return std::nullopt;
  std::size_t len = r.u8();
  ByteView cookie = r.take(len);
  if (!r.done() || len == 0 || len > 32) return std::nullopt;
  return Bytes(cookie.begin(), cookie.end());
}

Bytes encode_server_hello(const Random& server_random) {
  Bytes out;
  put_be16(out, kRecordVersion);
  out.insert(out.end(), server_random.begin(), server_random.end());
  out.push_back(0);
  put_be16(out, kCipherSuite);
  out.push_back(0);
  return out;
}

std::optional<Random> decode_server_hello(ByteView body) {
  Reader r{body};
  if (r.u16() != kRecordVersion) return std::nullopt;
  ByteView random = r.take(32);
  std::size_t sid_len = r.u8();
  r.take(sid_len);
  std::uint16_t suite = r.u16();
  std::uint8_t comp = r.u8();
  if (!r.done() || suite != kCipherSuite || comp != 0) return std::nullopt;
  Random out{};
  std::copy(random.begin(), random.end(), out.begin());
  return out;
}

Bytes encode_client_key_exchange(ByteView identity) {
  Bytes out;
  out.reserve(2 + identity.size());
  put_be16(out, static_cast<std::uint16_t>(identity.size()));
  append(out, identity);
  return out;
}

std::optional<Bytes> decode_client_key_exchange(ByteView body) {
  Reader r{body};
  std::size_t len = r.u16();
  ByteView id = r.take(len);
  if (!r.done()) return std::nullopt;
  return Bytes(id.begin(), id.end());
}

Bytes make_cookie(const ServerSecret& secret, const Endpoint& client, const Random& client_random) {
  Bytes input;
  input.reserve(38);
  put_be16(input, static_cast<std::uint16_t>(client.addr >> 16));
  put_be16(input, static_cast<std::uint16_t>(client.addr));
  put_be16(input, client.port);
  input.insert(input.end(), client_random.begin(), client_random.end());
  auto mac = crypto::hmac_sha256(secret.cookie_key, input);
  return Bytes(mac.begin(), mac.begin() + kCookieLen);
}

std::array<std::uint8_t, 12> record_nonce(ByteView iv, std::uint16_t epoch, std::uint64_t seq) {
  std::array<std::uint8_t, 12> n{};
  std::copy_n(iv.begin(), 4, n.begin());
  n[4] = static_cast<std::uint8_t>(epoch >> 8);
  n[5] = static_cast<std::uint8_t>(epoch);
  for (int i = 0; i < 6; ++i) n[6 + i] = static_cast<std::uint8_t>(seq >> (40 - 8 * i));
  return n;
}

Bytes protect_record(const RecordKeys& keys, Role sender, ContentType type, std::uint16_t epoch,
                     std::uint64_t seq, ByteView plaintext) {
  if (seq > kMaxSeq) throw Error(Errc::SeqExhausted, "record sequence space exhausted");
  if (plaintext.size() + crypto::kCcmTagLen > 0xFFFF) throw Error(Errc::PayloadTooLarge, "record too large");
  const auto& key = sender == Role::Client ? keys.client_write_key : keys.server_write_key;
  const auto& iv = sender == Role::Client ? keys.client_iv : keys.server_iv;
  Bytes out;
  out.reserve(kRecordOverhead + plaintext.size());
  encode_record_header({type, epoch, seq, static_cast<std::uint16_t>(plaintext.size() + crypto::kCcmTagLen)}, out);
  auto nonce = record_nonce(iv, epoch, seq);
  const std::uint8_t* hdr = out.data();
  cipher_for(key).seal(nonce, ByteView(hdr, kRecordHeaderLen), plaintext, out);
  return out;
}

Unprotected open_record(const RecordKeys& keys, Role receiver, ReplayWindow& window, const RecordView& record) {
  Unprotected u;
  if (record.fragment.size() < crypto::kCcmTagLen) return u;
  bool from_client = receiver == Role::Server;
  const auto& key = from_client ? keys.client_write_key : keys.server_write_key;
  const auto& iv = from_client ? keys.client_iv : keys.server_iv;
  auto nonce = record_nonce(iv, record.header.epoch, record.header.seq);
  if (!cipher_for(key).open(nonce, record.header_bytes, record.fragment, u.plaintext)) {
    u.status = RecordStatus::AuthFailed;
    return u;
  }
  if (!window.check_and_mark(record.header.seq)) {
    u.plaintext.clear();
    u.status = RecordStatus::ReplayDetected;
    return u;
  }
  u.status = RecordStatus::Ok;
  return u;
}

Unprotected unprotect_record(const RecordKeys& keys, Role receiver, ReplayWindow& window, ByteView record) {
  auto recs = split_records(record);
  if (!recs || recs->size() != 1) return {};
  return open_record(keys, receiver, window, recs->front());
}

DatagramKind MiniDtlsBackend::classify(ByteView datagram) const {
  auto recs = split_records(datagram);
  if (!recs) return DatagramKind::Invalid;
  const RecordView& r = recs->front();
  switch (r.header.type) {
    case ContentType::Handshake:
      if (r.header.epoch == 0 && !r.fragment.empty() &&
          r.fragment[0] == static_cast<std::uint8_t>(HsType::ClientHello)) {
        return DatagramKind::ClientHello;
      }
      return DatagramKind::Handshake;
    case ContentType::ChangeCipherSpec:
      return DatagramKind::Handshake;
    case ContentType::Alert:
      return r.header.epoch == 0 ? DatagramKind::Handshake : DatagramKind::Record;
    case ContentType::ApplicationData:
      return DatagramKind::Record;
  }
  return DatagramKind::Invalid;
}

StepResult MiniDtlsBackend::handshake_step(const HandshakeState& state, std::optional<ByteView> incoming,
                                           TimePoint now, Rng& rng, CredentialResolver& creds) const {
  StepResult r{state, {}, {}};
  auto& st = r.state;
  if (st.phase == Phase::Failed) return r;
  if (!incoming) {
    if (st.role == Role::Client && st.phase == Phase::Idle) {
      client_start(r, now, rng);
    } else {
      on_timer(r, now);
    }
    return r;
  }
  auto recs = split_records(*incoming);
  if (!recs) return r;
  if (st.phase != Phase::Finished) {
    for (const auto& rec : *recs) {
      if (rec.header.type == ContentType::Alert && rec.header.epoch == 0 && rec.fragment.size() == 2 &&
          rec.fragment[0] == alert::kFatal) {
        st.phase = Phase::Failed;
        st.failure = detail::reason_for_alert(rec.fragment[1]);
        st.next_timer.reset();
        st.flight_buf.clear();
        r.events.push_back({HandshakeEvent::Kind::Failed, st.failure});
        return r;
      }
    }
  }
  if (st.role == Role::Client) {
    client_receive(r, *recs, now, creds);
  } else {
    server_receive(r, *recs, creds);
  }
  return r;
}

ListenResult MiniDtlsBackend::listen(const ServerSecret& secret, const Endpoint& from, ByteView datagram,
                                     TimePoint now, Rng& rng, CredentialResolver&, const RetransmitPolicy& policy,
                                     bool accept) const {
  ListenResult res;
  auto recs = split_records(datagram);
  if (!recs) return res;
  const RecordView& rec = recs->front();
  auto msg = plain_message(rec);
  if (!msg || msg->type != HsType::ClientHello) return res;
  auto ch = decode_client_hello(msg->body);
  if (!ch) return res;

  Bytes expected = make_cookie(secret, from, ch->random);
  if (ch->cookie.empty() || !crypto::equal(ch->cookie, expected)) {
    Bytes hvr = encode_handshake({HsType::HelloVerifyRequest, 0, encode_hello_verify_request(expected)});
    res.outgoing.push_back(detail::plain_record(ContentType::Handshake, 0, rec.header.seq, hvr));
    return res;
  }
  if (!accept) {
    res.outgoing.push_back(detail::alert_record(alert::kFatal, alert::kInternalError, rec.header.seq));
    res.events.push_back({HandshakeEvent::Kind::Failed, FailReason::PeerBusy});
    return res;
  }

  HandshakeState st;
  st.role = Role::Server;
  st.policy = policy;
  st.retx_timeout = policy.initial;
  st.peer = from;
  st.client_random = ch->random;
  st.cookie = std::move(ch->cookie);
  st.server_random = rng.bytes<32>();
  st.record.role = Role::Server;
  st.epoch0_seq = 1;
  st.next_message_seq = 3;
  FlightRecord sh = hs_record(HsType::ServerHello, 1, encode_server_hello(st.server_random));
  FlightRecord shd = hs_record(HsType::ServerHelloDone, 2, {});
  st.transcript.assign(rec.fragment.begin(), rec.fragment.end());
  append(st.transcript, sh.fragment);
  append(st.transcript, shd.fragment);
  st.phase = Phase::KeyExchange;
  new_flight(st, {std::move(sh), std::move(shd)}, now, res.outgoing);
  res.state = std::move(st);
  return res;
}

Bytes MiniDtlsBackend::protect(RecordState& rs, ByteView plaintext) const {
  Bytes out = protect_record(rs.keys, rs.role, ContentType::ApplicationData, rs.epoch, rs.next_send_seq, plaintext);
  ++rs.next_send_seq;
  return out;
}

Unprotected MiniDtlsBackend::unprotect(RecordState& rs, ByteView datagram) const {
  auto recs = split_records(datagram);
  if (!recs || recs->size() != 1) return {};
  const RecordView& rec = recs->front();
  if (rec.header.epoch != rs.epoch) return {};
  if (rec.header.type == ContentType::ApplicationData) return open_record(rs.keys, rs.role, rs.replay, rec);
  if (rec.header.type == ContentType::Alert) {
    Unprotected u = open_record(rs.keys, rs.role, rs.replay, rec);
    if (u.status == RecordStatus::Ok) {
      u.plaintext.clear();
      u.status = RecordStatus::PeerClosed;
    }
    return u;
  }
  return {};
}

Bytes MiniDtlsBackend::close_notify(RecordState& rs) const {
  const std::uint8_t body[2] = {alert::kWarning, alert::kCloseNotify};
  Bytes out = protect_record(rs.keys, rs.role, ContentType::Alert, rs.epoch, rs.next_send_seq, body);
  ++rs.next_send_seq;
  return out;
}

}  // namespace secstack::dtls::minidtls

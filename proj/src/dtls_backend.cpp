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

#include "secstack/dtls_backend.hpp"

#include <algorithm>

#include "secstack/crypto.hpp"

namespace secstack::dtls {

std::string_view to_string(BackendId id) {
  switch (id) {
    case BackendId::MiniDtls: return "minidtls";
    case BackendId::NullSec: return "nullsec";
  }
  return "?";
}

BackendId parse_backend_id(std::string_view name) {
  if (name == "minidtls") return BackendId::MiniDtls;
  if (name == "nullsec") return BackendId::NullSec;
  throw Error(Errc::UnknownBackend, "unknown backend '" + std::string(name) + "'");
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Idle: return "Idle";
    case Phase::HelloSent: return "HelloSent";
    case Phase::CookieReceived: return "CookieReceived";
    case Phase::KeyExchange: return "KeyExchange";
    case Phase::Finished: return "Finished";
    case Phase::Failed: return "Failed";
  }
  return "?";
}

std::string_view to_string(FailReason reason) {
  switch (reason) {
    case FailReason::None: return "none";
    case FailReason::BadCookie: return "bad cookie";
    case FailReason::UnknownPskIdentity: return "unknown psk identity";
    case FailReason::Timeout: return "timeout";
    case FailReason::DecodeError: return "decode error";
    case FailReason::BadFinished: return "bad finished";
    case FailReason::PeerBusy: return "peer busy";
    case FailReason::MissingCredential: return "missing credential";
  }
  return "?";
}

std::string_view to_string(RecordStatus status) {
  switch (status) {
    case RecordStatus::Ok: return "ok";
    case RecordStatus::AuthFailed: return "auth failed";
    case RecordStatus::ReplayDetected: return "replay detected";
    case RecordStatus::DecodeError: return "decode error";
    case RecordStatus::PeerClosed: return "peer closed";
  }
  return "?";
}

RecordKeys derive_keys(ByteView psk, const Random& client_random, const Random& server_random) {
  if (psk.empty()) throw Error(Errc::EmptyPsk, "psk must not be empty");
  if (psk.size() > 0xFFFF) throw Error(Errc::InvalidArgument, "psk too long");
  auto n = static_cast<std::uint16_t>(psk.size());
  Bytes premaster;
  premaster.reserve(4 + 2 * psk.size());
  put_be16(premaster, n);
  premaster.insert(premaster.end(), psk.size(), 0);
  put_be16(premaster, n);
  append(premaster, psk);

  Bytes seed(client_random.begin(), client_random.end());
  seed.insert(seed.end(), server_random.begin(), server_random.end());
  Bytes master = crypto::prf_sha256(premaster, "master secret", seed, 48);

  Bytes expansion_seed(server_random.begin(), server_random.end());
  expansion_seed.insert(expansion_seed.end(), client_random.begin(), client_random.end());
  Bytes block = crypto::prf_sha256(master, "key expansion", expansion_seed, 40);

  RecordKeys k;
  std::copy_n(master.begin(), 48, k.master_secret.begin());
  auto it = block.begin();
  std::copy_n(it, 16, k.client_write_key.begin());
  std::copy_n(it + 16, 16, k.server_write_key.begin());
  std::copy_n(it + 32, 4, k.client_iv.begin());
  std::copy_n(it + 36, 4, k.server_iv.begin());
  std::fill(premaster.begin(), premaster.end(), 0);
  return k;
}

std::array<std::uint8_t, 12> finished_verify_data(const RecordKeys& keys, Role sender, ByteView transcript) {
  crypto::Digest hash = crypto::sha256(transcript);
  Bytes v = crypto::prf_sha256(keys.master_secret, sender == Role::Client ? "client finished" : "server finished",
                               hash, 12);
  std::array<std::uint8_t, 12> out{};
  std::copy_n(v.begin(), 12, out.begin());
  return out;
}

void encode_record_header(const RecordHeader& h, Bytes& out) {
  out.push_back(static_cast<std::uint8_t>(h.type));
  put_be16(out, kRecordVersion);
  put_be16(out, h.epoch);
  put_be48(out, h.seq);
  put_be16(out, h.length);
}

std::optional<std::vector<RecordView>> split_records(ByteView datagram) {
  std::vector<RecordView> out;
  std::size_t pos = 0;
  while (pos < datagram.size()) {
    if (datagram.size() - pos < kRecordHeaderLen) return std::nullopt;
    const std::uint8_t* p = datagram.data() + pos;
    std::uint8_t type = p[0];
    if (type < 20 || type > 23 || get_be16(p + 1) != kRecordVersion) return std::nullopt;
    RecordView r;
    r.header.type = static_cast<ContentType>(type);
    r.header.epoch = get_be16(p + 3);
    r.header.seq = get_be48(p + 5);
    r.header.length = get_be16(p + 11);
    if (datagram.size() - pos - kRecordHeaderLen < r.header.length) return std::nullopt;
    r.header_bytes = datagram.subspan(pos, kRecordHeaderLen);
    r.fragment = datagram.subspan(pos + kRecordHeaderLen, r.header.length);
    out.push_back(r);
    pos += kRecordHeaderLen + r.header.length;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

bool ReplayWindow::acceptable(std::uint64_t seq) const {
  if (!any_ || seq > highest_) return true;
  std::uint64_t diff = highest_ - seq;
  if (diff >= kSize) return false;
  return ((mask_ >> diff) & 1) == 0;
}

void ReplayWindow::mark(std::uint64_t seq) {
  if (!any_) {
    any_ = true;
    highest_ = seq;
    mask_ = 1;
    return;
  }
  if (seq > highest_) {
    std::uint64_t shift = seq - highest_;
    mask_ = shift >= kSize ? 0 : mask_ << shift;
    mask_ |= 1;
    highest_ = seq;
    return;
  }
  std::uint64_t diff = highest_ - seq;
  if (diff < kSize) mask_ |= std::uint64_t{1} << diff;
}

bool ReplayWindow::check_and_mark(std::uint64_t seq) {
  if (!acceptable(seq)) return false;
  mark(seq);
  return true;
}

RegistryResolver::RegistryResolver(const credman::Registry& registry,
                                   std::vector<std::pair<credman::CredmanTag, credman::CredentialType>> tags)
    : registry_(registry), tags_(std::move(tags)) {}

namespace {
std::optional<ResolvedPsk> resolve_entry(const credman::Credential& c) {
  try {
    ResolvedPsk r{c.tag, Bytes(c.identity_bytes().begin(), c.identity_bytes().end()), credman::resolve(c.secret)};
    return r;
  } catch (const Error&) {
    return std::nullopt;
  }
}
}  // namespace

std::optional<ResolvedPsk> RegistryResolver::client_psk() {
  for (const auto& [tag, type] : tags_) {
    if (type != credman::CredentialType::Psk) continue;
    auto c = registry_.find(tag, type);
    if (!c) continue;
    if (auto r = resolve_entry(*c)) return r;
  }
  return std::nullopt;
}

std::optional<ResolvedPsk> RegistryResolver::server_psk(ByteView identity) {
  for (const auto& [tag, type] : tags_) {
    if (type != credman::CredentialType::Psk) continue;
    auto c = registry_.find(tag, type);
    if (!c || !std::equal(identity.begin(), identity.end(), c->identity_bytes().begin(),
                          c->identity_bytes().end())) {
      continue;
    }
    if (auto r = resolve_entry(*c)) return r;
  }
  return std::nullopt;
}

bool StepResult::has(HandshakeEvent::Kind kind) const {
  return std::any_of(events.begin(), events.end(), [&](const HandshakeEvent& e) { return e.kind == kind; });
}

ServerSecret ServerSecret::generate(Rng& rng) {
  ServerSecret s;
  rng.fill(s.cookie_key);
  return s;
}

HandshakeState Backend::client_init(const Endpoint& server, const RetransmitPolicy& policy) const {
  HandshakeState st;
  st.role = Role::Client;
  st.phase = Phase::Idle;
  st.policy = policy;
  st.retx_timeout = policy.initial;
  st.peer = server;
  st.record.role = Role::Client;
  return st;
}

namespace detail {

Bytes plain_record(ContentType type, std::uint16_t epoch, std::uint64_t seq, ByteView fragment) {
  Bytes out;
  out.reserve(kRecordHeaderLen + fragment.size());
  encode_record_header({type, epoch, seq, static_cast<std::uint16_t>(fragment.size())}, out);
  append(out, fragment);
  return out;
}

Bytes alert_record(std::uint8_t level, std::uint8_t description, std::uint64_t seq) {
  const std::uint8_t body[2] = {level, description};
  return plain_record(ContentType::Alert, 0, seq, body);
}

FailReason reason_for_alert(std::uint8_t description) {
  switch (description) {
    case alert::kUnknownPskIdentity: return FailReason::UnknownPskIdentity;
    case alert::kDecryptError: return FailReason::BadFinished;
    case alert::kInternalError: return FailReason::PeerBusy;
    default: return FailReason::DecodeError;
  }
}

void arm_timer(HandshakeState& st, TimePoint now) { st.next_timer = now + st.retx_timeout; }

}  // namespace detail

}  // namespace secstack::dtls

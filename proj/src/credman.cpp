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

#include "secstack/credman.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace secstack::credman {

std::string_view to_string(CredentialType type) {
  switch (type) {
    case CredentialType::Psk: return "psk";
    case CredentialType::RawPublicKey: return "rpk";
  }
  return "?";
}

namespace {

struct StoreTable {
  std::mutex mu;
  std::unordered_map<std::uint32_t, std::weak_ptr<Bytes>> live;
};

StoreTable& stores() {
  static StoreTable table;
  return table;
}

std::atomic<std::uint32_t> next_store_id{1};

// Key bytes are wiped when the last holder lets go, which may be a
// SecretView that outlives the store.
void wipe(Bytes* b) {
  volatile std::uint8_t* p = b->data();
  for (std::size_t i = 0; i < b->size(); ++i) p[i] = 0;
  delete b;
}

}  // namespace

SecretStore::SecretStore(std::size_t capacity)
    : id_(next_store_id.fetch_add(1)), storage_(new Bytes(capacity), wipe) {
  auto& t = stores();
  std::lock_guard lock(t.mu);
  t.live[id_] = storage_;
}

SecretStore::~SecretStore() {
  auto& t = stores();
  {
    std::lock_guard lock(t.mu);
    t.live.erase(id_);
  }
}

SecretRef SecretStore::put(ByteView secret) {
  if (secret.size() > storage_->size() - used_) {
    throw Error(Errc::InvalidArgument, "secret store is full");
  }
  std::copy(secret.begin(), secret.end(), storage_->begin() + static_cast<std::ptrdiff_t>(used_));
  SecretRef ref{id_, static_cast<std::uint32_t>(used_), static_cast<std::uint32_t>(secret.size())};
  used_ += secret.size();
  return ref;
}

SecretView resolve(const SecretRef& ref) {
  std::shared_ptr<Bytes> storage;
  {
    auto& t = stores();
    std::lock_guard lock(t.mu);
    auto it = t.live.find(ref.store_id);
    if (it != t.live.end()) storage = it->second.lock();
  }
  if (!storage) throw Error(Errc::StaleSecret, "secret store " + std::to_string(ref.store_id) + " is gone");
  if (std::size_t{ref.offset} + ref.length > storage->size()) {
    throw Error(Errc::StaleSecret, "secret reference out of bounds");
  }
  SecretView view;
  view.view_ = ByteView(storage->data() + ref.offset, ref.length);
  view.hold_ = std::move(storage);
  return view;
}

Credential Credential::make(CredmanTag tag, CredentialType type, ByteView identity, SecretRef secret) {
  if (identity.size() > kMaxIdentity) {
    throw Error(Errc::InvalidCredential, "identity longer than 32 bytes");
  }
  Credential c;
  c.tag = tag;
  c.type = type;
  c.identity_len = static_cast<std::uint8_t>(identity.size());
  std::copy(identity.begin(), identity.end(), c.identity.begin());
  c.secret = secret;
  return c;
}

Registry::Registry(std::size_t capacity) : slots_(capacity) {
  if (capacity == 0) throw Error(Errc::InvalidArgument, "registry capacity must be positive");
}

void Registry::add(const Credential& cred) {
  if (cred.tag == 0) throw Error(Errc::InvalidCredential, "tag 0 is reserved");
  if (cred.secret.length == 0) throw Error(Errc::InvalidCredential, "empty secret");
  if (cred.identity_len > kMaxIdentity) throw Error(Errc::InvalidCredential, "identity too long");
  try {
    (void)resolve(cred.secret);
  } catch (const Error&) {
    throw Error(Errc::InvalidCredential, "secret reference does not resolve");
  }
  std::lock_guard lock(mu_);
  Slot* free_slot = nullptr;
  for (auto& s : slots_) {
    if (s.used && s.cred.tag == cred.tag && s.cred.type == cred.type) {
      throw Error(Errc::Exists, "credential (" + std::to_string(cred.tag) + ", " +
                                    std::string(to_string(cred.type)) + ") exists");
    }
    if (!s.used && !free_slot) free_slot = &s;
  }
  if (!free_slot) throw Error(Errc::RegistryFull);
  free_slot->used = true;
  free_slot->cred = cred;
}

std::optional<Credential> Registry::find(CredmanTag tag, CredentialType type) const {
  std::lock_guard lock(mu_);
  for (const auto& s : slots_) {
    if (s.used && s.cred.tag == tag && s.cred.type == type) return s.cred;
  }
  return std::nullopt;
}

Credential Registry::get(CredmanTag tag, CredentialType type) const {
  auto c = find(tag, type);
  if (!c) {
    throw Error(Errc::NotFound, "credential (" + std::to_string(tag) + ", " + std::string(to_string(type)) +
                                    ") not registered");
  }
  return *c;
}

void Registry::remove(CredmanTag tag, CredentialType type) {
  std::lock_guard lock(mu_);
  for (auto& s : slots_) {
    if (s.used && s.cred.tag == tag && s.cred.type == type) {
      s = Slot{};
      return;
    }
  }
}

std::size_t Registry::size() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& s : slots_) n += s.used ? 1 : 0;
  return n;
}

std::vector<CredentialSpec> parse_credential_file(std::string_view text) {
  std::vector<CredentialSpec> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    auto fail = [&](const std::string& why) {
      return Error(Errc::ParseError, "credentials line " + std::to_string(line_no) + ": " + why);
    };

    CredentialSpec spec;
    bool have_tag = false, have_type = false, have_identity = false, have_key = false;
    std::size_t pos = 0;
    bool any = false;
    std::vector<std::string> seen;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
      if (pos >= line.size()) break;
      if (!any && line[pos] == '#') break;
      any = true;
      std::size_t end = pos;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r') ++end;
      std::string_view token = line.substr(pos, end - pos);
      pos = end;
      auto eq = token.find('=');
      if (eq == std::string_view::npos) throw fail("expected key=value, got '" + std::string(token) + "'");
      std::string_view key = token.substr(0, eq);
      std::string_view value = token.substr(eq + 1);
      std::string field(key);
      if (std::find(seen.begin(), seen.end(), field) != seen.end()) throw fail("duplicate field '" + field + "'");
      seen.push_back(field);
      if (key == "tag") {
        unsigned v = 0;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc{} || p != value.data() + value.size() || v == 0 || v > 0xFFFF) {
          throw fail("bad tag '" + std::string(value) + "'");
        }
        spec.tag = static_cast<CredmanTag>(v);
        have_tag = true;
      } else if (key == "type") {
        if (value == "psk") {
          spec.type = CredentialType::Psk;
        } else if (value == "rpk") {
          spec.type = CredentialType::RawPublicKey;
        } else {
          throw fail("unknown type '" + std::string(value) + "'");
        }
        have_type = true;
      } else if (key == "identity") {
        if (value.size() > kMaxIdentity) throw fail("identity longer than 32 bytes");
        spec.identity = std::string(value);
        have_identity = true;
      } else if (key == "key") {
        if (value.size() % 2 != 0) throw fail("odd-length hex key");
        try {
          spec.key = from_hex(value);
        } catch (const Error&) {
          throw fail("invalid hex key");
        }
        if (spec.key.empty()) throw fail("empty key");
        have_key = true;
      } else {
        throw fail("unknown field '" + std::string(key) + "'");
      }
    }
    if (!any) continue;
    if (!have_tag || !have_type || !have_identity || !have_key) {
      throw fail("each line needs tag, type, identity and key");
    }
    out.push_back(std::move(spec));
  }
  return out;
}

std::vector<CredentialSpec> load_credential_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_credential_file(ss.str());
}

std::vector<std::pair<CredmanTag, CredentialType>> install(const std::vector<CredentialSpec>& specs,
                                                           Registry& registry, SecretStore& store) {
  std::vector<std::pair<CredmanTag, CredentialType>> added;
  for (const auto& spec : specs) {
    SecretRef ref = store.put(spec.key);
    registry.add(Credential::make(spec.tag, spec.type, as_bytes(spec.identity), ref));
    added.emplace_back(spec.tag, spec.type);
  }
  return added;
}

}  // namespace secstack::credman

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

// Credential registry keyed by (tag, type).
//
// The registry never holds key material. Applications put secrets into a
// SecretStore they own and register descriptors that point into it. The
// application must keep the store alive for as long as the credential is
// in use; resolving a descriptor whose store is gone fails with StaleSecret.

#ifndef SECSTACK_CREDMAN_HPP
#define SECSTACK_CREDMAN_HPP

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "secstack/common.hpp"

namespace secstack::credman {

using CredmanTag = std::uint16_t;

enum class CredentialType : std::uint8_t { Psk = 1, RawPublicKey = 2 };

std::string_view to_string(CredentialType type);

inline constexpr std::size_t kCredmanMax = 8;
inline constexpr std::size_t kMaxIdentity = 32;

/// Location of a secret inside a SecretStore.
struct SecretRef {
  std::uint32_t store_id = 0;
  std::uint32_t offset = 0;
  std::uint32_t length = 0;
  friend bool operator==(const SecretRef&, const SecretRef&) = default;
};

/// Application-owned, fixed-capacity buffer of key material. Never
/// reallocates, so a SecretRef stays valid for the store's lifetime.
class SecretStore {
 public:
  explicit SecretStore(std::size_t capacity = 8192);
  ~SecretStore();
  SecretStore(const SecretStore&) = delete;
  SecretStore& operator=(const SecretStore&) = delete;

  SecretRef put(ByteView secret);
  std::uint32_t id() const { return id_; }
  std::size_t used() const { return used_; }

 private:
  std::uint32_t id_;
  std::shared_ptr<Bytes> storage_;
  std::size_t used_ = 0;
};

/// Read access to a secret. Keeps the backing storage alive while held.
class SecretView {
 public:
  ByteView bytes() const { return view_; }

 private:
  friend SecretView resolve(const SecretRef& ref);
  std::shared_ptr<const Bytes> hold_;
  ByteView view_;
};

/// Throws Errc::StaleSecret if the store was destroyed.
SecretView resolve(const SecretRef& ref);

/// Fixed-size descriptor: no member depends on the secret's length.
struct Credential {
  CredmanTag tag = 0;
  CredentialType type = CredentialType::Psk;
  std::uint8_t identity_len = 0;
  std::array<std::uint8_t, kMaxIdentity> identity{};
  SecretRef secret;

  ByteView identity_bytes() const { return {identity.data(), identity_len}; }
  std::string identity_string() const { return {identity.begin(), identity.begin() + identity_len}; }

  /// Throws Errc::InvalidCredential if the identity is longer than 32 bytes.
  static Credential make(CredmanTag tag, CredentialType type, ByteView identity, SecretRef secret);
  static Credential psk(CredmanTag tag, std::string_view identity, SecretRef secret) {
    return make(tag, CredentialType::Psk, as_bytes(identity), secret);
  }

  friend bool operator==(const Credential&, const Credential&) = default;
};

class Registry {
 public:
  explicit Registry(std::size_t capacity = kCredmanMax);

  /// Errors: RegistryFull, Exists, InvalidCredential.
  void add(const Credential& cred);
  /// Errors: NotFound.
  Credential get(CredmanTag tag, CredentialType type) const;
  std::optional<Credential> find(CredmanTag tag, CredentialType type) const;
  /// Removing an absent entry is a no-op.
  void remove(CredmanTag tag, CredentialType type);

  std::size_t size() const;
  std::size_t capacity() const { return slots_.size(); }
  /// Bytes held by the registry's slot table; fixed at construction.
  std::size_t footprint_bytes() const { return slots_.capacity() * sizeof(Slot); }

 private:
  struct Slot {
    bool used = false;
    Credential cred;
  };

  mutable std::mutex mu_;
  std::vector<Slot> slots_;
};

/// One line of a credential file.
struct CredentialSpec {
  CredmanTag tag = 0;
  CredentialType type = CredentialType::Psk;
  std::string identity;
  Bytes key;
};

/// Lines of `tag=<int> type=psk identity=<utf8> key=<hex>`, in any order.
/// '#' starts a comment line. Throws Errc::ParseError.
std::vector<CredentialSpec> parse_credential_file(std::string_view text);
std::vector<CredentialSpec> load_credential_file(const std::string& path);

/// Copies each key into `store` and registers a descriptor for it. Returns
/// the (tag, type) pairs added, in file order.
std::vector<std::pair<CredmanTag, CredentialType>> install(const std::vector<CredentialSpec>& specs,
                                                           Registry& registry, SecretStore& store);

}  // namespace secstack::credman

#endif  // SECSTACK_CREDMAN_HPP

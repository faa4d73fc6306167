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

// Thin wrappers over libcrypto.

#ifndef SECSTACK_CRYPTO_HPP
#define SECSTACK_CRYPTO_HPP

#include <memory>

#include "secstack/common.hpp"

namespace secstack::crypto {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(ByteView data);
Digest hmac_sha256(ByteView key, ByteView data);

/// TLS 1.2 PRF with P_SHA256: P_hash(secret, label || seed) truncated to
/// `length` bytes.
Bytes prf_sha256(ByteView secret, std::string_view label, ByteView seed, std::size_t length);

/// Constant-time comparison.
bool equal(ByteView a, ByteView b);

inline constexpr std::size_t kCcmKeyLen = 16;
inline constexpr std::size_t kCcmNonceLen = 12;
inline constexpr std::size_t kCcmTagLen = 8;

/// AES-128-CCM with an 8-byte tag and a 12-byte nonce. Keeps one cipher
/// context; not safe for concurrent use.
class Ccm8 {
 public:
  explicit Ccm8(ByteView key);
  ~Ccm8();
  Ccm8(Ccm8&&) noexcept;
  Ccm8& operator=(Ccm8&&) noexcept;
  Ccm8(const Ccm8& other);
  Ccm8& operator=(const Ccm8& other);

  /// Appends ciphertext || tag to `out`.
  void seal(ByteView nonce, ByteView aad, ByteView plaintext, Bytes& out) const;
  /// Appends the plaintext to `out`. Returns false if authentication fails;
  /// `out` is left unchanged then.
  bool open(ByteView nonce, ByteView aad, ByteView sealed, Bytes& out) const;

 private:
  struct Ctx;
  std::array<std::uint8_t, kCcmKeyLen> key_{};
  std::unique_ptr<Ctx> ctx_;
};

}  // namespace secstack::crypto

#endif  // SECSTACK_CRYPTO_HPP

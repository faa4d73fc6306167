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

#include "secstack/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

namespace secstack::crypto {

namespace {
[[noreturn]] void fail(const char* what) { throw Error(Errc::InvalidArgument, std::string("libcrypto: ") + what); }
}  // namespace

Digest sha256(ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1) fail("EVP_Digest");
  return out;
}

Digest hmac_sha256(ByteView key, ByteView data) {
  Digest out{};
  unsigned int len = 0;
  static const std::uint8_t empty = 0;
  const void* k = key.empty() ? &empty : key.data();
  if (!HMAC(EVP_sha256(), k, static_cast<int>(key.size()), data.data(), data.size(), out.data(), &len)) {
    fail("HMAC");
  }
  return out;
}

Bytes prf_sha256(ByteView secret, std::string_view label, ByteView seed, std::size_t length) {
  Bytes label_seed(label.begin(), label.end());
  append(label_seed, seed);
  Bytes out;
  out.reserve(length + 32);
  // A(1) = HMAC(secret, label_seed); output block i = HMAC(secret, A(i) || label_seed).
  Digest a = hmac_sha256(secret, label_seed);
  Bytes block;
  while (out.size() < length) {
    block.assign(a.begin(), a.end());
    append(block, label_seed);
    Digest chunk = hmac_sha256(secret, block);
    out.insert(out.end(), chunk.begin(), chunk.end());
    a = hmac_sha256(secret, a);
  }
  out.resize(length);
  return out;
}

bool equal(ByteView a, ByteView b) {
  return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

struct Ccm8::Ctx {
  EVP_CIPHER_CTX* enc = EVP_CIPHER_CTX_new();
  EVP_CIPHER_CTX* dec = EVP_CIPHER_CTX_new();
  ~Ctx() {
    EVP_CIPHER_CTX_free(enc);
    EVP_CIPHER_CTX_free(dec);
  }
};

Ccm8::Ccm8(ByteView key) : ctx_(std::make_unique<Ctx>()) {
  if (key.size() != kCcmKeyLen) throw Error(Errc::InvalidArgument, "AES-128 key must be 16 bytes");
  std::copy(key.begin(), key.end(), key_.begin());
  if (!ctx_->enc || !ctx_->dec) fail("EVP_CIPHER_CTX_new");
}

Ccm8::~Ccm8() { OPENSSL_cleanse(key_.data(), key_.size()); }
Ccm8::Ccm8(Ccm8&&) noexcept = default;
Ccm8& Ccm8::operator=(Ccm8&&) noexcept = default;
Ccm8::Ccm8(const Ccm8& other) : Ccm8(ByteView(other.key_)) {}
Ccm8& Ccm8::operator=(const Ccm8& other) {
  if (this != &other) *this = Ccm8(ByteView(other.key_));
  return *this;
}

void Ccm8::seal(ByteView nonce, ByteView aad, ByteView plaintext, Bytes& out) const {
  if (nonce.size() != kCcmNonceLen) throw Error(Errc::InvalidArgument, "CCM nonce must be 12 bytes");
  EVP_CIPHER_CTX* c = ctx_->enc;
  int len = 0;
  if (EVP_EncryptInit_ex(c, EVP_aes_128_ccm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(c, EVP_CTRL_AEAD_SET_IVLEN, kCcmNonceLen, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(c, EVP_CTRL_AEAD_SET_TAG, kCcmTagLen, nullptr) != 1 ||
      EVP_EncryptInit_ex(c, nullptr, nullptr, key_.data(), nonce.data()) != 1 ||
      EVP_EncryptUpdate(c, nullptr, &len, nullptr, static_cast<int>(plaintext.size())) != 1) {
    fail("CCM init");
  }
  if (!aad.empty() && EVP_EncryptUpdate(c, nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    fail("CCM aad");
  }
  std::size_t base = out.size();
  out.resize(base + plaintext.size() + kCcmTagLen);
  // CCM treats a null output pointer as AAD, so even an empty plaintext needs
  // a real buffer here.
  std::uint8_t scratch = 0;
  const std::uint8_t* in = plaintext.empty() ? &scratch : plaintext.data();
  if (EVP_EncryptUpdate(c, out.data() + base, &len, in, static_cast<int>(plaintext.size())) != 1 ||
      EVP_EncryptFinal_ex(c, out.data() + base, &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(c, EVP_CTRL_AEAD_GET_TAG, kCcmTagLen, out.data() + base + plaintext.size()) != 1) {
    fail("CCM encrypt");
  }
}

bool Ccm8::open(ByteView nonce, ByteView aad, ByteView sealed, Bytes& out) const {
  if (nonce.size() != kCcmNonceLen || sealed.size() < kCcmTagLen) return false;
  std::size_t ct_len = sealed.size() - kCcmTagLen;
  EVP_CIPHER_CTX* c = ctx_->dec;
  int len = 0;
  auto* tag = const_cast<std::uint8_t*>(sealed.data() + ct_len);
  if (EVP_DecryptInit_ex(c, EVP_aes_128_ccm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(c, EVP_CTRL_AEAD_SET_IVLEN, kCcmNonceLen, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(c, EVP_CTRL_AEAD_SET_TAG, kCcmTagLen, tag) != 1 ||
      EVP_DecryptInit_ex(c, nullptr, nullptr, key_.data(), nonce.data()) != 1 ||
      EVP_DecryptUpdate(c, nullptr, &len, nullptr, static_cast<int>(ct_len)) != 1) {
    fail("CCM init");
  }
  if (!aad.empty() && EVP_DecryptUpdate(c, nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    fail("CCM aad");
  }
  std::size_t base = out.size();
  out.resize(base + ct_len + 1);
  std::uint8_t scratch = 0;
  const std::uint8_t* in = ct_len == 0 ? &scratch : sealed.data();
  int ok = EVP_DecryptUpdate(c, out.data() + base, &len, in, static_cast<int>(ct_len));
  if (ok != 1) {
    OPENSSL_cleanse(out.data() + base, ct_len);
    out.resize(base);
    return false;
  }
  out.resize(base + ct_len);
  return true;
}

}  // namespace secstack::crypto

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

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <new>
#include <random>
#include <thread>

#include "doctest.h"
#include "errors.hpp"
#include "secstack/credman.hpp"

using namespace secstack;
using test::code_of;
using namespace secstack::credman;

namespace {
std::atomic<std::size_t> g_allocations{0};
}

void* operator new(std::size_t n) {
  ++g_allocations;
  if (void* p = std::malloc(n ? n : 1)) return p;
  throw std::bad_alloc();
}
void operator delete(void* p) noexcept { std::free(p); }
void operator delete(void* p, std::size_t) noexcept { std::free(p); }

namespace {

Bytes key_of(std::size_t len, std::uint8_t seed = 1) {
  Bytes k(len);
  for (std::size_t i = 0; i < len; ++i) k[i] = static_cast<std::uint8_t>(seed + i);
  return k;
}

}  // namespace

TEST_CASE("add, get and remove") {
  SecretStore store;
  Registry reg;
  auto ref = store.put(key_of(16));
  reg.add(Credential::psk(1, "Client_identity", ref));
  auto got = reg.get(1, CredentialType::Psk);
  CHECK(got.identity_string() == "Client_identity");
  CHECK(got.secret == ref);
  CHECK(Bytes(resolve(got.secret).bytes().begin(), resolve(got.secret).bytes().end()) == key_of(16));

  CHECK(code_of([&] { reg.add(Credential::psk(1, "again", ref)); }) == Errc::Exists);
  CHECK_NOTHROW(reg.add(Credential::make(1, CredentialType::RawPublicKey, as_bytes("rpk"), ref)));
  CHECK_NOTHROW(reg.add(Credential::psk(2, "Client_identity", ref)));
  CHECK(reg.size() == 3);

  CHECK(code_of([&] { reg.get(9, CredentialType::Psk); }) == Errc::NotFound);
  reg.remove(1, CredentialType::Psk);
  CHECK(code_of([&] { reg.get(1, CredentialType::Psk); }) == Errc::NotFound);
  CHECK(reg.find(1, CredentialType::RawPublicKey).has_value());
  CHECK_NOTHROW(reg.remove(1, CredentialType::Psk));
  CHECK_NOTHROW(reg.add(Credential::psk(1, "back", ref)));
  CHECK(reg.get(1, CredentialType::Psk).identity_string() == "back");
}

TEST_CASE("invalid credentials") {
  SecretStore store;
  Registry reg;
  auto ref = store.put(key_of(16));
  CHECK(code_of([&] { reg.add(Credential::psk(0, "zero", ref)); }) == Errc::InvalidCredential);
  CHECK(code_of([&] { reg.add(Credential::psk(1, "empty", SecretRef{store.id(), 0, 0})); }) ==
        Errc::InvalidCredential);
  CHECK(code_of([&] { reg.add(Credential::psk(1, "bogus", SecretRef{store.id(), 8000, 500})); }) ==
        Errc::InvalidCredential);
  CHECK(code_of([&] { Credential::psk(1, std::string(33, 'x'), ref); }) == Errc::InvalidCredential);
  CHECK_NOTHROW(Credential::psk(1, std::string(32, 'x'), ref));
  CHECK(reg.size() == 0);
}

TEST_CASE("capacity") {
  SecretStore store;
  auto ref = store.put(key_of(16));
  Registry reg;
  CHECK(reg.capacity() == 8);
  for (CredmanTag t = 1; t <= 8; ++t) reg.add(Credential::psk(t, "id", ref));
  CHECK(code_of([&] { reg.add(Credential::psk(9, "id", ref)); }) == Errc::RegistryFull);
  reg.remove(3, CredentialType::Psk);
  CHECK_NOTHROW(reg.add(Credential::psk(9, "id", ref)));

  Registry small(2);
  small.add(Credential::psk(1, "a", ref));
  small.add(Credential::psk(2, "b", ref));
  CHECK(code_of([&] { small.add(Credential::psk(3, "c", ref)); }) == Errc::RegistryFull);
}

TEST_CASE("secrets outliving their store are reported as stale") {
  Registry reg;
  SecretRef ref;
  {
    SecretStore store;
    ref = store.put(key_of(24));
    reg.add(Credential::psk(1, "id", ref));
    auto view = resolve(ref);
    CHECK(view.bytes().size() == 24);
  }
  auto cred = reg.get(1, CredentialType::Psk);
  CHECK(code_of([&] { resolve(cred.secret); }) == Errc::StaleSecret);
  CHECK(code_of([&] { reg.add(Credential::psk(2, "id", ref)); }) == Errc::InvalidCredential);
}

TEST_CASE("a held view keeps the bytes readable") {
  std::optional<SecretView> view;
  {
    SecretStore store;
    view = resolve(store.put(key_of(8, 40)));
  }
  CHECK(Bytes(view->bytes().begin(), view->bytes().end()) == key_of(8, 40));
}

TEST_CASE("store capacity") {
  SecretStore store(32);
  store.put(key_of(20));
  CHECK(store.used() == 20);
  CHECK_THROWS_AS(store.put(key_of(13)), Error);
  CHECK_NOTHROW(store.put(key_of(12)));
}

TEST_CASE("descriptor size does not depend on the secret") {
  static_assert(sizeof(Credential) < 64);
  SecretStore store(1 << 16);
  std::size_t footprint = 0;
  for (std::size_t len = 16; len <= 4096; len *= 2) {
    Registry reg;
    auto ref = store.put(key_of(len));
    std::size_t before = reg.footprint_bytes();
    std::size_t allocs = g_allocations.load();
    reg.add(Credential::psk(1, "sized", ref));
    CHECK(g_allocations.load() == allocs);
    CHECK(reg.footprint_bytes() == before);
    if (footprint == 0) footprint = before;
    CHECK(before == footprint);
    CHECK(reg.get(1, CredentialType::Psk).secret.length == len);
  }
  CHECK(Registry(16).footprint_bytes() == 2 * Registry(8).footprint_bytes());
}

TEST_CASE("random operations match a reference map") {
  SecretStore store(1 << 16);
  std::vector<SecretRef> refs;
  for (std::size_t len : {16u, 17u, 32u, 100u, 1024u, 4096u}) refs.push_back(store.put(key_of(len)));
  refs.push_back(SecretRef{store.id(), 0, 0});  // empty secret

  const std::size_t capacity = 8;
  Registry reg(capacity);
  std::map<std::pair<CredmanTag, CredentialType>, Credential> model;
  std::mt19937_64 rng(2026);
  std::size_t adds = 0, gets = 0, removes = 0;
  for (int op = 0; op < 10000; ++op) {
    CredmanTag tag = static_cast<CredmanTag>(rng() % 7);  // 0 included on purpose
    CredentialType type = rng() % 2 ? CredentialType::Psk : CredentialType::RawPublicKey;
    auto key = std::pair(tag, type);
    switch (rng() % 3) {
      case 0: {
        ++adds;
        const SecretRef& ref = refs[rng() % refs.size()];
        auto cred = Credential::make(tag, type, as_bytes("id" + std::to_string(op % 100)), ref);
        std::optional<Errc> expect;
        if (tag == 0 || ref.length == 0) {
          expect = Errc::InvalidCredential;
        } else if (model.count(key)) {
          expect = Errc::Exists;
        } else if (model.size() >= capacity) {
          expect = Errc::RegistryFull;
        }
        if (expect) {
          CHECK(code_of([&] { reg.add(cred); }) == *expect);
        } else {
          reg.add(cred);
          model[key] = cred;
        }
        break;
      }
      case 1: {
        ++gets;
        auto it = model.find(key);
        if (it == model.end()) {
          CHECK(code_of([&] { reg.get(tag, type); }) == Errc::NotFound);
        } else {
          CHECK(reg.get(tag, type) == it->second);
        }
        break;
      }
      default:
        ++removes;
        reg.remove(tag, type);
        model.erase(key);
    }
    REQUIRE(reg.size() == model.size());
  }
  CHECK(adds > 3000);
  CHECK(gets > 3000);
  CHECK(removes > 3000);
}

TEST_CASE("concurrent use") {
  SecretStore store;
  auto ref = store.put(key_of(16));
  Registry reg;
  std::vector<std::thread> threads;
  for (CredmanTag t = 1; t <= 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 2000; ++i) {
        reg.add(Credential::psk(t, "id", ref));
        CHECK(reg.get(t, CredentialType::Psk).tag == t);
        reg.remove(t, CredentialType::Psk);
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(reg.size() == 0);
}

TEST_CASE("credential files") {
  auto specs = parse_credential_file(
      "# demo credentials\n"
      "tag=1 type=psk identity=Client_identity key=73656372657450534b\n"
      "\n"
      "key=00ff type=psk tag=2 identity=other\n");
  REQUIRE(specs.size() == 2);
  CHECK(specs[0].tag == 1);
  CHECK(specs[0].type == CredentialType::Psk);
  CHECK(specs[0].identity == "Client_identity");
  CHECK(specs[0].key == Bytes{'s', 'e', 'c', 'r', 'e', 't', 'P', 'S', 'K'});
  CHECK(specs[1].key == Bytes{0x00, 0xff});

  for (const char* bad : {"tag=1 type=psk identity=a key=abc", "tag=1 type=psk identity=a key=zz",
                          "tag=x type=psk identity=a key=00", "tag=1 type=cert identity=a key=00",
                          "tag=1 type=psk identity=a", "tag=1 type=psk identity=a key=00 extra=1",
                          "tag=1 type=psk identity=a key=00 tag=2", "tag=70000 type=psk identity=a key=00"}) {
    CAPTURE(bad);
    CHECK(code_of([&] { parse_credential_file(bad); }) == Errc::ParseError);
  }

  SecretStore store;
  Registry reg;
  auto added = install(specs, reg, store);
  CHECK(added.size() == 2);
  CHECK(reg.get(2, CredentialType::Psk).identity_string() == "other");

  std::string path = "credman_test.creds";
  {
    std::ofstream out(path);
    out << "tag=5 type=psk identity=file key=0102030405060708\n";
  }
  auto loaded = load_credential_file(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].tag == 5);
  std::remove(path.c_str());
  CHECK(code_of([&] { load_credential_file("/nonexistent/creds"); }) == Errc::IoError);
}

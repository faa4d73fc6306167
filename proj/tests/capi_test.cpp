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


// The C API, linked against the shared library the way a C caller would.

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "secstack/secstack.h"

namespace {

const std::uint8_t kPsk[] = {'s', 'e', 'c', 'r', 'e', 't', 'P', 'S', 'K'};

struct EchoTask {
  ss_dtls* sock;
  static int run(void* ctx) {
    auto* t = static_cast<EchoTask*>(ctx);
    size_t handled = 0;
    ss_dtls_service(t->sock, &handled);
    std::uint8_t buf[512];
    size_t len = 0;
    ss_session from{};
    while (ss_dtls_recv(t->sock, 0, &from, buf, sizeof buf, &len) == SS_OK) {
      ss_dtls_send(t->sock, &from, buf, len);
      ++handled;
    }
    return handled > 0;
  }
};

}  // namespace

TEST_CASE("status names and errors") {
  CHECK(std::string(ss_status_name(SS_OK)) == "Ok");
  CHECK(std::string(ss_status_name(SS_ERR_TIMEOUT)) == "Timeout");
  CHECK(std::string(ss_status_name(SS_ERR_BUFFER_TOO_SMALL)) == "BufferTooSmall");
  CHECK(std::string(ss_status_name(static_cast<ss_status>(180))) == "Unknown");
  CHECK(ss_network_create(nullptr, nullptr) == SS_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(ss_last_error()) > 0);
  CHECK(std::string(ss_version()) == "0.1.0");
  ss_network_destroy(nullptr);
  ss_udp_destroy(nullptr);
  ss_dtls_destroy(nullptr);
  ss_keyring_destroy(nullptr);
  ss_bench_destroy(nullptr);
}

TEST_CASE("udp over the simulated link") {
  ss_network* net = nullptr;
  REQUIRE(ss_network_create(nullptr, &net) == SS_OK);
  REQUIRE(ss_network_add_node(net, 1) == SS_OK);
  REQUIRE(ss_network_add_node(net, 2) == SS_OK);
  CHECK(ss_network_add_node(net, 2) == SS_ERR_EXISTS);
  ss_udp *a = nullptr, *b = nullptr, *dup = nullptr;
  REQUIRE(ss_udp_create_sim(net, 1, 7000, &a) == SS_OK);
  REQUIRE(ss_udp_create_sim(net, 2, 7001, &b) == SS_OK);
  CHECK(ss_udp_create_sim(net, 2, 7001, &dup) == SS_ERR_ADDR_IN_USE);
  CHECK(dup == nullptr);
  ss_endpoint local{};
  REQUIRE(ss_udp_local(a, &local) == SS_OK);
  CHECK(local.addr == 1);
  CHECK(local.port == 7000);

  std::vector<std::uint8_t> msg(200, 0x42);
  REQUIRE(ss_udp_send(a, ss_endpoint{2, 7001}, msg.data(), msg.size()) == SS_OK);
  std::uint8_t small[10];
  size_t len = 0;
  ss_endpoint from{};
  CHECK(ss_udp_recv(b, 1000000, &from, small, sizeof small, &len) == SS_ERR_BUFFER_TOO_SMALL);
  CHECK(len == 200);
  std::vector<std::uint8_t> buf(len);
  REQUIRE(ss_udp_recv(b, 0, &from, buf.data(), buf.size(), &len) == SS_OK);
  CHECK(buf == msg);
  CHECK(from.addr == 1);
  CHECK(from.port == 7000);
  CHECK(ss_udp_recv(b, 1000, &from, buf.data(), buf.size(), &len) == SS_ERR_TIMEOUT);
  CHECK(ss_network_now_us(net) > 0);

  ss_udp_destroy(a);
  ss_udp_destroy(b);
  ss_network_destroy(net);
}

TEST_CASE("keyring") {
  ss_keyring* ring = nullptr;
  REQUIRE(ss_keyring_create(2, &ring) == SS_OK);
  CHECK(ss_keyring_add_psk(ring, 1, "a", kPsk, sizeof kPsk) == SS_OK);
  CHECK(ss_keyring_add_psk(ring, 1, "b", kPsk, sizeof kPsk) == SS_ERR_EXISTS);
  CHECK(ss_keyring_add_psk(ring, 2, "b", kPsk, 0) == SS_ERR_INVALID_CREDENTIAL);
  CHECK(ss_keyring_add_psk(ring, 2, "b", kPsk, sizeof kPsk) == SS_OK);
  CHECK(ss_keyring_add_psk(ring, 3, "c", kPsk, sizeof kPsk) == SS_ERR_REGISTRY_FULL);
  CHECK(ss_keyring_size(ring) == 2);
  CHECK(ss_keyring_remove(ring, 2) == SS_OK);
  CHECK(ss_keyring_size(ring) == 1);

  std::string path = "capi_test_creds.txt";
  {
    std::ofstream f(path);
    f << "tag=5 type=psk identity=Client_identity key=73656372657450534b\n";
  }
  size_t added = 0;
  CHECK(ss_keyring_load_file(ring, path.c_str(), &added) == SS_OK);
  CHECK(added == 1);
  CHECK(ss_keyring_size(ring) == 2);
  {
    std::ofstream f(path);
    f << "tag=6 type=psk identity=x key=abc\n";
  }
  CHECK(ss_keyring_load_file(ring, path.c_str(), &added) == SS_ERR_PARSE);
  std::remove(path.c_str());
  ss_keyring_destroy(ring);
}

TEST_CASE("dtls echo through the C API") {
  for (const char* backend : {"minidtls", "nullsec"}) {
    CAPTURE(backend);
    ss_network* net = nullptr;
    REQUIRE(ss_network_create(nullptr, &net) == SS_OK);
    ss_network_add_node(net, 1);
    ss_network_add_node(net, 2);
    ss_keyring *sk = nullptr, *ck = nullptr;
    ss_keyring_create(0, &sk);
    ss_keyring_create(0, &ck);
    ss_keyring_add_psk(sk, 1, "Client_identity", kPsk, sizeof kPsk);
    ss_keyring_add_psk(ck, 1, "Client_identity", kPsk, sizeof kPsk);
    ss_udp *su = nullptr, *cu = nullptr;
    ss_udp_create_sim(net, 1, 5684, &su);
    ss_udp_create_sim(net, 2, 40000, &cu);

    ss_dtls *server = nullptr, *client = nullptr, *bad = nullptr;
    CHECK(ss_dtls_create(su, "tinydtls", SS_ROLE_SERVER, sk, 1, &bad) == SS_ERR_UNKNOWN_BACKEND);
    REQUIRE(ss_dtls_create(su, backend, SS_ROLE_SERVER, sk, 1, &server) == SS_OK);
    CHECK(ss_dtls_create(su, backend, SS_ROLE_SERVER, sk, 1, &bad) == SS_ERR_UDP_SOCK_IN_USE);
    REQUIRE(ss_dtls_create(cu, backend, SS_ROLE_CLIENT, ck, 2, &client) == SS_OK);
    CHECK(std::string(ss_dtls_backend_name(client)) == backend);
    CHECK(ss_dtls_init_server(client) == SS_ERR_NOT_SERVER);
    REQUIRE(ss_dtls_init_server(server) == SS_OK);

    EchoTask task{server};
    std::uint64_t id = 0;
    REQUIRE(ss_network_add_task(net, &EchoTask::run, &task, &id) == SS_OK);
    ss_session s{};
    REQUIRE(ss_dtls_connect(client, ss_endpoint{1, 5684}, 5000000, &s) == SS_OK);
    std::uint16_t tag = 0;
    CHECK(ss_dtls_session_credential(client, &s, &tag) == SS_OK);
    CHECK(tag == 1);
    CHECK(ss_dtls_max_payload(client) > 0);

    const std::uint8_t hello[] = {'h', 'e', 'l', 'l', 'o'};
    REQUIRE(ss_dtls_send(client, &s, hello, sizeof hello) == SS_OK);
    std::uint8_t buf[64];
    size_t len = 0;
    ss_session from{};
    REQUIRE(ss_dtls_recv(client, 5000000, &from, buf, sizeof buf, &len) == SS_OK);
    CHECK(len == sizeof hello);
    CHECK(std::memcmp(buf, hello, len) == 0);
    CHECK(from.slot == s.slot);
    CHECK(ss_dtls_session_count(server) == 1);

    REQUIRE(ss_dtls_close_session(client, &s) == SS_OK);
    CHECK(ss_dtls_send(client, &s, hello, sizeof hello) == SS_ERR_SESSION_CLOSED);
    ss_network_run_for(net, 1000000);
    CHECK(ss_dtls_session_count(server) == 0);
    CHECK(ss_network_remove_task(net, id) == SS_OK);

    ss_dtls_destroy(client);
    ss_dtls_destroy(server);
    ss_udp_destroy(cu);
    ss_udp_destroy(su);
    ss_keyring_destroy(ck);
    ss_keyring_destroy(sk);
    ss_network_destroy(net);
  }
}

TEST_CASE("a short benchmark") {
  ss_bench_config cfg;
  ss_bench_config_default(&cfg);
  CHECK(cfg.reps == 5000);
  cfg.reps = 100;
  cfg.warmup = 10;
  cfg.mean_groups = 1;
  cfg.payload_max = 100;
  cfg.variants = "udp,minidtls";
  cfg.with_overhead = 1;
  ss_bench* res = nullptr;
  REQUIRE(ss_bench_run(&cfg, &res) == SS_OK);
  CHECK(ss_bench_record_count(res) == 8);
  CHECK(ss_bench_overhead_count(res) == 4);
  ss_bench_record r{};
  REQUIRE(ss_bench_record_at(res, 0, &r) == SS_OK);
  CHECK(r.variant == SS_VARIANT_UDP);
  CHECK(r.payload == 25);
  CHECK_FALSE(r.has_dtls);
  CHECK(ss_bench_record_at(res, 8, &r) == SS_ERR_INVALID_ARGUMENT);
  CHECK(ss_bench_check_count(res) > 0);
  ss_bench_check c{};
  REQUIRE(ss_bench_check_at(res, 0, &c) == SS_OK);
  CHECK(std::string(c.name) == "record invariants");
  CHECK(ss_bench_write_csv(res, "/nonexistent/dir/out.csv") == SS_ERR_IO);
  ss_bench_destroy(res);

  cfg.variants = "udp,tls";
  CHECK(ss_bench_run(&cfg, &res) == SS_ERR_INVALID_ARGUMENT);
  cfg.variants = nullptr;
  cfg.reps = 0;
  CHECK(ss_bench_run(&cfg, &res) == SS_ERR_INVALID_ARGUMENT);
  CHECK(std::string(ss_variant_name(SS_VARIANT_NULLSEC)) == "nullsec");
}

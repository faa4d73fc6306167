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

#include <thread>

#include "doctest.h"
#include "errors.hpp"
#include "secstack/sock_udp.hpp"

using namespace secstack;
using test::code_of;
using namespace std::chrono_literals;

namespace {

Bytes pattern(std::size_t len) {
  Bytes b(len);
  for (std::size_t i = 0; i < len; ++i) b[i] = static_cast<std::uint8_t>(i * 7 + len);
  return b;
}

/// Finds a free loopback port pair.
std::pair<UdpSock, UdpSock> loopback_pair() {
  for (std::uint16_t p = 46000; p < 46400; p += 2) {
    try {
      auto a = UdpSock::create_loopback(p);
      auto b = UdpSock::create_loopback(static_cast<std::uint16_t>(p + 1));
      return {std::move(a), std::move(b)};
    } catch (const Error& e) {
      if (e.code() != Errc::AddrInUse) throw;
    }
  }
  throw Error(Errc::AddrInUse, "no free loopback ports");
}

}  // namespace

TEST_CASE("simulated sockets") {
  Network net;
  auto& a = net.add_node(1);
  auto& b = net.add_node(2);
  auto server = UdpSock::create(b, 5683);
  auto client = UdpSock::create(a, 40000);
  CHECK(server.local() == Endpoint{2, 5683});
  CHECK(server.mode() == UdpSock::Mode::Sim);

  SUBCASE("25 bytes") {
    CHECK(client.send({2, 5683}, pattern(25)) == 25);
    auto d = server.recv(1s);
    CHECK(d.data == pattern(25));
    CHECK(d.from == Endpoint{1, 40000});
  }
  SUBCASE("empty datagram") {
    CHECK(client.send({2, 5683}, {}) == 0);
    CHECK(server.recv(1s).data.empty());
  }
  SUBCASE("size cap") {
    CHECK(code_of([&] { client.send({2, 5683}, Bytes(4096, 0)); }) == Errc::PayloadTooLarge);
    CHECK(code_of([&] { client.send({2, 5683}, Bytes(kMaxUdpPayload + 1, 0)); }) == Errc::PayloadTooLarge);
    CHECK(client.send({2, 5683}, Bytes(kMaxUdpPayload, 5)) == kMaxUdpPayload);
    CHECK(server.recv(1s).data == Bytes(kMaxUdpPayload, 5));
  }
  SUBCASE("one socket per port") {
    CHECK(code_of([&] { UdpSock::create(b, 5683); }) == Errc::AddrInUse);
    CHECK(code_of([&] { UdpSock::create(b, 0); }) == Errc::InvalidArgument);
    CHECK_NOTHROW(UdpSock::create(a, 5683));
  }
  SUBCASE("closing frees the port") {
    server.close();
    CHECK_FALSE(server.is_open());
    CHECK_NOTHROW(UdpSock::create(b, 5683));
  }
  SUBCASE("idle receive times out") {
    TimePoint start = net.sim().now();
    CHECK(code_of([&] { server.recv(10ms); }) == Errc::Timeout);
    CHECK(net.sim().now() - start == 10ms);
    CHECK_FALSE(server.poll(10ms));
  }
  SUBCASE("FIFO per sender") {
    for (std::size_t i = 0; i < 8; ++i) client.send({2, 5683}, pattern(20 + 40 * i));
    for (std::size_t i = 0; i < 8; ++i) CHECK(server.recv(1s).data == pattern(20 + 40 * i));
  }
  SUBCASE("a full receive queue drops the newest datagram") {
    for (std::size_t i = 0; i < kUdpRecvQueueDepth + 3; ++i) {
      client.send({2, 5683}, Bytes{static_cast<std::uint8_t>(i)});
      net.sim().run_for(5ms);
    }
    CHECK(server.dropped() == 3);
    for (std::size_t i = 0; i < kUdpRecvQueueDepth; ++i) CHECK(server.recv(1s).data == Bytes{static_cast<std::uint8_t>(i)});
    CHECK_FALSE(server.poll(100ms));
  }
  SUBCASE("a node that is down refuses to send") {
    a.set_up(false);
    CHECK(code_of([&] { client.send({2, 5683}, pattern(4)); }) == Errc::StackDown);
    a.set_up(true);
    CHECK(client.send({2, 5683}, pattern(4)) == 4);
  }
  SUBCASE("unbound destination ports drop silently") {
    client.send({2, 9999}, pattern(4));
    net.sim().run_for(1s);
    CHECK(b.udp().no_port_drops() == 1);
  }
}

TEST_CASE("round trip identity over the simulated stack") {
  Network net;
  auto server = UdpSock::create(net.add_node(1), 7);
  auto client = UdpSock::create(net.add_node(2), 8);
  for (std::size_t len = 0; len <= kMaxUdpPayload; len += (len < 300 ? 1 : 37)) {
    client.send({1, 7}, pattern(len));
    auto d = server.recv(10s);
    REQUIRE(d.data == pattern(len));
    server.send(d.from, d.data);
    REQUIRE(client.recv(10s).data == pattern(len));
  }
}

TEST_CASE("udp checksum") {
  // One's-complement sum computed the slow way: add everything as one big
  // integer and fold once at the end.
  auto oracle = [](NodeId src, NodeId dst, const Bytes& seg) {
    std::uint64_t total = src + dst + seg.size() + 17;
    for (std::size_t i = 0; i < seg.size(); ++i) total += (i % 2 == 0 ? std::uint64_t{seg[i]} << 8 : seg[i]);
    while (total > 0xFFFF) total = (total % 0x10000) + (total / 0x10000);
    auto r = static_cast<std::uint16_t>(~total);
    return r == 0 ? std::uint16_t{0xFFFF} : r;
  };
  Rng rng(3);
  for (std::size_t len = 8; len < 200; ++len) {
    Bytes seg(len);
    rng.fill(seg);
    CHECK(udp_checksum(3, 4, seg) == oracle(3, 4, seg));
  }

  Network net;
  auto& a = net.add_node(1);
  auto& b = net.add_node(2);
  auto rx = UdpSock::create(b, 7);
  auto tx = UdpSock::create(a, 8);
  net.sim().enable_trace(true);
  tx.send({2, 7}, pattern(30));
  CHECK(rx.recv(1s).data == pattern(30));
  link::Frame f = net.sim().trace().at(0).frame;
  f.bytes.back() ^= 0x10;
  b.deliver(f);
  net.sim().run_for(1s);
  CHECK(b.udp().checksum_drops() == 1);
  CHECK_FALSE(rx.poll(Micros::zero()));
}

TEST_CASE("loopback sockets") {
  auto [a, b] = loopback_pair();
  CHECK(a.mode() == UdpSock::Mode::Loopback);
  CHECK(a.local().addr == kLoopbackAddr);
  CHECK(code_of([&] { UdpSock::create_loopback(a.local().port); }) == Errc::AddrInUse);
  CHECK(code_of([&] { UdpSock::create_loopback(0); }) == Errc::InvalidArgument);

  SUBCASE("round trip for every size up to the cap") {
    for (std::size_t len = 0; len <= kMaxUdpPayload; ++len) {
      CHECK(a.send(b.local(), pattern(len)) == len);
      auto d = b.recv(1s);
      REQUIRE(d.data == pattern(len));
      REQUIRE(d.from == a.local());
    }
  }
  SUBCASE("FIFO from one sender") {
    for (std::size_t i = 0; i < 6; ++i) a.send(b.local(), pattern(i + 1));
    for (std::size_t i = 0; i < 6; ++i) CHECK(b.recv(1s).data == pattern(i + 1));
  }
  SUBCASE("timeout") {
    auto start = std::chrono::steady_clock::now();
    CHECK(code_of([&] { b.recv(10ms); }) == Errc::Timeout);
    CHECK(std::chrono::steady_clock::now() - start >= 10ms);
  }
  SUBCASE("one sender and one receiver thread") {
    std::thread rx([&] {
      for (std::size_t i = 0; i < 100; ++i) CHECK(b.recv(2s).data.size() == i % 8 + 1);
    });
    for (std::size_t i = 0; i < 100; ++i) {
      a.send(b.local(), pattern(i % 8 + 1));
      std::this_thread::sleep_for(200us);
    }
    rx.join();
  }
}

TEST_CASE("send probe records the entry time") {
  Network net;
  auto s = UdpSock::create(net.add_node(1), 7);
  std::chrono::steady_clock::time_point probe{};
  s.set_send_probe(&probe);
  auto before = std::chrono::steady_clock::now();
  s.send({1, 8}, pattern(3));
  CHECK(probe >= before);
  CHECK(probe <= std::chrono::steady_clock::now());
}

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

// Shared parts of the echo demo binaries. Written against the C API only.
//
// stdout carries the application transcript and nothing else, so that runs
// under different backends can be compared byte for byte. Everything about
// the session goes to stderr.

#ifndef SECSTACK_TOOLS_ECHO_COMMON_HPP
#define SECSTACK_TOOLS_ECHO_COMMON_HPP

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "secstack/secstack.h"

namespace echo {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kLoopback = 0x7F000001;
inline constexpr std::uint16_t kServerNode = 1;
inline constexpr std::uint16_t kClientNode = 2;
inline constexpr std::uint16_t kClientPortBase = 40000;

struct Options {
  std::string backend = "minidtls";
  std::string creds;
  std::string transport = "sim";
  std::uint16_t port = 5684;
  std::vector<std::string> payload_hex;
  std::uint64_t seed = 1;
  double loss = 0.0;
  std::uint32_t timeout_ms = 10000;
  bool quiet = false;
};

inline void add_options(CLI::App& app, Options& o) {
  app.add_option("--backend", o.backend, "DTLS backend")->check(CLI::IsMember({"minidtls", "nullsec"}));
  app.add_option("--creds", o.creds, "credential file (tag=.. type=psk identity=.. key=<hex> per line)")
      ->check(CLI::ExistingFile);
  app.add_option("--transport", o.transport, "simulated link or host loopback")
      ->check(CLI::IsMember({"sim", "loopback"}));
  app.add_option("--port", o.port, "server UDP port");
  app.add_option("--payload-hex", o.payload_hex, "payload to echo, as hex; repeatable");
  app.add_option("--seed", o.seed, "handshake RNG seed");
  app.add_option("--loss", o.loss, "frame loss rate on the simulated link; application records are not retransmitted")->check(CLI::Range(0.0, 1.0));
  app.add_option("--timeout-ms", o.timeout_ms, "handshake and reply timeout");
  app.add_flag("-q,--quiet", o.quiet, "no session details on stderr");
}

[[noreturn]] inline void die(const std::string& what, ss_status s) {
  std::fprintf(stderr, "error: %s: %s (%s)\n", what.c_str(), ss_status_name(s), ss_last_error());
  std::exit(1);
}

inline void check(ss_status s, const std::string& what) {
  if (s != SS_OK) die(what, s);
}

inline Bytes from_hex(const std::string& hex) {
  if (hex.size() % 2) throw std::invalid_argument("odd-length hex '" + hex + "'");
  auto nibble = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("bad hex digit in '" + hex + "'");
  };
  Bytes out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>(nibble(hex[i]) << 4 | nibble(hex[i + 1])));
  }
  return out;
}

inline std::string to_hex(const Bytes& b) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (auto v : b) {
    s += digits[v >> 4];
    s += digits[v & 15];
  }
  return s;
}

inline std::vector<Bytes> payloads(const Options& o) {
  std::vector<Bytes> out;
  for (const auto& h : o.payload_hex) out.push_back(from_hex(h));
  if (out.empty()) out.push_back(from_hex("68656c6c6f"));  // "hello"
  return out;
}

/// The credential file, or the demo PSK when none is given.
inline ss_keyring* keyring(const Options& o) {
  ss_keyring* ring = nullptr;
  check(ss_keyring_create(0, &ring), "keyring");
  if (o.creds.empty()) {
    const std::uint8_t psk[] = {'s', 'e', 'c', 'r', 'e', 't', 'P', 'S', 'K'};
    check(ss_keyring_add_psk(ring, 1, "Client_identity", psk, sizeof psk), "demo credential");
  } else {
    check(ss_keyring_load_file(ring, o.creds.c_str(), nullptr), o.creds);
  }
  return ring;
}

inline std::string endpoint(const ss_endpoint& e) {
  if (e.addr == kLoopback) return "127.0.0.1:" + std::to_string(e.port);
  return "node" + std::to_string(e.addr) + ":" + std::to_string(e.port);
}

inline void note(const Options& o, const std::string& line) {
  if (!o.quiet) std::fprintf(stderr, "%s\n", line.c_str());
}

/// Answers every application payload with itself. Usable as a simulator
/// task: never blocks.
struct EchoServer {
  ss_dtls* sock = nullptr;
  const Options* opts = nullptr;
  bool print = false;
  std::size_t echoed = 0;

  void handle(const ss_session& from, const Bytes& data) {
    uint16_t tag = 0;
    check(ss_dtls_session_credential(sock, &from, &tag), "session info");
    note(*opts, "server: " + std::to_string(data.size()) + " B from " + endpoint(from.remote) + ", credential " +
                    std::to_string(tag));
    if (print) std::printf("recv %s\n", to_hex(data).c_str());
    check(ss_dtls_send(sock, &from, data.data(), data.size()), "send");
    if (print) std::printf("send %s\n", to_hex(data).c_str());
    std::fflush(stdout);
    ++echoed;
  }

  /// Waits up to `timeout_us` for one record. False on timeout.
  bool serve_one(std::uint64_t timeout_us) {
    Bytes buf(4096);
    size_t len = 0;
    ss_session from{};
    ss_status s = ss_dtls_recv(sock, timeout_us, &from, buf.data(), buf.size(), &len);
    if (s == SS_ERR_TIMEOUT) return false;
    check(s, "recv");
    buf.resize(len);
    handle(from, buf);
    return true;
  }

  bool step() {
    size_t handled = 0;
    check(ss_dtls_service(sock, &handled), "service");
    bool did = handled > 0;
    while (serve_one(0)) did = true;
    return did;
  }

  static int task(void* ctx) { return static_cast<EchoServer*>(ctx)->step() ? 1 : 0; }
};

/// Connects, sends every payload and waits for its echo. Returns the
/// process exit code.
inline int run_client(ss_dtls* sock, ss_endpoint server, const Options& o, bool print) {
  ss_session session{};
  check(ss_dtls_connect(sock, server, std::uint64_t{o.timeout_ms} * 1000, &session), "handshake");
  uint16_t tag = 0;
  check(ss_dtls_session_credential(sock, &session, &tag), "session info");
  note(o, std::string("client: session with ") + endpoint(server) + " via " + ss_dtls_backend_name(sock) +
              ", credential " + std::to_string(tag));
  int rc = 0;
  for (const Bytes& p : payloads(o)) {
    check(ss_dtls_send(sock, &session, p.data(), p.size()), "send");
    if (print) std::printf("send %s\n", to_hex(p).c_str());
    Bytes buf(4096);
    size_t len = 0;
    ss_session from{};
    check(ss_dtls_recv(sock, std::uint64_t{o.timeout_ms} * 1000, &from, buf.data(), buf.size(), &len), "reply");
    buf.resize(len);
    if (print) std::printf("recv %s\n", to_hex(buf).c_str());
    std::fflush(stdout);
    if (buf != p) {
      std::fprintf(stderr, "error: reply differs from the payload\n");
      rc = 1;
    }
  }
  check(ss_dtls_close_session(sock, &session), "close");
  return rc;
}

/// Both ends on one simulated link inside this process. `print_server`
/// picks which side's view goes to stdout.
inline int run_sim(const Options& o, bool print_server) {
  ss_link_config cfg;
  ss_link_config_default(&cfg);
  cfg.loss_rate = o.loss;
  cfg.rng_seed = o.seed;
  ss_network* net = nullptr;
  check(ss_network_create(&cfg, &net), "network");
  check(ss_network_add_node(net, kServerNode), "server node");
  check(ss_network_add_node(net, kClientNode), "client node");

  ss_keyring* server_ring = keyring(o);
  ss_keyring* client_ring = keyring(o);
  ss_udp *server_udp = nullptr, *client_udp = nullptr;
  check(ss_udp_create_sim(net, kServerNode, o.port, &server_udp), "server socket");
  check(ss_udp_create_sim(net, kClientNode, kClientPortBase, &client_udp), "client socket");
  ss_dtls *server = nullptr, *client = nullptr;
  check(ss_dtls_create(server_udp, o.backend.c_str(), SS_ROLE_SERVER, server_ring, o.seed * 2 + 1, &server),
        "server");
  check(ss_dtls_init_server(server), "init_server");
  check(ss_dtls_create(client_udp, o.backend.c_str(), SS_ROLE_CLIENT, client_ring, o.seed * 2 + 2, &client),
        "client");

  EchoServer echo{server, &o, print_server};
  check(ss_network_add_task(net, &EchoServer::task, &echo, nullptr), "server task");
  int rc = run_client(client, ss_endpoint{kServerNode, o.port}, o, !print_server);
  // Let the close_notify reach the server.
  check(ss_network_run_for(net, 1000000), "drain");
  note(o, "server: " + std::to_string(ss_dtls_session_count(server)) + " open sessions after close");

  ss_dtls_destroy(client);
  ss_dtls_destroy(server);
  ss_udp_destroy(client_udp);
  ss_udp_destroy(server_udp);
  ss_keyring_destroy(client_ring);
  ss_keyring_destroy(server_ring);
  ss_network_destroy(net);
  return rc;
}

}  // namespace echo

#endif  // SECSTACK_TOOLS_ECHO_COMMON_HPP

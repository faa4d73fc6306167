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


// dtls-echo-server: answers every DTLS application record with itself.
//
// On the simulated link the client is hosted in this process too, since the
// link exists only in memory; stdout then shows the server's side.

#include "echo_common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"DTLS echo server"};
  echo::Options o;
  std::size_t count = 0;
  std::uint32_t idle_s = 0;
  echo::add_options(app, o);
  app.add_option("--count", count, "exit after echoing this many payloads (0: run forever)");
  app.add_option("--idle-timeout", idle_s, "exit after this many seconds without traffic (0: never)");
  CLI11_PARSE(app, argc, argv);

  try {
    if (o.transport == "sim") return echo::run_sim(o, true);

    ss_keyring* ring = echo::keyring(o);
    ss_udp* udp = nullptr;
    echo::check(ss_udp_create_loopback(o.port, &udp), "bind 127.0.0.1:" + std::to_string(o.port));
    ss_dtls* sock = nullptr;
    echo::check(ss_dtls_create(udp, o.backend.c_str(), SS_ROLE_SERVER, ring, o.seed, &sock), "server");
    echo::check(ss_dtls_init_server(sock), "init_server");
    echo::note(o, std::string("server: listening on 127.0.0.1:") + std::to_string(o.port) + " via " +
                      ss_dtls_backend_name(sock));

    echo::EchoServer server{sock, &o, true};
    const std::uint64_t slice_us = 100000;
    std::uint64_t idle_us = 0;
    while (count == 0 || server.echoed < count) {
      if (server.serve_one(slice_us)) {
        idle_us = 0;
      } else if (idle_s && (idle_us += slice_us) >= std::uint64_t{idle_s} * 1000000) {
        echo::note(o, "server: idle timeout");
        break;
      }
    }

    ss_dtls_destroy(sock);
    ss_udp_destroy(udp);
    ss_keyring_destroy(ring);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

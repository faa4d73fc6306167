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


// dtls-echo-client: sends each payload over one DTLS session and checks that
// it comes back unchanged.

#include "echo_common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"DTLS echo client"};
  echo::Options o;
  echo::add_options(app, o);
  CLI11_PARSE(app, argc, argv);

  try {
    echo::payloads(o);  // reject bad hex before any network setup
    if (o.transport == "sim") return echo::run_sim(o, false);

    ss_keyring* ring = echo::keyring(o);
    ss_udp* udp = nullptr;
    ss_status s = SS_ERR_ADDR_IN_USE;
    for (std::uint32_t port = echo::kClientPortBase; s == SS_ERR_ADDR_IN_USE && port < 65536; ++port) {
      if (port == o.port) continue;
      s = ss_udp_create_loopback(static_cast<std::uint16_t>(port), &udp);
    }
    echo::check(s, "bind a local port");
    ss_dtls* sock = nullptr;
    echo::check(ss_dtls_create(udp, o.backend.c_str(), SS_ROLE_CLIENT, ring, o.seed, &sock), "client");
    int rc = echo::run_client(sock, ss_endpoint{echo::kLoopback, o.port}, o, true);

    ss_dtls_destroy(sock);
    ss_udp_destroy(udp);
    ss_keyring_destroy(ring);
    return rc;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

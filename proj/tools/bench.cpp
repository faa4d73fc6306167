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


// bench: payload sweep over the simulated stack for the UDP baseline and the
// DTLS backends. Writes one CSV row per (variant, payload) and prints the
// property checks to stderr. Exit status 2 when a gating check fails.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "secstack/secstack.h"

namespace {

int fail(const char* what, ss_status s) {
  std::fprintf(stderr, "error: %s: %s (%s)\n", what, ss_status_name(s), ss_last_error());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  ss_bench_config cfg;
  ss_bench_config_default(&cfg);
  std::string variants = "udp,minidtls,nullsec";
  std::string out = "results.csv";
  bool overhead = false;
  bool quiet = false;

  CLI::App app{"secstack payload sweep"};
  app.add_option("--min", cfg.payload_min, "smallest payload in bytes")->capture_default_str();
  app.add_option("--max", cfg.payload_max, "largest payload in bytes")->capture_default_str();
  app.add_option("--step", cfg.payload_step, "payload increment")->capture_default_str();
  app.add_option("--reps", cfg.reps, "packets per point")->capture_default_str();
  app.add_option("--variants", variants, "comma-separated: udp, minidtls, nullsec")->capture_default_str();
  app.add_option("--seed", cfg.seed, "packet content and handshake seed")->capture_default_str();
  app.add_option("--loss", cfg.loss_rate, "frame loss rate")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  app.add_option("--out", out, "CSV output path")->capture_default_str();
  app.add_option("--warmup", cfg.warmup, "untimed packets before each variant")->capture_default_str();
  app.add_option("--groups", cfg.mean_groups, "blocks for the median-of-means summary")->capture_default_str();
  app.add_option("--trim", cfg.trim, "fraction trimmed from each tail")
      ->check(CLI::Range(0.0, 0.49))
      ->capture_default_str();
  app.add_flag("--overhead", overhead, "also compare socket and direct backend time");
  app.add_flag("-q,--quiet", quiet, "only report failing checks");
  CLI11_PARSE(app, argc, argv);
  cfg.variants = variants.c_str();
  cfg.with_overhead = overhead;

  ss_bench* result = nullptr;
  if (ss_status s = ss_bench_run(&cfg, &result); s != SS_OK) return fail("sweep", s);
  if (ss_status s = ss_bench_write_csv(result, out.c_str()); s != SS_OK) {
    ss_bench_destroy(result);
    return fail(out.c_str(), s);
  }
  if (!quiet) std::fprintf(stderr, "wrote %zu records to %s\n", ss_bench_record_count(result), out.c_str());

  for (std::size_t i = 0; i < ss_bench_overhead_count(result); ++i) {
    ss_bench_overhead o;
    ss_bench_overhead_at(result, i, &o);
    if (!quiet) {
      std::fprintf(stderr, "overhead %-8s %4zu B  direct %.3f us  socket %.3f us  %+.2f%%\n",
                   ss_variant_name(o.variant), o.payload, o.direct_mean, o.socket_mean,
                   o.direct_mean > 0 ? (o.socket_mean / o.direct_mean - 1) * 100 : 0.0);
    }
  }

  int rc = 0;
  for (std::size_t i = 0; i < ss_bench_check_count(result); ++i) {
    ss_bench_check c;
    ss_bench_check_at(result, i, &c);
    if (!c.pass && c.gating) rc = 2;
    if (quiet && c.pass) continue;
    std::fprintf(stderr, "%s %s%s: %s\n", c.pass ? "PASS" : "FAIL", c.name, c.gating ? "" : " (info)", c.detail);
  }
  ss_bench_destroy(result);
  return rc;
}

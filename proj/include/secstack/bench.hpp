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

// Payload sweep over the simulated stack, timed on the host CPU.
//
// Two boundaries per packet, both starting at the send call:
//   t_full  ends when the last frame of the datagram reaches the link
//   t_dtls  ends when the record is handed to UdpSock::send
// Simulated link latency is in neither.

#ifndef SECSTACK_BENCH_HPP
#define SECSTACK_BENCH_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "secstack/common.hpp"

namespace secstack::bench {

enum class Variant : std::uint8_t { UdpBaseline, DtlsMini, DtlsNull };

/// "udp", "minidtls", "nullsec".
std::string_view to_string(Variant v);
/// Throws Errc::InvalidArgument.
Variant parse_variant(std::string_view name);
/// Comma-separated list. Throws Errc::InvalidArgument.
std::vector<Variant> parse_variants(std::string_view list);

struct SweepConfig {
  std::size_t payload_min = 25;
  std::size_t payload_max = 300;
  std::size_t payload_step = 25;
  std::size_t reps = 5000;
  std::vector<Variant> variants{Variant::UdpBaseline, Variant::DtlsMini, Variant::DtlsNull};
  std::uint64_t seed = 42;
  double loss_rate = 0.0;
  std::size_t warmup = 100;
  /// Blocks for the median-of-means estimate of the means; 1 uses one block.
  std::size_t mean_groups = 10;
  /// Fraction of samples dropped from each tail before the statistics, so
  /// that a packet preempted by the host OS does not dominate the std.
  double trim = 0.01;

  /// Throws Errc::InvalidArgument.
  void validate() const;
  std::vector<std::size_t> payloads() const;
};

struct BenchRecord {
  Variant variant = Variant::UdpBaseline;
  std::size_t payload = 0;
  // Means are median-of-means, stds come from successive_std().
  double t_full_mean = 0;  // microseconds
  double t_full_std = 0;
  std::optional<double> t_dtls_mean;  // absent for UdpBaseline
  std::optional<double> t_dtls_std;
  double goodput_mean = 0;  // kbit/s
  double frames = 0;        // link frames per packet
  friend bool operator==(const BenchRecord&, const BenchRecord&) = default;
};

struct PacketTiming {
  double t_full = 0;  // microseconds
  double t_dtls = 0;
  std::size_t frames = 0;
};

/// One variant's stack: two simulated nodes, and for the DTLS variants an
/// established session. measure() sends one packet and delivers it.
class Harness {
 public:
  Harness(Variant v, std::uint64_t seed, double loss_rate = 0.0);
  ~Harness();
  Harness(const Harness&) = delete;
  Harness& operator=(const Harness&) = delete;

  Variant variant() const;
  /// Through the socket API. Throws Errc::SendFailed.
  PacketTiming measure(ByteView payload);
  /// DTLS variants only: the same record built by calling the backend and
  /// UdpSock::send directly, with no socket in between.
  PacketTiming measure_direct(ByteView payload);
  /// Bytes of the UDP payload one application payload turns into.
  std::size_t datagram_size(std::size_t payload) const;
  std::uint64_t delivered() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct Summary {
  double mean = 0;
  double std = 0;
};

/// Mean and sample standard deviation (n - 1) after dropping the `trim`
/// fraction of samples from each tail. With `groups` > 1 the samples are cut
/// into that many contiguous blocks, each summarized on its own, and the
/// medians of the block means and block stds are reported; a burst of host
/// load then spoils one block instead of the whole point.
Summary summarize(const std::vector<double>& samples, std::size_t groups = 0, double trim = 0.0);

/// Per-sample standard deviation estimated from successive differences,
/// sqrt(var(x[i+1] - x[i]) / 2), after trimming 2 * `trim` of the
/// differences from each tail. Equals the sample std for independent
/// samples and ignores drift slower than the sampling interval.
double successive_std(const std::vector<double>& samples, double trim = 0.0);

/// One record per (variant, payload). Throws Errc::SendFailed when more
/// than 1% of a point's sends fail.
std::vector<BenchRecord> run_sweep(const SweepConfig& cfg);

/// DTLS time through the socket and through the backend directly, sampled
/// alternately at every payload.
struct OverheadRecord {
  Variant variant = Variant::DtlsMini;
  std::size_t payload = 0;
  double direct_mean = 0;
  double socket_mean = 0;
  double ratio() const { return direct_mean > 0 ? socket_mean / direct_mean : 0; }
};

std::vector<OverheadRecord> run_overhead(const SweepConfig& cfg);

inline constexpr std::string_view kCsvHeader =
    "variant,payload,t_full_mean,t_full_std,t_dtls_mean,t_dtls_std,goodput_mean,frames";

std::string to_csv(const std::vector<BenchRecord>& records);
/// Throws Errc::InvalidArgument for no records (and writes nothing),
/// Errc::IoError when the file cannot be written.
void emit_csv(const std::vector<BenchRecord>& records, const std::string& path);
/// Throws Errc::ParseError.
std::vector<BenchRecord> parse_csv(std::string_view text);

struct PropertyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
  /// Informational checks are reported but do not fail a run.
  bool gating = true;
};

/// Relative properties of a sweep. Checks that need a variant or an
/// overhead run that is absent are skipped. The overhead check is gating for
/// minidtls and informational for nullsec.
std::vector<PropertyCheck> check_properties(const std::vector<BenchRecord>& records,
                                            const std::vector<OverheadRecord>& overhead = {},
                                            double max_overhead = 0.05);

}  // namespace secstack::bench

#endif  // SECSTACK_BENCH_HPP

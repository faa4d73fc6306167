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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "errors.hpp"
#include "secstack/bench.hpp"
#include "secstack/linksim.hpp"
#include "secstack/sock_udp.hpp"

using namespace secstack;
using namespace secstack::bench;

namespace {

SweepConfig quick(std::size_t reps = 20) {
  SweepConfig c;
  c.reps = reps;
  c.warmup = 10;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

/// Textbook two-pass mean and n-1 standard deviation.
std::pair<double, double> naive(std::vector<double> v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double q = 0;
  for (double x : v) q += (x - m) * (x - m);
  return {m, std::sqrt(q / static_cast<double>(v.size() - 1))};
}

BenchRecord rec(Variant v, std::size_t payload, double full, double dtls, double goodput, double frames) {
  BenchRecord r;
  r.variant = v;
  r.payload = payload;
  r.t_full_mean = full;
  r.t_full_std = 0.01;
  if (v != Variant::UdpBaseline) {
    r.t_dtls_mean = dtls;
    r.t_dtls_std = 0.01;
  }
  r.goodput_mean = goodput;
  r.frames = frames;
  return r;
}

const PropertyCheck& find(const std::vector<PropertyCheck>& checks, const std::string& prefix) {
  for (const auto& c : checks) {
    if (c.name.rfind(prefix, 0) == 0) return c;
  }
  FAIL("no check named " << prefix);
  return checks.front();
}

}  // namespace

TEST_CASE("variant names") {
  CHECK(parse_variant("udp") == Variant::UdpBaseline);
  CHECK(parse_variant("minidtls") == Variant::DtlsMini);
  CHECK(parse_variant("nullsec") == Variant::DtlsNull);
  CHECK(test::code_of([] { parse_variant("tls"); }) == Errc::InvalidArgument);
  CHECK(parse_variants("nullsec,udp") == std::vector<Variant>{Variant::DtlsNull, Variant::UdpBaseline});
  CHECK(parse_variants("udp,udp") == std::vector<Variant>{Variant::UdpBaseline});
  CHECK(test::code_of([] { parse_variants(""); }) == Errc::InvalidArgument);
  CHECK(test::code_of([] { parse_variants("udp,,nullsec"); }) == Errc::InvalidArgument);
}

TEST_CASE("sweep config validation") {
  SweepConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.payloads() == std::vector<std::size_t>{25, 50, 75, 100, 125, 150, 175, 200, 225, 250, 275, 300});
  auto bad = [](auto mutate) {
    SweepConfig b;
    mutate(b);
    return test::code_of([&] { b.validate(); });
  };
  CHECK(bad([](SweepConfig& b) { b.payload_min = 301; }) == Errc::InvalidArgument);
  CHECK(bad([](SweepConfig& b) { b.payload_step = 0; }) == Errc::InvalidArgument);
  CHECK(bad([](SweepConfig& b) { b.reps = 1; }) == Errc::InvalidArgument);
  CHECK(bad([](SweepConfig& b) { b.variants.clear(); }) == Errc::InvalidArgument);
  CHECK(bad([](SweepConfig& b) { b.loss_rate = 1.5; }) == Errc::InvalidArgument);
  CHECK(bad([](SweepConfig& b) { b.trim = 0.5; }) == Errc::InvalidArgument);
  CHECK(bad([](SweepConfig& b) { b.payload_max = 4000; }) == Errc::InvalidArgument);
  CHECK(test::code_of([] { run_sweep(SweepConfig{.reps = 1}); }) == Errc::InvalidArgument);
}

TEST_CASE("summarize against a naive oracle") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> dist(1.0, 3.0);
  std::vector<double> v(1000);
  for (auto& x : v) x = dist(gen);

  auto [m, s] = naive(v);
  Summary plain = summarize(v);
  CHECK(plain.mean == doctest::Approx(m).epsilon(1e-12));
  CHECK(plain.std == doctest::Approx(s).epsilon(1e-12));

  SUBCASE("two samples") {
    Summary two = summarize({1.0, 2.0});
    CHECK(two.mean == 1.5);
    CHECK(two.std == doctest::Approx(std::sqrt(0.5)));
    CHECK(summarize({4.0}).std == 0.0);
  }
  SUBCASE("trimming drops the same count from each tail") {
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> kept(sorted.begin() + 50, sorted.end() - 50);
    auto [tm, ts] = naive(kept);
    Summary t = summarize(v, 0, 0.05);
    CHECK(t.mean == doctest::Approx(tm).epsilon(1e-12));
    CHECK(t.std == doctest::Approx(ts).epsilon(1e-12));
  }
  SUBCASE("median of block means") {
    std::vector<double> means, stds;
    for (int g = 0; g < 5; ++g) {
      auto [bm, bs] = naive(std::vector<double>(v.begin() + g * 200, v.begin() + (g + 1) * 200));
      means.push_back(bm);
      stds.push_back(bs);
    }
    std::sort(means.begin(), means.end());
    std::sort(stds.begin(), stds.end());
    Summary g = summarize(v, 5);
    CHECK(g.mean == doctest::Approx(means[2]).epsilon(1e-12));
    CHECK(g.std == doctest::Approx(stds[2]).epsilon(1e-12));
  }
  SUBCASE("one block far off moves the median little") {
    std::vector<double> spoiled = v;
    for (int i = 0; i < 100; ++i) spoiled[static_cast<std::size_t>(i)] += 50.0;
    CHECK(std::abs(summarize(spoiled, 10).mean - m) < 0.1);
    CHECK(summarize(spoiled).mean > m + 4.0);
  }
}

TEST_CASE("successive-difference std") {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> v(20000);
  for (auto& x : v) x = 5.0 + noise(gen);

  // Oracle: differences, sorted and trimmed, then the ordinary n - 1 std.
  auto oracle = [](const std::vector<double>& x, double trim) {
    std::vector<double> d;
    for (std::size_t i = 1; i < x.size(); ++i) d.push_back(x[i] - x[i - 1]);
    std::sort(d.begin(), d.end());
    auto cut = static_cast<std::ptrdiff_t>(static_cast<double>(d.size()) * 2 * trim);
    return naive(std::vector<double>(d.begin() + cut, d.end() - cut)).second / std::sqrt(2.0);
  };
  CHECK(successive_std(v) == doctest::Approx(oracle(v, 0.0)).epsilon(1e-12));
  CHECK(successive_std(v, 0.01) == doctest::Approx(oracle(v, 0.01)).epsilon(1e-12));
  CHECK(successive_std(v) == doctest::Approx(naive(v).second).epsilon(0.03));
  CHECK(successive_std({1.0, 2.0}) == 0.0);

  SUBCASE("a level shift leaves it alone") {
    std::vector<double> shifted = v;
    for (std::size_t i = v.size() / 2; i < v.size(); ++i) shifted[i] += 4.0;
    CHECK(naive(shifted).second > 2.0);
    CHECK(successive_std(shifted) == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("isolated spikes are trimmed") {
    std::vector<double> spiky = v;
    for (std::size_t i = 0; i < v.size(); i += 200) spiky[i] += 100.0;
    CHECK(successive_std(spiky) > 5.0);
    CHECK(successive_std(spiky, 0.01) < 1.1);
  }
}

TEST_CASE("harness frames follow the fragmentation formula") {
  link::LinkConfig link;
  for (Variant v : {Variant::UdpBaseline, Variant::DtlsMini, Variant::DtlsNull}) {
    CAPTURE(to_string(v));
    Harness h(v, 3);
    for (std::size_t len : {1, 25, 80, 83, 200, 300, 1000}) {
      CAPTURE(len);
      PacketTiming t = h.measure(Bytes(len, 0x42));
      std::size_t datagram = h.datagram_size(len) + kUdpHeaderLen + kIpHeaderLen;
      CHECK(t.frames == link::frame_count(datagram, link));
      CHECK(t.t_full > 0);
      CHECK(t.t_dtls <= t.t_full);
      if (v == Variant::UdpBaseline) CHECK(t.t_dtls == 0);
    }
    CHECK(h.delivered() == 7);
  }
  Harness mini(Variant::DtlsMini, 3);
  CHECK(mini.measure(Bytes(200, 0)).frames > mini.measure(Bytes(80, 0)).frames);
  CHECK(mini.datagram_size(25) == 46);
  CHECK(Harness(Variant::DtlsNull, 3).datagram_size(25) == 38);
  CHECK(mini.measure_direct(Bytes(80, 0)).frames == 2);
  Harness udp(Variant::UdpBaseline, 3);
  CHECK(udp.datagram_size(25) == 25);
  CHECK(test::code_of([&] { udp.measure_direct(Bytes(10, 0)); }) == Errc::InvalidArgument);
}

TEST_CASE("a lossy link still delivers most packets") {
  Harness h(Variant::DtlsMini, 9, 0.1);
  for (int i = 0; i < 200; ++i) h.measure(Bytes(50, 1));
  // 50 B fits one frame; each packet survives with probability 0.9.
  CHECK(h.delivered() > 150);
  CHECK(h.delivered() < 200);
}

TEST_CASE("sweep shape") {
  SUBCASE("default config gives 36 records") {
    SweepConfig c;
    auto records = run_sweep(c);
    REQUIRE(records.size() == 36);
    for (const auto& r : records) {
      CAPTURE(to_string(r.variant));
      CAPTURE(r.payload);
      CHECK(r.t_full_std >= 0);
      CHECK(r.goodput_mean > 0);
      CHECK(r.t_dtls_mean.has_value() == (r.variant != Variant::UdpBaseline));
      if (r.t_dtls_mean) CHECK(*r.t_dtls_mean <= r.t_full_mean);
    }
  }
  SUBCASE("two reps at one size") {
    SweepConfig c = quick(2);
    c.payload_min = c.payload_max = 25;
    auto records = run_sweep(c);
    REQUIRE(records.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(records[i].variant == c.variants[i]);
      CHECK(records[i].payload == 25);
      CHECK(std::isfinite(records[i].t_full_std));
      CHECK(records[i].frames == 1);
    }
  }
  SUBCASE("a chosen subset of variants") {
    SweepConfig c = quick();
    c.variants = {Variant::DtlsNull};
    c.payload_min = 100;
    c.payload_max = 150;
    auto records = run_sweep(c);
    REQUIRE(records.size() == 3);
    CHECK(records[0].variant == Variant::DtlsNull);
  }
}

TEST_CASE("overhead run pairs every DTLS point") {
  SweepConfig c = quick(50);
  auto ov = run_overhead(c);
  CHECK(ov.size() == 24);
  for (const auto& o : ov) {
    CHECK(o.variant != Variant::UdpBaseline);
    CHECK(o.direct_mean > 0);
    CHECK(o.socket_mean > 0);
  }
  c.variants = {Variant::UdpBaseline};
  CHECK(run_overhead(c).empty());
}

TEST_CASE("CSV") {
  auto dir = std::filesystem::temp_directory_path() / "secstack_bench_test";
  std::filesystem::create_directories(dir);

  std::vector<BenchRecord> records;
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> d(0.0, 100.0);
  for (Variant v : {Variant::UdpBaseline, Variant::DtlsMini, Variant::DtlsNull}) {
    for (std::size_t p = 25; p <= 300; p += 25) records.push_back(rec(v, p, d(gen), d(gen) / 3, d(gen) * 1e4, 1 + p / 96));
  }
  REQUIRE(records.size() == 36);

  auto path = dir / "out.csv";
  emit_csv(records, path.string());
  std::string text = slurp(path);
  CHECK(count_lines(text) == 37);
  CHECK(text.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  CHECK(text.find("\nudp,25,") != std::string::npos);
  CHECK(parse_csv(text) == records);

  // The baseline has no DTLS columns.
  auto first = text.substr(text.find('\n') + 1);
  first = first.substr(0, first.find('\n'));
  CHECK(first.find(",,,") != std::string::npos);

  auto none = dir / "none.csv";
  std::filesystem::remove(none);
  CHECK(test::code_of([&] { emit_csv({}, none.string()); }) == Errc::InvalidArgument);
  CHECK_FALSE(std::filesystem::exists(none));
  CHECK(test::code_of([&] { emit_csv(records, (dir / "missing" / "x.csv").string()); }) == Errc::IoError);

  CHECK(test::code_of([] { parse_csv(""); }) == Errc::ParseError);
  CHECK(test::code_of([] { parse_csv("variant,payload\n"); }) == Errc::ParseError);
  std::string header(kCsvHeader);
  CHECK(test::code_of([&] { parse_csv(header + "\ntls,25,1,1,1,1,1,1\n"); }) == Errc::ParseError);
  CHECK(test::code_of([&] { parse_csv(header + "\nudp,25,1,1,,,1\n"); }) == Errc::ParseError);
  CHECK(test::code_of([&] { parse_csv(header + "\nudp,25,1,x,,,1,1\n"); }) == Errc::ParseError);
  CHECK(parse_csv(header + "\r\nudp,25,1,0.5,,,2,1\r\n").size() == 1);

  std::filesystem::remove_all(dir);
}

TEST_CASE("property checks see violations") {
  std::vector<BenchRecord> good;
  // Full time steps with the frame count; DTLS time rises slowly.
  for (std::size_t p = 25; p <= 300; p += 25) {
    double frames = p < 75 ? 1 : p < 175 ? 2 : 3;
    good.push_back(rec(Variant::UdpBaseline, p, 1 + frames, 0, static_cast<double>(p) * 100, frames));
    good.push_back(rec(Variant::DtlsMini, p, 2 + frames, 1 + static_cast<double>(p) / 10000,
                       static_cast<double>(p) * 50, frames));
    good.push_back(rec(Variant::DtlsNull, p, 1.1 + frames, 0.1, static_cast<double>(p) * 90, frames));
  }
  std::vector<OverheadRecord> ov{{Variant::DtlsMini, 25, 1.0, 1.02}, {Variant::DtlsNull, 25, 0.1, 0.2}};
  auto checks = check_properties(good, ov);
  for (const auto& c : checks) {
    CAPTURE(c.name);
    if (c.name.find("nullsec") != std::string::npos && c.name.find("overhead") != std::string::npos) {
      CHECK_FALSE(c.pass);
      CHECK_FALSE(c.gating);
    } else {
      CHECK(c.pass);
      CHECK(c.gating);
    }
  }
  CHECK(checks.size() == 12);

  auto mutate = [&](auto f) {
    auto copy = good;
    for (auto& r : copy) f(r);
    return check_properties(copy, ov);
  };
  CHECK_FALSE(find(mutate([](BenchRecord& r) {
                     if (r.variant == Variant::DtlsMini && r.payload == 300) r.goodput_mean = 1;
                   }),
                   "goodput rises: minidtls")
                  .pass);
  CHECK_FALSE(find(mutate([](BenchRecord& r) {
                     if (r.variant == Variant::DtlsMini) r.goodput_mean *= 3;
                   }),
                   "minidtls goodput <= udp")
                  .pass);
  CHECK_FALSE(find(mutate([](BenchRecord& r) {
                     if (r.variant == Variant::DtlsNull) r.t_dtls_mean = 5;
                   }),
                   "nullsec t_dtls <")
                  .pass);
  // A dip within one std is forgiven, a larger one is not.
  CHECK(find(mutate([](BenchRecord& r) {
               if (r.variant == Variant::DtlsMini && r.payload == 100) *r.t_dtls_mean -= 0.009;
             }),
             "minidtls t_dtls monotone")
            .pass);
  CHECK_FALSE(find(mutate([](BenchRecord& r) {
                     if (r.variant == Variant::DtlsMini && r.payload == 100) *r.t_dtls_mean -= 0.2;
                   }),
                   "minidtls t_dtls monotone")
                  .pass);
  CHECK_FALSE(find(mutate([](BenchRecord& r) { r.t_full_std = 1.0; }), "minidtls t_full jumps").pass);
  CHECK_FALSE(find(mutate([](BenchRecord& r) {
                     if (r.variant == Variant::DtlsMini && r.payload >= 75) *r.t_dtls_mean += 1.0;
                   }),
                   "minidtls t_dtls has no jump")
                  .pass);
  CHECK_FALSE(find(mutate([](BenchRecord& r) { r.frames = 1; }), "minidtls frame count steps").pass);
  CHECK_FALSE(find(mutate([](BenchRecord& r) { r.t_full_std = -1; }), "record invariants").pass);

  std::vector<OverheadRecord> slow{{Variant::DtlsMini, 25, 1.0, 1.06}};
  auto c = find(check_properties(good, slow), "abstraction overhead <= 5%: minidtls");
  CHECK_FALSE(c.pass);
  CHECK(c.gating);
  CHECK(c.detail.find("25 B") != std::string::npos);
}

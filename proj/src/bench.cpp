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

#include "secstack/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "secstack/backend_select.hpp"
#include "secstack/sock_dtls.hpp"

namespace secstack::bench {

namespace {

using Clock = std::chrono::steady_clock;

constexpr Endpoint kServer{1, 5684};
constexpr Endpoint kSink{1, 9};
constexpr Endpoint kClient{2, 40000};
constexpr std::uint16_t kDirectPort = 40001;

double micros(Clock::duration d) { return std::chrono::duration<double, std::micro>(d).count(); }

dtls::BackendId backend_of(Variant v) {
  return v == Variant::DtlsMini ? dtls::BackendId::MiniDtls : dtls::BackendId::NullSec;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::UdpBaseline: return "udp";
    case Variant::DtlsMini: return "minidtls";
    case Variant::DtlsNull: return "nullsec";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::UdpBaseline, Variant::DtlsMini, Variant::DtlsNull}) {
    if (to_string(v) == name) return v;
  }
  throw Error(Errc::InvalidArgument, "unknown variant '" + std::string(name) + "'");
}

std::vector<Variant> parse_variants(std::string_view list) {
  std::vector<Variant> out;
  while (!list.empty()) {
    auto comma = list.find(',');
    Variant v = parse_variant(list.substr(0, comma));
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  if (out.empty()) throw Error(Errc::InvalidArgument, "no variants given");
  return out;
}

void SweepConfig::validate() const {
  if (payload_min > payload_max) throw Error(Errc::InvalidArgument, "payload_min > payload_max");
  if (payload_step == 0) throw Error(Errc::InvalidArgument, "payload_step must be positive");
  if (reps < 2) throw Error(Errc::InvalidArgument, "reps must be at least 2");
  if (variants.empty()) throw Error(Errc::InvalidArgument, "no variants");
  if (!(loss_rate >= 0.0 && loss_rate <= 1.0)) throw Error(Errc::InvalidArgument, "loss_rate outside [0, 1]");
  if (!(trim >= 0.0 && trim < 0.5)) throw Error(Errc::InvalidArgument, "trim outside [0, 0.5)");
  if (payload_max > kMaxUdpPayload - dtls::kRecordHeaderLen - 8) {
    throw Error(Errc::InvalidArgument, "payload_max does not fit one record");
  }
}

std::vector<std::size_t> SweepConfig::payloads() const {
  std::vector<std::size_t> out;
  for (std::size_t p = payload_min; p <= payload_max; p += payload_step) out.push_back(p);
  return out;
}

struct Harness::Impl {
  Variant variant;
  Network net;
  std::shared_ptr<const dtls::Backend> backend;
  credman::SecretStore store;
  credman::Registry client_reg{1};
  credman::Registry server_reg{1};
  std::optional<UdpSock> server_udp, client_udp, sink_udp, direct_udp;
  std::unique_ptr<DtlsSock> server, client;
  DtlsSession session;
  dtls::RecordState direct_state;
  // Receiving end of the direct path, so that both paths do the same work
  // between sends.
  dtls::RecordState direct_rx;
  Clock::time_point probe{};
  std::uint64_t delivered = 0;

  Impl(Variant v, std::uint64_t seed, double loss) : variant(v), net(link_config(seed, loss)) {
    auto& sn = net.add_node(kServer.addr);
    auto& cn = net.add_node(kClient.addr);
    sink_udp.emplace(UdpSock::create(sn, kSink.port));
    client_udp.emplace(UdpSock::create(cn, kClient.port));
    client_udp->set_send_probe(&probe);
    if (v == Variant::UdpBaseline) return;

    backend = dtls::backend_select(backend_of(v));
    server_udp.emplace(UdpSock::create(sn, kServer.port));
    direct_udp.emplace(UdpSock::create(cn, kDirectPort));
    direct_udp->set_send_probe(&probe);

    const Bytes psk = {0x73, 0x65, 0x63, 0x72, 0x65, 0x74, 0x50, 0x53, 0x4b};
    auto ref = store.put(psk);
    server_reg.add(credman::Credential::psk(1, "Client_identity", ref));
    client_reg.add(credman::Credential::psk(1, "Client_identity", ref));
    DtlsSockOptions so;
    so.rng_seed = seed * 2 + 1;
    server = std::make_unique<DtlsSock>(*server_udp, backend, dtls::Role::Server, server_reg, so);
    so.rng_seed = seed * 2 + 2;
    client = std::make_unique<DtlsSock>(*client_udp, backend, dtls::Role::Client, client_reg, so);
    const CredentialTag tag{1, credman::CredentialType::Psk};
    server->register_credential_tags({tag});
    server->init_server();
    client->register_credential_tags({tag});

    auto& sim = net.sim();
    auto task = sim.add_task([this] { return server->service() > 0; });
    session = client->establish_session(kServer, std::chrono::minutes(10));
    sim.run_all();
    sim.remove_task(task);
    server->service();

    Rng rng(seed);
    direct_state.role = dtls::Role::Client;
    direct_state.keys = dtls::derive_keys(psk, rng.bytes<32>(), rng.bytes<32>());
    direct_rx.role = dtls::Role::Server;
    direct_rx.keys = direct_state.keys;
  }

  static link::LinkConfig link_config(std::uint64_t seed, double loss) {
    link::LinkConfig cfg;
    cfg.rng_seed = seed;
    cfg.loss_rate = loss;
    return cfg;
  }

  /// Runs the sender's stack until the datagram is on the link, then
  /// delivers and drains it.
  PacketTiming finish(Clock::time_point start, std::uint64_t frames_before, bool dtls_part) {
    auto& sim = net.sim();
    sim.pump();
    PacketTiming t;
    t.t_full = micros(sim.last_tx_host_time() - start);
    t.t_dtls = dtls_part ? micros(probe - start) : 0.0;
    t.frames = static_cast<std::size_t>(sim.stats().frames_sent - frames_before);
    sim.run_all();
    while (auto d = sink_udp->poll(Micros::zero())) {
      if (!backend || backend->unprotect(direct_rx, d->data).status == dtls::RecordStatus::Ok) ++delivered;
    }
    if (server) {
      while (server->try_recv(Micros::zero())) ++delivered;
    }
    return t;
  }
};

Harness::Harness(Variant v, std::uint64_t seed, double loss_rate)
    : impl_(std::make_unique<Impl>(v, seed, loss_rate)) {}
Harness::~Harness() = default;

Variant Harness::variant() const { return impl_->variant; }
std::uint64_t Harness::delivered() const { return impl_->delivered; }

std::size_t Harness::datagram_size(std::size_t payload) const {
  return payload + (impl_->backend ? impl_->backend->record_overhead() : 0);
}

PacketTiming Harness::measure(ByteView payload) {
  auto& m = *impl_;
  std::uint64_t frames = m.net.sim().stats().frames_sent;
  Clock::time_point start = Clock::now();
  if (m.variant == Variant::UdpBaseline) {
    m.client_udp->send(kSink, payload);
  } else {
    m.client->send(m.session, payload);
  }
  return m.finish(start, frames, m.variant != Variant::UdpBaseline);
}

PacketTiming Harness::measure_direct(ByteView payload) {
  auto& m = *impl_;
  if (!m.backend) throw Error(Errc::InvalidArgument, "the UDP baseline has no DTLS part");
  std::uint64_t frames = m.net.sim().stats().frames_sent;
  Clock::time_point start = Clock::now();
  Bytes record = m.backend->protect(m.direct_state, payload);
  m.direct_udp->send(kSink, record);
  return m.finish(start, frames, true);
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

Summary plain_summary(std::vector<double> samples, double trim) {
  Summary s;
  auto cut = static_cast<std::size_t>(static_cast<double>(samples.size()) * trim);
  if (cut > 0 && 2 * cut < samples.size()) {
    std::sort(samples.begin(), samples.end());
    samples.erase(samples.end() - static_cast<std::ptrdiff_t>(cut), samples.end());
    samples.erase(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(cut));
  }
  if (samples.empty()) return s;
  double n = static_cast<double>(samples.size());
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double sq = 0;
  for (double x : samples) sq += (x - s.mean) * (x - s.mean);
  s.std = samples.size() > 1 ? std::sqrt(sq / (n - 1)) : 0.0;
  return s;
}

}  // namespace

Summary summarize(const std::vector<double>& samples, std::size_t groups, double trim) {
  if (groups <= 1 || samples.size() < 2 * groups) return plain_summary(samples, trim);
  std::vector<double> means, stds;
  std::size_t per = samples.size() / groups;
  for (std::size_t g = 0; g < groups; ++g) {
    auto first = samples.begin() + static_cast<std::ptrdiff_t>(g * per);
    auto last = g + 1 == groups ? samples.end() : first + static_cast<std::ptrdiff_t>(per);
    Summary part = plain_summary(std::vector<double>(first, last), trim);
    means.push_back(part.mean);
    stds.push_back(part.std);
  }
  return {median(means), median(stds)};
}

double successive_std(const std::vector<double>& samples, double trim) {
  if (samples.size() < 3) return 0.0;
  std::vector<double> d;
  d.reserve(samples.size() - 1);
  for (std::size_t i = 1; i < samples.size(); ++i) d.push_back(samples[i] - samples[i - 1]);
  // One outlying sample makes two outlying differences.
  return plain_summary(std::move(d), 2 * trim).std / std::sqrt(2.0);
}

namespace {

Bytes packet(Rng& rng, std::size_t len) {
  Bytes b(len);
  rng.fill(b);
  return b;
}

void warm_up(Harness& h, Rng& rng, std::size_t count, std::size_t len, bool direct = false) {
  for (std::size_t i = 0; i < count; ++i) {
    Bytes p = packet(rng, len);
    direct ? h.measure_direct(p) : h.measure(p);
  }
}

}  // namespace

std::vector<BenchRecord> run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  struct Point {
    std::vector<double> full, dtls;
    double frames = 0;
    std::uint64_t delivered = 0;
    std::size_t failures = 0;
  };
  const auto payloads = cfg.payloads();
  std::vector<std::vector<Point>> points(cfg.variants.size(), std::vector<Point>(payloads.size()));
  Rng rng(cfg.seed);
  for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
    Harness h(cfg.variants[v], cfg.seed, cfg.loss_rate);
    warm_up(h, rng, cfg.warmup, cfg.payload_min);
    // Round-robin over the payloads so that slow drift of the host shows
    // up as noise on every point rather than as a trend across them.
    for (std::size_t i = 0; i < cfg.reps; ++i) {
      for (std::size_t p = 0; p < payloads.size(); ++p) {
        Point& pt = points[v][p];
        Bytes data = packet(rng, payloads[p]);
        std::uint64_t before = h.delivered();
        try {
          PacketTiming t = h.measure(data);
          pt.full.push_back(t.t_full);
          pt.dtls.push_back(t.t_dtls);
          pt.frames += static_cast<double>(t.frames);
          pt.delivered += h.delivered() - before;
        } catch (const Error& e) {
          if (++pt.failures * 100 > cfg.reps) {
            throw Error(Errc::SendFailed, std::string(to_string(h.variant())) + " at " +
                                              std::to_string(payloads[p]) + " B: more than 1% of sends failed (" +
                                              e.what() + ")");
          }
        }
      }
    }
  }

  std::vector<BenchRecord> out;
  for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
    for (std::size_t p = 0; p < payloads.size(); ++p) {
      const Point& pt = points[v][p];
      BenchRecord r;
      r.variant = cfg.variants[v];
      r.payload = payloads[p];
      Summary sf = summarize(pt.full, cfg.mean_groups, cfg.trim);
      r.t_full_mean = sf.mean;
      r.t_full_std = successive_std(pt.full, cfg.trim);
      if (r.variant != Variant::UdpBaseline) {
        Summary sd = summarize(pt.dtls, cfg.mean_groups, cfg.trim);
        r.t_dtls_mean = sd.mean;
        r.t_dtls_std = successive_std(pt.dtls, cfg.trim);
      }
      double sent = static_cast<double>(pt.full.size());
      double bits = 8.0 * static_cast<double>(r.payload);
      // bits per microsecond is Mbit/s.
      r.goodput_mean = sf.mean > 0 ? bits / sf.mean * 1000.0 * (static_cast<double>(pt.delivered) / sent) : 0.0;
      r.frames = pt.frames / sent;
      out.push_back(r);
    }
  }
  return out;
}

std::vector<OverheadRecord> run_overhead(const SweepConfig& cfg) {
  cfg.validate();
  const auto payloads = cfg.payloads();
  std::vector<OverheadRecord> out;
  for (Variant v : cfg.variants) {
    if (v == Variant::UdpBaseline) continue;
    Harness h(v, cfg.seed, cfg.loss_rate);
    Rng rng(cfg.seed);
    warm_up(h, rng, cfg.warmup, cfg.payload_min);
    warm_up(h, rng, cfg.warmup, cfg.payload_min, true);
    std::vector<std::vector<double>> direct(payloads.size()), sock(payloads.size());
    for (std::size_t i = 0; i < cfg.reps; ++i) {
      for (std::size_t p = 0; p < payloads.size(); ++p) {
        Bytes data = packet(rng, payloads[p]);
        // Alternate which path goes first so neither always runs warm.
        if (i % 2) {
          direct[p].push_back(h.measure_direct(data).t_dtls);
          sock[p].push_back(h.measure(data).t_dtls);
        } else {
          sock[p].push_back(h.measure(data).t_dtls);
          direct[p].push_back(h.measure_direct(data).t_dtls);
        }
      }
    }
    for (std::size_t p = 0; p < payloads.size(); ++p) {
      OverheadRecord r;
      r.variant = v;
      r.payload = payloads[p];
      // The two paths are sampled in pairs, so a burst of host load hits both
      // and the plain trimmed mean is the tighter comparison.
      r.direct_mean = summarize(direct[p], 1, cfg.trim).mean;
      r.socket_mean = summarize(sock[p], 1, cfg.trim).mean;
      out.push_back(r);
    }
  }
  return out;
}

namespace {

void put_number(std::string& s, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  s.append(buf, res.ptr);
}

double get_number(std::string_view field) {
  double v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw Error(Errc::ParseError, "bad number '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::string to_csv(const std::vector<BenchRecord>& records) {
  std::string s(kCsvHeader);
  s += '\n';
  for (const auto& r : records) {
    s += to_string(r.variant);
    s += ',' + std::to_string(r.payload) + ',';
    put_number(s, r.t_full_mean);
    s += ',';
    put_number(s, r.t_full_std);
    s += ',';
    if (r.t_dtls_mean) put_number(s, *r.t_dtls_mean);
    s += ',';
    if (r.t_dtls_std) put_number(s, *r.t_dtls_std);
    s += ',';
    put_number(s, r.goodput_mean);
    s += ',';
    put_number(s, r.frames);
    s += '\n';
  }
  return s;
}

void emit_csv(const std::vector<BenchRecord>& records, const std::string& path) {
  if (records.empty()) throw Error(Errc::InvalidArgument, "no records to write");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path);
  out << to_csv(records);
  if (!out.flush()) throw Error(Errc::IoError, "cannot write " + path);
}

std::vector<BenchRecord> parse_csv(std::string_view text) {
  std::vector<BenchRecord> out;
  bool header = true;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != kCsvHeader) throw Error(Errc::ParseError, "unexpected CSV header");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    while (true) {
      auto comma = line.find(',');
      f.push_back(line.substr(0, comma));
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (f.size() != 8) throw Error(Errc::ParseError, "expected 8 fields");
    BenchRecord r;
    try {
      r.variant = parse_variant(f[0]);
    } catch (const Error&) {
      throw Error(Errc::ParseError, "unknown variant '" + std::string(f[0]) + "'");
    }
    r.payload = static_cast<std::size_t>(get_number(f[1]));
    r.t_full_mean = get_number(f[2]);
    r.t_full_std = get_number(f[3]);
    if (!f[4].empty()) r.t_dtls_mean = get_number(f[4]);
    if (!f[5].empty()) r.t_dtls_std = get_number(f[5]);
    r.goodput_mean = get_number(f[6]);
    r.frames = get_number(f[7]);
    out.push_back(r);
  }
  if (header) throw Error(Errc::ParseError, "empty CSV");
  return out;
}

namespace {

std::vector<const BenchRecord*> curve(const std::vector<BenchRecord>& records, Variant v) {
  std::vector<const BenchRecord*> out;
  for (const auto& r : records) {
    if (r.variant == v) out.push_back(&r);
  }
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->payload < b->payload; });
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

std::vector<PropertyCheck> check_properties(const std::vector<BenchRecord>& records,
                                            const std::vector<OverheadRecord>& overhead, double max_overhead) {
  std::vector<PropertyCheck> out;
  auto udp = curve(records, Variant::UdpBaseline);
  auto mini = curve(records, Variant::DtlsMini);
  auto null = curve(records, Variant::DtlsNull);

  {
    PropertyCheck c{"record invariants", true, ""};
    for (const auto& r : records) {
      bool ok = r.t_full_std >= 0 && (!r.t_dtls_mean || (*r.t_dtls_mean <= r.t_full_mean && *r.t_dtls_std >= 0));
      if (!ok) {
        c.pass = false;
        c.detail = std::string(to_string(r.variant)) + " at " + std::to_string(r.payload) + " B";
        break;
      }
    }
    out.push_back(c);
  }

  for (auto* cv : {&udp, &mini, &null}) {
    if (cv->size() < 2) continue;
    const BenchRecord& lo = *cv->front();
    const BenchRecord& hi = *cv->back();
    out.push_back({"goodput rises: " + std::string(to_string(lo.variant)), hi.goodput_mean > lo.goodput_mean,
                   fmt(lo.goodput_mean) + " kbit/s at " + std::to_string(lo.payload) + " B, " +
                       fmt(hi.goodput_mean) + " kbit/s at " + std::to_string(hi.payload) + " B"});
  }

  if (!udp.empty() && !mini.empty()) {
    PropertyCheck c{"minidtls goodput <= udp goodput", true, ""};
    for (auto* m : mini) {
      for (auto* u : udp) {
        if (u->payload == m->payload && m->goodput_mean > u->goodput_mean) {
          c.pass = false;
          c.detail += std::to_string(m->payload) + " B ";
        }
      }
    }
    out.push_back(c);
  }

  if (!mini.empty() && !null.empty()) {
    PropertyCheck c{"nullsec t_dtls < minidtls t_dtls", true, ""};
    for (auto* m : mini) {
      for (auto* n : null) {
        if (n->payload == m->payload && !(*n->t_dtls_mean < *m->t_dtls_mean)) {
          c.pass = false;
          c.detail += std::to_string(m->payload) + " B ";
        }
      }
    }
    out.push_back(c);
  }

  if (mini.size() >= 2) {
    // Non-decreasing, forgiving a point that sits below an earlier one by
    // no more than its own std.
    PropertyCheck c{"minidtls t_dtls monotone", true, ""};
    double peak = *mini[0]->t_dtls_mean;
    for (std::size_t i = 1; i < mini.size(); ++i) {
      double v = *mini[i]->t_dtls_mean;
      if (peak - v > *mini[i]->t_dtls_std) {
        c.pass = false;
        c.detail += std::to_string(mini[i]->payload) + " B ";
      }
      peak = std::max(peak, v);
    }
    out.push_back(c);
  }

  if (mini.size() >= 2) {
    PropertyCheck frames{"minidtls frame count steps", false, ""};
    PropertyCheck full{"minidtls t_full jumps > 2 std at a frame step", false, ""};
    PropertyCheck dtls_flat{"minidtls t_dtls has no jump > 2 std at a frame step", true, ""};
    for (std::size_t i = 1; i < mini.size(); ++i) {
      const BenchRecord& a = *mini[i - 1];
      const BenchRecord& b = *mini[i];
      if (b.frames < a.frames) frames.detail += "drop at " + std::to_string(b.payload) + " B ";
      if (b.frames <= a.frames) continue;
      frames.pass = true;
      double jump = b.t_full_mean - a.t_full_mean;
      double sd = std::max(a.t_full_std, b.t_full_std);
      full.detail += std::to_string(a.payload) + "->" + std::to_string(b.payload) + " B: " + fmt(jump) + " us vs " +
                     fmt(sd) + " us; ";
      if (jump > 2 * sd) full.pass = true;
      double djump = *b.t_dtls_mean - *a.t_dtls_mean;
      double dsd = std::max(*a.t_dtls_std, *b.t_dtls_std);
      if (djump > 2 * dsd) {
        dtls_flat.pass = false;
        dtls_flat.detail += std::to_string(b.payload) + " B ";
      }
    }
    if (frames.detail.find("drop") != std::string::npos) frames.pass = false;
    out.push_back(frames);
    out.push_back(full);
    out.push_back(dtls_flat);
  }

  for (Variant v : {Variant::DtlsMini, Variant::DtlsNull}) {
    PropertyCheck c{"abstraction overhead <= " + fmt(max_overhead * 100) + "%: " + std::string(to_string(v)), true,
                    ""};
    double worst = 0;
    bool any = false;
    for (const auto& o : overhead) {
      if (o.variant != v) continue;
      any = true;
      worst = std::max(worst, o.ratio() - 1.0);
      if (o.ratio() > 1.0 + max_overhead) {
        c.pass = false;
        c.detail += std::to_string(o.payload) + " B ";
      }
    }
    if (!any) continue;
    c.detail += "worst " + fmt(worst * 100) + "%";
    // nullsec's DTLS time is a copy of a few tens of ns, in which a handful
    // of ns of socket bookkeeping is already several percent.
    c.gating = v == Variant::DtlsMini;
    out.push_back(c);
  }
  return out;
}

}  // namespace secstack::bench

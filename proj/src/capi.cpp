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

#include "secstack/secstack.h"

#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "secstack/backend_select.hpp"
#include "secstack/bench.hpp"
#include "secstack/credman.hpp"
#include "secstack/sock_dtls.hpp"
#include "secstack/sock_udp.hpp"

using namespace secstack;

struct ss_network {
  Network net;
  explicit ss_network(link::LinkConfig cfg) : net(cfg) {}
};

struct ss_udp {
  UdpSock sock;
  std::optional<Datagram> pending;
};

struct ss_keyring {
  credman::SecretStore store;
  credman::Registry registry;
  std::vector<CredentialTag> tags;
  explicit ss_keyring(std::size_t capacity) : registry(capacity) {}
};

struct ss_dtls {
  std::unique_ptr<DtlsSock> sock;
  std::optional<std::pair<DtlsSession, Bytes>> pending;
  std::string backend_name;
};

struct ss_bench {
  std::vector<bench::BenchRecord> records;
  std::vector<bench::OverheadRecord> overhead;
  std::vector<bench::PropertyCheck> checks;
};

namespace {

thread_local std::string t_last_error;

ss_status fail(ss_status s, const std::string& what) {
  t_last_error = what;
  return s;
}

/// Runs `f`, turning exceptions into status codes.
template <typename F>
ss_status guarded(F&& f) {
  try {
    f();
    return SS_OK;
  } catch (const Error& e) {
    return fail(static_cast<ss_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SS_ERR_INTERNAL, e.what());
  }
}

ss_status null_arg(const char* what) { return fail(SS_ERR_INVALID_ARGUMENT, std::string(what) + " is NULL"); }

Endpoint from_c(ss_endpoint e) { return {e.addr, e.port}; }
ss_endpoint to_c(const Endpoint& e) { return {e.addr, e.port}; }

DtlsSession from_c(const ss_session& s) { return {s.slot, s.generation, from_c(s.remote)}; }
ss_session to_c(const DtlsSession& s) { return {s.slot, s.generation, to_c(s.remote)}; }

Micros micros(std::uint64_t us) { return Micros(static_cast<Micros::rep>(us)); }

link::LinkConfig from_c(const ss_link_config& c) {
  link::LinkConfig l;
  l.link_mtu = c.link_mtu;
  l.mac_overhead = c.mac_overhead;
  l.frag1_hdr = c.frag1_hdr;
  l.fragn_hdr = c.fragn_hdr;
  l.loss_rate = c.loss_rate;
  l.latency = c.latency_ms;
  l.rng_seed = c.rng_seed;
  return l;
}

void to_c(const link::LinkConfig& l, ss_link_config* c) {
  c->link_mtu = l.link_mtu;
  c->mac_overhead = l.mac_overhead;
  c->frag1_hdr = l.frag1_hdr;
  c->fragn_hdr = l.fragn_hdr;
  c->loss_rate = l.loss_rate;
  c->latency_ms = l.latency;
  c->rng_seed = l.rng_seed;
}

/// Copies a payload out, or keeps it and reports the size needed.
ss_status deliver(const Bytes& data, std::uint8_t* buf, std::size_t cap, std::size_t* len, bool& keep) {
  *len = data.size();
  if (data.size() > cap) {
    keep = true;
    return fail(SS_ERR_BUFFER_TOO_SMALL,
                std::to_string(data.size()) + " byte datagram, buffer holds " + std::to_string(cap));
  }
  keep = false;
  if (!data.empty()) std::memcpy(buf, data.data(), data.size());
  return SS_OK;
}

}  // namespace

extern "C" {

const char* ss_status_name(ss_status status) {
  switch (status) {
    case SS_OK: return "Ok";
    case SS_ERR_BUFFER_TOO_SMALL: return "BufferTooSmall";
    case SS_ERR_INTERNAL: return "Internal";
    default: break;
  }
  // errc_name returns views of string literals.
  std::string_view n = errc_name(static_cast<Errc>(status));
  return n.empty() ? "Unknown" : n.data();
}

const char* ss_last_error(void) { return t_last_error.c_str(); }

const char* ss_version(void) { return "0.1.0"; }

// ---- network ----

void ss_link_config_default(ss_link_config* cfg) {
  if (cfg) to_c(link::LinkConfig{}, cfg);
}

ss_status ss_link_config_load(const char* path, ss_link_config* cfg) {
  if (!path) return null_arg("path");
  if (!cfg) return null_arg("cfg");
  return guarded([&] { to_c(link::load_link_config(path), cfg); });
}

ss_status ss_network_create(const ss_link_config* cfg, ss_network** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    link::LinkConfig l = cfg ? from_c(*cfg) : link::LinkConfig{};
    l.validate();
    *out = new ss_network(l);
  });
}

void ss_network_destroy(ss_network* net) { delete net; }

ss_status ss_network_add_node(ss_network* net, uint16_t node) {
  if (!net) return null_arg("net");
  return guarded([&] { net->net.add_node(node); });
}

ss_status ss_network_run_for(ss_network* net, uint64_t us) {
  if (!net) return null_arg("net");
  return guarded([&] { net->net.sim().run_for(micros(us)); });
}

uint64_t ss_network_now_us(const ss_network* net) {
  if (!net) return 0;
  return static_cast<uint64_t>(const_cast<ss_network*>(net)->net.sim().now().count());
}

ss_status ss_network_add_task(ss_network* net, ss_task_fn fn, void* ctx, uint64_t* task_id) {
  if (!net) return null_arg("net");
  if (!fn) return null_arg("fn");
  return guarded([&] {
    auto id = net->net.sim().add_task([fn, ctx] { return fn(ctx) != 0; });
    if (task_id) *task_id = id;
  });
}

ss_status ss_network_remove_task(ss_network* net, uint64_t task_id) {
  if (!net) return null_arg("net");
  return guarded([&] { net->net.sim().remove_task(static_cast<link::Simulator::TaskId>(task_id)); });
}

// ---- UDP ----

ss_status ss_udp_create_sim(ss_network* net, uint16_t node, uint16_t port, ss_udp** out) {
  if (!net) return null_arg("net");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new ss_udp{UdpSock::create(net->net.node(node), port), std::nullopt}; });
}

ss_status ss_udp_create_loopback(uint16_t port, ss_udp** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new ss_udp{UdpSock::create_loopback(port), std::nullopt}; });
}

void ss_udp_destroy(ss_udp* udp) { delete udp; }

ss_status ss_udp_local(const ss_udp* udp, ss_endpoint* out) {
  if (!udp) return null_arg("udp");
  if (!out) return null_arg("out");
  return guarded([&] { *out = to_c(udp->sock.local()); });
}

ss_status ss_udp_send(ss_udp* udp, ss_endpoint to, const uint8_t* data, size_t len) {
  if (!udp) return null_arg("udp");
  if (!data && len) return null_arg("data");
  return guarded([&] { udp->sock.send(from_c(to), ByteView(data, len)); });
}

ss_status ss_udp_recv(ss_udp* udp, uint64_t timeout_us, ss_endpoint* from, uint8_t* buf, size_t cap,
                      size_t* len) {
  if (!udp) return null_arg("udp");
  if (!len) return null_arg("len");
  if (!buf && cap) return null_arg("buf");
  ss_status s = guarded([&] {
    if (!udp->pending) udp->pending = udp->sock.recv(micros(timeout_us));
  });
  if (s != SS_OK) return s;
  if (from) *from = to_c(udp->pending->from);
  bool keep = false;
  s = deliver(udp->pending->data, buf, cap, len, keep);
  if (!keep) udp->pending.reset();
  return s;
}

// ---- credentials ----

ss_status ss_keyring_create(size_t capacity, ss_keyring** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new ss_keyring(capacity ? capacity : credman::kCredmanMax); });
}

void ss_keyring_destroy(ss_keyring* ring) { delete ring; }

ss_status ss_keyring_add_psk(ss_keyring* ring, uint16_t tag, const char* identity, const uint8_t* key,
                             size_t key_len) {
  if (!ring) return null_arg("ring");
  if (!identity) return null_arg("identity");
  if (!key && key_len) return null_arg("key");
  return guarded([&] {
    auto cred = credman::Credential::psk(tag, identity, credman::SecretRef{});
    if (ring->registry.find(tag, credman::CredentialType::Psk)) {
      throw Error(Errc::Exists, "tag " + std::to_string(tag) + " is already registered");
    }
    cred.secret = ring->store.put(ByteView(key, key_len));
    ring->registry.add(cred);
    ring->tags.push_back({tag, credman::CredentialType::Psk});
  });
}

ss_status ss_keyring_load_file(ss_keyring* ring, const char* path, size_t* added) {
  if (!ring) return null_arg("ring");
  if (!path) return null_arg("path");
  return guarded([&] {
    auto specs = credman::load_credential_file(path);
    auto tags = credman::install(specs, ring->registry, ring->store);
    for (const auto& [tag, type] : tags) {
      if (type == credman::CredentialType::Psk) ring->tags.push_back({tag, type});
    }
    if (added) *added = tags.size();
  });
}

ss_status ss_keyring_remove(ss_keyring* ring, uint16_t tag) {
  if (!ring) return null_arg("ring");
  return guarded([&] {
    if (!ring->registry.find(tag, credman::CredentialType::Psk)) {
      throw Error(Errc::NotFound, "no PSK with tag " + std::to_string(tag));
    }
    ring->registry.remove(tag, credman::CredentialType::Psk);
    std::erase_if(ring->tags, [&](const CredentialTag& t) { return t.first == tag; });
  });
}

size_t ss_keyring_size(const ss_keyring* ring) { return ring ? ring->registry.size() : 0; }

// ---- DTLS ----

ss_status ss_dtls_create(ss_udp* udp, const char* backend, ss_role role, const ss_keyring* ring, uint64_t seed,
                         ss_dtls** out) {
  if (!udp) return null_arg("udp");
  if (!backend) return null_arg("backend");
  if (!ring) return null_arg("ring");
  if (!out) return null_arg("out");
  if (role != SS_ROLE_CLIENT && role != SS_ROLE_SERVER) return fail(SS_ERR_INVALID_ARGUMENT, "unknown role");
  *out = nullptr;
  return guarded([&] {
    auto b = dtls::backend_select(std::string_view(backend));
    DtlsSockOptions opts;
    opts.rng_seed = seed;
    auto sock = std::make_unique<DtlsSock>(udp->sock, b, role == SS_ROLE_SERVER ? dtls::Role::Server : dtls::Role::Client,
                                           ring->registry, opts);
    sock->register_credential_tags(ring->tags);
    *out = new ss_dtls{std::move(sock), std::nullopt, std::string(dtls::to_string(b->id()))};
  });
}

void ss_dtls_destroy(ss_dtls* sock) { delete sock; }

ss_status ss_dtls_init_server(ss_dtls* sock) {
  if (!sock) return null_arg("sock");
  return guarded([&] { sock->sock->init_server(); });
}

ss_status ss_dtls_connect(ss_dtls* sock, ss_endpoint remote, uint64_t timeout_us, ss_session* out) {
  if (!sock) return null_arg("sock");
  if (!out) return null_arg("out");
  return guarded([&] { *out = to_c(sock->sock->establish_session(from_c(remote), micros(timeout_us))); });
}

ss_status ss_dtls_send(ss_dtls* sock, const ss_session* session, const uint8_t* data, size_t len) {
  if (!sock) return null_arg("sock");
  if (!session) return null_arg("session");
  if (!data && len) return null_arg("data");
  return guarded([&] { sock->sock->send(from_c(*session), ByteView(data, len)); });
}

ss_status ss_dtls_recv(ss_dtls* sock, uint64_t timeout_us, ss_session* from, uint8_t* buf, size_t cap,
                       size_t* len) {
  if (!sock) return null_arg("sock");
  if (!len) return null_arg("len");
  if (!buf && cap) return null_arg("buf");
  ss_status s = guarded([&] {
    if (!sock->pending) sock->pending = sock->sock->recv(micros(timeout_us));
  });
  if (s != SS_OK) return s;
  if (from) *from = to_c(sock->pending->first);
  bool keep = false;
  s = deliver(sock->pending->second, buf, cap, len, keep);
  if (!keep) sock->pending.reset();
  return s;
}

ss_status ss_dtls_service(ss_dtls* sock, size_t* handled) {
  if (!sock) return null_arg("sock");
  return guarded([&] {
    std::size_t n = sock->sock->service();
    if (handled) *handled = n;
  });
}

ss_status ss_dtls_close_session(ss_dtls* sock, const ss_session* session) {
  if (!sock) return null_arg("sock");
  if (!session) return null_arg("session");
  return guarded([&] { sock->sock->close_session(from_c(*session)); });
}

ss_status ss_dtls_session_credential(const ss_dtls* sock, const ss_session* session, uint16_t* tag) {
  if (!sock) return null_arg("sock");
  if (!session) return null_arg("session");
  if (!tag) return null_arg("tag");
  return guarded([&] { *tag = sock->sock->info(from_c(*session)).credential_used.first; });
}

size_t ss_dtls_session_count(const ss_dtls* sock) { return sock ? sock->sock->session_count() : 0; }

size_t ss_dtls_max_payload(const ss_dtls* sock) { return sock ? sock->sock->max_payload() : 0; }

const char* ss_dtls_backend_name(const ss_dtls* sock) { return sock ? sock->backend_name.c_str() : ""; }

// ---- benchmark ----

void ss_bench_config_default(ss_bench_config* cfg) {
  if (!cfg) return;
  bench::SweepConfig d;
  cfg->payload_min = d.payload_min;
  cfg->payload_max = d.payload_max;
  cfg->payload_step = d.payload_step;
  cfg->reps = d.reps;
  cfg->variants = nullptr;
  cfg->seed = d.seed;
  cfg->loss_rate = d.loss_rate;
  cfg->warmup = d.warmup;
  cfg->mean_groups = d.mean_groups;
  cfg->trim = d.trim;
  cfg->with_overhead = 0;
}

ss_status ss_bench_run(const ss_bench_config* cfg, ss_bench** out) {
  if (!cfg) return null_arg("cfg");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    bench::SweepConfig c;
    c.payload_min = cfg->payload_min;
    c.payload_max = cfg->payload_max;
    c.payload_step = cfg->payload_step;
    c.reps = cfg->reps;
    if (cfg->variants) c.variants = bench::parse_variants(cfg->variants);
    c.seed = cfg->seed;
    c.loss_rate = cfg->loss_rate;
    c.warmup = cfg->warmup;
    c.mean_groups = cfg->mean_groups;
    c.trim = cfg->trim;
    auto result = std::make_unique<ss_bench>();
    result->records = bench::run_sweep(c);
    if (cfg->with_overhead) result->overhead = bench::run_overhead(c);
    result->checks = bench::check_properties(result->records, result->overhead);
    *out = result.release();
  });
}

void ss_bench_destroy(ss_bench* result) { delete result; }

size_t ss_bench_record_count(const ss_bench* result) { return result ? result->records.size() : 0; }

ss_status ss_bench_record_at(const ss_bench* result, size_t index, ss_bench_record* out) {
  if (!result) return null_arg("result");
  if (!out) return null_arg("out");
  if (index >= result->records.size()) return fail(SS_ERR_INVALID_ARGUMENT, "record index out of range");
  const auto& r = result->records[index];
  out->variant = static_cast<ss_variant>(r.variant);
  out->payload = r.payload;
  out->t_full_mean = r.t_full_mean;
  out->t_full_std = r.t_full_std;
  out->has_dtls = r.t_dtls_mean.has_value();
  out->t_dtls_mean = r.t_dtls_mean.value_or(0.0);
  out->t_dtls_std = r.t_dtls_std.value_or(0.0);
  out->goodput_mean = r.goodput_mean;
  out->frames = r.frames;
  return SS_OK;
}

size_t ss_bench_overhead_count(const ss_bench* result) { return result ? result->overhead.size() : 0; }

ss_status ss_bench_overhead_at(const ss_bench* result, size_t index, ss_bench_overhead* out) {
  if (!result) return null_arg("result");
  if (!out) return null_arg("out");
  if (index >= result->overhead.size()) return fail(SS_ERR_INVALID_ARGUMENT, "overhead index out of range");
  const auto& o = result->overhead[index];
  *out = {static_cast<ss_variant>(o.variant), o.payload, o.direct_mean, o.socket_mean};
  return SS_OK;
}

size_t ss_bench_check_count(const ss_bench* result) { return result ? result->checks.size() : 0; }

ss_status ss_bench_check_at(const ss_bench* result, size_t index, ss_bench_check* out) {
  if (!result) return null_arg("result");
  if (!out) return null_arg("out");
  if (index >= result->checks.size()) return fail(SS_ERR_INVALID_ARGUMENT, "check index out of range");
  const auto& c = result->checks[index];
  *out = {c.name.c_str(), c.pass ? 1 : 0, c.gating ? 1 : 0, c.detail.c_str()};
  return SS_OK;
}

ss_status ss_bench_write_csv(const ss_bench* result, const char* path) {
  if (!result) return null_arg("result");
  if (!path) return null_arg("path");
  return guarded([&] { bench::emit_csv(result->records, path); });
}

const char* ss_variant_name(ss_variant variant) {
  switch (variant) {
    case SS_VARIANT_UDP:
    case SS_VARIANT_MINIDTLS:
    case SS_VARIANT_NULLSEC: return bench::to_string(static_cast<bench::Variant>(variant)).data();
  }
  return "?";
}

}  // extern "C"

/* Copyright 2026 The secstack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to libsecstack.
 *
 * Every object is an opaque handle created by an ss_*_create function and
 * released by the matching ss_*_destroy, which accepts NULL. Functions
 * return an ss_status; on failure ss_last_error() describes the most recent
 * error on the calling thread.
 *
 * Lifetimes: a network outlives its UDP sockets, a UDP socket and a keyring
 * outlive every DTLS socket created on them, and a DTLS socket must not be
 * used from two threads at once.
 */

#ifndef SECSTACK_SECSTACK_H
#define SECSTACK_SECSTACK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SS_API __declspec(dllexport)
#else
#define SS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ss_status {
  SS_OK = 0,
  SS_ERR_INVALID_ARGUMENT = 1,
  SS_ERR_DUPLICATE_NAME,
  SS_ERR_UNKNOWN_NEIGHBOR,
  SS_ERR_NO_NEIGHBOR,
  SS_ERR_ACK_TIMEOUT,
  SS_ERR_UNKNOWN_KEY,
  SS_ERR_DATAGRAM_TOO_LARGE,
  SS_ERR_REASSEMBLY_TIMEOUT,
  SS_ERR_OVERLAP_MISMATCH,
  SS_ERR_ADDR_IN_USE,
  SS_ERR_PAYLOAD_TOO_LARGE,
  SS_ERR_STACK_DOWN,
  SS_ERR_TIMEOUT,
  SS_ERR_REGISTRY_FULL,
  SS_ERR_EXISTS,
  SS_ERR_INVALID_CREDENTIAL,
  SS_ERR_NOT_FOUND,
  SS_ERR_STALE_SECRET,
  SS_ERR_PARSE,
  SS_ERR_HANDSHAKE_FAILED,
  SS_ERR_EMPTY_PSK,
  SS_ERR_SEQ_EXHAUSTED,
  SS_ERR_AUTH_FAILED,
  SS_ERR_REPLAY_DETECTED,
  SS_ERR_DECODE,
  SS_ERR_UNKNOWN_BACKEND,
  SS_ERR_UDP_SOCK_IN_USE,
  SS_ERR_TOO_MANY_TAGS,
  SS_ERR_EMPTY_TAG_LIST,
  SS_ERR_NOT_SERVER,
  SS_ERR_NOT_CLIENT,
  SS_ERR_NO_CREDENTIALS,
  SS_ERR_SESSION_TABLE_FULL,
  SS_ERR_SESSION_CLOSED,
  SS_ERR_IO,
  SS_ERR_SEND_FAILED,
  SS_ERR_CLOSED,
  /* The caller's buffer cannot hold the datagram; *len holds the size
   * needed and the datagram is kept for the next call. */
  SS_ERR_BUFFER_TOO_SMALL = 200,
  SS_ERR_INTERNAL = 255
} ss_status;

SS_API const char* ss_status_name(ss_status status);
/* Message of the last failed call on this thread; "" if none. */
SS_API const char* ss_last_error(void);
SS_API const char* ss_version(void);

typedef struct ss_endpoint {
  uint32_t addr; /* node id on the simulated link, IPv4 address on loopback */
  uint16_t port;
} ss_endpoint;

/* ---- simulated network ---- */

typedef struct ss_network ss_network;

typedef struct ss_link_config {
  uint32_t link_mtu;
  uint32_t mac_overhead;
  uint32_t frag1_hdr;
  uint32_t fragn_hdr;
  double loss_rate;
  uint32_t latency_ms;
  uint64_t rng_seed;
} ss_link_config;

SS_API void ss_link_config_default(ss_link_config* cfg);
/* Reads key=value lines. */
SS_API ss_status ss_link_config_load(const char* path, ss_link_config* cfg);

/* cfg may be NULL for the defaults. */
SS_API ss_status ss_network_create(const ss_link_config* cfg, ss_network** out);
SS_API void ss_network_destroy(ss_network* net);
SS_API ss_status ss_network_add_node(ss_network* net, uint16_t node);
/* Advances simulated time, running every due event and task. */
SS_API ss_status ss_network_run_for(ss_network* net, uint64_t micros);
SS_API uint64_t ss_network_now_us(const ss_network* net);

/* A task runs whenever the simulator looks for work and returns nonzero
 * if it did some. It must not destroy the network. */
typedef int (*ss_task_fn)(void* ctx);
SS_API ss_status ss_network_add_task(ss_network* net, ss_task_fn fn, void* ctx, uint64_t* task_id);
SS_API ss_status ss_network_remove_task(ss_network* net, uint64_t task_id);

/* ---- UDP ---- */

typedef struct ss_udp ss_udp;

SS_API ss_status ss_udp_create_sim(ss_network* net, uint16_t node, uint16_t port, ss_udp** out);
/* Binds 127.0.0.1:port on the host. */
SS_API ss_status ss_udp_create_loopback(uint16_t port, ss_udp** out);
SS_API void ss_udp_destroy(ss_udp* udp);
SS_API ss_status ss_udp_local(const ss_udp* udp, ss_endpoint* out);
SS_API ss_status ss_udp_send(ss_udp* udp, ss_endpoint to, const uint8_t* data, size_t len);
SS_API ss_status ss_udp_recv(ss_udp* udp, uint64_t timeout_us, ss_endpoint* from, uint8_t* buf, size_t cap,
                             size_t* len);

/* ---- credentials ---- */

/* A secret store plus a registry that references, not copies, its keys. */
typedef struct ss_keyring ss_keyring;

SS_API ss_status ss_keyring_create(size_t capacity, ss_keyring** out);
SS_API void ss_keyring_destroy(ss_keyring* ring);
SS_API ss_status ss_keyring_add_psk(ss_keyring* ring, uint16_t tag, const char* identity, const uint8_t* key,
                                    size_t key_len);
/* Lines of `tag=<int> type=psk identity=<utf8> key=<hex>`. */
SS_API ss_status ss_keyring_load_file(ss_keyring* ring, const char* path, size_t* added);
SS_API ss_status ss_keyring_remove(ss_keyring* ring, uint16_t tag);
SS_API size_t ss_keyring_size(const ss_keyring* ring);

/* ---- DTLS ---- */

typedef struct ss_dtls ss_dtls;

typedef enum ss_role { SS_ROLE_CLIENT = 0, SS_ROLE_SERVER = 1 } ss_role;

typedef struct ss_session {
  uint16_t slot;
  uint32_t generation;
  ss_endpoint remote;
} ss_session;

/* backend is "minidtls", "nullsec" or "backend=<name>". seed 0 draws one
 * from the OS. Every PSK in the keyring is registered with the socket. */
SS_API ss_status ss_dtls_create(ss_udp* udp, const char* backend, ss_role role, const ss_keyring* ring,
                                uint64_t seed, ss_dtls** out);
SS_API void ss_dtls_destroy(ss_dtls* sock);
SS_API ss_status ss_dtls_init_server(ss_dtls* sock);
SS_API ss_status ss_dtls_connect(ss_dtls* sock, ss_endpoint remote, uint64_t timeout_us, ss_session* out);
SS_API ss_status ss_dtls_send(ss_dtls* sock, const ss_session* session, const uint8_t* data, size_t len);
SS_API ss_status ss_dtls_recv(ss_dtls* sock, uint64_t timeout_us, ss_session* from, uint8_t* buf, size_t cap,
                              size_t* len);
/* Handles queued datagrams and due timers without waiting. */
SS_API ss_status ss_dtls_service(ss_dtls* sock, size_t* handled);
SS_API ss_status ss_dtls_close_session(ss_dtls* sock, const ss_session* session);
SS_API ss_status ss_dtls_session_credential(const ss_dtls* sock, const ss_session* session, uint16_t* tag);
SS_API size_t ss_dtls_session_count(const ss_dtls* sock);
SS_API size_t ss_dtls_max_payload(const ss_dtls* sock);
SS_API const char* ss_dtls_backend_name(const ss_dtls* sock);

/* ---- benchmark ---- */

typedef enum ss_variant { SS_VARIANT_UDP = 0, SS_VARIANT_MINIDTLS = 1, SS_VARIANT_NULLSEC = 2 } ss_variant;

typedef struct ss_bench_config {
  size_t payload_min;
  size_t payload_max;
  size_t payload_step;
  size_t reps;
  const char* variants; /* comma-separated, NULL for all three */
  uint64_t seed;
  double loss_rate;
  size_t warmup;
  size_t mean_groups;
  double trim;
  int with_overhead; /* also time the backend without the socket */
} ss_bench_config;

typedef struct ss_bench_record {
  ss_variant variant;
  size_t payload;
  double t_full_mean;
  double t_full_std;
  int has_dtls;
  double t_dtls_mean;
  double t_dtls_std;
  double goodput_mean;
  double frames;
} ss_bench_record;

typedef struct ss_bench_overhead {
  ss_variant variant;
  size_t payload;
  double direct_mean;
  double socket_mean;
} ss_bench_overhead;

/* Strings stay valid until the result is destroyed. */
typedef struct ss_bench_check {
  const char* name;
  int pass;
  int gating;
  const char* detail;
} ss_bench_check;

typedef struct ss_bench ss_bench;

SS_API void ss_bench_config_default(ss_bench_config* cfg);
SS_API ss_status ss_bench_run(const ss_bench_config* cfg, ss_bench** out);
SS_API void ss_bench_destroy(ss_bench* result);
SS_API size_t ss_bench_record_count(const ss_bench* result);
SS_API ss_status ss_bench_record_at(const ss_bench* result, size_t index, ss_bench_record* out);
SS_API size_t ss_bench_overhead_count(const ss_bench* result);
SS_API ss_status ss_bench_overhead_at(const ss_bench* result, size_t index, ss_bench_overhead* out);
SS_API size_t ss_bench_check_count(const ss_bench* result);
SS_API ss_status ss_bench_check_at(const ss_bench* result, size_t index, ss_bench_check* out);
SS_API ss_status ss_bench_write_csv(const ss_bench* result, const char* path);
SS_API const char* ss_variant_name(ss_variant variant);

#ifdef __cplusplus
}
#endif

#endif /* SECSTACK_SECSTACK_H */

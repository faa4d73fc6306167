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

// Layer composition for the datagram stack.
//
// A stack is a chain of layers. Each layer is an actor with a private bounded
// inbox and talks only to its neighbours through typed messages:
//
//   Snd  packet moving down, asynchronous
//   Rcv  packet moving up, asynchronous
//   Get  option query, synchronous, answered by exactly one Ack
//   Set  option update, synchronous, answered by exactly one Ack
//
// In Live mode every layer runs on its own thread. In Sim mode nothing runs
// until the owner calls run_until_idle(), which dispatches inboxes
// round-robin on the calling thread.

#ifndef SECSTACK_NETCORE_HPP
#define SECSTACK_NETCORE_HPP

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <stop_token>
#include <vector>

#include "secstack/common.hpp"

namespace secstack::net {

/// 6LoWPAN-style fragment metadata. The first fragment has offset 0 and
/// is_first set; `offset` is counted in units of 8 bytes.
struct FragmentHeader {
  std::uint16_t datagram_size = 0;
  std::uint16_t datagram_tag = 0;
  std::uint16_t offset = 0;
  bool is_first = true;

  std::size_t byte_offset() const { return std::size_t{offset} * 8; }
  friend bool operator==(const FragmentHeader&, const FragmentHeader&) = default;
};

struct PacketMeta {
  NodeId src_node = 0;
  NodeId dst_node = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::optional<FragmentHeader> frag;
};

struct PacketBuf {
  Bytes data;
  PacketMeta meta;
};

enum class OptKey : std::uint16_t {
  Mtu = 1,
  MaxPduSize,  // read-only: link_mtu - mac_overhead
  LossRate,
  Address,
  Latency,
  MacOverhead,
};

enum class OptStatus : std::uint8_t { Ok, UnknownKey, InvalidValue, ReadOnly };

struct OptionRequest {
  OptKey key{};
  Bytes value;
};

struct OptionAck {
  OptKey key{};
  OptStatus status = OptStatus::Ok;
  Bytes value;
};

enum class MsgKind : std::uint8_t { Snd, Rcv, Get, Set, Ack };

struct LayerId {
  std::uint16_t value = 0;
  friend bool operator==(const LayerId&, const LayerId&) = default;
  friend auto operator<=>(const LayerId&, const LayerId&) = default;
};

/// Sender id used for messages that originate outside the chain (socket API,
/// link driver, tests).
inline constexpr LayerId kUser{0};

struct NetMessage {
  MsgKind kind = MsgKind::Snd;
  std::variant<PacketBuf, OptionRequest, OptionAck> payload;
  /// Present iff kind is Get or Set.
  std::optional<LayerId> reply_to;

  static NetMessage snd(PacketBuf pkt) { return {MsgKind::Snd, std::move(pkt), std::nullopt}; }
  static NetMessage rcv(PacketBuf pkt) { return {MsgKind::Rcv, std::move(pkt), std::nullopt}; }
  static NetMessage get(OptionRequest req, LayerId reply_to) {
    return {MsgKind::Get, std::move(req), reply_to};
  }
  static NetMessage set(OptionRequest req, LayerId reply_to) {
    return {MsgKind::Set, std::move(req), reply_to};
  }

  bool well_formed() const;
};

// Typed option value helpers. Integers are big-endian, rates are IEEE
// doubles in host order (options never leave the process).
Bytes encode_u16(std::uint16_t v);
std::optional<std::uint16_t> decode_u16(ByteView v);
Bytes encode_f64(double v);
std::optional<double> decode_f64(ByteView v);

enum class SendStatus : std::uint8_t { Queued, Dropped, Acked };

struct SendOutcome {
  SendStatus status = SendStatus::Queued;
  /// Set for Get/Set round trips.
  std::optional<OptionAck> ack;
};

class Stack;

/// Handle given to a layer while one of its handlers runs.
class LayerContext {
 public:
  LayerContext(Stack& stack, LayerId self) : stack_(stack), self_(self) {}

  LayerId self() const { return self_; }
  SendOutcome send_down(PacketBuf pkt);
  SendOutcome send_up(PacketBuf pkt);
  /// Blocking Get/Set on the layer directly below.
  OptionAck query_below(OptionRequest req, bool is_set);

 private:
  Stack& stack_;
  LayerId self_;
};

class Layer {
 public:
  virtual ~Layer() = default;
  /// Packet arriving from the layer above (or the socket API at the top).
  virtual void on_snd(PacketBuf pkt, LayerContext& ctx) = 0;
  /// Packet arriving from the layer below (or the link driver at the bottom).
  virtual void on_rcv(PacketBuf pkt, LayerContext& ctx) = 0;
  virtual OptionAck on_get(const OptionRequest& req) {
    return {req.key, OptStatus::UnknownKey, {}};
  }
  virtual OptionAck on_set(const OptionRequest& req) {
    return {req.key, OptStatus::UnknownKey, {}};
  }
};

enum class StackMode : std::uint8_t { Sim, Live };

struct StackOptions {
  std::size_t inbox_capacity = 64;
  /// Wall time in Live mode. In Sim mode handlers answer synchronously, so a
  /// request that cannot be answered from the pending work times out at once.
  Micros ack_timeout = std::chrono::seconds(1);
};

struct LayerStats {
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t late_acks = 0;
};

struct DeliveryTrace {
  LayerId from;
  LayerId to;
  MsgKind kind;
};

class Stack {
 public:
  explicit Stack(StackMode mode, StackOptions opts = {});
  ~Stack();
  Stack(const Stack&) = delete;
  Stack& operator=(const Stack&) = delete;

  /// Adds a layer on top of `above` (which must be the current top). The
  /// first layer is registered without `above`. Ids start at 1.
  LayerId register_layer(std::string name, std::unique_ptr<Layer> layer,
                         std::optional<LayerId> above = std::nullopt);

  /// Routes a message from a registered layer to its neighbour: Snd goes to
  /// the layer below, Rcv to the layer above, Get/Set to the layer below and
  /// block until acknowledged.
  SendOutcome send_msg(LayerId from, NetMessage msg);

  /// Synchronous option round trip on any layer, issued from outside.
  OptionAck get_set_option(LayerId target, OptionRequest req, bool is_set);

  /// Hands a packet to a layer from outside the chain: Snd into the top
  /// layer (socket API) or Rcv into the bottom layer (link driver).
  SendOutcome inject(LayerId target, NetMessage msg);

  /// Sim mode: dispatches until every inbox is empty. Returns the number of
  /// messages handled. No-op in Live mode.
  std::size_t run_until_idle();
  bool idle() const;

  std::optional<LayerId> find(std::string_view name) const;
  std::optional<LayerId> below(LayerId id) const;
  std::optional<LayerId> above(LayerId id) const;
  std::string name(LayerId id) const;
  Layer& layer(LayerId id);
  LayerStats stats(LayerId id) const;
  std::size_t size() const;
  StackMode mode() const { return mode_; }

  /// Called for every message delivered into an inbox. Must be set before
  /// traffic starts. Test hook.
  void set_trace(std::function<void(const DeliveryTrace&)> trace);

 private:
  struct Slot;
  struct AckWaiter;
  struct InboxItem;

  friend class LayerContext;

  Slot& slot(LayerId id) const;
  SendOutcome enqueue(LayerId from, Slot& to, NetMessage msg);
  OptionAck request(LayerId from, Slot& target, OptionRequest req, bool is_set);
  void dispatch(Slot& s, InboxItem item);
  bool dispatch_one(Slot& s);
  bool pump_pass();
  void worker_loop(Slot& s, std::stop_token stop);

  StackMode mode_;
  StackOptions opts_;
  mutable std::mutex registry_mu_;
  std::vector<std::unique_ptr<Slot>> slots_;
  std::function<void(const DeliveryTrace&)> trace_;
};

std::string_view to_string(MsgKind kind);

}  // namespace secstack::net

#endif  // SECSTACK_NETCORE_HPP

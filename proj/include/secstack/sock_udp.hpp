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

// Connectionless datagram sockets, either on a simulated node stack
// (link -> sixlowpan -> ip -> udp) or on a real UDP socket bound to the
// loopback interface. Code above the socket cannot tell the two apart.

#ifndef SECSTACK_SOCK_UDP_HPP
#define SECSTACK_SOCK_UDP_HPP

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "secstack/common.hpp"
#include "secstack/linksim.hpp"
#include "secstack/netcore.hpp"

namespace secstack {

inline constexpr std::size_t kMaxUdpPayload = 2048;
inline constexpr std::size_t kUdpRecvQueueDepth = 8;
inline constexpr std::size_t kIpHeaderLen = 3;
inline constexpr std::size_t kUdpHeaderLen = 8;

struct Datagram {
  Endpoint from;
  Bytes data;
};

/// Receive queue of one bound port. Overflow drops the newest datagram.
class RecvQueue {
 public:
  explicit RecvQueue(std::size_t depth = kUdpRecvQueueDepth) : depth_(depth) {}

  bool push(Datagram d);
  std::optional<Datagram> pop();
  bool empty() const;
  std::uint64_t dropped() const;

 private:
  mutable std::mutex mu_;
  std::deque<Datagram> queue_;
  std::size_t depth_;
  std::uint64_t dropped_ = 0;
};

/// Compressed network header: a two-byte dispatch plus next-header. The
/// addresses are elided and taken from the link frame.
class IpLayer final : public net::Layer {
 public:
  explicit IpLayer(NodeId self) : self_(self) {}
  void on_snd(net::PacketBuf pkt, net::LayerContext& ctx) override;
  void on_rcv(net::PacketBuf pkt, net::LayerContext& ctx) override;
  std::uint64_t malformed() const { return malformed_; }

 private:
  NodeId self_;
  std::uint64_t malformed_ = 0;
};

class UdpLayer final : public net::Layer {
 public:
  explicit UdpLayer(NodeId self) : self_(self) {}

  void on_snd(net::PacketBuf pkt, net::LayerContext& ctx) override;
  void on_rcv(net::PacketBuf pkt, net::LayerContext& ctx) override;

  /// Throws Errc::AddrInUse if the port is taken.
  std::shared_ptr<RecvQueue> bind(std::uint16_t port);
  void unbind(std::uint16_t port);
  bool bound(std::uint16_t port) const;

  std::uint64_t no_port_drops() const { return no_port_; }
  std::uint64_t checksum_drops() const { return bad_checksum_; }

 private:
  NodeId self_;
  mutable std::mutex mu_;
  std::map<std::uint16_t, std::shared_ptr<RecvQueue>> ports_;
  std::uint64_t no_port_ = 0;
  std::uint64_t bad_checksum_ = 0;
};

/// 16-bit one's-complement checksum over a pseudo header (node addresses,
/// length) and the UDP header and payload.
std::uint16_t udp_checksum(NodeId src, NodeId dst, ByteView segment);

/// One simulated node: a four-layer stack attached to the medium.
class SimNode final : public link::Attachment {
 public:
  SimNode(link::Simulator& sim, NodeId id, std::optional<link::LinkConfig> cfg = std::nullopt,
          net::StackOptions stack_opts = {});
  ~SimNode() override;

  void deliver(link::Frame frame) override;
  std::size_t pump() override;

  NodeId id() const { return id_; }
  link::Simulator& sim() { return sim_; }
  net::Stack& stack() { return stack_; }
  net::LayerId link_id() const { return link_; }
  net::LayerId sixlowpan_id() const { return sixlowpan_; }
  net::LayerId ip_id() const { return ip_; }
  net::LayerId udp_id() const { return udp_; }
  UdpLayer& udp() { return *udp_layer_; }
  link::SixLowpanLayer& sixlowpan() { return *lowpan_layer_; }
  link::LinkLayer& link_layer() { return *link_layer_; }

  /// A node that is down rejects sends with StackDown and ignores frames.
  void set_up(bool up) { up_ = up; }
  bool up() const { return up_; }

 private:
  link::Simulator& sim_;
  NodeId id_;
  net::Stack stack_;
  net::LayerId link_, sixlowpan_, ip_, udp_;
  link::LinkLayer* link_layer_ = nullptr;
  link::SixLowpanLayer* lowpan_layer_ = nullptr;
  UdpLayer* udp_layer_ = nullptr;
  bool up_ = true;
  std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

/// A simulator plus the nodes attached to it.
class Network {
 public:
  explicit Network(link::LinkConfig cfg = {}) : sim_(cfg) {}

  SimNode& add_node(NodeId id, std::optional<link::LinkConfig> cfg = std::nullopt);
  SimNode& node(NodeId id);
  link::Simulator& sim() { return sim_; }

 private:
  link::Simulator sim_;
  std::map<NodeId, std::unique_ptr<SimNode>> nodes_;
};

namespace detail {
class UdpTransport;
}

class DtlsSock;

class UdpSock {
 public:
  enum class Mode : std::uint8_t { Sim, Loopback };

  /// Binds `port` on a simulated node.
  static UdpSock create(SimNode& node, std::uint16_t port);
  /// Binds 127.0.0.1:`port` on the host.
  static UdpSock create_loopback(std::uint16_t port);

  UdpSock(UdpSock&&) noexcept;
  UdpSock& operator=(UdpSock&&) noexcept;
  ~UdpSock();

  /// Returns the number of payload bytes handed to the stack.
  std::size_t send(const Endpoint& remote, ByteView data);
  /// Oldest queued datagram. Throws Errc::Timeout.
  Datagram recv(Micros timeout);
  /// Non-throwing receive.
  std::optional<Datagram> poll(Micros timeout);

  void close();
  bool is_open() const;
  Endpoint local() const;
  Mode mode() const;
  const Clock& clock() const;
  std::uint64_t dropped() const;

  /// Benchmark hook: when set, every send() stores its entry time here.
  void set_send_probe(std::chrono::steady_clock::time_point* probe) { probe_ = probe; }

 private:
  friend class DtlsSock;
  explicit UdpSock(std::unique_ptr<detail::UdpTransport> impl);
  std::optional<Datagram> poll_raw(Micros timeout);

  std::unique_ptr<detail::UdpTransport> impl_;
  bool wrapped_ = false;
  std::chrono::steady_clock::time_point* probe_ = nullptr;
};

}  // namespace secstack

#endif  // SECSTACK_SOCK_UDP_HPP

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

#include "secstack/sock_udp.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace secstack {

bool RecvQueue::push(Datagram d) {
  std::lock_guard lock(mu_);
  if (queue_.size() >= depth_) {
    ++dropped_;
    return false;
  }
  queue_.push_back(std::move(d));
  return true;
}

std::optional<Datagram> RecvQueue::pop() {
  std::lock_guard lock(mu_);
  if (queue_.empty()) return std::nullopt;
  Datagram d = std::move(queue_.front());
  queue_.pop_front();
  return d;
}

bool RecvQueue::empty() const {
  std::lock_guard lock(mu_);
  return queue_.empty();
}

std::uint64_t RecvQueue::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

namespace {
constexpr std::uint8_t kIphc0 = 0x7A;
constexpr std::uint8_t kIphc1 = 0x33;
constexpr std::uint8_t kNextHeaderUdp = 17;
}  // namespace

void IpLayer::on_snd(net::PacketBuf pkt, net::LayerContext& ctx) {
  Bytes out;
  out.reserve(kIpHeaderLen + pkt.data.size());
  out.push_back(kIphc0);
  out.push_back(kIphc1);
  out.push_back(kNextHeaderUdp);
  append(out, pkt.data);
  pkt.meta.src_node = self_;
  ctx.send_down(net::PacketBuf{std::move(out), pkt.meta});
}

void IpLayer::on_rcv(net::PacketBuf pkt, net::LayerContext& ctx) {
  if (pkt.data.size() < kIpHeaderLen || pkt.data[0] != kIphc0 || pkt.data[1] != kIphc1 ||
      pkt.data[2] != kNextHeaderUdp || pkt.meta.dst_node != self_) {
    ++malformed_;
    return;
  }
  pkt.data.erase(pkt.data.begin(), pkt.data.begin() + kIpHeaderLen);
  ctx.send_up(std::move(pkt));
}

std::uint16_t udp_checksum(NodeId src, NodeId dst, ByteView segment) {
  std::uint32_t sum = src + dst + static_cast<std::uint32_t>(segment.size()) + kNextHeaderUdp;
  std::size_t i = 0;
  for (; i + 1 < segment.size(); i += 2) sum += get_be16(segment.data() + i);
  if (i < segment.size()) sum += std::uint32_t{segment[i]} << 8;
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  auto result = static_cast<std::uint16_t>(~sum);
  return result == 0 ? 0xFFFF : result;
}

void UdpLayer::on_snd(net::PacketBuf pkt, net::LayerContext& ctx) {
  Bytes out;
  out.reserve(kUdpHeaderLen + pkt.data.size());
  put_be16(out, pkt.meta.src_port);
  put_be16(out, pkt.meta.dst_port);
  put_be16(out, static_cast<std::uint16_t>(kUdpHeaderLen + pkt.data.size()));
  put_be16(out, 0);
  append(out, pkt.data);
  std::uint16_t sum = udp_checksum(self_, pkt.meta.dst_node, out);
  out[6] = static_cast<std::uint8_t>(sum >> 8);
  out[7] = static_cast<std::uint8_t>(sum);
  pkt.meta.src_node = self_;
  ctx.send_down(net::PacketBuf{std::move(out), pkt.meta});
}

void UdpLayer::on_rcv(net::PacketBuf pkt, net::LayerContext&) {
  auto& d = pkt.data;
  if (d.size() < kUdpHeaderLen || get_be16(d.data() + 4) != d.size()) {
    ++bad_checksum_;
    return;
  }
  std::uint16_t wire_sum = get_be16(d.data() + 6);
  d[6] = d[7] = 0;
  if (udp_checksum(pkt.meta.src_node, pkt.meta.dst_node, d) != wire_sum) {
    ++bad_checksum_;
    return;
  }
  std::uint16_t src_port = get_be16(d.data());
  std::uint16_t dst_port = get_be16(d.data() + 2);
  std::shared_ptr<RecvQueue> queue;
  {
    std::lock_guard lock(mu_);
    auto it = ports_.find(dst_port);
    if (it != ports_.end()) queue = it->second;
  }
  if (!queue) {
    ++no_port_;
    return;
  }
  d.erase(d.begin(), d.begin() + kUdpHeaderLen);
  queue->push(Datagram{Endpoint{pkt.meta.src_node, src_port}, std::move(d)});
}

std::shared_ptr<RecvQueue> UdpLayer::bind(std::uint16_t port) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = ports_.emplace(port, nullptr);
  if (!inserted) throw Error(Errc::AddrInUse, "port " + std::to_string(port) + " already bound");
  it->second = std::make_shared<RecvQueue>();
  return it->second;
}

void UdpLayer::unbind(std::uint16_t port) {
  std::lock_guard lock(mu_);
  ports_.erase(port);
}

bool UdpLayer::bound(std::uint16_t port) const {
  std::lock_guard lock(mu_);
  return ports_.count(port) != 0;
}

SimNode::SimNode(link::Simulator& sim, NodeId id, std::optional<link::LinkConfig> cfg,
                 net::StackOptions stack_opts)
    : sim_(sim), id_(id), stack_(net::StackMode::Sim, stack_opts) {
  link::LinkConfig link_cfg = cfg.value_or(sim.config());
  auto link_layer = std::make_unique<link::LinkLayer>(sim, id, link_cfg);
  link_layer_ = link_layer.get();
  std::weak_ptr<bool> alive = alive_;
  auto wakeup = [this, alive](TimePoint at) {
    sim_.schedule(at, [this, alive] {
      if (!alive.expired()) lowpan_layer_->expire(sim_.now());
    });
  };
  auto lowpan = std::make_unique<link::SixLowpanLayer>(sim, link_cfg, wakeup);
  lowpan_layer_ = lowpan.get();
  auto udp = std::make_unique<UdpLayer>(id);
  udp_layer_ = udp.get();
  link_ = stack_.register_layer("link", std::move(link_layer));
  sixlowpan_ = stack_.register_layer("sixlowpan", std::move(lowpan), link_);
  ip_ = stack_.register_layer("ip", std::make_unique<IpLayer>(id), sixlowpan_);
  udp_ = stack_.register_layer("udp", std::move(udp), ip_);
  sim_.attach(id, this);
}

SimNode::~SimNode() { sim_.detach(id_); }

void SimNode::deliver(link::Frame frame) {
  if (!up_) return;
  net::PacketMeta meta{frame.src, frame.dst, 0, 0, frame.frag};
  stack_.inject(link_, net::NetMessage::rcv(net::PacketBuf{std::move(frame.bytes), meta}));
}

std::size_t SimNode::pump() { return stack_.run_until_idle(); }

SimNode& Network::add_node(NodeId id, std::optional<link::LinkConfig> cfg) {
  if (nodes_.count(id)) throw Error(Errc::Exists, "node " + std::to_string(id) + " exists");
  auto node = std::make_unique<SimNode>(sim_, id, cfg);
  return *nodes_.emplace(id, std::move(node)).first->second;
}

SimNode& Network::node(NodeId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(Errc::NotFound, "node " + std::to_string(id));
  return *it->second;
}

namespace detail {

class UdpTransport {
 public:
  virtual ~UdpTransport() = default;
  virtual void send(const Endpoint& remote, ByteView data) = 0;
  virtual std::optional<Datagram> poll(Micros timeout) = 0;
  virtual void close() = 0;
  virtual bool is_open() const = 0;
  virtual Endpoint local() const = 0;
  virtual UdpSock::Mode mode() const = 0;
  virtual const Clock& clock() const = 0;
  virtual std::uint64_t dropped() const = 0;
};

namespace {

class SimTransport final : public UdpTransport {
 public:
  SimTransport(SimNode& node, std::uint16_t port) : node_(&node), port_(port) {
    queue_ = node.udp().bind(port);
  }
  ~SimTransport() override { close(); }

  void send(const Endpoint& remote, ByteView data) override {
    if (!node_) throw Error(Errc::Closed, "socket closed");
    if (!node_->up()) throw Error(Errc::StackDown, "node " + std::to_string(node_->id()) + " is down");
    net::PacketMeta meta;
    meta.src_node = node_->id();
    meta.dst_node = static_cast<NodeId>(remote.addr);
    meta.src_port = port_;
    meta.dst_port = remote.port;
    auto outcome = node_->stack().inject(node_->udp_id(),
                                         net::NetMessage::snd(net::PacketBuf{Bytes(data.begin(), data.end()), meta}));
    if (outcome.status == net::SendStatus::Dropped) throw Error(Errc::SendFailed, "udp inbox full");
  }

  std::optional<Datagram> poll(Micros timeout) override {
    if (!node_) throw Error(Errc::Closed, "socket closed");
    if (auto d = queue_->pop()) return d;
    // A zero timeout only looks at the queue; it may be called from a
    // simulator task, where running the simulator again would nest.
    if (timeout <= Micros::zero()) return std::nullopt;
    auto& sim = node_->sim();
    TimePoint deadline = timeout == Micros::max() ? TimePoint::max() : sim.now() + timeout;
    sim.run_until([&] { return !queue_->empty(); }, deadline);
    return queue_->pop();
  }

  void close() override {
    if (node_) {
      node_->udp().unbind(port_);
      node_ = nullptr;
    }
  }
  bool is_open() const override { return node_ != nullptr; }
  Endpoint local() const override { return Endpoint{node_ ? node_->id() : 0u, port_}; }
  UdpSock::Mode mode() const override { return UdpSock::Mode::Sim; }
  const Clock& clock() const override { return clock_ref_; }
  std::uint64_t dropped() const override { return queue_->dropped(); }

 private:
  SimNode* node_;
  std::uint16_t port_;
  std::shared_ptr<RecvQueue> queue_;
  const Clock& clock_ref_ = node_->sim();
};

class LoopbackTransport final : public UdpTransport {
 public:
  explicit LoopbackTransport(std::uint16_t port) : port_(port) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw Error(Errc::IoError, std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(kLoopbackAddr);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      int err = errno;
      ::close(fd_);
      fd_ = -1;
      if (err == EADDRINUSE) throw Error(Errc::AddrInUse, "127.0.0.1:" + std::to_string(port) + " in use");
      throw Error(Errc::IoError, std::string("bind: ") + std::strerror(err));
    }
  }
  ~LoopbackTransport() override { close(); }

  void send(const Endpoint& remote, ByteView data) override {
    if (fd_ < 0) throw Error(Errc::Closed, "socket closed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(remote.port);
    addr.sin_addr.s_addr = htonl(remote.addr);
    ssize_t n = ::sendto(fd_, data.data(), data.size(), 0, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    if (n < 0 || static_cast<std::size_t>(n) != data.size()) {
      throw Error(Errc::SendFailed, std::string("sendto: ") + std::strerror(errno));
    }
  }

  std::optional<Datagram> poll(Micros timeout) override {
    if (fd_ < 0) throw Error(Errc::Closed, "socket closed");
    pollfd pfd{fd_, POLLIN, 0};
    timespec ts{};
    timespec* tsp = nullptr;
    if (timeout != Micros::max()) {
      auto us = std::max<Micros::rep>(0, timeout.count());
      ts.tv_sec = static_cast<time_t>(us / 1'000'000);
      ts.tv_nsec = static_cast<long>((us % 1'000'000) * 1000);
      tsp = &ts;
    }
    int rc = ::ppoll(&pfd, 1, tsp, nullptr);
    if (rc < 0) {
      if (errno == EINTR) return std::nullopt;
      throw Error(Errc::IoError, std::string("ppoll: ") + std::strerror(errno));
    }
    if (rc == 0) return std::nullopt;
    Bytes buf(65536);
    sockaddr_in from{};
    socklen_t len = sizeof(from);
    ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from), &len);
    if (n < 0) throw Error(Errc::IoError, std::string("recvfrom: ") + std::strerror(errno));
    buf.resize(static_cast<std::size_t>(n));
    return Datagram{Endpoint{ntohl(from.sin_addr.s_addr), ntohs(from.sin_port)}, std::move(buf)};
  }

  void close() override {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }
  bool is_open() const override { return fd_ >= 0; }
  Endpoint local() const override { return Endpoint{kLoopbackAddr, port_}; }
  UdpSock::Mode mode() const override { return UdpSock::Mode::Loopback; }
  const Clock& clock() const override { return SteadyClock::instance(); }
  std::uint64_t dropped() const override { return 0; }

 private:
  std::uint16_t port_;
  int fd_ = -1;
};

}  // namespace
}  // namespace detail

UdpSock::UdpSock(std::unique_ptr<detail::UdpTransport> impl) : impl_(std::move(impl)) {}
UdpSock::UdpSock(UdpSock&&) noexcept = default;
UdpSock& UdpSock::operator=(UdpSock&&) noexcept = default;
UdpSock::~UdpSock() = default;

UdpSock UdpSock::create(SimNode& node, std::uint16_t port) {
  if (port == 0) throw Error(Errc::InvalidArgument, "port 0 cannot be bound");
  return UdpSock(std::make_unique<detail::SimTransport>(node, port));
}

UdpSock UdpSock::create_loopback(std::uint16_t port) {
  if (port == 0) throw Error(Errc::InvalidArgument, "port 0 cannot be bound");
  return UdpSock(std::make_unique<detail::LoopbackTransport>(port));
}

std::size_t UdpSock::send(const Endpoint& remote, ByteView data) {
  if (probe_) *probe_ = std::chrono::steady_clock::now();
  if (!impl_) throw Error(Errc::Closed, "socket closed");
  if (data.size() > kMaxUdpPayload) {
    throw Error(Errc::PayloadTooLarge, std::to_string(data.size()) + " bytes exceeds " +
                                           std::to_string(kMaxUdpPayload));
  }
  impl_->send(remote, data);
  return data.size();
}

Datagram UdpSock::recv(Micros timeout) {
  auto d = poll(timeout);
  if (!d) throw Error(Errc::Timeout, "no datagram within timeout");
  return std::move(*d);
}

std::optional<Datagram> UdpSock::poll(Micros timeout) {
  if (wrapped_) throw Error(Errc::UdpSockInUse, "socket is owned by a DTLS sock");
  return poll_raw(timeout);
}

std::optional<Datagram> UdpSock::poll_raw(Micros timeout) {
  if (!impl_) throw Error(Errc::Closed, "socket closed");
  return impl_->poll(timeout);
}

void UdpSock::close() {
  if (impl_) impl_->close();
}

bool UdpSock::is_open() const { return impl_ && impl_->is_open(); }
Endpoint UdpSock::local() const { return impl_ ? impl_->local() : Endpoint{}; }
UdpSock::Mode UdpSock::mode() const { return impl_->mode(); }
const Clock& UdpSock::clock() const { return impl_->clock(); }
std::uint64_t UdpSock::dropped() const { return impl_ ? impl_->dropped() : 0; }

}  // namespace secstack

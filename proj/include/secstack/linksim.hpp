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

// Simulated 802.15.4-style link: frame geometry, 6LoWPAN-style
// fragmentation and reassembly, and a discrete-event medium.
//
// Header compression is not modelled bit by bit. A frame on the air costs
// mac_overhead bytes plus frag1_hdr/fragn_hdr for fragments plus its data,
// and must fit into link_mtu.

#ifndef SECSTACK_LINKSIM_HPP
#define SECSTACK_LINKSIM_HPP

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "secstack/common.hpp"
#include "secstack/netcore.hpp"

namespace secstack::link {

using net::FragmentHeader;

struct LinkConfig {
  std::uint32_t link_mtu = 127;
  std::uint32_t mac_overhead = 21;
  std::uint32_t frag1_hdr = 4;
  std::uint32_t fragn_hdr = 5;
  double loss_rate = 0.0;
  std::uint32_t latency = 2;  // simulated milliseconds per frame
  std::uint64_t rng_seed = 1;

  /// Throws Errc::InvalidArgument when an invariant does not hold.
  void validate() const;
  /// Bytes of datagram an unfragmented frame can carry.
  std::size_t payload_capacity() const { return link_mtu - mac_overhead; }
  std::size_t first_fragment_capacity() const { return (payload_capacity() - frag1_hdr) & ~std::size_t{7}; }
  std::size_t next_fragment_capacity() const { return (payload_capacity() - fragn_hdr) & ~std::size_t{7}; }

  friend bool operator==(const LinkConfig&, const LinkConfig&) = default;
};

/// Parses `key=value` lines (keys are the LinkConfig field names). Blank
/// lines and lines starting with '#' are skipped.
LinkConfig parse_link_config(std::string_view text);
LinkConfig load_link_config(const std::string& path);

struct Frame {
  NodeId src = 0;
  NodeId dst = 0;
  std::optional<FragmentHeader> frag;
  Bytes bytes;
  /// Set by the sending link layer, checked by the medium on delivery.
  std::uint16_t fcs = 0;

  /// Bytes this frame occupies on the air, MAC overhead included.
  std::size_t wire_size(const LinkConfig& cfg) const;
};

/// CRC-16/KERMIT, the 802.15.4 frame check sequence, computed bit by bit as
/// a radio without a CRC engine would.
std::uint16_t crc16_kermit(ByteView data, std::uint16_t crc = 0);
/// FCS over the addresses, the fragment header and the data.
std::uint16_t frame_check_sequence(const Frame& frame);

inline constexpr std::size_t kMaxDatagram = 65535;

/// Splits a datagram into frames. One unfragmented frame if it fits in
/// payload_capacity(), otherwise FRAG1 + FRAGN fragments whose sizes are
/// multiples of 8 (except the last).
std::vector<Frame> fragment_datagram(ByteView datagram, const LinkConfig& cfg, NodeId src = 0,
                                     NodeId dst = 0, std::uint16_t tag = 0);

/// Closed-form number of frames fragment_datagram() produces.
std::size_t frame_count(std::size_t datagram_len, const LinkConfig& cfg);

/// Datagram lengths L at which frame_count(L) > frame_count(L - 1), up to
/// and including `max_len`.
std::vector<std::size_t> frame_count_steps(std::size_t max_len, const LinkConfig& cfg);

struct ReassemblyKey {
  NodeId src = 0;
  std::uint16_t tag = 0;
  friend auto operator<=>(const ReassemblyKey&, const ReassemblyKey&) = default;
};

class Reassembler {
 public:
  enum class Status : std::uint8_t {
    Pending,
    Complete,
    Duplicate,
    OverlapMismatch,
    BufferFull,
    Invalid,
  };
  struct Result {
    Status status = Status::Pending;
    Bytes datagram;  // filled when Complete
  };

  explicit Reassembler(Micros timeout = std::chrono::seconds(5), std::size_t max_per_peer = 4);

  Result push(const Frame& frame, TimePoint now);
  /// Drops partial datagrams older than the timeout and returns their keys.
  std::vector<ReassemblyKey> expire(TimePoint now);
  std::size_t active() const { return partial_.size(); }
  std::optional<TimePoint> next_expiry() const;

 private:
  struct Partial {
    std::uint16_t size = 0;
    Bytes data;
    std::vector<bool> covered;
    std::size_t covered_count = 0;
    TimePoint started{};
  };

  Micros timeout_;
  std::size_t max_per_peer_;
  std::map<ReassemblyKey, Partial> partial_;
  // Recently finished datagrams, so that late duplicates are not mistaken
  // for the start of a new reassembly.
  std::map<ReassemblyKey, TimePoint> completed_;
};

struct DeliveryOutcome {
  bool delivered = false;
  TimePoint arrival{};
};

struct WireRecord {
  TimePoint time{};
  Frame frame;
};

std::size_t count_datagrams(const std::vector<WireRecord>& trace);

/// Something attached to the medium under a node id.
class Attachment {
 public:
  virtual ~Attachment() = default;
  virtual void deliver(Frame frame) = 0;
  /// Runs pending in-node work at the current simulated time; returns the
  /// amount of work done.
  virtual std::size_t pump() = 0;
};

struct LinkStats {
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_lost = 0;
  std::uint64_t frames_delivered = 0;
  std::uint64_t fcs_drops = 0;
};

/// Discrete-event simulator and shared medium. Single-threaded: every call
/// must come from the thread driving the simulation.
class Simulator final : public Clock {
 public:
  using TaskId = std::uint32_t;

  explicit Simulator(LinkConfig cfg = {});

  const LinkConfig& config() const { return cfg_; }
  TimePoint now() const override { return now_; }

  void attach(NodeId id, Attachment* node);
  void detach(NodeId id);

  void schedule(TimePoint at, std::function<void()> fn);

  /// Puts a frame on the air using the sender's link parameters. With
  /// probability 1 - loss_rate it is delivered `latency` ms after the
  /// sender's previous frame finished.
  DeliveryOutcome transmit(const Frame& frame, const LinkConfig& sender_cfg);

  /// Polled after every unit of simulated work. A task returns true if it
  /// made progress. Tasks are not re-entered.
  TaskId add_task(std::function<bool()> task);
  void remove_task(TaskId id);

  /// Runs node and task work at the current time until nothing is left.
  std::size_t pump();
  /// Runs the simulation until `pred` holds or the clock reaches
  /// `deadline`. Returns pred().
  bool run_until(const std::function<bool()>& pred, TimePoint deadline);
  void run_for(Micros duration);
  /// Runs until no events remain (or `limit` is reached).
  void run_all(TimePoint limit = TimePoint::max());
  bool has_events() const { return !events_.empty(); }

  void enable_trace(bool on) { trace_on_ = on; }
  const std::vector<WireRecord>& trace() const { return trace_; }
  void clear_trace() { trace_.clear(); }

  /// Host steady-clock time at which the most recent frame was handed to the
  /// medium. Benchmark hook.
  std::chrono::steady_clock::time_point last_tx_host_time() const { return last_tx_host_; }

  const LinkStats& stats() const { return stats_; }

 private:
  struct Event {
    TimePoint at;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };
  struct Task {
    TaskId id;
    std::function<bool()> fn;
    bool running = false;
    bool removed = false;
  };

  std::size_t run_tasks();

  LinkConfig cfg_;
  TimePoint now_{0};
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
  std::map<NodeId, Attachment*> nodes_;
  std::map<NodeId, TimePoint> tx_free_;
  std::vector<std::unique_ptr<Task>> tasks_;
  TaskId next_task_ = 1;
  Rng rng_;
  bool trace_on_ = false;
  std::vector<WireRecord> trace_;
  LinkStats stats_;
  std::chrono::steady_clock::time_point last_tx_host_{};
};

/// Bottom layer of a node stack: the netdev role. Owns the node's link
/// parameters and hands frames to the medium.
class LinkLayer final : public net::Layer {
 public:
  LinkLayer(Simulator& sim, NodeId node, LinkConfig cfg);

  void on_snd(net::PacketBuf pkt, net::LayerContext& ctx) override;
  void on_rcv(net::PacketBuf pkt, net::LayerContext& ctx) override;
  net::OptionAck on_get(const net::OptionRequest& req) override;
  net::OptionAck on_set(const net::OptionRequest& req) override;

  const LinkConfig& config() const { return cfg_; }
  std::uint64_t oversize_drops() const { return oversize_drops_; }

 private:
  Simulator& sim_;
  NodeId node_;
  LinkConfig cfg_;
  std::uint64_t oversize_drops_ = 0;
};

/// Adaptation layer: fragments outgoing datagrams to the link's PDU size
/// (queried from the layer below per datagram) and reassembles incoming
/// fragments.
class SixLowpanLayer final : public net::Layer {
 public:
  SixLowpanLayer(const Clock& clock, LinkConfig cfg, std::function<void(TimePoint)> wakeup = {});

  void on_snd(net::PacketBuf pkt, net::LayerContext& ctx) override;
  void on_rcv(net::PacketBuf pkt, net::LayerContext& ctx) override;

  /// Expires stale reassemblies. Must be called from the thread that drives
  /// the stack and never concurrently with a handler.
  void expire(TimePoint now);

  std::uint64_t reassembly_timeouts() const { return timeouts_; }
  std::uint64_t reassembly_errors() const { return errors_; }
  std::size_t active_reassemblies() const { return reassembler_.active(); }

 private:
  const Clock& clock_;
  LinkConfig cfg_;
  std::function<void(TimePoint)> wakeup_;
  Reassembler reassembler_;
  std::uint16_t next_tag_ = 1;
  std::uint64_t timeouts_ = 0;
  std::uint64_t errors_ = 0;
};

}  // namespace secstack::link

#endif  // SECSTACK_LINKSIM_HPP

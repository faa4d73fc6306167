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

#include "secstack/linksim.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace secstack::link {

void LinkConfig::validate() const {
  if (!(loss_rate >= 0.0 && loss_rate <= 1.0)) {
    throw Error(Errc::InvalidArgument, "loss_rate must be within [0, 1]");
  }
  if (link_mtu <= mac_overhead + fragn_hdr || link_mtu <= mac_overhead + frag1_hdr) {
    throw Error(Errc::InvalidArgument, "link_mtu must exceed mac_overhead + fragment header");
  }
  if (first_fragment_capacity() == 0 || next_fragment_capacity() == 0) {
    throw Error(Errc::InvalidArgument, "link_mtu leaves no room for an 8-byte fragment unit");
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_uint(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw Error(Errc::ParseError, "bad integer for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

double parse_fraction(std::string_view key, std::string_view value) {
  // from_chars for double is not in libstdc++ 11; strtod is locale-bound, so
  // parse the plain decimal form by hand.
  double whole = 0;
  double frac = 0;
  double scale = 1;
  bool seen_dot = false;
  bool seen_digit = false;
  for (char c : value) {
    if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else if (c >= '0' && c <= '9') {
      seen_digit = true;
      if (seen_dot) {
        scale /= 10;
        frac += (c - '0') * scale;
      } else {
        whole = whole * 10 + (c - '0');
      }
    } else {
      seen_digit = false;
      break;
    }
  }
  if (!seen_digit) throw Error(Errc::ParseError, "bad decimal for " + std::string(key));
  return whole + frac;
}

}  // namespace

LinkConfig parse_link_config(std::string_view text) {
  LinkConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string_view key = trim(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    if (key == "link_mtu") {
      cfg.link_mtu = parse_uint<std::uint32_t>(key, value);
    } else if (key == "mac_overhead") {
      cfg.mac_overhead = parse_uint<std::uint32_t>(key, value);
    } else if (key == "frag1_hdr") {
      cfg.frag1_hdr = parse_uint<std::uint32_t>(key, value);
    } else if (key == "fragn_hdr") {
      cfg.fragn_hdr = parse_uint<std::uint32_t>(key, value);
    } else if (key == "loss_rate") {
      cfg.loss_rate = parse_fraction(key, value);
    } else if (key == "latency") {
      cfg.latency = parse_uint<std::uint32_t>(key, value);
    } else if (key == "rng_seed") {
      cfg.rng_seed = parse_uint<std::uint64_t>(key, value);
    } else {
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  cfg.validate();
  return cfg;
}

LinkConfig load_link_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_link_config(ss.str());
}

std::size_t Frame::wire_size(const LinkConfig& cfg) const {
  std::size_t hdr = 0;
  if (frag) hdr = frag->is_first ? cfg.frag1_hdr : cfg.fragn_hdr;
  return cfg.mac_overhead + hdr + bytes.size();
}

std::uint16_t crc16_kermit(ByteView data, std::uint16_t crc) {
  for (std::uint8_t b : data) {
    crc ^= b;
    for (int i = 0; i < 8; ++i) crc = crc & 1 ? static_cast<std::uint16_t>((crc >> 1) ^ 0x8408) : crc >> 1;
  }
  return crc;
}

std::uint16_t frame_check_sequence(const Frame& frame) {
  std::uint8_t hdr[11];
  std::size_t n = 0;
  auto put16 = [&](std::uint16_t v) {
    hdr[n++] = static_cast<std::uint8_t>(v);
    hdr[n++] = static_cast<std::uint8_t>(v >> 8);
  };
  put16(frame.src);
  put16(frame.dst);
  if (frame.frag) {
    put16(frame.frag->datagram_size);
    put16(frame.frag->datagram_tag);
    put16(frame.frag->offset);
    hdr[n++] = frame.frag->is_first ? 1 : 0;
  }
  return crc16_kermit(frame.bytes, crc16_kermit(ByteView(hdr, n)));
}

std::vector<Frame> fragment_datagram(ByteView datagram, const LinkConfig& cfg, NodeId src, NodeId dst,
                                     std::uint16_t tag) {
  if (datagram.empty()) throw Error(Errc::InvalidArgument, "empty datagram");
  if (datagram.size() > kMaxDatagram) throw Error(Errc::DatagramTooLarge);
  std::vector<Frame> frames;
  if (datagram.size() <= cfg.payload_capacity()) {
    frames.push_back(Frame{src, dst, std::nullopt, Bytes(datagram.begin(), datagram.end())});
    return frames;
  }
  const auto size = static_cast<std::uint16_t>(datagram.size());
  std::size_t pos = 0;
  while (pos < datagram.size()) {
    bool first = pos == 0;
    std::size_t cap = first ? cfg.first_fragment_capacity() : cfg.next_fragment_capacity();
    std::size_t n = std::min(cap, datagram.size() - pos);
    FragmentHeader hdr{size, tag, static_cast<std::uint16_t>(pos / 8), first};
    frames.push_back(Frame{src, dst, hdr, Bytes(datagram.begin() + pos, datagram.begin() + pos + n)});
    pos += n;
  }
  return frames;
}

std::size_t frame_count(std::size_t len, const LinkConfig& cfg) {
  if (len <= cfg.payload_capacity()) return 1;
  std::size_t first = cfg.first_fragment_capacity();
  std::size_t next = cfg.next_fragment_capacity();
  return 1 + (len - first + next - 1) / next;
}

std::vector<std::size_t> frame_count_steps(std::size_t max_len, const LinkConfig& cfg) {
  std::vector<std::size_t> steps;
  std::size_t edge = cfg.payload_capacity() + 1;
  // Past the unfragmented limit, fragments fill in order, so the k-th
  // additional frame is needed one byte past first + (k-1) * next.
  std::size_t first = cfg.first_fragment_capacity();
  std::size_t next = cfg.next_fragment_capacity();
  if (edge <= max_len) steps.push_back(edge);
  for (std::size_t filled = first + next; filled + 1 <= max_len; filled += next) {
    if (filled + 1 > edge) steps.push_back(filled + 1);
  }
  return steps;
}

std::size_t count_datagrams(const std::vector<WireRecord>& trace) {
  return static_cast<std::size_t>(std::count_if(trace.begin(), trace.end(), [](const WireRecord& r) {
    return !r.frame.frag || r.frame.frag->is_first;
  }));
}

Reassembler::Reassembler(Micros timeout, std::size_t max_per_peer)
    : timeout_(timeout), max_per_peer_(max_per_peer) {}

Reassembler::Result Reassembler::push(const Frame& frame, TimePoint now) {
  if (!frame.frag) {
    if (frame.bytes.empty()) return {Status::Invalid, {}};
    return {Status::Complete, frame.bytes};
  }
  const FragmentHeader& hdr = *frame.frag;
  const std::size_t offset = hdr.byte_offset();
  if (hdr.datagram_size == 0 || frame.bytes.empty() || offset + frame.bytes.size() > hdr.datagram_size ||
      (hdr.is_first && hdr.offset != 0)) {
    return {Status::Invalid, {}};
  }
  ReassemblyKey key{frame.src, hdr.datagram_tag};
  if (auto done = completed_.find(key); done != completed_.end()) {
    if (now - done->second < timeout_) return {Status::Duplicate, {}};
    completed_.erase(done);
  }
  auto it = partial_.find(key);
  if (it == partial_.end()) {
    auto per_peer = std::count_if(partial_.begin(), partial_.end(),
                                  [&](const auto& kv) { return kv.first.src == frame.src; });
    if (static_cast<std::size_t>(per_peer) >= max_per_peer_) return {Status::BufferFull, {}};
    Partial p;
    p.size = hdr.datagram_size;
    p.data.assign(hdr.datagram_size, 0);
    p.covered.assign(hdr.datagram_size, false);
    p.started = now;
    it = partial_.emplace(key, std::move(p)).first;
  }
  Partial& p = it->second;
  if (p.size != hdr.datagram_size) return {Status::OverlapMismatch, {}};

  bool fresh = false;
  for (std::size_t i = 0; i < frame.bytes.size(); ++i) {
    if (p.covered[offset + i]) {
      if (p.data[offset + i] != frame.bytes[i]) {
        partial_.erase(it);
        return {Status::OverlapMismatch, {}};
      }
    } else {
      fresh = true;
    }
  }
  if (!fresh) return {Status::Duplicate, {}};
  for (std::size_t i = 0; i < frame.bytes.size(); ++i) {
    if (!p.covered[offset + i]) {
      p.covered[offset + i] = true;
      p.data[offset + i] = frame.bytes[i];
      ++p.covered_count;
    }
  }
  if (p.covered_count < p.size) return {Status::Pending, {}};
  Result done{Status::Complete, std::move(p.data)};
  partial_.erase(it);
  completed_[key] = now;
  return done;
}

std::vector<ReassemblyKey> Reassembler::expire(TimePoint now) {
  std::vector<ReassemblyKey> expired;
  for (auto it = partial_.begin(); it != partial_.end();) {
    if (now - it->second.started >= timeout_) {
      expired.push_back(it->first);
      it = partial_.erase(it);
    } else {
      ++it;
    }
  }
  std::erase_if(completed_, [&](const auto& kv) { return now - kv.second >= timeout_; });
  return expired;
}

std::optional<TimePoint> Reassembler::next_expiry() const {
  std::optional<TimePoint> next;
  for (const auto& [key, p] : partial_) {
    TimePoint t = p.started + timeout_;
    if (!next || t < *next) next = t;
  }
  return next;
}

Simulator::Simulator(LinkConfig cfg) : cfg_(cfg), rng_(cfg.rng_seed) { cfg_.validate(); }

void Simulator::attach(NodeId id, Attachment* node) {
  if (!node) throw Error(Errc::InvalidArgument, "null attachment");
  if (!nodes_.emplace(id, node).second) throw Error(Errc::Exists, "node id already attached");
}

void Simulator::detach(NodeId id) { nodes_.erase(id); }

void Simulator::schedule(TimePoint at, std::function<void()> fn) {
  events_.push(Event{std::max(at, now_), next_seq_++, std::move(fn)});
}

DeliveryOutcome Simulator::transmit(const Frame& frame, const LinkConfig& sender_cfg) {
  if (frame.wire_size(sender_cfg) > sender_cfg.link_mtu) {
    throw Error(Errc::InvalidArgument, "frame exceeds link MTU");
  }
  last_tx_host_ = std::chrono::steady_clock::now();
  ++stats_.frames_sent;
  if (trace_on_) trace_.push_back(WireRecord{now_, frame});

  TimePoint& free_at = tx_free_[frame.src];
  TimePoint start = std::max(now_, free_at);
  TimePoint arrival = start + std::chrono::milliseconds(sender_cfg.latency);
  free_at = arrival;

  // Draw even when the outcome is certain so traces only depend on the seed
  // and the frame sequence.
  bool lost = rng_.uniform() < sender_cfg.loss_rate;
  if (lost) {
    ++stats_.frames_lost;
    return {false, arrival};
  }
  schedule(arrival, [this, f = frame]() mutable {
    auto it = nodes_.find(f.dst);
    if (it == nodes_.end()) return;
    if (f.fcs != frame_check_sequence(f)) {
      ++stats_.fcs_drops;
      return;
    }
    ++stats_.frames_delivered;
    it->second->deliver(std::move(f));
  });
  return {true, arrival};
}

Simulator::TaskId Simulator::add_task(std::function<bool()> task) {
  auto t = std::make_unique<Task>();
  t->id = next_task_++;
  t->fn = std::move(task);
  tasks_.push_back(std::move(t));
  return tasks_.back()->id;
}

void Simulator::remove_task(TaskId id) {
  for (auto& t : tasks_) {
    if (t->id == id) t->removed = true;
  }
  std::erase_if(tasks_, [](const auto& t) { return t->removed && !t->running; });
}

std::size_t Simulator::run_tasks() {
  std::size_t progress = 0;
  // Index loop: tasks may be added while one runs.
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    Task* t = tasks_[i].get();
    if (t->running || t->removed) continue;
    t->running = true;
    bool did = false;
    try {
      did = t->fn();
    } catch (...) {
      t->running = false;
      throw;
    }
    t->running = false;
    if (did) ++progress;
  }
  std::erase_if(tasks_, [](const auto& t) { return t->removed && !t->running; });
  return progress;
}

std::size_t Simulator::pump() {
  std::size_t total = 0;
  while (true) {
    std::size_t work = 0;
    for (auto& [id, node] : nodes_) work += node->pump();
    work += run_tasks();
    if (work == 0) break;
    total += work;
  }
  return total;
}

bool Simulator::run_until(const std::function<bool()>& pred, TimePoint deadline) {
  while (true) {
    pump();
    if (pred()) return true;
    if (events_.empty() || events_.top().at > deadline) {
      if (deadline > now_ && deadline != TimePoint::max()) {
        now_ = deadline;
        pump();
      }
      return pred();
    }
    Event ev = events_.top();
    events_.pop();
    now_ = std::max(now_, ev.at);
    ev.fn();
  }
}

void Simulator::run_for(Micros duration) {
  run_until([] { return false; }, now_ + duration);
}

void Simulator::run_all(TimePoint limit) {
  while (true) {
    pump();
    if (events_.empty() || events_.top().at > limit) return;
    Event ev = events_.top();
    events_.pop();
    now_ = std::max(now_, ev.at);
    ev.fn();
  }
}

LinkLayer::LinkLayer(Simulator& sim, NodeId node, LinkConfig cfg) : sim_(sim), node_(node), cfg_(cfg) {
  cfg_.validate();
}

void LinkLayer::on_snd(net::PacketBuf pkt, net::LayerContext&) {
  Frame frame{node_, pkt.meta.dst_node, pkt.meta.frag, std::move(pkt.data)};
  if (frame.wire_size(cfg_) > cfg_.link_mtu) {
    ++oversize_drops_;
    return;
  }
  frame.fcs = frame_check_sequence(frame);
  sim_.transmit(frame, cfg_);
}

void LinkLayer::on_rcv(net::PacketBuf pkt, net::LayerContext& ctx) {
  if (pkt.meta.dst_node != node_) return;
  ctx.send_up(std::move(pkt));
}

net::OptionAck LinkLayer::on_get(const net::OptionRequest& req) {
  using net::OptKey;
  using net::OptStatus;
  switch (req.key) {
    case OptKey::Mtu: return {req.key, OptStatus::Ok, net::encode_u16(static_cast<std::uint16_t>(cfg_.link_mtu))};
    case OptKey::MaxPduSize:
      return {req.key, OptStatus::Ok, net::encode_u16(static_cast<std::uint16_t>(cfg_.payload_capacity()))};
    case OptKey::MacOverhead:
      return {req.key, OptStatus::Ok, net::encode_u16(static_cast<std::uint16_t>(cfg_.mac_overhead))};
    case OptKey::LossRate: return {req.key, OptStatus::Ok, net::encode_f64(cfg_.loss_rate)};
    case OptKey::Latency: return {req.key, OptStatus::Ok, net::encode_u16(static_cast<std::uint16_t>(cfg_.latency))};
    case OptKey::Address: return {req.key, OptStatus::Ok, net::encode_u16(node_)};
  }
  return {req.key, OptStatus::UnknownKey, {}};
}

net::OptionAck LinkLayer::on_set(const net::OptionRequest& req) {
  using net::OptKey;
  using net::OptStatus;
  LinkConfig next = cfg_;
  switch (req.key) {
    case OptKey::Mtu: {
      auto v = net::decode_u16(req.value);
      if (!v) return {req.key, OptStatus::InvalidValue, {}};
      next.link_mtu = *v;
      break;
    }
    case OptKey::MacOverhead: {
      auto v = net::decode_u16(req.value);
      if (!v) return {req.key, OptStatus::InvalidValue, {}};
      next.mac_overhead = *v;
      break;
    }
    case OptKey::LossRate: {
      auto v = net::decode_f64(req.value);
      if (!v) return {req.key, OptStatus::InvalidValue, {}};
      next.loss_rate = *v;
      break;
    }
    case OptKey::Latency: {
      auto v = net::decode_u16(req.value);
      if (!v) return {req.key, OptStatus::InvalidValue, {}};
      next.latency = *v;
      break;
    }
    case OptKey::MaxPduSize:
    case OptKey::Address:
      return {req.key, OptStatus::ReadOnly, {}};
    default:
      return {req.key, OptStatus::UnknownKey, {}};
  }
  try {
    next.validate();
  } catch (const Error&) {
    return {req.key, OptStatus::InvalidValue, {}};
  }
  cfg_ = next;
  return {req.key, OptStatus::Ok, req.value};
}

SixLowpanLayer::SixLowpanLayer(const Clock& clock, LinkConfig cfg, std::function<void(TimePoint)> wakeup)
    : clock_(clock), cfg_(cfg), wakeup_(std::move(wakeup)) {}

void SixLowpanLayer::on_snd(net::PacketBuf pkt, net::LayerContext& ctx) {
  auto ack = ctx.query_below({net::OptKey::MaxPduSize, {}}, false);
  auto pdu = net::decode_u16(ack.value);
  if (ack.status != net::OptStatus::Ok || !pdu) {
    ++errors_;
    return;
  }
  LinkConfig geometry = cfg_;
  geometry.link_mtu = *pdu + geometry.mac_overhead;
  if (pkt.data.empty() || pkt.data.size() > kMaxDatagram) {
    ++errors_;
    return;
  }
  std::uint16_t tag = next_tag_++;
  auto frames = fragment_datagram(pkt.data, geometry, pkt.meta.src_node, pkt.meta.dst_node, tag);
  for (auto& f : frames) {
    net::PacketMeta meta = pkt.meta;
    meta.frag = f.frag;
    ctx.send_down(net::PacketBuf{std::move(f.bytes), meta});
  }
}

void SixLowpanLayer::on_rcv(net::PacketBuf pkt, net::LayerContext& ctx) {
  TimePoint now = clock_.now();
  expire(now);
  Frame frame{pkt.meta.src_node, pkt.meta.dst_node, pkt.meta.frag, std::move(pkt.data)};
  bool was_partial = frame.frag.has_value();
  auto result = reassembler_.push(frame, now);
  switch (result.status) {
    case Reassembler::Status::Complete: {
      net::PacketMeta meta = pkt.meta;
      meta.frag.reset();
      ctx.send_up(net::PacketBuf{std::move(result.datagram), meta});
      return;
    }
    case Reassembler::Status::Pending:
      if (was_partial && wakeup_) {
        if (auto t = reassembler_.next_expiry()) wakeup_(*t);
      }
      return;
    case Reassembler::Status::Duplicate:
      return;
    case Reassembler::Status::OverlapMismatch:
    case Reassembler::Status::BufferFull:
    case Reassembler::Status::Invalid:
      ++errors_;
      return;
  }
}

void SixLowpanLayer::expire(TimePoint now) { timeouts_ += reassembler_.expire(now).size(); }

}  // namespace secstack::link

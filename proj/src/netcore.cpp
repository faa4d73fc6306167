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

#include "secstack/netcore.hpp"

#include <condition_variable>
#include <cstring>
#include <deque>
#include <thread>

namespace secstack::net {

namespace {
constexpr std::size_t kMaxLayers = 16;
}

bool NetMessage::well_formed() const {
  switch (kind) {
    case MsgKind::Snd:
    case MsgKind::Rcv:
      return std::holds_alternative<PacketBuf>(payload) && !reply_to.has_value();
    case MsgKind::Get:
    case MsgKind::Set:
      return std::holds_alternative<OptionRequest>(payload) && reply_to.has_value();
    case MsgKind::Ack:
      return std::holds_alternative<OptionAck>(payload) && !reply_to.has_value();
  }
  return false;
}

Bytes encode_u16(std::uint16_t v) {
  Bytes out;
  put_be16(out, v);
  return out;
}

std::optional<std::uint16_t> decode_u16(ByteView v) {
  if (v.size() != 2) return std::nullopt;
  return get_be16(v.data());
}

Bytes encode_f64(double v) {
  Bytes out(sizeof(double));
  std::memcpy(out.data(), &v, sizeof(double));
  return out;
}

std::optional<double> decode_f64(ByteView v) {
  if (v.size() != sizeof(double)) return std::nullopt;
  double out = 0;
  std::memcpy(&out, v.data(), sizeof(double));
  return out;
}

std::string_view to_string(MsgKind kind) {
  switch (kind) {
    case MsgKind::Snd: return "SND";
    case MsgKind::Rcv: return "RCV";
    case MsgKind::Get: return "GET";
    case MsgKind::Set: return "SET";
    case MsgKind::Ack: return "ACK";
  }
  return "?";
}

struct Stack::AckWaiter {
  std::mutex mu;
  std::condition_variable cv;
  std::optional<OptionAck> ack;
  bool abandoned = false;
};

struct Stack::InboxItem {
  LayerId from;
  NetMessage msg;
  std::shared_ptr<AckWaiter> waiter;
};

struct Stack::Slot {
  LayerId id;
  std::string name;
  std::unique_ptr<Layer> layer;
  std::uint16_t below = 0;
  std::atomic<std::uint16_t> above{0};

  std::mutex mu;
  std::condition_variable_any cv;
  std::deque<InboxItem> inbox;
  bool busy = false;

  std::atomic<std::uint64_t> delivered{0};
  std::atomic<std::uint64_t> dropped{0};
  std::atomic<std::uint64_t> late_acks{0};

  std::jthread worker;
};

Stack::Stack(StackMode mode, StackOptions opts) : mode_(mode), opts_(opts) {
  if (opts_.inbox_capacity == 0) throw Error(Errc::InvalidArgument, "inbox capacity must be positive");
  // Never reallocates, so live-mode workers can hold slot references.
  slots_.reserve(kMaxLayers);
}

Stack::~Stack() {
  for (auto& s : slots_) {
    if (s->worker.joinable()) {
      s->worker.request_stop();
      s->cv.notify_all();
    }
  }
  for (auto& s : slots_) {
    if (s->worker.joinable()) s->worker.join();
  }
}

Stack::Slot& Stack::slot(LayerId id) const {
  if (id.value == 0 || id.value > slots_.size()) {
    throw Error(Errc::UnknownNeighbor, "unknown layer id " + std::to_string(id.value));
  }
  return *slots_[id.value - 1];
}

LayerId Stack::register_layer(std::string name, std::unique_ptr<Layer> layer,
                              std::optional<LayerId> above) {
  if (!layer) throw Error(Errc::InvalidArgument, "null layer");
  std::lock_guard lock(registry_mu_);
  for (const auto& s : slots_) {
    if (s->name == name) throw Error(Errc::DuplicateName, "layer '" + name + "' already registered");
  }
  if (slots_.size() >= kMaxLayers) throw Error(Errc::InvalidArgument, "too many layers");
  Slot* below_slot = nullptr;
  if (slots_.empty()) {
    if (above) throw Error(Errc::UnknownNeighbor, "stack is empty");
  } else {
    if (!above) throw Error(Errc::InvalidArgument, "chain already has a bottom layer; give `above`");
    if (above->value == 0 || above->value > slots_.size()) {
      throw Error(Errc::UnknownNeighbor, "unknown layer id " + std::to_string(above->value));
    }
    below_slot = slots_[above->value - 1].get();
    if (below_slot->above.load() != 0) {
      throw Error(Errc::InvalidArgument, "layer '" + below_slot->name + "' already has a layer above");
    }
  }
  auto s = std::make_unique<Slot>();
  s->id = LayerId{static_cast<std::uint16_t>(slots_.size() + 1)};
  s->name = std::move(name);
  s->layer = std::move(layer);
  s->below = below_slot ? below_slot->id.value : 0;
  Slot& ref = *s;
  slots_.push_back(std::move(s));
  if (below_slot) below_slot->above.store(ref.id.value);
  if (mode_ == StackMode::Live) {
    ref.worker = std::jthread([this, &ref](std::stop_token stop) { worker_loop(ref, stop); });
  }
  return ref.id;
}

SendOutcome Stack::enqueue(LayerId from, Slot& to, NetMessage msg) {
  {
    std::lock_guard lock(to.mu);
    if (to.inbox.size() >= opts_.inbox_capacity) {
      to.dropped.fetch_add(1, std::memory_order_relaxed);
      return {SendStatus::Dropped, std::nullopt};
    }
    MsgKind kind = msg.kind;
    to.inbox.push_back(InboxItem{from, std::move(msg), nullptr});
    if (trace_) trace_(DeliveryTrace{from, to.id, kind});
  }
  to.cv.notify_one();
  return {SendStatus::Queued, std::nullopt};
}

SendOutcome Stack::send_msg(LayerId from, NetMessage msg) {
  Slot& src = slot(from);
  if (!msg.well_formed()) throw Error(Errc::InvalidArgument, "malformed message");
  switch (msg.kind) {
    case MsgKind::Snd:
      if (src.below == 0) throw Error(Errc::NoNeighbor, "'" + src.name + "' is the bottom layer");
      return enqueue(from, slot(LayerId{src.below}), std::move(msg));
    case MsgKind::Rcv: {
      std::uint16_t up = src.above.load();
      if (up == 0) throw Error(Errc::NoNeighbor, "'" + src.name + "' is the top layer");
      return enqueue(from, slot(LayerId{up}), std::move(msg));
    }
    case MsgKind::Get:
    case MsgKind::Set: {
      if (src.below == 0) throw Error(Errc::NoNeighbor, "'" + src.name + "' is the bottom layer");
      bool is_set = msg.kind == MsgKind::Set;
      auto ack = request(from, slot(LayerId{src.below}),
                         std::get<OptionRequest>(std::move(msg.payload)), is_set);
      return {SendStatus::Acked, std::move(ack)};
    }
    case MsgKind::Ack:
      break;
  }
  throw Error(Errc::InvalidArgument, "acks are produced by the stack, not sent");
}

OptionAck Stack::get_set_option(LayerId target, OptionRequest req, bool is_set) {
  return request(kUser, slot(target), std::move(req), is_set);
}

SendOutcome Stack::inject(LayerId target, NetMessage msg) {
  Slot& s = slot(target);
  if (!msg.well_formed()) throw Error(Errc::InvalidArgument, "malformed message");
  if (msg.kind == MsgKind::Snd && s.above.load() != 0) {
    throw Error(Errc::InvalidArgument, "Snd may only be injected into the top layer");
  }
  if (msg.kind == MsgKind::Rcv && s.below != 0) {
    throw Error(Errc::InvalidArgument, "Rcv may only be injected into the bottom layer");
  }
  if (msg.kind != MsgKind::Snd && msg.kind != MsgKind::Rcv) {
    throw Error(Errc::InvalidArgument, "use get_set_option for Get/Set");
  }
  return enqueue(kUser, s, std::move(msg));
}

OptionAck Stack::request(LayerId from, Slot& target, OptionRequest req, bool is_set) {
  auto waiter = std::make_shared<AckWaiter>();
  OptKey key = req.key;
  {
    std::lock_guard lock(target.mu);
    if (target.inbox.size() >= opts_.inbox_capacity) {
      throw Error(Errc::AckTimeout, "inbox of '" + target.name + "' is full");
    }
    NetMessage msg = is_set ? NetMessage::set(std::move(req), from) : NetMessage::get(std::move(req), from);
    target.inbox.push_back(InboxItem{from, std::move(msg), waiter});
    if (trace_) trace_(DeliveryTrace{from, target.id, is_set ? MsgKind::Set : MsgKind::Get});
  }
  target.cv.notify_one();

  if (mode_ == StackMode::Sim) {
    while (true) {
      {
        std::lock_guard lock(waiter->mu);
        if (waiter->ack) return std::move(*waiter->ack);
      }
      if (!pump_pass()) break;
    }
    std::lock_guard lock(waiter->mu);
    if (waiter->ack) return std::move(*waiter->ack);
    waiter->abandoned = true;
    throw Error(Errc::AckTimeout, "no ack for option " + std::to_string(static_cast<int>(key)));
  }

  std::unique_lock lock(waiter->mu);
  if (!waiter->cv.wait_for(lock, opts_.ack_timeout, [&] { return waiter->ack.has_value(); })) {
    waiter->abandoned = true;
    throw Error(Errc::AckTimeout, "no ack from '" + target.name + "'");
  }
  return std::move(*waiter->ack);
}

void Stack::dispatch(Slot& s, InboxItem item) {
  s.delivered.fetch_add(1, std::memory_order_relaxed);
  LayerContext ctx(*this, s.id);
  switch (item.msg.kind) {
    case MsgKind::Snd:
    case MsgKind::Rcv: {
      auto& pkt = std::get<PacketBuf>(item.msg.payload);
      try {
        if (item.msg.kind == MsgKind::Snd) {
          s.layer->on_snd(std::move(pkt), ctx);
        } else {
          s.layer->on_rcv(std::move(pkt), ctx);
        }
      } catch (const std::exception&) {
        s.dropped.fetch_add(1, std::memory_order_relaxed);
      }
      return;
    }
    case MsgKind::Get:
    case MsgKind::Set: {
      const auto& req = std::get<OptionRequest>(item.msg.payload);
      OptionAck ack;
      try {
        ack = item.msg.kind == MsgKind::Get ? s.layer->on_get(req) : s.layer->on_set(req);
      } catch (const std::exception&) {
        ack = OptionAck{req.key, OptStatus::InvalidValue, {}};
      }
      ack.key = req.key;
      bool delivered = false;
      {
        std::lock_guard lock(item.waiter->mu);
        if (!item.waiter->abandoned) {
          item.waiter->ack = std::move(ack);
          delivered = true;
        }
      }
      if (delivered) {
        if (trace_) trace_(DeliveryTrace{s.id, *item.msg.reply_to, MsgKind::Ack});
        item.waiter->cv.notify_all();
      } else {
        s.late_acks.fetch_add(1, std::memory_order_relaxed);
      }
      return;
    }
    case MsgKind::Ack:
      return;
  }
}

bool Stack::dispatch_one(Slot& s) {
  InboxItem item;
  {
    std::lock_guard lock(s.mu);
    if (s.busy || s.inbox.empty()) return false;
    item = std::move(s.inbox.front());
    s.inbox.pop_front();
    s.busy = true;
  }
  dispatch(s, std::move(item));
  std::lock_guard lock(s.mu);
  s.busy = false;
  return true;
}

bool Stack::pump_pass() {
  bool progress = false;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    progress |= dispatch_one(*slots_[i]);
  }
  return progress;
}

std::size_t Stack::run_until_idle() {
  if (mode_ != StackMode::Sim) return 0;
  std::size_t handled = 0;
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      if (dispatch_one(*slots_[i])) {
        progress = true;
        ++handled;
      }
    }
  }
  return handled;
}

bool Stack::idle() const {
  for (const auto& s : slots_) {
    std::lock_guard lock(s->mu);
    if (!s->inbox.empty() || s->busy) return false;
  }
  return true;
}

void Stack::worker_loop(Slot& s, std::stop_token stop) {
  while (true) {
    InboxItem item;
    {
      std::unique_lock lock(s.mu);
      if (!s.cv.wait(lock, stop, [&] { return !s.inbox.empty(); })) return;
      item = std::move(s.inbox.front());
      s.inbox.pop_front();
      s.busy = true;
    }
    dispatch(s, std::move(item));
    std::lock_guard lock(s.mu);
    s.busy = false;
  }
}

std::optional<LayerId> Stack::find(std::string_view name) const {
  for (const auto& s : slots_) {
    if (s->name == name) return s->id;
  }
  return std::nullopt;
}

std::optional<LayerId> Stack::below(LayerId id) const {
  const Slot& s = slot(id);
  if (s.below == 0) return std::nullopt;
  return LayerId{s.below};
}

std::optional<LayerId> Stack::above(LayerId id) const {
  std::uint16_t up = slot(id).above.load();
  if (up == 0) return std::nullopt;
  return LayerId{up};
}

std::string Stack::name(LayerId id) const { return slot(id).name; }

Layer& Stack::layer(LayerId id) { return *slot(id).layer; }

LayerStats Stack::stats(LayerId id) const {
  const Slot& s = slot(id);
  return {s.delivered.load(), s.dropped.load(), s.late_acks.load()};
}

std::size_t Stack::size() const { return slots_.size(); }

void Stack::set_trace(std::function<void(const DeliveryTrace&)> trace) { trace_ = std::move(trace); }

SendOutcome LayerContext::send_down(PacketBuf pkt) {
  return stack_.send_msg(self_, NetMessage::snd(std::move(pkt)));
}

SendOutcome LayerContext::send_up(PacketBuf pkt) {
  return stack_.send_msg(self_, NetMessage::rcv(std::move(pkt)));
}

OptionAck LayerContext::query_below(OptionRequest req, bool is_set) {
  NetMessage msg = is_set ? NetMessage::set(std::move(req), self_) : NetMessage::get(std::move(req), self_);
  return *stack_.send_msg(self_, std::move(msg)).ack;
}

}  // namespace secstack::net

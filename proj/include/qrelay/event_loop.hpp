/*
 *    Copyright 2026 The qrelay Authors.
 *
 *    Licensed under the Apache License, Version 2.0 (the "License");
 *    you may not use this file except in compliance with the License.
 *    You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 *    Unless required by applicable law or agreed to in writing, software
 *    distributed under the License is distributed on an "AS IS" BASIS,
 *    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *    See the License for the specific language governing permissions and
 *    limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

namespace qrelay {

/// Single-threaded logical-time scheduler. Events with equal time fire in the
/// order they were scheduled, which makes every run with the same inputs
/// replay the same order.
class EventLoop {
 public:
  using Action = std::function<void()>;

  std::uint64_t now() const noexcept { return now_; }
  bool idle() const noexcept { return queue_.empty(); }
  std::size_t fired() const noexcept { return fired_; }

  void schedule(std::uint64_t delay, Action action) {
    queue_.push(Event{now_ + delay, next_seq_++, std::move(action)});
  }

  /// Moves the clock forward without firing anything (synchronous hops).
  void advance(std::uint64_t ticks) { now_ += ticks; }

  bool step() {
    if (queue_.empty()) return false;
    Event ev = queue_.top();
    queue_.pop();
    if (ev.time > now_) now_ = ev.time;
    ++fired_;
    ev.action();
    return true;
  }

  std::size_t run(std::size_t max_events = std::numeric_limits<std::size_t>::max()) {
    std::size_t n = 0;
    while (n < max_events && step()) ++n;
    return n;
  }

 private:
  struct Event {
    std::uint64_t time;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::size_t fired_ = 0;
};

}  // namespace qrelay

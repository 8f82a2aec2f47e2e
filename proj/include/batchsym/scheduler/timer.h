#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <tuple>
#include <utility>

#include "batchsym/profile/time.h"

namespace batchsym::sched {

// Default same-tick order; then by scheduling sequence.
enum class TimerClass : uint8_t {
  kCompletion = 0,
  kGpu = 1,
  kModel = 2,
  kDrop = 3,
  kArrival = 4,
};

inline constexpr size_t kTimerClassCount = 5;
// Position of each TimerClass in the same-tick order, indexed by class.
using TieOrder = std::array<uint8_t, kTimerClassCount>;
inline constexpr TieOrder kTimersFirst = {0, 1, 2, 3, 4};
// Arrivals ahead of every timer at the same tick.
inline constexpr TieOrder kArrivalsFirst = {1, 2, 3, 4, 0};

struct TimerHandle {
  TimePoint at;
  TimerClass cls = TimerClass::kCompletion;
  uint8_t rank = 0;  // position of `cls` in the queue's tie order
  uint64_t seq = 0;  // 0: no timer

  explicit operator bool() const { return seq != 0; }
  friend bool operator<(const TimerHandle& a, const TimerHandle& b) {
    return std::tie(a.at, a.rank, a.seq) < std::tie(b.at, b.rank, b.seq);
  }
};

// What the scheduling planes need from their driver. The planes never
// create threads; the driver (virtual-time simulator or wall-clock worker)
// fires callbacks in (time, class, sequence) order.
class TimerService {
 public:
  virtual ~TimerService() = default;
  virtual TimePoint Now() const = 0;
  virtual TimerHandle Schedule(TimePoint at, TimerClass cls,
                               std::function<void()> fn) = 0;
  // No-op for empty, fired or already-cancelled handles.
  virtual void Cancel(TimerHandle& handle) = 0;
};

// Ordered timer set with O(log n) schedule/cancel/pop.
class TimerQueue {
 public:
  explicit TimerQueue(TieOrder order = kTimersFirst) : order_(order) {}

  TimerHandle Push(TimePoint at, TimerClass cls, std::function<void()> fn) {
    TimerHandle h{at, cls, order_[static_cast<size_t>(cls)], ++seq_};
    timers_.emplace(h, std::move(fn));
    return h;
  }
  void Erase(TimerHandle& h) {
    if (h) timers_.erase(h);
    h = TimerHandle{};
  }
  bool empty() const { return timers_.empty(); }
  size_t size() const { return timers_.size(); }
  const TimerHandle& Top() const { return timers_.begin()->first; }
  std::pair<TimerHandle, std::function<void()>> Pop() {
    auto node = timers_.extract(timers_.begin());
    return {node.key(), std::move(node.mapped())};
  }

 private:
  TieOrder order_;
  std::map<TimerHandle, std::function<void()>> timers_;
  uint64_t seq_ = 0;
};

}  // namespace batchsym::sched

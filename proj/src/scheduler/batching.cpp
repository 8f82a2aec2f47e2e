#include "batchsym/scheduler/batching.h"

#include <algorithm>

namespace batchsym::sched {
namespace {

bool Fits(TimePoint start_floor, const Request& head, uint32_t b,
          TimePoint now, const LatencyProfile& profile,
          const PolicyConfig& policy) {
  const TimePoint start =
      std::max(SatAdd(now, policy.network.DispatchDelay(b)), start_floor);
  return SatAdd(start, profile.ExecLatency(b)) <= head.deadline;
}

}  // namespace

BatchSelection GetBatch(std::deque<Request>& queue, TimePoint now,
                        TimePoint gpu_free_floor, const LatencyProfile& profile,
                        const PolicyConfig& policy) {
  BatchSelection sel;
  while (!queue.empty() &&
         !Fits(kInfinitePast, queue.front(), 1, now, profile, policy)) {
    sel.dropped.push_back(queue.front());
    queue.pop_front();
  }
  if (policy.gathering == GatheringKind::kDropHead && policy.target_batch > 0) {
    while (!queue.empty()) {
      const auto target = static_cast<uint32_t>(std::min<size_t>(
          {policy.target_batch, queue.size(), profile.max_batch()}));
      if (Fits(kInfinitePast, queue.front(), target, now, profile, policy)) {
        break;
      }
      sel.dropped.push_back(queue.front());
      queue.pop_front();
    }
  }
  if (queue.empty()) return sel;

  const Request& head = queue.front();
  // A timeout batch cannot start before its head's timeout expires.
  TimePoint floor = gpu_free_floor;
  if (policy.kind == PolicyKind::kTimeout) {
    floor = std::max(floor, SatAdd(head.arrival, policy.timeout));
  }
  uint32_t lo = 0;
  uint32_t hi = static_cast<uint32_t>(
      std::min<size_t>(queue.size(), profile.max_batch()));
  while (lo < hi) {
    const uint32_t mid = lo + (hi - lo + 1) / 2;
    if (Fits(floor, head, mid, now, profile, policy)) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  sel.size = lo;
  return sel;
}

}  // namespace batchsym::sched

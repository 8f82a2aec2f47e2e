#pragma once

#include <deque>
#include <vector>

#include "batchsym/profile/latency_profile.h"
#include "batchsym/scheduler/types.h"

namespace batchsym::sched {

struct BatchSelection {
  uint32_t size = 0;              // members are queue[0, size)
  std::vector<Request> dropped;   // removed from the queue head
};

// Batch gathering over a FIFO queue (sorted by arrival, so the head holds the
// earliest deadline).
//
// First pops every head that cannot finish even as a singleton started now:
//   now + delay(1) + l(1) > deadline.
// Under kDropHead it then keeps popping heads while a batch of
// min(target, |queue|) would miss the head deadline. Finally returns the
// longest prefix B with
//   max(now + delay(|B|), gpu_free_floor, timeout floor) + l(|B|) <= head deadline
// where the timeout floor is head arrival + k under kTimeout. A late floor
// can shrink the batch to zero without dropping anything; the head may
// still fit on a GPU that frees up earlier.
BatchSelection GetBatch(std::deque<Request>& queue, TimePoint now,
                        TimePoint gpu_free_floor, const LatencyProfile& profile,
                        const PolicyConfig& policy);

}  // namespace batchsym::sched

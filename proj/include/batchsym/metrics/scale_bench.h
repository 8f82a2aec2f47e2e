#pragma once

#include <cstdint>

#include "batchsym/profile/time.h"

namespace batchsym::metrics {

struct ScaleBenchConfig {
  uint32_t workers = 1;  // model-plane threads; the rank plane gets its own
  uint32_t gpus = 64;
  uint32_t models = 16;
  Duration duration = std::chrono::milliseconds(500);
  // Profile and SLO of every synthetic model.
  Duration alpha = std::chrono::microseconds(50);
  Duration beta = std::chrono::microseconds(500);
  Duration slo = std::chrono::milliseconds(5);
};

struct ScaleBenchResult {
  uint32_t workers = 0;
  uint32_t gpus = 0;
  double seconds = 0;
  // A decision places one request on a GPU; drops are counted apart.
  uint64_t decisions = 0;
  uint64_t dropped = 0;
  uint64_t batches = 0;
  uint64_t rank_messages = 0;
  uint64_t coalesced = 0;  // candidate updates superseded before delivery
  double decisions_per_sec = 0;
  double ns_per_decision = 0;
};

// Wall-clock run of the two-plane scheduler: each worker owns the model
// planes with id % workers == its index and injects requests for them as
// fast as it can, skipping models that already queue two full batches; the
// rank plane runs on one more thread; GPUs are stubs. Planes talk only
// through mailboxes.
ScaleBenchResult RunScaleBench(const ScaleBenchConfig& config);

}  // namespace batchsym::metrics

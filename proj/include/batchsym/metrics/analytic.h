#pragma once

#include <cstdint>

#include "batchsym/profile/latency_profile.h"

namespace batchsym::metrics {

enum class CoordinationMode { kStaggered, kNoCoordination };
const char* CoordinationModeName(CoordinationMode mode);

struct StaggeredSolution {
  CoordinationMode mode = CoordinationMode::kStaggered;
  bool feasible = false;
  uint32_t batch = 0;
  double throughput = 0;  // requests per second over all N GPUs
};

// Staggered: largest b with (1 + 1/N) l(b) <= SLO. No coordination: largest
// b with 2 l(b) <= SLO. Throughput N b / l(b). Evaluated in integer ticks:
// the budget is floor(SLO * N / (N + 1)) or floor(SLO / 2), which is exact
// because l(b) is an integer.
StaggeredSolution AnalyticalSolution(const LatencyProfile& profile,
                                     Duration slo, uint32_t gpus,
                                     CoordinationMode mode);

// N * max over feasible b of b / l(b): no schedule can serve more.
double BatchingCeiling(const LatencyProfile& profile, Duration slo,
                       uint32_t gpus);

}  // namespace batchsym::metrics

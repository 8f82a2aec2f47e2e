#include "batchsym/metrics/analytic.h"

#include <algorithm>
#include <stdexcept>

namespace batchsym::metrics {

const char* CoordinationModeName(CoordinationMode mode) {
  return mode == CoordinationMode::kStaggered ? "staggered" : "no_coordination";
}

StaggeredSolution AnalyticalSolution(const LatencyProfile& profile,
                                     Duration slo, uint32_t gpus,
                                     CoordinationMode mode) {
  if (gpus == 0) throw std::invalid_argument("gpu count must be positive");
  const int64_t s = slo.count();
  const Duration budget =
      mode == CoordinationMode::kStaggered
          ? Duration(static_cast<int64_t>(static_cast<__int128>(s) * gpus /
                                          (gpus + 1)))
          : Duration(s / 2);
  StaggeredSolution out;
  out.mode = mode;
  out.batch = MaxFeasibleBatch(profile, budget);
  out.feasible = out.batch > 0;
  if (out.feasible) {
    out.throughput = gpus * static_cast<double>(out.batch) /
                     ToSeconds(profile.ExecLatency(out.batch));
  }
  return out;
}

double BatchingCeiling(const LatencyProfile& profile, Duration slo,
                       uint32_t gpus) {
  const uint32_t limit = MaxFeasibleBatch(profile, slo);
  double best = 0;
  for (uint32_t b = 1; b <= limit; ++b) {
    best = std::max(best, b / ToSeconds(profile.ExecLatency(b)));
  }
  return gpus * best;
}

}  // namespace batchsym::metrics

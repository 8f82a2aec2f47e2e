#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "batchsym/sim/simulator.h"

namespace batchsym::metrics {

struct ModelStats {
  std::string name;
  Duration slo{0};
  uint64_t arrivals = 0;
  uint64_t completed = 0;  // within SLO
  uint64_t late = 0;
  uint64_t dropped = 0;
  uint64_t pending = 0;
  // Nearest-rank p99 of end-to-end latency; drops and pending requests
  // count as +inf. Zero when the model had no measured arrivals.
  Duration p99{0};
  bool p99_infinite = false;
  std::map<uint32_t, uint64_t> batch_hist;     // batch size -> batches
  std::map<int64_t, uint64_t> queueing_hist;   // delay bucket (us) -> count

  bool MeetsSlo() const { return !p99_infinite && p99 <= slo; }
};

struct GpuUsage {
  Duration busy{0};
  Duration idle{0};
  double idle_fraction() const;
};

// Measured over requests arriving in [measure_begin, measure_end); GPU
// usage over the same interval; batch histograms over batches sent in it.
struct RunStats {
  std::vector<ModelStats> models;
  std::vector<GpuUsage> gpus;
  Duration window{0};
  uint64_t arrivals = 0;
  uint64_t good = 0;  // completed within SLO
  uint64_t bad = 0;   // dropped + late (+ never served)
  double offered_rate = 0;  // arrivals per second
  double goodput = 0;       // in-SLO completions per second
  double bad_rate = 0;      // bad / arrivals
  double mean_idle_fraction = 0;
  double median_batch = 0;

  bool AllMeetSlo() const;
};

inline constexpr int64_t kQueueingBucketUs = 100;

RunStats ComputeStats(const sim::RunResult& result);

// Start of GPU execution minus arrival; only for dispatched requests.
Duration QueueingDelay(const sim::RequestRecord& record);

// Nearest-rank percentile over `samples` (sorted in place); `infinite`
// extra samples sit above every finite one. Returns nullopt when the
// selected rank falls on an infinite sample.
std::optional<Duration> NearestRank(std::vector<Duration>& samples,
                                    uint64_t infinite, double percentile);

}  // namespace batchsym::metrics

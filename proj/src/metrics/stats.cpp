#include "batchsym/metrics/stats.h"

#include <algorithm>
#include <cmath>

namespace batchsym::metrics {

double GpuUsage::idle_fraction() const {
  const auto total = busy + idle;
  if (total <= Duration::zero()) return 0;
  return static_cast<double>(idle.count()) / static_cast<double>(total.count());
}

bool RunStats::AllMeetSlo() const {
  return std::all_of(models.begin(), models.end(),
                     [](const ModelStats& m) { return m.MeetsSlo(); });
}

Duration QueueingDelay(const sim::RequestRecord& record) {
  return record.start - record.arrival;
}

std::optional<Duration> NearestRank(std::vector<Duration>& samples,
                                    uint64_t infinite, double percentile) {
  const uint64_t n = samples.size() + infinite;
  if (n == 0) return Duration::zero();
  uint64_t rank = static_cast<uint64_t>(
      std::ceil(percentile / 100.0 * static_cast<double>(n)));
  rank = std::clamp<uint64_t>(rank, 1, n);
  if (rank > samples.size()) return std::nullopt;
  auto nth = samples.begin() + static_cast<ptrdiff_t>(rank - 1);
  std::nth_element(samples.begin(), nth, samples.end());
  return *nth;
}

RunStats ComputeStats(const sim::RunResult& result) {
  RunStats stats;
  const TimePoint begin = result.measure_begin;
  const TimePoint end = result.measure_end;
  stats.window = end - begin;
  const size_t model_count = result.model_names.size();
  stats.models.resize(model_count);
  std::vector<std::vector<Duration>> latencies(model_count);
  std::vector<uint64_t> infinite(model_count, 0);
  for (size_t m = 0; m < model_count; ++m) {
    stats.models[m].name = result.model_names[m];
    stats.models[m].slo = result.model_slos[m];
  }

  for (const auto& r : result.requests) {
    if (r.arrival < begin || r.arrival >= end) continue;
    ModelStats& ms = stats.models[r.model];
    ++ms.arrivals;
    switch (r.outcome) {
      case sim::Outcome::kCompleted:
        ++ms.completed;
        break;
      case sim::Outcome::kLate:
        ++ms.late;
        break;
      case sim::Outcome::kDropped:
        ++ms.dropped;
        break;
      case sim::Outcome::kPending:
        ++ms.pending;
        break;
    }
    if (r.outcome == sim::Outcome::kCompleted ||
        r.outcome == sim::Outcome::kLate) {
      latencies[r.model].push_back(r.finish - r.arrival);
      const int64_t us =
          std::chrono::duration_cast<std::chrono::microseconds>(
              QueueingDelay(r))
              .count();
      ++ms.queueing_hist[us / kQueueingBucketUs * kQueueingBucketUs];
    } else {
      ++infinite[r.model];
    }
  }

  std::vector<uint32_t> sizes;
  for (const auto& b : result.batches) {
    if (b.sent_at < begin || b.sent_at >= end) continue;
    ++stats.models[b.model].batch_hist[b.size];
    sizes.push_back(b.size);
  }
  if (!sizes.empty()) {
    std::sort(sizes.begin(), sizes.end());
    const size_t n = sizes.size();
    stats.median_batch = n % 2 ? sizes[n / 2]
                               : 0.5 * (sizes[n / 2 - 1] + sizes[n / 2]);
  }

  for (size_t m = 0; m < model_count; ++m) {
    ModelStats& ms = stats.models[m];
    auto p99 = NearestRank(latencies[m], infinite[m], 99.0);
    ms.p99_infinite = !p99.has_value();
    ms.p99 = p99.value_or(Duration::zero());
    stats.arrivals += ms.arrivals;
    stats.good += ms.completed;
    stats.bad += ms.late + ms.dropped + ms.pending;
  }

  stats.gpus.resize(result.gpu_count);
  for (const auto& b : result.batches) {
    const TimePoint s = std::max(b.start, begin);
    const TimePoint f = std::min(b.finish, end);
    if (f > s) stats.gpus[b.gpu].busy += f - s;
  }
  double idle_sum = 0;
  for (auto& g : stats.gpus) {
    g.idle = stats.window - g.busy;
    idle_sum += g.idle_fraction();
  }
  if (!stats.gpus.empty()) stats.mean_idle_fraction = idle_sum / stats.gpus.size();

  const double seconds = ToSeconds(stats.window);
  if (seconds > 0) {
    stats.offered_rate = stats.arrivals / seconds;
    stats.goodput = stats.good / seconds;
  }
  if (stats.arrivals > 0) {
    stats.bad_rate = static_cast<double>(stats.bad) / stats.arrivals;
  }
  return stats;
}

}  // namespace batchsym::metrics

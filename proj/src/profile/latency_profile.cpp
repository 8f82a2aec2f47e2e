#include "batchsym/profile/latency_profile.h"

#include <algorithm>
#include <iterator>
#include <string>

namespace batchsym {

InvalidBatchSize::InvalidBatchSize(uint32_t batch_size, uint32_t max_batch)
    : std::out_of_range("invalid batch size " + std::to_string(batch_size) +
                        " (valid range 1.." + std::to_string(max_batch) + ")"),
      batch_size_(batch_size) {}

LatencyProfile::LatencyProfile(Kind kind, Duration alpha, Duration beta,
                               std::vector<Duration> table)
    : kind_(kind), alpha_(alpha), beta_(beta), table_(std::move(table)) {}

LatencyProfile LatencyProfile::Linear(Duration alpha, Duration beta,
                                      uint32_t max_batch) {
  if (alpha < Duration::zero()) {
    throw ProfileError("linear profile requires alpha >= 0");
  }
  if (beta <= Duration::zero()) {
    throw ProfileError("linear profile requires beta > 0");
  }
  if (max_batch == 0) {
    throw ProfileError("max_batch must be positive");
  }
  std::vector<Duration> table(max_batch);
  for (uint32_t b = 1; b <= max_batch; ++b) {
    table[b - 1] = alpha * b + beta;
  }
  return LatencyProfile(Kind::kLinear, alpha, beta, std::move(table));
}

LatencyProfile LatencyProfile::Table(const std::map<uint32_t, Duration>& points,
                                     uint32_t max_batch) {
  if (max_batch == 0) {
    throw ProfileError("max_batch must be positive");
  }
  if (points.empty() || points.begin()->first != 1) {
    throw ProfileError("table profile must contain batch size 1");
  }
  for (const auto& [bs, latency] : points) {
    if (bs == 0) throw ProfileError("table profile batch sizes start at 1");
    if (latency <= Duration::zero()) {
      throw ProfileError("table latency for batch size " + std::to_string(bs) +
                         " must be positive");
    }
  }
  std::vector<Duration> table(max_batch);
  auto lerp = [](uint32_t x0, Duration y0, uint32_t x1, Duration y1,
                 uint32_t x) {
    const double t = static_cast<double>(x - x0) / (x1 - x0);
    const double y = y0.count() + t * (y1.count() - y0.count());
    return Duration(static_cast<int64_t>(std::llround(y)));
  };
  auto hi = points.begin();
  auto lo = hi;
  for (uint32_t b = 1; b <= max_batch; ++b) {
    while (hi != points.end() && hi->first < b) {
      lo = hi;
      ++hi;
    }
    if (hi != points.end() && hi->first == b) {
      table[b - 1] = hi->second;
    } else if (hi != points.end()) {
      table[b - 1] = lerp(lo->first, lo->second, hi->first, hi->second, b);
    } else if (points.size() >= 2) {
      auto last = std::prev(points.end());
      auto prev = std::prev(last);
      table[b - 1] = lerp(prev->first, prev->second, last->first, last->second,
                          b);
    } else {
      table[b - 1] = points.begin()->second;
    }
  }
  for (uint32_t b = 2; b <= max_batch; ++b) {
    if (table[b - 1] < table[b - 2]) {
      throw ProfileError("table profile decreases at batch size " +
                         std::to_string(b));
    }
  }
  return LatencyProfile(Kind::kTable, Duration::zero(), Duration::zero(),
                        std::move(table));
}

Duration LatencyProfile::ExecLatency(uint32_t batch_size) const {
  if (batch_size == 0 || batch_size > table_.size()) {
    throw InvalidBatchSize(batch_size, max_batch());
  }
  return table_[batch_size - 1];
}

Window SchedulableWindow(const LatencyProfile& profile, TimePoint deadline,
                         uint32_t batch_size) {
  const Duration cur = profile.ExecLatency(batch_size);
  const Duration next =
      batch_size >= profile.max_batch() ? cur
                                        : profile.ExecLatency(batch_size + 1);
  return Window{SatSub(deadline, next), SatSub(deadline, cur)};
}

uint32_t MaxFeasibleBatch(const LatencyProfile& profile, Duration slo,
                          Duration start_offset) {
  // Monotone predicate; binary search for the last true.
  uint32_t lo = 0;
  uint32_t hi = profile.max_batch();
  while (lo < hi) {
    const uint32_t mid = lo + (hi - lo + 1) / 2;
    if (start_offset + profile.ExecLatency(mid) <= slo) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

void ValidateModelSpec(const ModelSpec& spec) {
  if (spec.slo <= spec.profile.ExecLatency(1)) {
    throw ProfileError("model " + spec.name +
                       ": SLO must exceed the batch-size-1 latency");
  }
}

}  // namespace batchsym

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>

namespace batchsym {

// Virtual time: integer nanosecond ticks. Event ordering never touches
// floating point; millisecond inputs are converted once at ingestion.
using Duration = std::chrono::nanoseconds;

struct VirtualClock {
  using duration = Duration;
  using rep = duration::rep;
  using period = duration::period;
  using time_point = std::chrono::time_point<VirtualClock, duration>;
  static constexpr bool is_steady = true;
};

using TimePoint = VirtualClock::time_point;

inline constexpr TimePoint kInfinitePast = TimePoint::min();
inline constexpr TimePoint kInfiniteFuture = TimePoint::max();
inline constexpr TimePoint kEpoch = TimePoint{};

inline Duration FromMillis(double ms) {
  return Duration(static_cast<int64_t>(std::llround(ms * 1e6)));
}
inline Duration FromMicros(double us) {
  return Duration(static_cast<int64_t>(std::llround(us * 1e3)));
}
inline Duration FromSeconds(double s) {
  return Duration(static_cast<int64_t>(std::llround(s * 1e9)));
}
inline double ToMillis(Duration d) { return d.count() * 1e-6; }
inline double ToSeconds(Duration d) { return d.count() * 1e-9; }

inline TimePoint AtNanos(int64_t ns) { return TimePoint(Duration(ns)); }
inline TimePoint AtMillis(double ms) { return TimePoint(FromMillis(ms)); }
inline int64_t Nanos(TimePoint t) { return t.time_since_epoch().count(); }

// Saturating arithmetic around the +/- infinity sentinels.
inline TimePoint SatAdd(TimePoint t, Duration d) {
  if (t == kInfiniteFuture || t == kInfinitePast) return t;
  const int64_t a = Nanos(t);
  const int64_t b = d.count();
  if (b > 0 && a > std::numeric_limits<int64_t>::max() - b) return kInfiniteFuture;
  if (b < 0 && a < std::numeric_limits<int64_t>::min() - b) return kInfinitePast;
  return t + d;
}
inline TimePoint SatSub(TimePoint t, Duration d) { return SatAdd(t, -d); }

}  // namespace batchsym

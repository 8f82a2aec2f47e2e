#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "batchsym/profile/time.h"

namespace batchsym {

class InvalidBatchSize : public std::out_of_range {
 public:
  InvalidBatchSize(uint32_t batch_size, uint32_t max_batch);
  uint32_t batch_size() const { return batch_size_; }

 private:
  uint32_t batch_size_;
};

class ProfileError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Maps batch size to execution duration. Either the linear fit
// l(b) = alpha * b + beta, or a measured table indexed from b = 1.
// Both kinds are materialized into a dense table at construction, so
// ExecLatency is a bounds check plus one load.
class LatencyProfile {
 public:
  enum class Kind { kLinear, kTable };

  static LatencyProfile Linear(Duration alpha, Duration beta,
                               uint32_t max_batch);

  // Sparse measurements keyed by batch size. Gaps are filled by linear
  // interpolation; sizes above the last point extrapolate from the last
  // two points. Decreasing tables are rejected.
  static LatencyProfile Table(const std::map<uint32_t, Duration>& points,
                              uint32_t max_batch);

  Duration ExecLatency(uint32_t batch_size) const;

  Kind kind() const { return kind_; }
  uint32_t max_batch() const { return static_cast<uint32_t>(table_.size()); }
  // Only meaningful for linear profiles.
  Duration alpha() const { return alpha_; }
  Duration beta() const { return beta_; }

 private:
  LatencyProfile(Kind kind, Duration alpha, Duration beta,
                 std::vector<Duration> table);

  Kind kind_;
  Duration alpha_{0};
  Duration beta_{0};
  std::vector<Duration> table_;
};

struct Window {
  TimePoint frontrun;
  TimePoint latest;
};

// [deadline - l(b+1), deadline - l(b)]. At b == max_batch the batch cannot
// grow, so l(b+1) is taken as l(max_batch) and the window collapses.
Window SchedulableWindow(const LatencyProfile& profile, TimePoint deadline,
                         uint32_t batch_size);

// Largest b <= max_batch with start_offset + l(b) <= slo; 0 if none.
uint32_t MaxFeasibleBatch(const LatencyProfile& profile, Duration slo,
                          Duration start_offset = Duration::zero());

using ModelId = uint32_t;

struct ModelSpec {
  ModelId model_id = 0;
  std::string name;
  LatencyProfile profile;
  Duration slo;
};

// Throws ProfileError unless l(1) < slo.
void ValidateModelSpec(const ModelSpec& spec);

}  // namespace batchsym

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "batchsym/scheduler/scheduler.h"
#include "batchsym/scheduler/timer.h"
#include "batchsym/sim/network.h"
#include "batchsym/sim/scenario.h"
#include "batchsym/sim/workload.h"

namespace batchsym::sim {

using sched::GpuId;
using sched::RequestId;

// Virtual-time TimerService: a single ordered event queue.
class VirtualTimers : public sched::TimerService {
 public:
  explicit VirtualTimers(sched::TieOrder order = sched::kTimersFirst)
      : queue_(order) {}

  TimePoint Now() const override { return now_; }
  sched::TimerHandle Schedule(TimePoint at, sched::TimerClass cls,
                              std::function<void()> fn) override;
  void Cancel(sched::TimerHandle& handle) override { queue_.Erase(handle); }

  // Pops and runs the next event; false when the queue is empty.
  bool Step();
  bool empty() const { return queue_.empty(); }
  uint64_t fired() const { return fired_; }

 private:
  sched::TimerQueue queue_;
  TimePoint now_ = kEpoch;
  uint64_t fired_ = 0;
};

enum class Outcome { kPending, kCompleted, kLate, kDropped };
const char* OutcomeName(Outcome outcome);

struct RequestRecord {
  RequestId id = 0;
  ModelId model = 0;
  TimePoint arrival;
  TimePoint deadline;
  // Unset (-inf) unless the request was dispatched.
  TimePoint dispatch = kInfinitePast;
  TimePoint start = kInfinitePast;
  TimePoint finish = kInfinitePast;
  uint32_t batch_size = 0;
  Outcome outcome = Outcome::kPending;
};

struct BatchRecord {
  ModelId model = 0;
  GpuId gpu = 0;
  TimePoint sent_at;
  TimePoint planned_start;
  TimePoint start;
  TimePoint finish;
  uint32_t size = 0;
  bool shrunk = false;
  std::vector<RequestId> requests;
};

struct TraceEvent {
  enum class Kind { kDispatch, kDispatchShrunk, kDrop };
  TimePoint at;
  Kind kind = Kind::kDispatch;
  ModelId model = 0;
  std::optional<GpuId> gpu;
  uint32_t batch_size = 0;
  TimePoint start = kInfinitePast;
  TimePoint finish = kInfinitePast;
  std::vector<RequestId> requests;
};
const char* TraceKindName(TraceEvent::Kind kind);

struct RunResult {
  std::string scenario;
  uint64_t seed = 0;
  uint32_t gpu_count = 0;
  std::vector<std::string> model_names;
  std::vector<Duration> model_slos;
  // Requests arriving in [measure_begin, measure_end) are measured.
  TimePoint measure_begin;
  TimePoint measure_end;
  TimePoint end;  // time of the last processed event
  // Indexed by request id - 1 is not guaranteed; ordered by arrival.
  std::vector<RequestRecord> requests;
  std::vector<BatchRecord> batches;  // in dispatch order
  std::vector<TraceEvent> trace;
  sched::RankPlane::Stats rank_stats;
  uint64_t events = 0;
};

// Event-boundary view for invariant checks.
struct SimCounters {
  uint64_t arrivals = 0;
  uint64_t completed = 0;
  uint64_t dropped = 0;
  uint64_t queued = 0;
  uint64_t in_flight = 0;
};

// Runs one scenario in virtual time. GPUs are emulated by delay: a batch of
// size b occupies its GPU for exactly l(b) starting at
// max(exec_at, send time + sampled network delay, GPU busy-until).
class Simulator : private sched::ExecutionSink {
 public:
  using Observer = std::function<void(const Simulator&)>;

  explicit Simulator(Scenario scenario);
  ~Simulator() override;

  // Called after every processed event.
  void SetObserver(Observer observer) { observer_ = std::move(observer); }
  // Replaces the generated workload (arrival order must be non-decreasing).
  void SetArrivals(std::vector<Arrival> arrivals);

  RunResult Run();

  const Scenario& scenario() const { return scenario_; }
  const sched::Scheduler& scheduler() const { return *scheduler_; }
  TimePoint Now() const { return timers_.Now(); }
  SimCounters Counters() const;

 private:
  struct GpuState {
    TimePoint busy_until = kEpoch;
    uint64_t in_flight = 0;
  };

  void Execute(sched::ExecutionOrder order) override;
  void Dropped(ModelId model, std::span<const sched::Request> requests) override;
  void ScheduleNextArrival();
  void OnArrival(size_t index);
  void OnCompletion(size_t batch_index);

  Scenario scenario_;
  VirtualTimers timers_;
  NetworkModel network_;
  std::unique_ptr<sched::Scheduler> scheduler_;
  std::optional<std::vector<Arrival>> arrivals_;
  size_t next_arrival_ = 0;
  std::vector<GpuState> gpus_;
  Observer observer_;
  RunResult result_;
  // request id -> index into result_.requests
  std::vector<size_t> index_by_id_;
  SimCounters counters_;
  bool ran_ = false;
};

// Convenience: Simulator(scenario).Run().
RunResult RunScenario(const Scenario& scenario);

}  // namespace batchsym::sim

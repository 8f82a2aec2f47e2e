#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "batchsym/scheduler/channels.h"
#include "batchsym/scheduler/timer.h"
#include "batchsym/scheduler/types.h"

namespace batchsym::sched {

// Global matchmaking state: GPU free times, per-model timers, and the set of
// schedulable candidates whose model timer fired without a free GPU. Every
// index is an ordered set, so each handler costs O(log M + log G).
//
// GPU states: idle or busy (finite free_at, indexed) or outstanding
// (free_at = +inf between a grant and the model plane's InformGpu).
class RankPlane {
 public:
  struct Stats {
    uint64_t handler_calls = 0;
    uint64_t structure_ops = 0;       // excluding amortized evictions
    uint64_t max_ops_per_call = 0;
    uint64_t eviction_ops = 0;
    uint64_t grants = 0;
    uint64_t evictions = 0;
    uint64_t stale_timers = 0;
  };

  RankPlane(NetworkBudget network, TimerService& timers, ModelInbox& models);
  RankPlane(const RankPlane&) = delete;
  RankPlane& operator=(const RankPlane&) = delete;
  ~RankPlane();

  // Ids are dense: the n-th AddModel/AddGpu call must pass id n.
  void AddModel(ModelId model);
  void AddGpu(GpuId gpu, TimePoint free_at = kEpoch);

  void InformCandidate(ModelId model, const std::optional<Candidate>& c);
  void InformGpu(GpuId gpu, TimePoint free_at);
  // Applies `actual` only if the GPU still carries `expected`, i.e. it has
  // not been granted again since.
  void CorrectGpu(GpuId gpu, TimePoint expected, TimePoint actual);

  size_t model_count() const { return models_.size(); }
  size_t gpu_count() const { return gpu_free_at_.size(); }
  TimePoint gpu_free_at(GpuId gpu) const { return gpu_free_at_.at(gpu); }
  bool IsRegistered(ModelId model) const;
  bool HasModelTimer(ModelId model) const;
  size_t registered_count() const { return by_latest_.size(); }
  size_t outstanding_gpus() const;
  const Stats& stats() const { return stats_; }

 private:
  struct ModelEntry {
    std::optional<Candidate> pending;     // model timer armed
    std::optional<Candidate> registered;  // schedulable, waiting for a GPU
    TimerHandle timer;
  };

  class HandlerScope;

  void OnModelTimer(ModelId model, uint64_t version);
  void OnGpuTimer();
  void ArmGpuTimer();
  void Grant(ModelId model, GpuId gpu, TimePoint free_at);
  void Register(ModelId model, const Candidate& c);
  void Unregister(ModelId model);
  void SetGpuFreeAt(GpuId gpu, TimePoint free_at);
  std::pair<TimePoint, GpuId> EarliestGpu();
  ModelEntry& Model(ModelId model);
  void CheckGpu(GpuId gpu) const;

  NetworkBudget network_;
  TimerService& timers_;
  ModelInbox& inbox_;

  std::vector<ModelEntry> models_;
  std::vector<TimePoint> gpu_free_at_;
  std::set<std::pair<TimePoint, GpuId>> gpus_by_free_;
  std::set<std::pair<TimePoint, ModelId>> by_latest_;
  std::set<std::pair<Duration, ModelId>> by_delay_;
  TimerHandle gpu_timer_;

  Stats stats_;
  uint64_t ops_ = 0;
  int depth_ = 0;
};

}  // namespace batchsym::sched

#pragma once

#include <optional>
#include <span>

#include "batchsym/scheduler/types.h"

namespace batchsym::sched {

// Model plane -> rank plane.
class RankInbox {
 public:
  virtual ~RankInbox() = default;
  virtual void InformCandidate(ModelId model,
                               const std::optional<Candidate>& candidate) = 0;
  virtual void InformGpu(GpuId gpu, TimePoint free_at) = 0;
};

// Rank plane -> model plane.
class ModelInbox {
 public:
  virtual ~ModelInbox() = default;
  virtual void GrantedGpu(ModelId model, GpuId gpu, TimePoint gpu_free_at) = 0;
};

// Model plane -> backends and frontends.
class ExecutionSink {
 public:
  virtual ~ExecutionSink() = default;
  virtual void Execute(ExecutionOrder order) = 0;
  virtual void Dropped(ModelId model, std::span<const Request> requests) = 0;
};

}  // namespace batchsym::sched

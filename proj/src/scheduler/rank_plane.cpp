#include "batchsym/scheduler/rank_plane.h"

#include <algorithm>
#include <string>

namespace batchsym::sched {

class RankPlane::HandlerScope {
 public:
  explicit HandlerScope(RankPlane& rank) : rank_(rank), start_(rank.ops_) {
    ++rank_.depth_;
  }
  ~HandlerScope() {
    if (--rank_.depth_ > 0) return;
    const uint64_t used = rank_.ops_ - start_;
    ++rank_.stats_.handler_calls;
    rank_.stats_.structure_ops += used;
    rank_.stats_.max_ops_per_call =
        std::max(rank_.stats_.max_ops_per_call, used);
  }

 private:
  RankPlane& rank_;
  uint64_t start_;
};

RankPlane::RankPlane(NetworkBudget network, TimerService& timers,
                     ModelInbox& models)
    : network_(network), timers_(timers), inbox_(models) {}

RankPlane::~RankPlane() {
  for (auto& m : models_) timers_.Cancel(m.timer);
  timers_.Cancel(gpu_timer_);
}

void RankPlane::AddModel(ModelId model) {
  if (model != models_.size()) {
    throw ProtocolError("model ids must be dense; expected " +
                        std::to_string(models_.size()));
  }
  models_.emplace_back();
}

void RankPlane::AddGpu(GpuId gpu, TimePoint free_at) {
  if (gpu != gpu_free_at_.size()) {
    throw ProtocolError("gpu ids must be dense; expected " +
                        std::to_string(gpu_free_at_.size()));
  }
  gpu_free_at_.push_back(free_at);
  gpus_by_free_.emplace(free_at, gpu);
}

RankPlane::ModelEntry& RankPlane::Model(ModelId model) {
  if (model >= models_.size()) {
    throw ProtocolError("unknown model " + std::to_string(model));
  }
  return models_[model];
}

void RankPlane::CheckGpu(GpuId gpu) const {
  if (gpu >= gpu_free_at_.size()) {
    throw ProtocolError("unknown gpu " + std::to_string(gpu));
  }
}

bool RankPlane::IsRegistered(ModelId model) const {
  return models_.at(model).registered.has_value();
}

bool RankPlane::HasModelTimer(ModelId model) const {
  return static_cast<bool>(models_.at(model).timer);
}

size_t RankPlane::outstanding_gpus() const {
  return std::count(gpu_free_at_.begin(), gpu_free_at_.end(), kInfiniteFuture);
}

void RankPlane::InformCandidate(ModelId model,
                                const std::optional<Candidate>& c) {
  HandlerScope scope(*this);
  ModelEntry& e = Model(model);
  const bool was_registered = e.registered.has_value();
  Unregister(model);
  timers_.Cancel(e.timer);
  e.pending.reset();
  if (c) {
    e.pending = *c;
    const TimePoint fire = std::max(
        timers_.Now(), SatSub(c->exec_at, network_.DispatchDelay(c->size)));
    const uint64_t version = c->version;
    ++ops_;
    e.timer = timers_.Schedule(fire, TimerClass::kModel, [this, model, version] {
      OnModelTimer(model, version);
    });
  }
  if (was_registered) ArmGpuTimer();
}

void RankPlane::InformGpu(GpuId gpu, TimePoint free_at) {
  HandlerScope scope(*this);
  CheckGpu(gpu);
  SetGpuFreeAt(gpu, free_at);
  ArmGpuTimer();
}

void RankPlane::CorrectGpu(GpuId gpu, TimePoint expected, TimePoint actual) {
  CheckGpu(gpu);
  if (gpu_free_at_[gpu] == expected && actual != expected) {
    InformGpu(gpu, actual);
  }
}

void RankPlane::OnModelTimer(ModelId model, uint64_t version) {
  HandlerScope scope(*this);
  ModelEntry& e = models_[model];
  e.timer = TimerHandle{};
  if (!e.pending || e.pending->version != version) {
    ++stats_.stale_timers;
    return;
  }
  const Candidate c = *e.pending;
  e.pending.reset();
  const auto [free_at, gpu] = EarliestGpu();
  if (free_at <= c.exec_at) {
    Grant(model, gpu, free_at);
  } else {
    Register(model, c);
    ArmGpuTimer();
  }
}

void RankPlane::OnGpuTimer() {
  HandlerScope scope(*this);
  gpu_timer_ = TimerHandle{};
  if (gpu_free_at_.empty()) return;
  const auto [free_at, gpu] = EarliestGpu();
  if (free_at == kInfiniteFuture) return;
  // Candidates whose latest start already passed can never use this GPU.
  while (!by_latest_.empty() && by_latest_.begin()->first < free_at) {
    const ModelId m = by_latest_.begin()->second;
    const uint64_t before = ops_;
    Unregister(m);
    stats_.eviction_ops += ops_ - before;
    ops_ = before;
    ++stats_.evictions;
  }
  if (!by_latest_.empty()) {
    ++ops_;
    const ModelId m = by_latest_.begin()->second;
    Unregister(m);
    Grant(m, gpu, free_at);
  }
  ArmGpuTimer();
}

void RankPlane::ArmGpuTimer() {
  timers_.Cancel(gpu_timer_);
  if (by_latest_.empty() || gpu_free_at_.empty()) return;
  const auto [free_at, gpu] = EarliestGpu();
  if (free_at == kInfiniteFuture) return;
  ++ops_;
  const Duration max_delay = by_delay_.rbegin()->first;
  const TimePoint fire = std::max(timers_.Now(), SatSub(free_at, max_delay));
  ++ops_;
  gpu_timer_ =
      timers_.Schedule(fire, TimerClass::kGpu, [this] { OnGpuTimer(); });
}

void RankPlane::Grant(ModelId model, GpuId gpu, TimePoint free_at) {
  SetGpuFreeAt(gpu, kInfiniteFuture);
  ++stats_.grants;
  inbox_.GrantedGpu(model, gpu, free_at);
}

void RankPlane::Register(ModelId model, const Candidate& c) {
  ModelEntry& e = models_[model];
  e.registered = c;
  by_latest_.emplace(c.latest, model);
  by_delay_.emplace(network_.DispatchDelay(c.size), model);
  ops_ += 2;
}

void RankPlane::Unregister(ModelId model) {
  ModelEntry& e = models_[model];
  if (!e.registered) return;
  by_latest_.erase({e.registered->latest, model});
  by_delay_.erase({network_.DispatchDelay(e.registered->size), model});
  ops_ += 2;
  e.registered.reset();
}

void RankPlane::SetGpuFreeAt(GpuId gpu, TimePoint free_at) {
  gpus_by_free_.erase({gpu_free_at_[gpu], gpu});
  gpu_free_at_[gpu] = free_at;
  gpus_by_free_.emplace(free_at, gpu);
  ops_ += 2;
}

std::pair<TimePoint, GpuId> RankPlane::EarliestGpu() {
  ++ops_;
  return *gpus_by_free_.begin();
}

}  // namespace batchsym::sched

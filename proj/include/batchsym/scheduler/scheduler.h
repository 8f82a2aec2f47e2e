#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "batchsym/scheduler/model_plane.h"
#include "batchsym/scheduler/rank_plane.h"

namespace batchsym::sched {

// All planes multiplexed on one thread. Plane-to-plane messages go through
// an ordered mailbox that is drained to quiescence after every external
// event or timer callback, so each handler runs to completion before the
// next message is delivered.
class Scheduler : private RankInbox, private ModelInbox {
 public:
  // `policies` holds one entry per model (per-model timeouts differ).
  Scheduler(std::vector<ModelSpec> models, std::vector<PolicyConfig> policies,
            uint32_t gpu_count, NetworkBudget network, TimerService& timers,
            ExecutionSink& sink);
  ~Scheduler() override;

  // Throws ProtocolError for unknown models or invalid requests.
  void OnNewRequest(const Request& request);
  // Backend report that a GPU finishes at a time other than planned.
  void CorrectGpu(GpuId gpu, TimePoint expected, TimePoint actual);
  void SetPolicy(ModelId model, PolicyConfig policy);

  size_t model_count() const { return models_.size(); }
  const ModelPlane& model(ModelId id) const { return *models_.at(id); }
  const RankPlane& rank() const { return *rank_; }
  size_t pending_messages() const { return mailbox_.size(); }

 private:
  struct CandidateMsg {
    ModelId model;
    std::optional<Candidate> candidate;
  };
  struct GpuMsg {
    GpuId gpu;
    TimePoint free_at;
  };
  struct GrantMsg {
    ModelId model;
    GpuId gpu;
    TimePoint free_at;
  };
  using Message = std::variant<CandidateMsg, GpuMsg, GrantMsg>;

  // Wraps the driver's timers so every callback is followed by a drain.
  class DrainingTimers : public TimerService {
   public:
    DrainingTimers(TimerService& inner, Scheduler& owner)
        : inner_(inner), owner_(owner) {}
    TimePoint Now() const override { return inner_.Now(); }
    TimerHandle Schedule(TimePoint at, TimerClass cls,
                         std::function<void()> fn) override;
    void Cancel(TimerHandle& handle) override { inner_.Cancel(handle); }

   private:
    TimerService& inner_;
    Scheduler& owner_;
  };

  void InformCandidate(ModelId model,
                       const std::optional<Candidate>& candidate) override;
  void InformGpu(GpuId gpu, TimePoint free_at) override;
  void GrantedGpu(ModelId model, GpuId gpu, TimePoint gpu_free_at) override;
  void Drain();

  DrainingTimers timers_;
  std::unique_ptr<RankPlane> rank_;
  std::vector<std::unique_ptr<ModelPlane>> models_;
  std::deque<Message> mailbox_;
  bool draining_ = false;
};

}  // namespace batchsym::sched

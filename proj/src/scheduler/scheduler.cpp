#include "batchsym/scheduler/scheduler.h"

#include <string>

namespace batchsym::sched {

TimerHandle Scheduler::DrainingTimers::Schedule(TimePoint at, TimerClass cls,
                                                std::function<void()> fn) {
  return inner_.Schedule(at, cls, [this, fn = std::move(fn)] {
    fn();
    owner_.Drain();
  });
}

Scheduler::Scheduler(std::vector<ModelSpec> models,
                     std::vector<PolicyConfig> policies, uint32_t gpu_count,
                     NetworkBudget network, TimerService& timers,
                     ExecutionSink& sink)
    : timers_(timers, *this) {
  if (policies.size() != models.size()) {
    throw std::invalid_argument("one policy per model required");
  }
  rank_ = std::make_unique<RankPlane>(network, timers_,
                                      static_cast<ModelInbox&>(*this));
  for (size_t i = 0; i < models.size(); ++i) {
    if (models[i].model_id != i) {
      throw ProtocolError("model ids must be dense and ordered");
    }
    rank_->AddModel(static_cast<ModelId>(i));
    models_.push_back(std::make_unique<ModelPlane>(
        std::move(models[i]), policies[i], timers_,
        static_cast<RankInbox&>(*this), sink));
  }
  for (GpuId g = 0; g < gpu_count; ++g) rank_->AddGpu(g, timers.Now());
}

Scheduler::~Scheduler() {
  // Planes cancel their own timers; tear them down before the rank plane.
  models_.clear();
  rank_.reset();
}

void Scheduler::OnNewRequest(const Request& request) {
  if (request.model >= models_.size()) {
    throw ProtocolError("request " + std::to_string(request.id) +
                        " for unknown model " + std::to_string(request.model));
  }
  models_[request.model]->OnNewRequest(request);
  Drain();
}

void Scheduler::CorrectGpu(GpuId gpu, TimePoint expected, TimePoint actual) {
  rank_->CorrectGpu(gpu, expected, actual);
  Drain();
}

void Scheduler::SetPolicy(ModelId model, PolicyConfig policy) {
  if (model >= models_.size()) {
    throw ProtocolError("policy for unknown model " + std::to_string(model));
  }
  models_[model]->SetPolicy(policy);
  Drain();
}

void Scheduler::InformCandidate(ModelId model,
                                const std::optional<Candidate>& candidate) {
  mailbox_.push_back(CandidateMsg{model, candidate});
}

void Scheduler::InformGpu(GpuId gpu, TimePoint free_at) {
  mailbox_.push_back(GpuMsg{gpu, free_at});
}

void Scheduler::GrantedGpu(ModelId model, GpuId gpu, TimePoint gpu_free_at) {
  mailbox_.push_back(GrantMsg{model, gpu, gpu_free_at});
}

void Scheduler::Drain() {
  if (draining_) return;
  draining_ = true;
  struct Reset {
    bool& flag;
    ~Reset() { flag = false; }
  } reset{draining_};
  while (!mailbox_.empty()) {
    Message msg = std::move(mailbox_.front());
    mailbox_.pop_front();
    if (auto* c = std::get_if<CandidateMsg>(&msg)) {
      rank_->InformCandidate(c->model, c->candidate);
    } else if (auto* g = std::get_if<GpuMsg>(&msg)) {
      rank_->InformGpu(g->gpu, g->free_at);
    } else {
      const auto& grant = std::get<GrantMsg>(msg);
      if (grant.model >= models_.size()) {
        throw ProtocolError("grant for unknown model");
      }
      models_[grant.model]->GrantedGpu(grant.gpu, grant.free_at);
    }
  }
}

const char* PolicyName(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kDeferred:
      return "deferred";
    case PolicyKind::kEager:
      return "eager";
    case PolicyKind::kTimeout:
      return "timeout";
  }
  return "?";
}

std::optional<PolicyKind> ParsePolicyKind(const std::string& s) {
  if (s == "deferred") return PolicyKind::kDeferred;
  if (s == "eager") return PolicyKind::kEager;
  if (s == "timeout") return PolicyKind::kTimeout;
  return std::nullopt;
}

}  // namespace batchsym::sched

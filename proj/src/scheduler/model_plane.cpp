#include "batchsym/scheduler/model_plane.h"

#include <algorithm>
#include <string>

#include "batchsym/scheduler/batching.h"

namespace batchsym::sched {

ModelPlane::ModelPlane(ModelSpec spec, PolicyConfig policy,
                       TimerService& timers, RankInbox& rank,
                       ExecutionSink& sink)
    : spec_(std::move(spec)),
      policy_(policy),
      timers_(timers),
      rank_(rank),
      sink_(sink) {}

ModelPlane::~ModelPlane() { timers_.Cancel(refresh_timer_); }

void ModelPlane::OnNewRequest(const Request& request) {
  if (request.model != spec_.model_id) {
    throw ProtocolError("request " + std::to_string(request.id) +
                        " routed to the plane of model " + spec_.name);
  }
  if (last_request_id_ && request.id <= *last_request_id_) {
    throw ProtocolError("duplicate or out-of-order request id " +
                        std::to_string(request.id));
  }
  if (request.arrival > timers_.Now()) {
    throw ProtocolError("request " + std::to_string(request.id) +
                        " arrives in the future");
  }
  if (request.deadline != SatAdd(request.arrival, spec_.slo)) {
    throw ProtocolError("request " + std::to_string(request.id) +
                        " deadline differs from arrival + SLO");
  }
  last_request_id_ = request.id;
  queue_.push_back(request);
  UpdateCandidate(kInfinitePast);
  Inform(false);
}

void ModelPlane::GrantedGpu(GpuId gpu, TimePoint gpu_free_at) {
  const TimePoint now = timers_.Now();
  const uint32_t registered = informed_ ? informed_->size : 0;
  UpdateCandidate(gpu_free_at);
  TimePoint free_at;
  if (!candidate_) {
    free_at = std::max(now, gpu_free_at);
    // Nothing fits behind this GPU; the queue may still fit on another one.
    if (!queue_.empty()) UpdateCandidate(kInfinitePast);
  } else {
    const Candidate c = *candidate_;
    ExecutionOrder order;
    order.model = spec_.model_id;
    order.gpu = gpu;
    order.sent_at = now;
    order.start = c.exec_at;
    order.finish = c.exec_at + spec_.profile.ExecLatency(c.size);
    order.shrunk = c.size < registered;
    order.requests.assign(queue_.begin(), queue_.begin() + c.size);
    queue_.erase(queue_.begin(), queue_.begin() + c.size);
    free_at = order.finish;
    ++batches_;
    sink_.Execute(std::move(order));
    UpdateCandidate(kInfinitePast);
  }
  rank_.InformGpu(gpu, free_at);
  // The rank plane dropped its copy of our candidate when it granted.
  Inform(true);
}

void ModelPlane::SetPolicy(PolicyConfig policy) {
  policy_ = policy;
  UpdateCandidate(kInfinitePast);
  Inform(false);
}

std::vector<RequestId> ModelPlane::CandidateMembers() const {
  std::vector<RequestId> ids;
  if (!candidate_) return ids;
  ids.reserve(candidate_->size);
  for (uint32_t i = 0; i < candidate_->size; ++i) ids.push_back(queue_[i].id);
  return ids;
}

void ModelPlane::UpdateCandidate(TimePoint gpu_free_floor) {
  const TimePoint now = timers_.Now();
  BatchSelection sel =
      GetBatch(queue_, now, gpu_free_floor, spec_.profile, policy_);
  ReportDrops(sel.dropped);
  timers_.Cancel(refresh_timer_);
  if (sel.size == 0) {
    candidate_.reset();
    if (!queue_.empty()) {
      // Only reachable with a late GPU floor or timeout; re-evaluate once
      // the head stops fitting at all.
      const TimePoint give_up =
          SatSub(queue_.front().deadline,
                 spec_.profile.ExecLatency(1) + policy_.network.DispatchDelay(1));
      refresh_timer_ =
          timers_.Schedule(std::max(now, give_up + Duration(1)),
                           TimerClass::kDrop, [this] { OnRefreshTimer(); });
    }
    return;
  }

  const uint32_t b = sel.size;
  const Request& head = queue_.front();
  const TimePoint d = head.deadline;
  const Window w = SchedulableWindow(spec_.profile, d, b);
  const Duration delay = policy_.network.DispatchDelay(b);

  TimePoint policy_floor = kInfinitePast;
  switch (policy_.kind) {
    case PolicyKind::kDeferred:
      policy_floor = w.frontrun;
      break;
    case PolicyKind::kEager:
      break;
    case PolicyKind::kTimeout:
      policy_floor = SatAdd(head.arrival, policy_.timeout);
      break;
  }
  const TimePoint earliest = std::max(SatAdd(now, delay), gpu_free_floor);
  Candidate c;
  c.size = b;
  c.exec_at = std::max(earliest, policy_floor);
  c.latest = w.latest;
  c.head_deadline = d;
  c.version = ++next_version_;
  candidate_ = c;

  // The candidate expires once now + delay(b) passes latest; re-evaluate
  // then so a smaller batch (or a head drop) replaces it.
  refresh_timer_ = timers_.Schedule(SatSub(c.latest, delay) + Duration(1),
                                    TimerClass::kDrop,
                                    [this] { OnRefreshTimer(); });
}

void ModelPlane::ReportDrops(std::vector<Request>& dropped) {
  if (dropped.empty()) return;
  dropped_ += dropped.size();
  sink_.Dropped(spec_.model_id, dropped);
}

void ModelPlane::Inform(bool force) {
  if (!force && ever_informed_) {
    if (!candidate_ && !informed_) return;
    if (candidate_ && informed_ && candidate_->SameSchedule(*informed_)) return;
  }
  ever_informed_ = true;
  informed_ = candidate_;
  rank_.InformCandidate(spec_.model_id, candidate_);
}

void ModelPlane::OnRefreshTimer() {
  refresh_timer_ = TimerHandle{};
  UpdateCandidate(kInfinitePast);
  Inform(false);
}

}  // namespace batchsym::sched

#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "batchsym/profile/latency_profile.h"
#include "batchsym/scheduler/channels.h"
#include "batchsym/scheduler/timer.h"
#include "batchsym/scheduler/types.h"

namespace batchsym::sched {

// Per-model batching state: the request queue and the single pending
// candidate. Owns nothing global; talks to the rank plane only through
// RankInbox messages.
class ModelPlane {
 public:
  ModelPlane(ModelSpec spec, PolicyConfig policy, TimerService& timers,
             RankInbox& rank, ExecutionSink& sink);
  ModelPlane(const ModelPlane&) = delete;
  ModelPlane& operator=(const ModelPlane&) = delete;
  ~ModelPlane();

  // Request ids must strictly increase; arrival must not be in the future
  // and deadline must equal arrival + SLO.
  void OnNewRequest(const Request& request);

  // The rank plane reserved `gpu`, which becomes free at `gpu_free_at`.
  // Emits an execution order if a batch still fits, then reports the GPU's
  // new free time and the next candidate.
  void GrantedGpu(GpuId gpu, TimePoint gpu_free_at);

  // Switches policy in place; the candidate is recomputed under the new one.
  void SetPolicy(PolicyConfig policy);

  const ModelSpec& spec() const { return spec_; }
  const PolicyConfig& policy() const { return policy_; }
  const std::optional<Candidate>& candidate() const { return candidate_; }
  std::vector<RequestId> CandidateMembers() const;
  size_t queued() const { return queue_.size(); }
  uint64_t dropped() const { return dropped_; }
  uint64_t dispatched_batches() const { return batches_; }

 private:
  void UpdateCandidate(TimePoint gpu_free_floor);
  void ReportDrops(std::vector<Request>& dropped);
  // Sends the candidate unless the rank plane already holds an identical one.
  void Inform(bool force);
  void OnRefreshTimer();

  ModelSpec spec_;
  PolicyConfig policy_;
  TimerService& timers_;
  RankInbox& rank_;
  ExecutionSink& sink_;

  std::deque<Request> queue_;
  std::optional<Candidate> candidate_;
  std::optional<Candidate> informed_;
  bool ever_informed_ = false;
  TimerHandle refresh_timer_;
  uint64_t next_version_ = 0;
  std::optional<RequestId> last_request_id_;
  uint64_t dropped_ = 0;
  uint64_t batches_ = 0;
};

}  // namespace batchsym::sched

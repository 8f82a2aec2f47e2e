#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "batchsym/profile/latency_profile.h"
#include "batchsym/profile/time.h"

namespace batchsym::sched {

using batchsym::ModelId;
using GpuId = uint32_t;
using RequestId = uint64_t;

// Messages that violate the plane protocol: duplicate request ids, unknown
// model or GPU ids, requests routed to the wrong plane.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Request {
  RequestId id = 0;
  ModelId model = 0;
  TimePoint arrival;
  TimePoint deadline;
};

// Planning estimate for control and data transfer ahead of execution:
// delay(b) = ctrl + data_per_request * b.
struct NetworkBudget {
  Duration ctrl{0};
  Duration data_per_request{0};

  Duration DispatchDelay(uint32_t batch_size) const {
    return ctrl + data_per_request * batch_size;
  }
};

enum class PolicyKind { kDeferred, kEager, kTimeout };

// How GetBatch trims the head of the queue.
enum class GatheringKind {
  kSlidingPrefix,  // drop only heads that cannot run even alone
  kDropHead,       // also drop heads that keep the batch below a target size
};

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kDeferred;
  Duration timeout{0};  // only for kTimeout
  NetworkBudget network;
  GatheringKind gathering = GatheringKind::kSlidingPrefix;
  uint32_t target_batch = 0;  // only for kDropHead

  static PolicyConfig Deferred(NetworkBudget net = {}) {
    return {PolicyKind::kDeferred, Duration{0}, net};
  }
  static PolicyConfig Eager(NetworkBudget net = {}) {
    return {PolicyKind::kEager, Duration{0}, net};
  }
  static PolicyConfig Timeout(Duration k, NetworkBudget net = {}) {
    return {PolicyKind::kTimeout, k, net};
  }
};

const char* PolicyName(PolicyKind kind);
std::optional<PolicyKind> ParsePolicyKind(const std::string& s);

// The per-model pending batch as seen by the rank plane. Members are the
// `size` requests at the head of the owning model plane's queue.
struct Candidate {
  uint32_t size = 0;
  TimePoint exec_at;
  TimePoint latest;
  TimePoint head_deadline;
  uint64_t version = 0;

  bool SameSchedule(const Candidate& o) const {
    return size == o.size && exec_at == o.exec_at && latest == o.latest &&
           head_deadline == o.head_deadline;
  }
};

struct ExecutionOrder {
  ModelId model = 0;
  GpuId gpu = 0;
  TimePoint sent_at;  // grant time at the model plane
  TimePoint start;    // planned exec_at
  TimePoint finish;   // start + l(size)
  std::vector<Request> requests;
  // The GPU's free time forced a smaller batch than the registered candidate.
  bool shrunk = false;
};

}  // namespace batchsym::sched

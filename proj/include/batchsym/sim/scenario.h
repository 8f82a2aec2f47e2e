#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "batchsym/profile/latency_profile.h"
#include "batchsym/scheduler/types.h"
#include "batchsym/sim/network.h"
#include "batchsym/sim/workload.h"

namespace batchsym::sim {

struct PolicySpec {
  sched::PolicyKind kind = sched::PolicyKind::kDeferred;
  // Timeout either absolute or as a fraction of each model's SLO.
  std::optional<Duration> timeout;
  std::optional<double> timeout_slo_fraction;
  // Planning estimates. Without d_ctrl the network's planning bound is used.
  std::optional<Duration> d_ctrl;
  Duration d_data_per_request{0};
  sched::GatheringKind gathering = sched::GatheringKind::kSlidingPrefix;
  uint32_t target_batch = 0;
};

struct Scenario {
  std::string name;
  std::vector<ModelSpec> models;
  uint32_t gpus = 0;
  PolicySpec policy;
  // Optional lead-in: `initial_policy` runs until `policy_switch_at`, then
  // every model switches to `policy`. Planning network estimates always
  // come from `policy`.
  std::optional<PolicySpec> initial_policy;
  Duration policy_switch_at{0};
  WorkloadSpec workload;
  NetworkSpec network;
  Duration duration{0};
  Duration warmup{0};
  Duration cooldown{0};
  uint64_t seed = 0;
  bool record_trace = true;
  // Same-tick arrivals run before timers instead of after them.
  bool arrivals_first = false;
};

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

// Every problem found, in a stable order; empty when valid.
std::vector<std::string> ValidateScenario(const Scenario& scenario);

// Parses the JSON scenario format. Relative paths (zoo files, replay traces)
// resolve against `base_dir`; the zoo names "1080ti", "a100" and "table2"
// resolve to the bundled data files. `seed` is mandatory unless
// `seed_override` is given. Throws ScenarioError listing every issue.
Scenario ParseScenario(const std::string& json_text, const std::string& base_dir,
                       std::optional<uint64_t> seed_override = std::nullopt);
Scenario LoadScenario(const std::string& path,
                      std::optional<uint64_t> seed_override = std::nullopt);

// Resolves `name_or_path`: an existing file, or a bundled scenario name.
std::string ResolveScenarioPath(const std::string& name_or_path);
std::string BundledDataDir();
// "1080ti", "a100" and "table2" name the bundled zoo files; anything else
// is a path, relative to `base_dir` unless absolute.
std::string ResolveZooPath(const std::string& name_or_path,
                           const std::string& base_dir = "");
std::string BundledScenarioDir();

sched::NetworkBudget PlanningBudget(const Scenario& scenario);
std::vector<sched::PolicyConfig> ResolvePolicies(const Scenario& scenario,
                                                 const PolicySpec& policy);
// Policies in force at time zero.
std::vector<sched::PolicyConfig> ResolvePolicies(const Scenario& scenario);

// Copy with the aggregate arrival rate replaced (piecewise segments are
// scaled proportionally). Replay workloads are rejected.
Scenario WithRate(const Scenario& scenario, double rate);
double AggregateRate(const Scenario& scenario);

}  // namespace batchsym::sim

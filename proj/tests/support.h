#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "batchsym/partition/partition.h"
#include "batchsym/profile/model_zoo.h"
#include "batchsym/scheduler/channels.h"
#include "batchsym/sim/rng.h"
#include "batchsym/sim/scenario.h"

namespace batchsym::test {

// Integer-millisecond helpers for hand-built timelines.
inline TimePoint Ms(double ms) { return AtMillis(ms); }

// l(b) = b + 5 ms, the running example.
inline ModelSpec ToyModel(Duration slo = std::chrono::milliseconds(12),
                          ModelId id = 0) {
  return MakeLinearModel(id, "toy", std::chrono::milliseconds(1),
                         std::chrono::milliseconds(5), slo);
}

struct RecordingSink : sched::ExecutionSink {
  std::vector<sched::ExecutionOrder> orders;
  std::vector<sched::Request> dropped;
  void Execute(sched::ExecutionOrder order) override {
    orders.push_back(std::move(order));
  }
  void Dropped(ModelId, std::span<const sched::Request> requests) override {
    dropped.insert(dropped.end(), requests.begin(), requests.end());
  }
};

struct RecordingRank : sched::RankInbox {
  std::vector<std::pair<ModelId, std::optional<sched::Candidate>>> candidates;
  std::vector<std::pair<sched::GpuId, TimePoint>> gpus;
  void InformCandidate(ModelId model,
                       const std::optional<sched::Candidate>& c) override {
    candidates.emplace_back(model, c);
  }
  void InformGpu(sched::GpuId gpu, TimePoint free_at) override {
    gpus.emplace_back(gpu, free_at);
  }
};

struct RecordingModels : sched::ModelInbox {
  struct Grant {
    ModelId model;
    sched::GpuId gpu;
    TimePoint free_at;
  };
  std::vector<Grant> grants;
  void GrantedGpu(ModelId model, sched::GpuId gpu, TimePoint free_at) override {
    grants.push_back({model, gpu, free_at});
  }
};

// Uniform-arrival scenario for one toy model; callers adjust the rest.
inline sim::Scenario ToyScenario(uint32_t gpus, sched::PolicyKind kind) {
  sim::Scenario s;
  s.name = "toy";
  s.models.push_back(ToyModel());
  s.gpus = gpus;
  s.policy.kind = kind;
  s.workload.arrival.kind = sim::ArrivalSpec::Kind::kUniform;
  s.workload.arrival.rate = 1000.0 / 0.75;
  s.duration = std::chrono::milliseconds(300);
  s.warmup = std::chrono::milliseconds(30);
  s.cooldown = std::chrono::milliseconds(30);
  s.seed = 1;
  return s;
}

// Exponential-rate instance: rates ~ Exp(mean_rate), memories uniform.
inline partition::Problem ExponentialInstance(size_t models, uint32_t l,
                                              uint64_t seed,
                                              double mean_rate = 100) {
  sim::CounterRng rng(seed, "partition-instance");
  std::exponential_distribution<double> rate(1.0 / mean_rate);
  std::uniform_real_distribution<double> mem(100, 2000);
  std::uniform_real_distribution<double> dyn(0, 500);
  partition::Problem p;
  p.subclusters = l;
  for (size_t i = 0; i < models; ++i) {
    p.models.push_back({"m" + std::to_string(i), rate(rng), mem(rng), dyn(rng)});
  }
  return p;
}

// Exhaustive oracle, written against the definitions rather than the
// solver's incremental state: min over all l^m assignments of
// max_j |R_j - Rbar| + w max_j |S_j - Sbar| among feasible ones.
struct OracleResult {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
};

inline OracleResult BruteForce(const partition::Problem& p) {
  const size_t m = p.models.size();
  const uint32_t l = p.subclusters;
  double rbar = 0;
  double sbar = 0;
  for (const auto& x : p.models) {
    rbar += x.rate;
    sbar += x.static_mem;
  }
  rbar /= l;
  sbar /= l;
  const double w = p.weight ? *p.weight : (sbar > 0 ? rbar / sbar : 0);
  OracleResult best;
  std::vector<uint32_t> a(m, 0);
  while (true) {
    std::vector<double> r(l, 0), s(l, 0), d(l, 0);
    double change = 0;
    for (size_t i = 0; i < m; ++i) {
      r[a[i]] += p.models[i].rate;
      s[a[i]] += p.models[i].static_mem;
      d[a[i]] = std::max(d[a[i]], p.models[i].dynamic_mem);
      if (p.current && (*p.current)[i] != a[i]) {
        change += 2 * p.models[i].change_cost;
      }
    }
    bool ok = change <= p.change_max + 1e-9;
    double dr = 0;
    double ds = 0;
    for (uint32_t j = 0; j < l; ++j) {
      ok = ok && r[j] <= p.rate_max * (1 + 1e-9) &&
           s[j] + d[j] <= p.mem_max * (1 + 1e-9);
      dr = std::max(dr, std::abs(r[j] - rbar));
      ds = std::max(ds, std::abs(s[j] - sbar));
    }
    if (ok && dr + w * ds < best.objective) {
      best.feasible = true;
      best.objective = dr + w * ds;
    }
    size_t k = 0;
    while (k < m && ++a[k] == l) a[k++] = 0;
    if (k == m) break;
  }
  return best;
}

}  // namespace batchsym::test

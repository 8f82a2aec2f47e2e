#pragma once

// Randomized scenario properties shared by the unit suite and the
// acceptance binary.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "batchsym/profile/model_zoo.h"
#include "batchsym/sim/result_io.h"
#include "batchsym/sim/rng.h"
#include "batchsym/sim/simulator.h"

namespace batchsym::test {

// Bound on ordered-structure operations in one rank-plane handler. Each
// handler touches a fixed number of indices, so the count is O(1) and each
// operation is O(log M + log G).
inline constexpr uint64_t kMaxOpsPerHandler = 16;

inline sim::Scenario RandomScenario(uint64_t case_seed) {
  sim::CounterRng rng(case_seed, "property-case");
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto pick = [&](uint32_t lo, uint32_t hi) {
    return std::uniform_int_distribution<uint32_t>(lo, hi)(rng);
  };
  sim::Scenario s;
  s.name = "property-" + std::to_string(case_seed);
  const uint32_t models = pick(1, 5);
  double capacity = 0;
  for (uint32_t i = 0; i < models; ++i) {
    const double alpha = uni(0.05, 3);
    const double beta = uni(0.5, 10);
    const double slo = (alpha + beta) * uni(1.3, 8);
    s.models.push_back(MakeLinearModel(i, "m" + std::to_string(i),
                                       FromMillis(alpha), FromMillis(beta),
                                       FromMillis(slo)));
    const uint32_t b = std::max<uint32_t>(1, s.models.back().profile.max_batch() / 2);
    capacity += b / (alpha * b + beta) * 1000 / models;
  }
  s.gpus = pick(1, 6);
  capacity *= s.gpus;

  switch (pick(0, 3)) {
    case 0: s.policy.kind = sched::PolicyKind::kDeferred; break;
    case 1: s.policy.kind = sched::PolicyKind::kEager; break;
    case 2:
      s.policy.kind = sched::PolicyKind::kTimeout;
      s.policy.timeout_slo_fraction = uni(0, 0.9);
      break;
    default:
      s.policy.kind = sched::PolicyKind::kDeferred;
      s.policy.gathering = sched::GatheringKind::kDropHead;
      s.policy.target_batch = pick(1, 16);
      break;
  }
  s.policy.d_data_per_request = FromMicros(uni(0, 5));
  s.network.constant = FromMicros(uni(0, 200));

  auto& a = s.workload.arrival;
  switch (pick(0, 2)) {
    case 0: a.kind = sim::ArrivalSpec::Kind::kPoisson; break;
    case 1:
      a.kind = sim::ArrivalSpec::Kind::kGamma;
      a.shape = uni(0.2, 4);
      break;
    default: a.kind = sim::ArrivalSpec::Kind::kUniform; break;
  }
  a.rate = capacity * uni(0.2, 2.0);
  if (pick(0, 1) == 1) {
    s.workload.popularity.kind = sim::PopularitySpec::Kind::kZipf;
    s.workload.popularity.shape = uni(0.5, 1.5);
  }
  s.duration = std::chrono::milliseconds(pick(150, 400));
  s.warmup = s.cooldown = std::chrono::milliseconds(10);
  s.seed = case_seed;
  s.arrivals_first = pick(0, 4) == 0;
  return s;
}

// Runs one case; returns a description of every violated property.
inline std::vector<std::string> CheckProperties(uint64_t case_seed) {
  std::vector<std::string> bad;
  auto fail = [&](const std::string& what) {
    if (bad.size() < 8) bad.push_back("case " + std::to_string(case_seed) + ": " + what);
  };
  const sim::Scenario s = RandomScenario(case_seed);

  // Conservation, candidate uniqueness, GPU states, handler cost: checked
  // at every event boundary.
  sim::Simulator sim(s);
  uint64_t events = 0;
  sim.SetObserver([&](const sim::Simulator& x) {
    ++events;
    const auto c = x.Counters();
    if (c.arrivals != c.completed + c.dropped + c.queued + c.in_flight) {
      std::ostringstream m;
      m << "conservation at t=" << Nanos(x.Now()) << ": " << c.arrivals << " != "
        << c.completed << "+" << c.dropped << "+" << c.queued << "+" << c.in_flight;
      fail(m.str());
    }
    const auto& sch = x.scheduler();
    uint64_t queued = 0;
    for (ModelId m = 0; m < sch.model_count(); ++m) {
      const auto& plane = sch.model(m);
      queued += plane.queued();
      const bool reg = sch.rank().IsRegistered(m);
      const bool timer = sch.rank().HasModelTimer(m);
      if (reg && timer) fail("model " + std::to_string(m) + " registered twice");
      if ((reg || timer) && !plane.candidate()) {
        fail("rank holds a candidate for model " + std::to_string(m) +
             " that has none");
      }
      if (plane.candidate() && plane.candidate()->size > plane.queued()) {
        fail("candidate larger than queue");
      }
    }
    if (queued != c.queued) fail("queue counters disagree");
    if (sch.pending_messages() != 0) fail("undelivered messages at boundary");
    if (sch.rank().outstanding_gpus() != 0) fail("grant left outstanding");
  });
  const sim::RunResult r = sim.Run();
  if (events == 0 && !r.requests.empty()) fail("observer never called");
  if (r.rank_stats.max_ops_per_call > kMaxOpsPerHandler) {
    fail("handler cost " + std::to_string(r.rank_stats.max_ops_per_call));
  }

  // Safety under constant network delay and exact execution.
  for (const auto& q : r.requests) {
    if (q.outcome == sim::Outcome::kLate) {
      fail("request " + std::to_string(q.id) + " finished late");
    }
    if (q.outcome == sim::Outcome::kPending) {
      fail("request " + std::to_string(q.id) + " never resolved");
    }
  }
  for (const auto& b : r.batches) {
    if (b.start < b.planned_start || b.start < b.sent_at) fail("batch started early");
  }

  // Bit-determinism.
  const sim::RunResult again = sim::RunScenario(s);
  if (sim::RequestsCsv(again) != sim::RequestsCsv(r) ||
      sim::TraceCsv(again) != sim::TraceCsv(r)) {
    fail("rerun differs");
  }

  // Eager and timeout(0) are the same policy.
  sim::Scenario eager = s;
  eager.policy = sim::PolicySpec{};
  eager.policy.kind = sched::PolicyKind::kEager;
  eager.policy.d_data_per_request = s.policy.d_data_per_request;
  sim::Scenario zero = eager;
  zero.policy.kind = sched::PolicyKind::kTimeout;
  zero.policy.timeout = Duration(0);
  if (sim::TraceCsv(sim::RunScenario(eager)) != sim::TraceCsv(sim::RunScenario(zero))) {
    fail("eager and timeout(0) traces differ");
  }
  return bad;
}

}  // namespace batchsym::test

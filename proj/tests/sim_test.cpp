#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "batchsym/metrics/stats.h"
#include "batchsym/sim/result_io.h"
#include "batchsym/sim/simulator.h"
#include "support.h"

namespace batchsym::sim {
namespace {

using std::chrono::microseconds;
using std::chrono::milliseconds;
using test::Ms;

Scenario Bundled(const std::string& name) {
  return LoadScenario(ResolveScenarioPath(name));
}

std::vector<const TraceEvent*> Dispatches(const RunResult& r) {
  std::vector<const TraceEvent*> out;
  for (const auto& e : r.trace) {
    if (e.kind != TraceEvent::Kind::kDrop) out.push_back(&e);
  }
  return out;
}

std::vector<RequestId> DroppedIds(const RunResult& r) {
  std::vector<RequestId> out;
  for (const auto& q : r.requests) {
    if (q.outcome == Outcome::kDropped) out.push_back(q.id);
  }
  return out;
}

// --- Running example: staggered execution -----------------------------------

TEST(Stagger, FirstThreeBatchesMatchTheWorkedTrace) {
  const RunResult r = RunScenario(Bundled("fig6_stagger"));
  const auto d = Dispatches(r);
  ASSERT_GE(d.size(), 3u);
  const std::vector<std::pair<double, GpuId>> expect = {
      {2.25, 0}, {5.25, 1}, {8.25, 2}};
  for (size_t i = 0; i < expect.size(); ++i) {
    EXPECT_EQ(d[i]->start, Ms(expect[i].first)) << i;
    EXPECT_EQ(d[i]->gpu, expect[i].second) << i;
    EXPECT_EQ(d[i]->batch_size, 4u) << i;
    EXPECT_EQ(d[i]->finish, d[i]->start + milliseconds(9)) << i;
  }
  EXPECT_EQ(d[0]->requests, (std::vector<RequestId>{1, 2, 3, 4}));
}

TEST(Stagger, SteadyStateIsSizeFourEveryThreeUnits) {
  const RunResult r = RunScenario(Bundled("fig6_stagger"));
  EXPECT_TRUE(DroppedIds(r).empty());
  const auto d = Dispatches(r);
  ASSERT_GT(d.size(), 20u);
  for (size_t i = 1; i < d.size(); ++i) {
    if (d[i]->start < r.measure_begin || d[i]->start >= r.measure_end) continue;
    EXPECT_EQ(d[i]->batch_size, 4u);
    EXPECT_EQ(d[i]->start - d[i - 1]->start, milliseconds(3));
    EXPECT_EQ(*d[i]->gpu, (*d[i - 1]->gpu + 1) % 3);
  }
}

TEST(Stagger, QueueingDelayStaysWithinLOverN) {
  const RunResult r = RunScenario(Bundled("fig6_stagger"));
  Duration worst{0};
  for (const auto& q : r.requests) {
    if (q.outcome != Outcome::kCompleted) continue;
    worst = std::max(worst, metrics::QueueingDelay(q));
  }
  EXPECT_LE(worst, milliseconds(3));
  EXPECT_GT(worst, Duration(0));
}

// --- Running example with three missing requests -----------------------------

TEST(Skip, DeferredRecoversWithoutDrops) {
  const RunResult r = RunScenario(Bundled("fig7_skip"));
  EXPECT_TRUE(DroppedIds(r).empty());
  const auto d = Dispatches(r);
  size_t tail_fours = 0;
  for (const auto* e : d) {
    if (e->start > Ms(60)) tail_fours += e->batch_size == 4;
  }
  EXPECT_GT(tail_fours, 50u);
}

TEST(Skip, EagerDropsRecur) {
  Scenario s = Bundled("fig7_skip");
  s.policy.kind = sched::PolicyKind::kEager;
  const auto drops = DroppedIds(RunScenario(s));
  ASSERT_GE(drops.size(), 10u);
  EXPECT_GT(drops.back(), 300u);
}

TEST(Skip, EagerMatchesPublishedDropsWithArrivalsFirst) {
  Scenario s = Bundled("fig7_skip");
  s.policy.kind = sched::PolicyKind::kEager;
  s.arrivals_first = true;
  const auto drops = DroppedIds(RunScenario(s));
  ASSERT_GE(drops.size(), 3u);
  EXPECT_EQ(std::vector<RequestId>(drops.begin(), drops.begin() + 3),
            (std::vector<RequestId>{35, 37, 38}));
}

TEST(Skip, EagerUnderDefaultOrder) {
  Scenario s = Bundled("fig7_skip");
  s.policy.kind = sched::PolicyKind::kEager;
  const auto drops = DroppedIds(RunScenario(s));
  ASSERT_GE(drops.size(), 4u);
  EXPECT_EQ(std::vector<RequestId>(drops.begin(), drops.begin() + 4),
            (std::vector<RequestId>{33, 34, 36, 37}));
}

TEST(Skip, SkippedSlotsKeepRequestNumbering) {
  const RunResult r = RunScenario(Bundled("fig7_skip"));
  std::set<RequestId> ids;
  for (const auto& q : r.requests) ids.insert(q.id);
  EXPECT_TRUE(ids.count(12));
  EXPECT_FALSE(ids.count(13));
  EXPECT_FALSE(ids.count(15));
  EXPECT_TRUE(ids.count(16));
}

// --- Simulator mechanics ------------------------------------------------------

TEST(Simulator, SameSeedSameOutputs) {
  Scenario s = Bundled("table2_resnet50");
  s.duration = milliseconds(500);
  s.warmup = s.cooldown = milliseconds(50);
  const RunResult a = RunScenario(s);
  const RunResult b = RunScenario(s);
  EXPECT_EQ(RequestsCsv(a), RequestsCsv(b));
  EXPECT_EQ(TraceCsv(a), TraceCsv(b));
  s.seed += 1;
  EXPECT_NE(RequestsCsv(a), RequestsCsv(RunScenario(s)));
}

TEST(Simulator, EarliestFreeGpuWinsTiesGoToSmallestId) {
  Scenario s = test::ToyScenario(3, sched::PolicyKind::kEager);
  s.workload.arrival.rate = 100;
  const RunResult r = RunScenario(s);
  const auto d = Dispatches(r);
  ASSERT_GT(d.size(), 6u);
  // All GPUs start free at 0, so the first three batches take ids 0, 1, 2;
  // afterwards the GPU that has been free longest is granted.
  for (size_t i = 0; i < d.size(); ++i) EXPECT_EQ(*d[i]->gpu, i % 3) << i;
}

TEST(Simulator, EmptyWorkloadLeavesGpusIdle) {
  Scenario s = test::ToyScenario(3, sched::PolicyKind::kDeferred);
  Simulator sim(s);
  sim.SetArrivals({});
  const RunResult r = sim.Run();
  EXPECT_TRUE(r.requests.empty());
  EXPECT_TRUE(r.batches.empty());
  const auto st = metrics::ComputeStats(r);
  for (const auto& g : st.gpus) EXPECT_DOUBLE_EQ(g.idle_fraction(), 1.0);
  EXPECT_LE(r.events, 1u);
}

TEST(Simulator, RunIsSingleShot) {
  Simulator sim(test::ToyScenario(1, sched::PolicyKind::kEager));
  sim.Run();
  EXPECT_THROW(sim.Run(), std::logic_error);
}

TEST(Simulator, JitterCanOnlyDelayStarts) {
  Scenario s = Bundled("table2_resnet50");
  s.duration = milliseconds(500);
  s.warmup = s.cooldown = milliseconds(50);
  s.network.kind = NetworkSpec::Kind::kHistogram;
  s.network.bins = {{microseconds(20), microseconds(30), 0.9},
                    {microseconds(30), microseconds(400), 0.1}};
  s.network.planning_percentile = 50;
  const RunResult r = RunScenario(s);
  uint64_t late = 0;
  for (const auto& b : r.batches) {
    EXPECT_GE(b.start, b.planned_start);
    EXPECT_GE(b.start, b.sent_at);
  }
  for (const auto& q : r.requests) late += q.outcome == Outcome::kLate;
  EXPECT_GT(late, 0u);
}

TEST(Simulator, PolicySwitchTakesEffect) {
  Scenario s = Bundled("fig7_skip");
  s.policy.kind = sched::PolicyKind::kEager;
  s.initial_policy->kind = sched::PolicyKind::kDeferred;
  const RunResult r = RunScenario(s);
  for (const auto& b : r.batches) {
    if (b.sent_at < Ms(11.25)) EXPECT_EQ(b.size, 4u);
  }
}

// --- Workload -----------------------------------------------------------------

std::vector<ModelSpec> Models(size_t n) {
  std::vector<ModelSpec> m;
  for (size_t i = 0; i < n; ++i) {
    m.push_back(test::ToyModel(milliseconds(12), static_cast<ModelId>(i)));
  }
  return m;
}

std::vector<double> Gaps(const std::vector<Arrival>& a) {
  std::vector<double> g;
  for (size_t i = 1; i < a.size(); ++i) {
    g.push_back(ToSeconds(a[i].at - a[i - 1].at));
  }
  return g;
}

double Mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double Cv(const std::vector<double>& v) {
  const double m = Mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / v.size()) / m;
}

TEST(Workload, UniformGapAndSkips) {
  WorkloadSpec w;
  w.arrival.kind = ArrivalSpec::Kind::kUniform;
  w.arrival.rate = 1000.0 / 0.75;
  w.arrival.skip = {12, 13, 14};
  const auto a = GenerateArrivals(w, Models(1), milliseconds(15), 1);
  ASSERT_EQ(a.size(), 17u);
  EXPECT_EQ(a[0].at, Ms(0));
  EXPECT_EQ(a[1].at, Ms(0.75));
  EXPECT_EQ(a[11].at, Ms(8.25));
  EXPECT_EQ(a[12].at, Ms(11.25));
  EXPECT_EQ(a[12].ordinal, 15u);
}

TEST(Workload, PoissonRateAndDispersion) {
  WorkloadSpec w;
  w.arrival.kind = ArrivalSpec::Kind::kPoisson;
  w.arrival.rate = 1000;
  const auto a = GenerateArrivals(w, Models(1), std::chrono::seconds(100), 9);
  // 100k expected; 5 sigma is about 1.6k.
  EXPECT_NEAR(static_cast<double>(a.size()), 100000, 1600);
  EXPECT_NEAR(Cv(Gaps(a)), 1.0, 0.02);
}

TEST(Workload, GammaShapeOneMatchesPoisson) {
  WorkloadSpec p;
  p.arrival.kind = ArrivalSpec::Kind::kPoisson;
  p.arrival.rate = 500;
  WorkloadSpec g = p;
  g.arrival.kind = ArrivalSpec::Kind::kGamma;
  g.arrival.shape = 1.0;
  const auto ga = Gaps(GenerateArrivals(g, Models(1), std::chrono::seconds(100), 4));
  const auto pa = Gaps(GenerateArrivals(p, Models(1), std::chrono::seconds(100), 5));
  EXPECT_NEAR(Mean(ga), Mean(pa), 0.02 * Mean(pa));
  EXPECT_NEAR(Cv(ga), Cv(pa), 0.03);
}

TEST(Workload, GammaShapeControlsBurstiness) {
  WorkloadSpec g;
  g.arrival.kind = ArrivalSpec::Kind::kGamma;
  g.arrival.rate = 500;
  for (double shape : {0.25, 4.0}) {
    g.arrival.shape = shape;
    const auto gaps = Gaps(GenerateArrivals(g, Models(1), std::chrono::seconds(100), 4));
    EXPECT_NEAR(Mean(gaps), 1.0 / 500, 0.03 / 500);
    EXPECT_NEAR(Cv(gaps), 1 / std::sqrt(shape), 0.05 / std::sqrt(shape));
  }
}

TEST(Workload, PopularityWeights) {
  PopularitySpec z;
  z.kind = PopularitySpec::Kind::kZipf;
  z.shape = 1;
  const auto w = PopularityWeights(z, 3);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
  EXPECT_DOUBLE_EQ(w[1], 0.5);
  EXPECT_DOUBLE_EQ(w[2], 1.0 / 3);

  WorkloadSpec wl;
  wl.arrival.rate = 3000;
  wl.popularity.kind = PopularitySpec::Kind::kWeights;
  wl.popularity.weights = {1, 0, 2};
  const auto a = GenerateArrivals(wl, Models(3), std::chrono::seconds(20), 2);
  std::array<double, 3> n{};
  for (const auto& x : a) n[x.model] += 1;
  EXPECT_EQ(n[1], 0);
  EXPECT_NEAR(n[2] / n[0], 2.0, 0.05);
}

TEST(Workload, SeededStreamsAreReproducible) {
  WorkloadSpec w;
  w.arrival.rate = 2000;
  const auto a = GenerateArrivals(w, Models(4), std::chrono::seconds(1), 42);
  const auto b = GenerateArrivals(w, Models(4), std::chrono::seconds(1), 42);
  const auto c = GenerateArrivals(w, Models(4), std::chrono::seconds(1), 43);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].at, b[i].at);
    EXPECT_EQ(a[i].model, b[i].model);
  }
  EXPECT_NE(a.size() == c.size() && a[0].at == c[0].at && a[1].at == c[1].at,
            true);
}

TEST(Workload, PiecewiseRateChangesMidRun) {
  WorkloadSpec w;
  w.arrival.kind = ArrivalSpec::Kind::kPiecewise;
  w.arrival.segments = {{Duration(0), 1000}, {std::chrono::seconds(10), 4000}};
  const auto a = GenerateArrivals(w, Models(1), std::chrono::seconds(20), 3);
  const auto split = std::partition_point(a.begin(), a.end(), [](const Arrival& x) {
    return x.at < AtMillis(10000);
  });
  const double first = static_cast<double>(split - a.begin());
  const double second = static_cast<double>(a.end() - split);
  EXPECT_NEAR(first, 10000, 500);
  EXPECT_NEAR(second, 40000, 1000);
}

TEST(Workload, ReplayTrace) {
  const auto dir = std::filesystem::temp_directory_path() / "batchsym_replay";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "trace.csv").string();
  std::ofstream(path) << "arrival_ns,model_name\n0,toy\n750000,toy\n1500000,toy\n";
  auto models = Models(1);
  const auto a = LoadReplayTrace(path, models, milliseconds(10));
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[2].at, Ms(1.5));
  std::ofstream(path) << "arrival_ns,model_name\n0,other\n";
  EXPECT_THROW(LoadReplayTrace(path, models, milliseconds(10)), std::exception);
}

// --- RNG and network ------------------------------------------------------------

TEST(CounterRng, StreamsAreIndependentAndRepeatable) {
  CounterRng a(1, "x"), b(1, "x"), c(1, "y"), d(2, "x");
  const uint64_t a0 = a();
  EXPECT_EQ(a0, b());
  EXPECT_NE(a0, c());
  EXPECT_NE(a0, d());
  EXPECT_EQ(a.counter(), 1u);
}

TEST(Network, ConstantAndHistogram) {
  NetworkSpec c;
  c.constant = microseconds(40);
  NetworkModel cm(c, 1);
  EXPECT_EQ(cm.Sample(), microseconds(40));
  EXPECT_EQ(cm.PlanningBound(), microseconds(40));

  NetworkSpec h;
  h.kind = NetworkSpec::Kind::kHistogram;
  h.bins = {{microseconds(24), microseconds(33), 1.0}};
  h.planning_percentile = 100;
  NetworkModel hm(h, 1);
  EXPECT_EQ(hm.PlanningBound(), microseconds(33));
  for (int i = 0; i < 1000; ++i) {
    const Duration x = hm.Sample();
    ASSERT_GE(x, microseconds(24));
    ASSERT_LE(x, microseconds(33));
  }
  EXPECT_EQ(HistogramPercentile({{Duration(0), microseconds(10), 1},
                                 {microseconds(10), microseconds(20), 1}},
                                50),
            microseconds(10));
}

// --- Scenario ingestion ----------------------------------------------------------

TEST(ScenarioFile, EveryBundledScenarioLoads) {
  for (const char* name :
       {"fig6_stagger", "fig7_skip", "table2_resnet50", "table2_inceptionresnet",
        "fig2_flattop", "fig4a_beta_sweep", "fig4b_timeout_sweep",
        "fig4b_timeout_sweep_zoo"}) {
    EXPECT_NO_THROW(Bundled(name)) << name;
  }
  EXPECT_EQ(Bundled("fig4b_timeout_sweep_zoo").models.size(), 37u);
  EXPECT_EQ(Bundled("fig2_flattop").models.size(), 10u);
}

TEST(ScenarioFile, SeedIsMandatory) {
  const std::string text = R"({"models":[{"name":"m","alpha_ms":1,"beta_ms":5,
    "slo_ms":12}],"gpus":1,"policy":{"kind":"eager"},
    "workload":{"arrival":{"kind":"poisson","rate_rps":10}},"duration_s":1})";
  try {
    ParseScenario(text, ".");
    FAIL() << "expected ScenarioError";
  } catch (const ScenarioError& e) {
    ASSERT_EQ(e.issues().size(), 1u);
    EXPECT_NE(e.issues()[0].find("seed"), std::string::npos);
  }
  EXPECT_EQ(ParseScenario(text, ".", 7).seed, 7u);
}

TEST(ScenarioFile, ReportsEveryIssue) {
  const std::string text = R"({"models":[{"name":"m","alpha_ms":1,"beta_ms":5,
    "slo_ms":3}],"gpus":0,"policy":{"kind":"sometimes"},
    "workload":{"arrival":{"kind":"poisson","rate_rps":-1}},"duration_s":1,
    "seed":1})";
  try {
    ParseScenario(text, ".");
    FAIL() << "expected ScenarioError";
  } catch (const ScenarioError& e) {
    EXPECT_GE(e.issues().size(), 4u);
  }
}

TEST(ScenarioFile, MillisecondUnitsAndTimeoutFraction) {
  const std::string text = R"({"models":[{"zoo":"table2","name":"ResNet50",
    "slo_ms":50}],"gpus":2,"policy":{"kind":"timeout",
    "timeout_slo_fraction":0.2, "d_ctrl_us":30, "d_data_us_per_req":2},
    "workload":{"arrival":{"kind":"poisson","rate_rps":10}},"duration_s":1,
    "seed":1})";
  const Scenario s = ParseScenario(text, ".");
  EXPECT_EQ(s.models[0].slo, milliseconds(50));
  EXPECT_EQ(s.warmup, milliseconds(100));
  const auto p = ResolvePolicies(s);
  EXPECT_EQ(p[0].timeout, milliseconds(10));
  EXPECT_EQ(p[0].network.DispatchDelay(3), microseconds(36));
}

TEST(ScenarioFile, WithRateScalesEverySegment) {
  Scenario s = Bundled("table2_resnet50");
  EXPECT_DOUBLE_EQ(AggregateRate(WithRate(s, 1234)), 1234);
}

// --- Output files -------------------------------------------------------------------

TEST(ResultIo, CsvHeadersAndAtomicWrite) {
  const RunResult r = RunScenario(Bundled("fig6_stagger"));
  const std::string req = RequestsCsv(r);
  EXPECT_EQ(req.substr(0, req.find('\n')),
            "request_id,model,arrival_ns,dispatch_ns,start_ns,finish_ns,"
            "batch_size,outcome");
  const std::string tr = TraceCsv(r);
  EXPECT_EQ(tr.substr(0, tr.find('\n')),
            "event_time_ns,event_kind,model,gpu,batch_size,start_ns,finish_ns,"
            "request_ids");
  EXPECT_NE(tr.find(",1;2;3;4\n"), std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "batchsym_io";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto path = (dir / "trace.csv").string();
  WriteFileAtomic(path, tr);
  WriteFileAtomic(path, tr);
  size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 1u);
  std::ifstream in(path);
  std::string back((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(back, tr);
}

}  // namespace
}  // namespace batchsym::sim

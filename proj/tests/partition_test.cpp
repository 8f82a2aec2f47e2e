#include <gtest/gtest.h>

#include <sstream>

#include "batchsym/partition/partition.h"
#include "batchsym/profile/csv.h"
#include "support.h"

namespace batchsym::partition {
namespace {

Problem TwoModels() {
  Problem p;
  p.subclusters = 2;
  p.models = {{"a", 10, 1, 0}, {"b", 10, 1, 0}};
  return p;
}

TEST(Evaluate, SingleSubclusterIsBalanced) {
  Problem p = test::ExponentialInstance(6, 1, 1);
  const auto e = Evaluate(p, Assignment(6, 0));
  EXPECT_DOUBLE_EQ(e.delta_rate, 0);
  EXPECT_DOUBLE_EQ(e.delta_mem, 0);
  EXPECT_DOUBLE_EQ(e.objective, 0);
  EXPECT_TRUE(e.feasible());
}

TEST(Evaluate, SplitVersusTogether) {
  const Problem p = TwoModels();
  const auto split = Evaluate(p, {0, 1});
  EXPECT_DOUBLE_EQ(split.delta_rate, 0);
  EXPECT_DOUBLE_EQ(split.delta_mem, 0);
  const auto together = Evaluate(p, {0, 0});
  EXPECT_DOUBLE_EQ(together.delta_rate, 10);
  EXPECT_DOUBLE_EQ(together.delta_mem, 1);
  // Default weight: mean rate / mean static memory = 10.
  EXPECT_DOUBLE_EQ(together.objective, 20);
}

TEST(Evaluate, ChangeCostCountsUnloadAndLoad) {
  Problem p = TwoModels();
  p.current = Assignment{0, 1};
  EXPECT_DOUBLE_EQ(Evaluate(p, {0, 0}).change_cost, 2);
  EXPECT_DOUBLE_EQ(Evaluate(p, {1, 0}).change_cost, 4);
  p.change_max = 3;
  EXPECT_TRUE(Evaluate(p, {0, 0}).feasible());
  EXPECT_FALSE(Evaluate(p, {1, 0}).feasible());
}

TEST(Evaluate, ItemizesCapViolations) {
  Problem p = TwoModels();
  p.models[0].dynamic_mem = 5;
  p.rate_max = 15;
  p.mem_max = 6;
  const auto e = Evaluate(p, {0, 0});
  EXPECT_FALSE(e.feasible());
  EXPECT_EQ(e.violations.size(), 2u);
  EXPECT_GT(e.infeasibility, 0);
  EXPECT_DOUBLE_EQ(e.mem_peak[0], 7);
  EXPECT_TRUE(Evaluate(p, {0, 1}).feasible());
}

TEST(Evaluate, RejectsMalformed) {
  const Problem p = TwoModels();
  EXPECT_THROW(Evaluate(p, {0}), std::invalid_argument);
  EXPECT_THROW(Evaluate(p, {0, 2}), std::invalid_argument);
  Problem bad = p;
  bad.models[1].rate = -1;
  EXPECT_THROW(ValidateProblem(bad), std::invalid_argument);
  bad = p;
  bad.subclusters = 0;
  EXPECT_THROW(ValidateProblem(bad), std::invalid_argument);
}

SolveOptions Deterministic(uint64_t seed) {
  SolveOptions o;
  o.seed = seed;
  o.time_budget = std::chrono::milliseconds(60000);
  o.max_restarts = 200;
  return o;
}

TEST(Solve, MatchesBruteForceOnSmallInstances) {
  sim::CounterRng pick(5, "partition-test");
  int constrained = 0;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    const size_t m = 4 + seed % 5;
    const uint32_t l = 2 + seed % 2;
    Problem p = test::ExponentialInstance(m, l, seed);
    if (seed % 3 == 0) {
      double total = 0;
      for (const auto& x : p.models) total += x.rate;
      p.rate_max = 0.6 * total;
      ++constrained;
    }
    if (seed % 4 == 1) {
      Assignment cur(m);
      for (auto& c : cur) c = static_cast<uint32_t>(pick() % l);
      p.current = cur;
      p.change_max = 4;
    }
    const auto oracle = test::BruteForce(p);
    const auto got = Solve(p, Deterministic(seed));
    ASSERT_EQ(got.evaluation.feasible(), oracle.feasible) << seed;
    if (oracle.feasible) {
      EXPECT_NEAR(got.evaluation.objective, oracle.objective,
                  1e-9 * (1 + oracle.objective))
          << "seed " << seed;
    }
  }
  EXPECT_GT(constrained, 50);
}

TEST(Solve, ZeroChangeBudgetKeepsCurrent) {
  Problem p = test::ExponentialInstance(12, 3, 8);
  Assignment cur(12);
  for (size_t i = 0; i < cur.size(); ++i) cur[i] = static_cast<uint32_t>(i % 3);
  p.current = cur;
  p.change_max = 0;
  const auto r = Solve(p, Deterministic(1));
  EXPECT_EQ(r.assignment, cur);
  EXPECT_DOUBLE_EQ(r.evaluation.change_cost, 0);
}

TEST(Solve, ReportsInfeasible) {
  Problem p = TwoModels();
  p.rate_max = 5;
  const auto r = Solve(p, Deterministic(1));
  EXPECT_FALSE(r.evaluation.feasible());
  EXPECT_GT(r.evaluation.infeasibility, 0);
  EXPECT_FALSE(RandomSolve(p, Deterministic(1)).evaluation.feasible());
}

TEST(Solve, BeatsRandomUnderTheSameBudget) {
  const Problem p = test::ExponentialInstance(120, 4, 3);
  SolveOptions o;
  o.seed = 3;
  o.time_budget = std::chrono::milliseconds(300);
  const auto ours = Solve(p, o);
  const auto rnd = RandomSolve(p, o);
  EXPECT_LT(ours.evaluation.objective, rnd.evaluation.objective);
  EXPECT_GT(ours.restarts, 0u);
}

TEST(Imbalance, Definition) {
  Problem p;
  p.subclusters = 3;
  p.models = {{"a", 10, 5, 0}, {"b", 20, 5, 0}, {"c", 30, 5, 0}};
  const auto f = ImbalanceFactor(p, {0, 1, 2});
  EXPECT_DOUBLE_EQ(f.rate, 1.0);
  EXPECT_DOUBLE_EQ(f.mem, 0.0);
  p.models[2].rate = 0;
  p.models[0].rate = 0;
  p.models[1].rate = 0;
  EXPECT_THROW(ImbalanceFactor(p, {0, 1, 2}), std::invalid_argument);
}

TEST(ProblemFile, RoundTrip) {
  std::istringstream in(
      "# subclusters=2\n# rate_max=100\n"
      "model,rate_rps,static_mem_mb,dynamic_mem_mb,current,change_cost\n"
      "a,10,1,0,0,1.5\nb,20,2,1,1,1\n");
  const Problem p = ParseProblem(in, "inline");
  EXPECT_EQ(p.subclusters, 2u);
  EXPECT_DOUBLE_EQ(p.rate_max, 100);
  ASSERT_EQ(p.models.size(), 2u);
  EXPECT_DOUBLE_EQ(p.models[0].change_cost, 1.5);
  EXPECT_EQ(*p.current, (Assignment{0, 1}));
  EXPECT_EQ(AssignmentCsv(p, {1, 0}), "model,subcluster\na,1\nb,0\n");
}

TEST(ProblemFile, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) -> size_t {
    std::istringstream in(text);
    try {
      ParseProblem(in, "inline");
    } catch (const IngestError& e) {
      return e.line();
    }
    return 0;
  };
  const std::string head = "model,rate_rps,static_mem_mb,dynamic_mem_mb\n";
  EXPECT_EQ(line_of(head + "a,1,1,0\nb,x,1,0\n"), 3u);
  EXPECT_EQ(line_of(head + "a,1,1\n"), 2u);
  EXPECT_EQ(line_of("# bogus=1\n" + head + "a,1,1,0\n"), 1u);
  EXPECT_EQ(line_of(head + "a,-1,1,0\n"), 2u);
}

}  // namespace
}  // namespace batchsym::partition

#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace batchsym::partition {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct ModelLoad {
  std::string name;
  double rate = 0;        // requests per second
  double static_mem = 0;  // resident weights, MB
  double dynamic_mem = 0; // peak activation memory, MB
  double change_cost = 1; // cost of loading or unloading this model
};

struct Problem {
  std::vector<ModelLoad> models;
  uint32_t subclusters = 1;
  double rate_max = kUnbounded;
  double mem_max = kUnbounded;
  std::optional<double> weight;  // default: mean rate / mean static memory
  // Current placement; when present, moving model i costs 2 * change_cost
  // (unload plus load) and the total must stay within change_max.
  std::optional<std::vector<uint32_t>> current;
  double change_max = kUnbounded;

  double Weight() const;
};

// Sub-cluster index per model.
using Assignment = std::vector<uint32_t>;

struct Evaluation {
  double objective = 0;  // delta_rate + w * delta_mem
  double delta_rate = 0;
  double delta_mem = 0;
  std::vector<double> rate_sums;
  std::vector<double> mem_sums;     // static memory only
  std::vector<double> mem_peak;     // static + largest dynamic
  double change_cost = 0;
  // Sum of relative constraint excesses; 0 when feasible.
  double infeasibility = 0;
  std::vector<std::string> violations;

  bool feasible() const { return violations.empty(); }
};

// Throws std::invalid_argument for malformed problems or assignments.
void ValidateProblem(const Problem& problem);
Evaluation Evaluate(const Problem& problem, const Assignment& assignment);

struct Imbalance {
  double rate = 0;
  double mem = 0;
};
// (max - min) / avg over per-sub-cluster rate and static-memory sums.
Imbalance ImbalanceFactor(const Problem& problem, const Assignment& assignment);

struct SolveOptions {
  std::chrono::milliseconds time_budget{1000};
  uint64_t seed = 0;
  // Stop after this many restarts even with budget left; 0 = budget only.
  // A restart cap without a binding budget makes results deterministic.
  uint32_t max_restarts = 0;
};

struct SolveResult {
  Assignment assignment;
  Evaluation evaluation;
  uint64_t restarts = 0;
};

// Randomized greedy construction plus first-improvement local search over
// single-model moves and pairwise swaps, restarted until the budget runs
// out. With a current placement the first restart starts from it, later
// ones from random perturbations within the change budget, and no move
// exceeds the budget.
SolveResult Solve(const Problem& problem, const SolveOptions& options);

// Uniform random assignments; keeps the best (feasible first).
SolveResult RandomSolve(const Problem& problem, const SolveOptions& options);

// CSV `model,rate_rps,static_mem_mb,dynamic_mem_mb` with optional
// `current` and `change_cost` columns; `# key=value` lines set
// subclusters, rate_max, mem_max, weight, change_max.
Problem ParseProblem(std::istream& in, const std::string& source);
Problem LoadProblem(const std::string& path);
// `model,subcluster`
std::string AssignmentCsv(const Problem& problem, const Assignment& assignment);

}  // namespace batchsym::partition

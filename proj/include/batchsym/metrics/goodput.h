#pragma once

#include <optional>
#include <string>
#include <vector>

#include "batchsym/metrics/stats.h"
#include "batchsym/sim/scenario.h"

namespace batchsym::metrics {

struct GoodputOptions {
  double tolerance = 0.005;  // relative width of the final bracket
  int max_iterations = 24;
  // 0: DefaultUpperBound.
  double upper_bound = 0;
  // Re-probe at 0.5x and 0.9x the result; both must be feasible.
  bool verify_monotone = true;
  // p99 bound for every model; unset means each model's own SLO.
  std::optional<Duration> latency_bound;
};

// Every model's p99 (drops as +inf) within the bound or its SLO.
bool MeetsLatency(const RunStats& stats, std::optional<Duration> bound);

struct GoodputProbe {
  double rate = 0;
  bool feasible = false;
  double goodput = 0;
  double bad_rate = 0;
  double idle_fraction = 0;
  double median_batch = 0;
};

struct GoodputResult {
  double rate = 0;  // largest feasible offered rate found
  RunStats stats;   // stats of the probe at `rate` (empty if rate == 0)
  std::vector<GoodputProbe> probes;
  bool monotone = true;
  std::string diagnostics;
};

// Offered rate at which every model's p99 (drops as +inf) meets its SLO.
GoodputResult GoodputSearch(const sim::Scenario& scenario,
                            const GoodputOptions& options = {});

// Runs the scenario at `rate` and returns its stats.
RunStats ProbeRate(const sim::Scenario& scenario, double rate);

// 2x the popularity-weighted batching ceiling of the whole cluster.
double DefaultUpperBound(const sim::Scenario& scenario);

}  // namespace batchsym::metrics

#pragma once

#include <cstdint>
#include <vector>

#include "batchsym/metrics/stats.h"
#include "batchsym/sim/scenario.h"

namespace batchsym::metrics {

struct FlatTopPoint {
  double offered = 0;
  double goodput = 0;
  double bad_rate = 0;
  double idle_fraction = 0;
  // Below capacity: idle fraction vs (p - o) / p. Above: bad rate vs
  // (o - p) / o. At o == p both are expected to be zero.
  double expected = 0;
  double residual = 0;
  bool pass = false;
};

struct FlatTopReport {
  double capacity = 0;
  double epsilon = 0.10;
  std::vector<FlatTopPoint> points;
  bool pass = true;
};

// Expected residual for one offered load.
FlatTopPoint ClassifyFlatTop(double capacity, double offered,
                             const RunStats& stats, double epsilon);

FlatTopReport FlatTopCheck(const sim::Scenario& scenario, double capacity,
                           const std::vector<double>& offered,
                           double epsilon = 0.10);

struct AutoscaleThresholds {
  double bad_rate = 0.01;
  double idle_fraction = 0.05;
};

// +ceil(N r / (1 - r)) above the bad-rate threshold, else -floor(N f) above
// the idle threshold, else 0. Never leaves fewer than one GPU.
int64_t AutoscaleAdvice(double bad_rate, double idle_fraction, uint32_t gpus,
                        const AutoscaleThresholds& thresholds = {});

}  // namespace batchsym::metrics

#include "batchsym/metrics/flat_top.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "batchsym/metrics/goodput.h"

namespace batchsym::metrics {

FlatTopPoint ClassifyFlatTop(double capacity, double offered,
                             const RunStats& stats, double epsilon) {
  FlatTopPoint p;
  p.offered = offered;
  p.goodput = stats.goodput;
  p.bad_rate = stats.bad_rate;
  p.idle_fraction = stats.mean_idle_fraction;
  if (offered > capacity) {
    p.expected = (offered - capacity) / offered;
    p.residual = p.bad_rate - p.expected;
  } else if (offered < capacity) {
    p.expected = (capacity - offered) / capacity;
    p.residual = p.idle_fraction - p.expected;
  } else {
    p.expected = 0;
    p.residual = std::max(p.bad_rate, p.idle_fraction);
  }
  p.pass = std::abs(p.residual) <= epsilon;
  return p;
}

FlatTopReport FlatTopCheck(const sim::Scenario& scenario, double capacity,
                           const std::vector<double>& offered,
                           double epsilon) {
  FlatTopReport report;
  report.capacity = capacity;
  report.epsilon = epsilon;
  for (double o : offered) {
    const RunStats st = ProbeRate(scenario, o);
    report.points.push_back(ClassifyFlatTop(capacity, o, st, epsilon));
    report.pass = report.pass && report.points.back().pass;
  }
  return report;
}

int64_t AutoscaleAdvice(double bad_rate, double idle_fraction, uint32_t gpus,
                        const AutoscaleThresholds& thresholds) {
  if (bad_rate < 0 || bad_rate >= 1) {
    throw std::invalid_argument("bad rate must be in [0, 1)");
  }
  if (idle_fraction < 0 || idle_fraction > 1) {
    throw std::invalid_argument("idle fraction must be in [0, 1]");
  }
  const double n = gpus;
  if (bad_rate > thresholds.bad_rate) {
    // Small epsilon so exact products such as 24 * 0.2 / 0.8 do not round up.
    return static_cast<int64_t>(std::ceil(n * bad_rate / (1 - bad_rate) - 1e-9));
  }
  if (idle_fraction > thresholds.idle_fraction) {
    const auto release = static_cast<int64_t>(std::floor(n * idle_fraction + 1e-9));
    const int64_t floor_gpus = gpus > 0 ? static_cast<int64_t>(gpus) - 1 : 0;
    return -std::min(release, floor_gpus);
  }
  return 0;
}

}  // namespace batchsym::metrics

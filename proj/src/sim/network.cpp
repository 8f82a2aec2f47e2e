#include "batchsym/sim/network.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace batchsym::sim {

NetworkModel::NetworkModel(NetworkSpec spec, uint64_t seed)
    : spec_(std::move(spec)), rng_(seed, "network") {
  if (spec_.kind == NetworkSpec::Kind::kHistogram) {
    double acc = 0;
    for (const auto& b : spec_.bins) {
      if (b.weight < 0 || b.lo < Duration::zero() || b.hi < b.lo) {
        throw std::invalid_argument("histogram bins must be non-negative");
      }
      acc += b.weight;
      cumulative_.push_back(acc);
    }
    if (acc <= 0) throw std::invalid_argument("histogram has no mass");
  }
}

Duration NetworkModel::Sample() {
  if (spec_.kind == NetworkSpec::Kind::kConstant) return spec_.constant;
  std::uniform_real_distribution<double> u(0.0, cumulative_.back());
  const double x = u(rng_);
  const size_t i =
      std::upper_bound(cumulative_.begin(), cumulative_.end(), x) -
      cumulative_.begin();
  const auto& bin = spec_.bins[std::min(i, spec_.bins.size() - 1)];
  std::uniform_real_distribution<double> within(
      static_cast<double>(bin.lo.count()), static_cast<double>(bin.hi.count()));
  return Duration(static_cast<int64_t>(std::llround(within(rng_))));
}

Duration NetworkModel::PlanningBound() const {
  if (spec_.kind == NetworkSpec::Kind::kConstant) return spec_.constant;
  return HistogramPercentile(spec_.bins, spec_.planning_percentile);
}

Duration HistogramPercentile(const std::vector<NetworkSpec::Bin>& bins,
                             double percentile) {
  double total = 0;
  for (const auto& b : bins) total += b.weight;
  const double target = total * std::clamp(percentile, 0.0, 100.0) / 100.0;
  double acc = 0;
  for (const auto& b : bins) {
    if (b.weight > 0 && acc + b.weight >= target) {
      const double frac = (target - acc) / b.weight;
      return b.lo + Duration(static_cast<int64_t>(
                        std::llround(frac * (b.hi - b.lo).count())));
    }
    acc += b.weight;
  }
  return bins.empty() ? Duration::zero() : bins.back().hi;
}

}  // namespace batchsym::sim

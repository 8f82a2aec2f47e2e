#pragma once

#include <vector>

#include "batchsym/profile/time.h"
#include "batchsym/sim/rng.h"

namespace batchsym::sim {

// Distribution of the actual control-message latency seen by backends.
struct NetworkSpec {
  enum class Kind { kConstant, kHistogram };
  struct Bin {
    Duration lo;
    Duration hi;
    double weight;
  };
  Kind kind = Kind::kConstant;
  Duration constant{0};
  std::vector<Bin> bins;
  // The scheduler plans with this percentile of the distribution.
  double planning_percentile = 99.99;
};

class NetworkModel {
 public:
  NetworkModel(NetworkSpec spec, uint64_t seed);

  Duration Sample();
  // High-percentile bound used as the planning estimate.
  Duration PlanningBound() const;

 private:
  NetworkSpec spec_;
  CounterRng rng_;
  std::vector<double> cumulative_;
};

Duration HistogramPercentile(const std::vector<NetworkSpec::Bin>& bins,
                             double percentile);

}  // namespace batchsym::sim

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "batchsym/metrics/goodput.h"
#include "batchsym/sim/scenario.h"

namespace batchsym::cli {

enum class SweepDimension { kBetaRatio, kTimeout, kOfferedLoad, kSlo };
const char* DimensionName(SweepDimension dim);
std::optional<SweepDimension> ParseDimension(const std::string& s);

struct SweepOptions {
  SweepDimension dimension = SweepDimension::kBetaRatio;
  std::vector<double> grid;
  // Policies compared at each point. The timeout dimension always runs
  // timeout(value % of SLO) plus these.
  std::vector<sched::PolicyKind> policies = {sched::PolicyKind::kDeferred,
                                             sched::PolicyKind::kEager};
  // beta_ratio: SLO = 2 l(ref_batch) after beta is set to ratio * alpha.
  uint32_t slo_ref_batch = 8;
  // offered_load: grid values are fractions of this rate; 0 means the
  // goodput of the first policy.
  double capacity = 0;
  metrics::GoodputOptions goodput;
  unsigned threads = 1;
};

struct SweepRow {
  std::string dimension;
  double value = 0;
  std::string policy;
  double offered = 0;   // offered rate of the reported run
  double goodput = 0;   // goodput search result, or measured goodput
  double bad_rate = 0;
  double idle_fraction = 0;
  double median_batch = 0;
};

// One scenario transformation per dimension.
sim::Scenario WithPolicy(const sim::Scenario& s, sched::PolicyKind kind,
                         std::optional<double> timeout_fraction = std::nullopt);
sim::Scenario WithBetaRatio(const sim::Scenario& s, double ratio,
                            uint32_t slo_ref_batch);
sim::Scenario WithSlo(const sim::Scenario& s, Duration slo);

// Points run in parallel on `threads` workers; point i uses seed + i.
std::vector<SweepRow> RunSweep(const sim::Scenario& base,
                               const SweepOptions& options);
// `dimension,value,policy,offered_rps,goodput_rps,bad_rate,idle_fraction,median_batch`
std::string SweepCsv(const std::vector<SweepRow>& rows);

// BATCHSYM_THREADS if set and positive, else hardware concurrency.
unsigned DefaultThreads();

}  // namespace batchsym::cli

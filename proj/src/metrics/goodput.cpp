#include "batchsym/metrics/goodput.h"

#include <algorithm>
#include <sstream>

#include "batchsym/metrics/analytic.h"

namespace batchsym::metrics {

bool MeetsLatency(const RunStats& stats, std::optional<Duration> bound) {
  for (const auto& m : stats.models) {
    if (m.p99_infinite || m.p99 > bound.value_or(m.slo)) return false;
  }
  return true;
}

RunStats ProbeRate(const sim::Scenario& scenario, double rate) {
  sim::Scenario s = sim::WithRate(scenario, rate);
  s.record_trace = false;
  return ComputeStats(sim::RunScenario(s));
}

double DefaultUpperBound(const sim::Scenario& scenario) {
  // Each request of model i needs at least 1 / c_i GPU-seconds, where c_i is
  // the best single-GPU throughput within the SLO. Capacity is then at most
  // N / sum_i(w_i / c_i) for popularity weights w.
  const auto weights = sim::PopularityWeights(scenario.workload.popularity,
                                              scenario.models.size());
  double total = 0;
  for (double w : weights) total += w;
  double cost = 0;
  for (size_t i = 0; i < scenario.models.size(); ++i) {
    const auto& m = scenario.models[i];
    const double c = BatchingCeiling(m.profile, m.slo, 1);
    if (c > 0) cost += weights[i] / total / c;
  }
  if (!(cost > 0)) return 0;
  return 2 * scenario.gpus / cost;
}

GoodputResult GoodputSearch(const sim::Scenario& scenario,
                            const GoodputOptions& options) {
  GoodputResult out;
  auto probe = [&](double rate, RunStats* keep) {
    RunStats st = ProbeRate(scenario, rate);
    GoodputProbe p;
    p.rate = rate;
    // A window with no arrivals is no evidence of feasibility.
    p.feasible = st.arrivals > 0 && MeetsLatency(st, options.latency_bound);
    p.goodput = st.goodput;
    p.bad_rate = st.bad_rate;
    p.idle_fraction = st.mean_idle_fraction;
    p.median_batch = st.median_batch;
    out.probes.push_back(p);
    if (keep && p.feasible) *keep = std::move(st);
    return p.feasible;
  };

  double lo = 0;
  double hi = options.upper_bound > 0 ? options.upper_bound
                                      : DefaultUpperBound(scenario);
  if (!(hi > 0)) {
    out.diagnostics = "no positive upper bound";
    return out;
  }
  // The bracket must start infeasible; widen it if the bound is too low.
  for (int i = 0; i < 4 && probe(hi, &out.stats); ++i) {
    lo = hi;
    hi *= 2;
  }
  for (int it = 0; it < options.max_iterations; ++it) {
    if (hi - lo <= options.tolerance * hi) break;
    const double mid = 0.5 * (lo + hi);
    if (probe(mid, &out.stats)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.rate = lo;
  if (lo == 0) {
    out.stats = RunStats{};
    std::ostringstream msg;
    msg << "no feasible rate found; lowest probe "
        << (out.probes.empty() ? 0.0 : out.probes.back().rate) << " r/s";
    out.diagnostics = msg.str();
    return out;
  }
  if (options.verify_monotone) {
    for (double f : {0.5, 0.9}) {
      if (!probe(lo * f, nullptr)) out.monotone = false;
    }
    if (!out.monotone) {
      out.diagnostics = "feasibility is not monotone below the result";
    }
  }
  return out;
}

}  // namespace batchsym::metrics

#include "batchsym/cli/experiments.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "batchsym/profile/model_zoo.h"

namespace batchsym::cli {

const char* DimensionName(SweepDimension dim) {
  switch (dim) {
    case SweepDimension::kBetaRatio:
      return "beta_ratio";
    case SweepDimension::kTimeout:
      return "timeout";
    case SweepDimension::kOfferedLoad:
      return "offered_load";
    case SweepDimension::kSlo:
      return "slo";
  }
  return "?";
}

std::optional<SweepDimension> ParseDimension(const std::string& s) {
  if (s == "beta_ratio") return SweepDimension::kBetaRatio;
  if (s == "timeout") return SweepDimension::kTimeout;
  if (s == "offered_load") return SweepDimension::kOfferedLoad;
  if (s == "slo") return SweepDimension::kSlo;
  return std::nullopt;
}

unsigned DefaultThreads() {
  if (const char* env = std::getenv("BATCHSYM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

sim::Scenario WithPolicy(const sim::Scenario& s, sched::PolicyKind kind,
                         std::optional<double> timeout_fraction) {
  sim::Scenario out = s;
  out.policy.kind = kind;
  if (kind == sched::PolicyKind::kTimeout && timeout_fraction) {
    out.policy.timeout.reset();
    out.policy.timeout_slo_fraction = *timeout_fraction;
  }
  if (kind != sched::PolicyKind::kTimeout) {
    out.policy.timeout.reset();
    out.policy.timeout_slo_fraction.reset();
  }
  return out;
}

sim::Scenario WithBetaRatio(const sim::Scenario& s, double ratio,
                            uint32_t slo_ref_batch) {
  sim::Scenario out = s;
  for (auto& m : out.models) {
    if (m.profile.kind() != LatencyProfile::Kind::kLinear) {
      throw std::invalid_argument("beta_ratio needs linear profiles");
    }
    const Duration alpha = m.profile.alpha();
    const Duration beta(static_cast<int64_t>(std::llround(alpha.count() * ratio)));
    const Duration slo = 2 * (alpha * slo_ref_batch + beta);
    m = MakeLinearModel(m.model_id, m.name, alpha, beta, slo);
  }
  return out;
}

sim::Scenario WithSlo(const sim::Scenario& s, Duration slo) {
  sim::Scenario out = s;
  for (auto& m : out.models) {
    if (m.profile.kind() == LatencyProfile::Kind::kLinear) {
      m = MakeLinearModel(m.model_id, m.name, m.profile.alpha(),
                          m.profile.beta(), slo);
    } else {
      m.slo = slo;
      ValidateModelSpec(m);
    }
  }
  return out;
}

namespace {

struct Job {
  size_t point;
  sched::PolicyKind policy;
};

SweepRow RunJob(const sim::Scenario& base, const SweepOptions& o,
                const Job& job, double capacity) {
  const double v = o.grid[job.point];
  sim::Scenario s = base;
  s.seed = base.seed + job.point;
  std::optional<double> fraction;
  switch (o.dimension) {
    case SweepDimension::kBetaRatio:
      s = WithBetaRatio(s, v, o.slo_ref_batch);
      break;
    case SweepDimension::kSlo:
      s = WithSlo(s, FromMillis(v));
      break;
    case SweepDimension::kTimeout:
      fraction = v / 100.0;
      break;
    case SweepDimension::kOfferedLoad:
      break;
  }
  s = WithPolicy(s, job.policy, fraction);

  SweepRow row;
  row.dimension = DimensionName(o.dimension);
  row.value = v;
  row.policy = sched::PolicyName(job.policy);
  if (o.dimension == SweepDimension::kOfferedLoad) {
    row.offered = v * capacity;
    const metrics::RunStats st = metrics::ProbeRate(s, row.offered);
    row.goodput = st.goodput;
    row.bad_rate = st.bad_rate;
    row.idle_fraction = st.mean_idle_fraction;
    row.median_batch = st.median_batch;
    return row;
  }
  const metrics::GoodputResult g = metrics::GoodputSearch(s, o.goodput);
  row.offered = g.rate;
  row.goodput = g.rate;
  row.bad_rate = g.stats.bad_rate;
  row.idle_fraction = g.stats.mean_idle_fraction;
  row.median_batch = g.stats.median_batch;
  return row;
}

}  // namespace

std::vector<SweepRow> RunSweep(const sim::Scenario& base,
                               const SweepOptions& o) {
  std::vector<sched::PolicyKind> policies;
  if (o.dimension == SweepDimension::kTimeout) {
    policies.push_back(sched::PolicyKind::kTimeout);
  }
  for (auto k : o.policies) {
    if (o.dimension == SweepDimension::kTimeout &&
        k == sched::PolicyKind::kTimeout) {
      continue;
    }
    policies.push_back(k);
  }
  if (policies.empty()) throw std::invalid_argument("no policies to sweep");

  double capacity = o.capacity;
  if (o.dimension == SweepDimension::kOfferedLoad && !(capacity > 0)) {
    capacity =
        metrics::GoodputSearch(WithPolicy(base, policies.front()), o.goodput)
            .rate;
  }

  std::vector<Job> jobs;
  for (size_t i = 0; i < o.grid.size(); ++i) {
    for (auto k : policies) jobs.push_back({i, k});
  }
  std::vector<SweepRow> rows(jobs.size());
  std::atomic<size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto work = [&] {
    for (size_t j = next++; j < jobs.size(); j = next++) {
      try {
        rows[j] = RunJob(base, o, jobs[j], capacity);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(
                                      o.threads, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return rows;
}

std::string SweepCsv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "dimension,value,policy,offered_rps,goodput_rps,bad_rate,"
         "idle_fraction,median_batch\n";
  out.precision(10);
  for (const auto& r : rows) {
    out << r.dimension << ',' << r.value << ',' << r.policy << ',' << r.offered
        << ',' << r.goodput << ',' << r.bad_rate << ',' << r.idle_fraction
        << ',' << r.median_batch << '\n';
  }
  return out.str();
}

}  // namespace batchsym::cli

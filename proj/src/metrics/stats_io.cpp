#include "batchsym/metrics/stats_io.h"

#include <filesystem>
#include <sstream>

#include "batchsym/sim/result_io.h"
#include "json.hpp"

namespace batchsym::metrics {

using nlohmann::ordered_json;

std::string BatchHistCsv(const RunStats& stats) {
  std::ostringstream out;
  out << "model,batch_size,count\n";
  for (const auto& m : stats.models) {
    for (const auto& [size, count] : m.batch_hist) {
      out << m.name << ',' << size << ',' << count << '\n';
    }
  }
  return out.str();
}

std::string LatencyCsv(const sim::RunResult& result) {
  std::ostringstream out;
  out << "model,request_id,latency_ns,queueing_ns,outcome\n";
  for (const auto& r : result.requests) {
    if (r.arrival < result.measure_begin || r.arrival >= result.measure_end) {
      continue;
    }
    out << result.model_names.at(r.model) << ',' << r.id << ',';
    if (r.outcome == sim::Outcome::kCompleted ||
        r.outcome == sim::Outcome::kLate) {
      out << (r.finish - r.arrival).count() << ',' << QueueingDelay(r).count();
    } else {
      out << ',';
    }
    out << ',' << sim::OutcomeName(r.outcome) << '\n';
  }
  return out.str();
}

std::string UtilizationCsv(const RunStats& stats) {
  std::ostringstream out;
  out << "gpu,busy_ns,idle_ns\n";
  for (size_t g = 0; g < stats.gpus.size(); ++g) {
    out << g << ',' << stats.gpus[g].busy.count() << ','
        << stats.gpus[g].idle.count() << '\n';
  }
  return out.str();
}

std::string SummaryJson(const sim::RunResult& result, const RunStats& stats,
                        const std::string& policy) {
  ordered_json j;
  j["scenario"] = result.scenario;
  j["seed"] = result.seed;
  j["policy"] = policy;
  j["gpus"] = result.gpu_count;
  j["window_s"] = ToSeconds(stats.window);
  j["arrivals"] = stats.arrivals;
  j["good"] = stats.good;
  j["bad"] = stats.bad;
  j["offered_rps"] = stats.offered_rate;
  j["goodput_rps"] = stats.goodput;
  j["bad_rate"] = stats.bad_rate;
  j["mean_idle_fraction"] = stats.mean_idle_fraction;
  j["median_batch"] = stats.median_batch;
  j["all_meet_slo"] = stats.AllMeetSlo();
  ordered_json models = ordered_json::array();
  for (const auto& m : stats.models) {
    ordered_json mj;
    mj["name"] = m.name;
    mj["slo_ms"] = ToMillis(m.slo);
    mj["arrivals"] = m.arrivals;
    mj["completed"] = m.completed;
    mj["late"] = m.late;
    mj["dropped"] = m.dropped;
    mj["pending"] = m.pending;
    if (m.p99_infinite) {
      mj["p99_ms"] = nullptr;
    } else {
      mj["p99_ms"] = ToMillis(m.p99);
    }
    mj["meets_slo"] = m.MeetsSlo();
    models.push_back(std::move(mj));
  }
  j["models"] = std::move(models);
  ordered_json rank;
  rank["handler_calls"] = result.rank_stats.handler_calls;
  rank["structure_ops"] = result.rank_stats.structure_ops;
  rank["max_ops_per_call"] = result.rank_stats.max_ops_per_call;
  rank["grants"] = result.rank_stats.grants;
  rank["evictions"] = result.rank_stats.evictions;
  j["rank"] = std::move(rank);
  j["events"] = result.events;
  return j.dump(2) + "\n";
}

void WriteRunOutputs(const std::string& dir, const sim::RunResult& result,
                     const RunStats& stats, const std::string& policy) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path d(dir);
  sim::WriteFileAtomic((d / "requests.csv").string(), sim::RequestsCsv(result));
  sim::WriteFileAtomic((d / "trace.csv").string(), sim::TraceCsv(result));
  sim::WriteFileAtomic((d / "batch_hist.csv").string(), BatchHistCsv(stats));
  sim::WriteFileAtomic((d / "latency.csv").string(), LatencyCsv(result));
  sim::WriteFileAtomic((d / "utilization.csv").string(), UtilizationCsv(stats));
  sim::WriteFileAtomic((d / "summary.json").string(),
                       SummaryJson(result, stats, policy));
}

}  // namespace batchsym::metrics

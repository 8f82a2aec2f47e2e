#pragma once

#include <string>

#include "batchsym/metrics/stats.h"
#include "batchsym/sim/simulator.h"

namespace batchsym::metrics {

// `model,batch_size,count`
std::string BatchHistCsv(const RunStats& stats);
// `model,request_id,latency_ns,queueing_ns,outcome` for measured requests;
// latency and queueing cells are empty for requests never executed.
std::string LatencyCsv(const sim::RunResult& result);
// `gpu,busy_ns,idle_ns`
std::string UtilizationCsv(const RunStats& stats);
// Deterministic key order; no timestamps.
std::string SummaryJson(const sim::RunResult& result, const RunStats& stats,
                        const std::string& policy);

// Writes summary.json, requests.csv, trace.csv, batch_hist.csv,
// latency.csv and utilization.csv into `dir` (created if missing).
void WriteRunOutputs(const std::string& dir, const sim::RunResult& result,
                     const RunStats& stats, const std::string& policy);

}  // namespace batchsym::metrics

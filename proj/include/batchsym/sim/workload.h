#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "batchsym/profile/latency_profile.h"

namespace batchsym::sim {

struct ArrivalSpec {
  enum class Kind { kPoisson, kGamma, kUniform, kPiecewise, kReplay };
  Kind kind = Kind::kPoisson;
  double rate = 0;   // aggregate requests per second
  double shape = 1;  // gamma shape; inter-arrival scale is 1 / (rate * shape)
  // kUniform: arrival indices (0-based, before skipping) left out.
  std::vector<uint64_t> skip;
  // kPiecewise: (segment start, aggregate rate), sorted by start.
  std::vector<std::pair<Duration, double>> segments;
  std::string trace_path;  // kReplay: CSV `arrival_ns,model_name`
};

struct PopularitySpec {
  enum class Kind { kUniform, kZipf, kWeights };
  Kind kind = Kind::kUniform;
  double shape = 1;  // zipf: weight of the i-th model is (i+1)^-shape
  std::vector<double> weights;
};

struct WorkloadSpec {
  ArrivalSpec arrival;
  PopularitySpec popularity;
};

struct Arrival {
  TimePoint at;
  ModelId model;
  // Position in the generated stream, counting skipped uniform slots.
  uint64_t ordinal = 0;
};

const char* ArrivalKindName(ArrivalSpec::Kind kind);

// Time-ordered arrivals in [0, duration). Deterministic for a fixed seed:
// gaps come from the "arrivals" substream, model choice from "popularity".
std::vector<Arrival> GenerateArrivals(const WorkloadSpec& workload,
                                      const std::vector<ModelSpec>& models,
                                      Duration duration, uint64_t seed);

std::vector<double> PopularityWeights(const PopularitySpec& popularity,
                                      size_t model_count);

// Replay trace reader; model names resolve against `models`.
std::vector<Arrival> LoadReplayTrace(const std::string& path,
                                     const std::vector<ModelSpec>& models,
                                     Duration duration);

}  // namespace batchsym::sim

#include "batchsym/sim/workload.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "batchsym/profile/csv.h"
#include "batchsym/sim/rng.h"

namespace batchsym::sim {

const char* ArrivalKindName(ArrivalSpec::Kind kind) {
  switch (kind) {
    case ArrivalSpec::Kind::kPoisson:
      return "poisson";
    case ArrivalSpec::Kind::kGamma:
      return "gamma";
    case ArrivalSpec::Kind::kUniform:
      return "uniform";
    case ArrivalSpec::Kind::kPiecewise:
      return "piecewise";
    case ArrivalSpec::Kind::kReplay:
      return "replay";
  }
  return "?";
}

std::vector<double> PopularityWeights(const PopularitySpec& popularity,
                                      size_t model_count) {
  std::vector<double> w(model_count, 1.0);
  switch (popularity.kind) {
    case PopularitySpec::Kind::kUniform:
      break;
    case PopularitySpec::Kind::kZipf:
      for (size_t i = 0; i < model_count; ++i) {
        w[i] = std::pow(static_cast<double>(i + 1), -popularity.shape);
      }
      break;
    case PopularitySpec::Kind::kWeights:
      if (popularity.weights.size() != model_count) {
        throw std::invalid_argument("popularity weights: expected " +
                                    std::to_string(model_count) + " entries");
      }
      w = popularity.weights;
      break;
  }
  return w;
}

namespace {

TimePoint ToTick(double seconds) {
  return TimePoint(Duration(static_cast<int64_t>(std::llround(seconds * 1e9))));
}

}  // namespace

std::vector<Arrival> GenerateArrivals(const WorkloadSpec& workload,
                                      const std::vector<ModelSpec>& models,
                                      Duration duration, uint64_t seed) {
  const ArrivalSpec& spec = workload.arrival;
  if (spec.kind == ArrivalSpec::Kind::kReplay) {
    return LoadReplayTrace(spec.trace_path, models, duration);
  }
  CounterRng gap_rng(seed, "arrivals");
  CounterRng pick_rng(seed, "popularity");
  const auto weights = PopularityWeights(workload.popularity, models.size());
  std::discrete_distribution<ModelId> pick(weights.begin(), weights.end());
  const double end_s = ToSeconds(duration);

  std::vector<Arrival> out;
  auto emit = [&](double t) {
    out.push_back({ToTick(t), pick(pick_rng), out.size()});
  };

  switch (spec.kind) {
    case ArrivalSpec::Kind::kPoisson:
    case ArrivalSpec::Kind::kGamma: {
      const double shape =
          spec.kind == ArrivalSpec::Kind::kPoisson ? 1.0 : spec.shape;
      std::gamma_distribution<double> gap(shape, 1.0 / (spec.rate * shape));
      out.reserve(static_cast<size_t>(spec.rate * end_s * 1.05) + 16);
      for (double t = gap(gap_rng); t < end_s; t += gap(gap_rng)) emit(t);
      break;
    }
    case ArrivalSpec::Kind::kUniform: {
      const Duration step(
          static_cast<int64_t>(std::llround(1e9 / spec.rate)));
      std::vector<uint64_t> skip = spec.skip;
      std::sort(skip.begin(), skip.end());
      uint64_t i = 0;
      for (TimePoint t = kEpoch; t < TimePoint(duration); t += step, ++i) {
        if (std::binary_search(skip.begin(), skip.end(), i)) continue;
        out.push_back({t, pick(pick_rng), i});
      }
      break;
    }
    case ArrivalSpec::Kind::kPiecewise: {
      auto segs = spec.segments;
      std::sort(segs.begin(), segs.end());
      for (size_t s = 0; s < segs.size(); ++s) {
        const double seg_begin = ToSeconds(segs[s].first);
        const double seg_end =
            s + 1 < segs.size() ? ToSeconds(segs[s + 1].first) : end_s;
        const double rate = segs[s].second;
        if (rate <= 0) continue;
        std::exponential_distribution<double> gap(rate);
        for (double t = seg_begin + gap(gap_rng);
             t < std::min(seg_end, end_s); t += gap(gap_rng)) {
          emit(t);
        }
      }
      break;
    }
    case ArrivalSpec::Kind::kReplay:
      break;
  }
  return out;
}

std::vector<Arrival> LoadReplayTrace(const std::string& path,
                                     const std::vector<ModelSpec>& models,
                                     Duration duration) {
  std::ifstream in(path);
  if (!in) throw IngestError(path, 0, "cannot open trace file");
  std::unordered_map<std::string, ModelId> by_name;
  for (const auto& m : models) by_name.emplace(m.name, m.model_id);

  CsvReader reader(in, path, {"arrival_ns", "model_name"});
  std::vector<Arrival> out;
  std::vector<std::string> f;
  while (reader.Next(&f)) {
    const long long ns = reader.ParseInt(f[0], "arrival_ns");
    if (ns < 0) reader.Fail("negative arrival time");
    const auto it = by_name.find(f[1]);
    if (it == by_name.end()) reader.Fail("unknown model '" + f[1] + "'");
    const TimePoint at = AtNanos(ns);
    if (!out.empty() && at < out.back().at) {
      reader.Fail("arrival times must be non-decreasing");
    }
    if (at >= TimePoint(duration)) continue;
    out.push_back({at, it->second, out.size()});
  }
  return out;
}

}  // namespace batchsym::sim

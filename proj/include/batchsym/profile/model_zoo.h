#pragma once

#include <string>
#include <vector>

#include "batchsym/profile/latency_profile.h"

namespace batchsym {

// One row of a model-zoo file: `name,alpha_ms,beta_ms,slo_ms`.
struct ZooEntry {
  std::string name;
  Duration alpha;
  Duration beta;
  Duration slo;
};

std::vector<ZooEntry> LoadModelZoo(const std::string& path);
std::vector<ZooEntry> ParseModelZoo(std::istream& in, const std::string& source);

// Throws std::out_of_range if `name` is not present.
const ZooEntry& FindZooEntry(const std::vector<ZooEntry>& zoo,
                             const std::string& name);

// Largest batch a linear profile could ever run within `slo`; at least 1.
// Zero-alpha profiles are capped at kMaxBatchCap.
inline constexpr uint32_t kMaxBatchCap = 4096;
uint32_t DefaultMaxBatch(Duration alpha, Duration beta, Duration slo);

// Builds a ModelSpec with a linear profile. max_batch == 0 picks
// DefaultMaxBatch. Validates l(1) < slo.
ModelSpec MakeLinearModel(ModelId id, std::string name, Duration alpha,
                          Duration beta, Duration slo, uint32_t max_batch = 0);

}  // namespace batchsym

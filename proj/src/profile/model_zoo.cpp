#include "batchsym/profile/model_zoo.h"

#include <fstream>
#include <stdexcept>

#include "batchsym/profile/csv.h"

namespace batchsym {

std::vector<ZooEntry> ParseModelZoo(std::istream& in,
                                    const std::string& source) {
  CsvReader reader(in, source, {"name", "alpha_ms", "beta_ms", "slo_ms"});
  std::vector<ZooEntry> zoo;
  std::vector<std::string> f;
  while (reader.Next(&f)) {
    ZooEntry e;
    e.name = f[0];
    if (e.name.empty()) reader.Fail("empty model name");
    e.alpha = FromMillis(reader.ParseDouble(f[1], "alpha_ms"));
    e.beta = FromMillis(reader.ParseDouble(f[2], "beta_ms"));
    e.slo = FromMillis(reader.ParseDouble(f[3], "slo_ms"));
    if (e.alpha < Duration::zero() || e.beta <= Duration::zero()) {
      reader.Fail("need alpha_ms >= 0 and beta_ms > 0");
    }
    if (e.slo <= e.alpha + e.beta) {
      reader.Fail("slo_ms must exceed the batch-size-1 latency");
    }
    for (const auto& other : zoo) {
      if (other.name == e.name) reader.Fail("duplicate model " + e.name);
    }
    zoo.push_back(e);
  }
  return zoo;
}

std::vector<ZooEntry> LoadModelZoo(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError(path, 0, "cannot open file");
  return ParseModelZoo(in, path);
}

const ZooEntry& FindZooEntry(const std::vector<ZooEntry>& zoo,
                             const std::string& name) {
  for (const auto& e : zoo) {
    if (e.name == name) return e;
  }
  throw std::out_of_range("model '" + name + "' not found in zoo");
}

uint32_t DefaultMaxBatch(Duration alpha, Duration beta, Duration slo) {
  if (alpha <= Duration::zero()) return kMaxBatchCap;
  const auto room = (slo - beta).count();
  if (room < alpha.count()) return 1;
  const auto b = room / alpha.count();
  return static_cast<uint32_t>(std::min<int64_t>(b, kMaxBatchCap));
}

ModelSpec MakeLinearModel(ModelId id, std::string name, Duration alpha,
                          Duration beta, Duration slo, uint32_t max_batch) {
  if (max_batch == 0) max_batch = DefaultMaxBatch(alpha, beta, slo);
  ModelSpec spec{id, std::move(name),
                 LatencyProfile::Linear(alpha, beta, max_batch), slo};
  ValidateModelSpec(spec);
  return spec;
}

}  // namespace batchsym

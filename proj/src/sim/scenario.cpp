#include "batchsym/sim/scenario.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "batchsym/profile/model_zoo.h"
#include "json.hpp"

#ifndef BATCHSYM_DATA_DIR
#define BATCHSYM_DATA_DIR "data"
#endif
#ifndef BATCHSYM_SCENARIO_DIR
#define BATCHSYM_SCENARIO_DIR "scenarios"
#endif

namespace batchsym::sim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string JoinIssues(const std::vector<std::string>& issues) {
  std::string s = "invalid scenario:";
  for (const auto& i : issues) s += "\n  - " + i;
  return s;
}

// Collects issues instead of stopping at the first one.
class Parser {
 public:
  Parser(std::string base_dir) : base_dir_(std::move(base_dir)) {}

  std::vector<std::string> issues;

  template <typename T>
  std::optional<T> Get(const json& obj, const char* key, const std::string& ctx,
                       bool required) {
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) issues.push_back(ctx + "." + key + ": missing");
      return std::nullopt;
    }
    try {
      return obj.at(key).get<T>();
    } catch (const json::exception&) {
      issues.push_back(ctx + "." + key + ": wrong type");
      return std::nullopt;
    }
  }

  std::string Resolve(const std::string& p) const {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base_dir_) / p).string();
  }

  std::string ResolveZoo(const std::string& z) const {
    return ResolveZooPath(z, base_dir_);
  }

  void ParseModels(const json& arr, Scenario* s);
  void ParsePolicy(const json& obj, const std::string& ctx, PolicySpec* p);
  void ParseWorkload(const json& obj, Scenario* s);
  void ParseNetwork(const json& obj, Scenario* s);

 private:
  void AddModel(Scenario* s, const std::string& name, Duration alpha,
                Duration beta, Duration slo, uint32_t max_batch,
                uint32_t replicas, const std::string& ctx);

  std::string base_dir_;
};

void Parser::AddModel(Scenario* s, const std::string& name, Duration alpha,
                      Duration beta, Duration slo, uint32_t max_batch,
                      uint32_t replicas, const std::string& ctx) {
  for (uint32_t r = 0; r < replicas; ++r) {
    const std::string n =
        replicas == 1 ? name : name + "-" + std::to_string(r);
    try {
      s->models.push_back(MakeLinearModel(
          static_cast<ModelId>(s->models.size()), n, alpha, beta, slo,
          max_batch));
    } catch (const std::exception& e) {
      issues.push_back(ctx + ": " + e.what());
      return;
    }
  }
}

void Parser::ParseModels(const json& arr, Scenario* s) {
  if (!arr.is_array() || arr.empty()) {
    issues.push_back("models: must be a non-empty array");
    return;
  }
  for (size_t i = 0; i < arr.size(); ++i) {
    const json& m = arr[i];
    const std::string ctx = "models[" + std::to_string(i) + "]";
    const uint32_t replicas = Get<uint32_t>(m, "replicas", ctx, false).value_or(1);
    const uint32_t max_batch =
        Get<uint32_t>(m, "max_batch", ctx, false).value_or(0);
    if (replicas == 0) issues.push_back(ctx + ".replicas: must be >= 1");

    if (m.contains("zoo")) {
      auto zoo_name = Get<std::string>(m, "zoo", ctx, true);
      if (!zoo_name) continue;
      std::vector<ZooEntry> zoo;
      try {
        zoo = LoadModelZoo(ResolveZoo(*zoo_name));
      } catch (const std::exception& e) {
        issues.push_back(ctx + ".zoo: " + e.what());
        continue;
      }
      auto slo = Get<double>(m, "slo_ms", ctx, false);
      auto pick = Get<std::string>(m, "name", ctx, false);
      for (const auto& e : zoo) {
        if (pick && e.name != *pick) continue;
        AddModel(s, e.name, e.alpha, e.beta, slo ? FromMillis(*slo) : e.slo,
                 max_batch, replicas, ctx);
      }
      if (pick) {
        bool found = false;
        for (const auto& e : zoo) found |= e.name == *pick;
        if (!found) issues.push_back(ctx + ": model '" + *pick + "' not in zoo");
      }
      continue;
    }

    auto name = Get<std::string>(m, "name", ctx, true);
    auto slo = Get<double>(m, "slo_ms", ctx, true);
    if (!name || !slo) continue;
    if (m.contains("latency_ms")) {
      auto lat = Get<std::vector<double>>(m, "latency_ms", ctx, true);
      if (!lat) continue;
      if (lat->empty()) {
        issues.push_back(ctx + ".latency_ms: empty");
        continue;
      }
      std::map<uint32_t, Duration> points;
      for (size_t b = 0; b < lat->size(); ++b) {
        points[static_cast<uint32_t>(b + 1)] = FromMillis((*lat)[b]);
      }
      for (uint32_t r = 0; r < replicas; ++r) {
        const std::string n =
            replicas == 1 ? *name : *name + "-" + std::to_string(r);
        try {
          ModelSpec spec{static_cast<ModelId>(s->models.size()), n,
                         LatencyProfile::Table(
                             points, max_batch ? max_batch
                                               : static_cast<uint32_t>(
                                                     lat->size())),
                         FromMillis(*slo)};
          ValidateModelSpec(spec);
          s->models.push_back(std::move(spec));
        } catch (const std::exception& e) {
          issues.push_back(ctx + ": " + e.what());
          break;
        }
      }
      continue;
    }
    auto alpha = Get<double>(m, "alpha_ms", ctx, true);
    auto beta = Get<double>(m, "beta_ms", ctx, true);
    if (!alpha || !beta) continue;
    AddModel(s, *name, FromMillis(*alpha), FromMillis(*beta), FromMillis(*slo),
             max_batch, replicas, ctx);
  }
}

void Parser::ParsePolicy(const json& obj, const std::string& ctx,
                         PolicySpec* out) {
  if (!obj.is_object()) {
    issues.push_back(ctx + ": must be an object");
    return;
  }
  PolicySpec& p = *out;
  if (auto kind = Get<std::string>(obj, "kind", ctx, true)) {
    auto parsed = sched::ParsePolicyKind(*kind);
    if (!parsed) {
      issues.push_back(ctx + ".kind: unknown policy '" + *kind + "'");
    } else {
      p.kind = *parsed;
    }
  }
  if (auto t = Get<double>(obj, "timeout_ms", ctx, false)) {
    p.timeout = FromMillis(*t);
  }
  p.timeout_slo_fraction = Get<double>(obj, "timeout_slo_fraction", ctx, false);
  if (auto c = Get<double>(obj, "d_ctrl_us", ctx, false)) {
    p.d_ctrl = FromMicros(*c);
  }
  if (auto d = Get<double>(obj, "d_data_us_per_req", ctx, false)) {
    p.d_data_per_request = FromMicros(*d);
  }
  if (auto g = Get<std::string>(obj, "gathering", ctx, false)) {
    if (*g == "sliding") {
      p.gathering = sched::GatheringKind::kSlidingPrefix;
    } else if (*g == "drop_head") {
      p.gathering = sched::GatheringKind::kDropHead;
    } else {
      issues.push_back(ctx + ".gathering: unknown '" + *g + "'");
    }
  }
  p.target_batch = Get<uint32_t>(obj, "target_batch", ctx, false).value_or(0);
}

void Parser::ParseWorkload(const json& obj, Scenario* s) {
  if (!obj.is_object()) {
    issues.push_back("workload: must be an object");
    return;
  }
  ArrivalSpec& a = s->workload.arrival;
  if (!obj.contains("arrival")) {
    issues.push_back("workload.arrival: missing");
  } else {
    const json& arr = obj["arrival"];
    const std::string ctx = "workload.arrival";
    auto kind = Get<std::string>(arr, "kind", ctx, true).value_or("");
    if (kind == "poisson") {
      a.kind = ArrivalSpec::Kind::kPoisson;
    } else if (kind == "gamma") {
      a.kind = ArrivalSpec::Kind::kGamma;
      a.shape = Get<double>(arr, "shape", ctx, true).value_or(0);
    } else if (kind == "uniform") {
      a.kind = ArrivalSpec::Kind::kUniform;
      a.skip = Get<std::vector<uint64_t>>(arr, "skip", ctx, false).value_or(
          std::vector<uint64_t>{});
    } else if (kind == "piecewise") {
      a.kind = ArrivalSpec::Kind::kPiecewise;
      auto segs = Get<std::vector<std::pair<double, double>>>(arr, "segments",
                                                              ctx, true);
      if (segs) {
        for (auto [start_s, rate] : *segs) {
          a.segments.emplace_back(FromSeconds(start_s), rate);
        }
      }
    } else if (kind == "replay") {
      a.kind = ArrivalSpec::Kind::kReplay;
      a.trace_path = Resolve(Get<std::string>(arr, "trace", ctx, true).value_or(""));
    } else if (!kind.empty()) {
      issues.push_back(ctx + ".kind: unknown arrival process '" + kind + "'");
    }
    if (a.kind == ArrivalSpec::Kind::kUniform && arr.contains("gap_ms")) {
      auto gap = Get<double>(arr, "gap_ms", ctx, true);
      if (gap && *gap > 0) a.rate = 1000.0 / *gap;
      if (gap && *gap <= 0) issues.push_back(ctx + ".gap_ms: must be > 0");
    } else if (a.kind != ArrivalSpec::Kind::kReplay &&
               a.kind != ArrivalSpec::Kind::kPiecewise) {
      a.rate = Get<double>(arr, "rate_rps", ctx, true).value_or(0);
    }
  }
  if (obj.contains("popularity")) {
    const json& pop = obj["popularity"];
    const std::string ctx = "workload.popularity";
    PopularitySpec& p = s->workload.popularity;
    auto kind = Get<std::string>(pop, "kind", ctx, true).value_or("");
    if (kind == "uniform") {
      p.kind = PopularitySpec::Kind::kUniform;
    } else if (kind == "zipf") {
      p.kind = PopularitySpec::Kind::kZipf;
      p.shape = Get<double>(pop, "shape", ctx, true).value_or(0);
    } else if (kind == "weights") {
      p.kind = PopularitySpec::Kind::kWeights;
      p.weights = Get<std::vector<double>>(pop, "weights", ctx, true)
                      .value_or(std::vector<double>{});
    } else if (!kind.empty()) {
      issues.push_back(ctx + ".kind: unknown popularity '" + kind + "'");
    }
  }
}

void Parser::ParseNetwork(const json& obj, Scenario* s) {
  const std::string ctx = "network";
  NetworkSpec& n = s->network;
  auto kind = Get<std::string>(obj, "kind", ctx, true).value_or("");
  if (kind == "constant") {
    n.kind = NetworkSpec::Kind::kConstant;
    n.constant = FromMicros(Get<double>(obj, "value_us", ctx, false).value_or(0));
  } else if (kind == "histogram") {
    n.kind = NetworkSpec::Kind::kHistogram;
    auto bins = Get<std::vector<std::vector<double>>>(obj, "bins", ctx, true);
    if (bins) {
      for (const auto& b : *bins) {
        if (b.size() != 3) {
          issues.push_back("network.bins: each bin is [lo_us, hi_us, weight]");
          break;
        }
        n.bins.push_back({FromMicros(b[0]), FromMicros(b[1]), b[2]});
      }
    }
    n.planning_percentile =
        Get<double>(obj, "planning_percentile", ctx, false).value_or(99.99);
  } else if (!kind.empty()) {
    issues.push_back("network.kind: unknown '" + kind + "'");
  }
}

void ValidatePolicy(const PolicySpec& p, const std::string& ctx,
                    std::vector<std::string>* issues) {
  if (p.kind == sched::PolicyKind::kTimeout) {
    if (p.timeout.has_value() == p.timeout_slo_fraction.has_value()) {
      issues->push_back(ctx +
                        ": timeout needs exactly one of timeout_ms, "
                        "timeout_slo_fraction");
    }
    if (p.timeout && *p.timeout < Duration::zero()) {
      issues->push_back(ctx + ".timeout_ms: must be >= 0");
    }
    if (p.timeout_slo_fraction && *p.timeout_slo_fraction < 0) {
      issues->push_back(ctx + ".timeout_slo_fraction: must be >= 0");
    }
  }
  if (p.d_ctrl && *p.d_ctrl < Duration::zero()) {
    issues->push_back(ctx + ".d_ctrl_us: must be >= 0");
  }
  if (p.d_data_per_request < Duration::zero()) {
    issues->push_back(ctx + ".d_data_us_per_req: must be >= 0");
  }
  if (p.gathering == sched::GatheringKind::kDropHead && p.target_batch == 0) {
    issues->push_back(ctx + ".target_batch: required for drop_head gathering");
  }
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> issues)
    : std::runtime_error(JoinIssues(issues)), issues_(std::move(issues)) {}

std::string BundledDataDir() { return BATCHSYM_DATA_DIR; }
std::string BundledScenarioDir() { return BATCHSYM_SCENARIO_DIR; }

std::string ResolveZooPath(const std::string& z, const std::string& base_dir) {
  if (z == "1080ti") return BundledDataDir() + "/zoo_1080ti.csv";
  if (z == "a100") return BundledDataDir() + "/zoo_a100.csv";
  if (z == "table2") return BundledDataDir() + "/table2.csv";
  if (base_dir.empty() || fs::path(z).is_absolute()) return z;
  return (fs::path(base_dir) / z).string();
}

std::string ResolveScenarioPath(const std::string& name_or_path) {
  if (fs::is_regular_file(name_or_path)) return name_or_path;
  const fs::path bundled =
      fs::path(BundledScenarioDir()) / (name_or_path + ".json");
  if (fs::is_regular_file(bundled)) return bundled.string();
  throw ScenarioError({"scenario '" + name_or_path +
                       "' is neither a file nor a bundled scenario"});
}

std::vector<std::string> ValidateScenario(const Scenario& s) {
  std::vector<std::string> issues;
  if (s.models.empty()) issues.push_back("models: at least one model required");
  std::set<std::string> names;
  for (const auto& m : s.models) {
    if (!names.insert(m.name).second) {
      issues.push_back("models: duplicate name '" + m.name + "'");
    }
    if (m.slo <= m.profile.ExecLatency(1)) {
      issues.push_back("models: '" + m.name +
                       "' SLO does not admit batch size 1");
    }
  }
  if (s.gpus < 1) issues.push_back("gpus: must be >= 1");
  if (s.duration <= s.warmup + s.cooldown) {
    issues.push_back("duration_s: must exceed warmup_s + cooldown_s");
  }
  if (s.warmup < Duration::zero() || s.cooldown < Duration::zero()) {
    issues.push_back("warmup_s/cooldown_s: must be non-negative");
  }
  ValidatePolicy(s.policy, "policy", &issues);
  if (s.initial_policy) {
    ValidatePolicy(*s.initial_policy, "initial_policy", &issues);
    if (s.policy_switch_at < Duration::zero()) {
      issues.push_back("initial_policy.until_ms: must be >= 0");
    }
  }
  const auto& a = s.workload.arrival;
  switch (a.kind) {
    case ArrivalSpec::Kind::kPoisson:
    case ArrivalSpec::Kind::kUniform:
      if (!(a.rate > 0)) issues.push_back("workload.arrival: rate must be > 0");
      break;
    case ArrivalSpec::Kind::kGamma:
      if (!(a.rate > 0)) issues.push_back("workload.arrival: rate must be > 0");
      if (!(a.shape > 0)) {
        issues.push_back("workload.arrival.shape: must be > 0");
      }
      break;
    case ArrivalSpec::Kind::kPiecewise:
      if (a.segments.empty()) {
        issues.push_back("workload.arrival.segments: empty");
      }
      for (const auto& [start, rate] : a.segments) {
        if (rate < 0) issues.push_back("workload.arrival.segments: rate < 0");
      }
      break;
    case ArrivalSpec::Kind::kReplay:
      if (!fs::is_regular_file(a.trace_path)) {
        issues.push_back("workload.arrival.trace: cannot open '" +
                         a.trace_path + "'");
      }
      break;
  }
  const auto& pop = s.workload.popularity;
  if (pop.kind == PopularitySpec::Kind::kZipf && !(pop.shape > 0)) {
    issues.push_back("workload.popularity.shape: must be > 0");
  }
  if (pop.kind == PopularitySpec::Kind::kWeights) {
    if (pop.weights.size() != s.models.size()) {
      issues.push_back("workload.popularity.weights: one weight per model");
    }
    double total = 0;
    for (double w : pop.weights) {
      if (w < 0) issues.push_back("workload.popularity.weights: negative");
      total += w;
    }
    if (!(total > 0)) issues.push_back("workload.popularity.weights: no mass");
  }
  if (s.network.kind == NetworkSpec::Kind::kHistogram) {
    if (s.network.bins.empty()) issues.push_back("network.bins: empty");
    for (const auto& b : s.network.bins) {
      if (b.lo < Duration::zero() || b.hi < b.lo || b.weight < 0) {
        issues.push_back("network.bins: bins must be non-negative and ordered");
        break;
      }
    }
  } else if (s.network.constant < Duration::zero()) {
    issues.push_back("network.value_us: must be >= 0");
  }
  return issues;
}

Scenario ParseScenario(const std::string& json_text, const std::string& base_dir,
                       std::optional<uint64_t> seed_override) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ScenarioError({std::string("not valid JSON: ") + e.what()});
  }
  if (!doc.is_object()) throw ScenarioError({"top level must be an object"});

  Parser p(base_dir);
  Scenario s;
  s.name = p.Get<std::string>(doc, "name", "scenario", false).value_or("");
  if (doc.contains("models")) {
    p.ParseModels(doc["models"], &s);
  } else {
    p.issues.push_back("models: missing");
  }
  s.gpus = p.Get<uint32_t>(doc, "gpus", "scenario", true).value_or(0);
  if (doc.contains("policy")) {
    p.ParsePolicy(doc["policy"], "policy", &s.policy);
  } else {
    p.issues.push_back("policy: missing");
  }
  if (doc.contains("initial_policy")) {
    s.initial_policy.emplace();
    p.ParsePolicy(doc["initial_policy"], "initial_policy", &*s.initial_policy);
    s.policy_switch_at = FromMillis(
        p.Get<double>(doc["initial_policy"], "until_ms", "initial_policy", true)
            .value_or(0));
  }
  if (doc.contains("workload")) {
    p.ParseWorkload(doc["workload"], &s);
  } else {
    p.issues.push_back("workload: missing");
  }
  if (doc.contains("network")) p.ParseNetwork(doc["network"], &s);

  const double duration_s =
      p.Get<double>(doc, "duration_s", "scenario", true).value_or(0);
  s.duration = FromSeconds(duration_s);
  s.warmup = FromSeconds(
      p.Get<double>(doc, "warmup_s", "scenario", false).value_or(duration_s * 0.1));
  s.cooldown = FromSeconds(p.Get<double>(doc, "cooldown_s", "scenario", false)
                               .value_or(duration_s * 0.1));
  s.record_trace =
      p.Get<bool>(doc, "record_trace", "scenario", false).value_or(true);
  if (auto order = p.Get<std::string>(doc, "tie_order", "scenario", false)) {
    if (*order == "arrivals_first") {
      s.arrivals_first = true;
    } else if (*order != "timers_first") {
      p.issues.push_back("tie_order: expected timers_first or arrivals_first");
    }
  }
  if (seed_override) {
    s.seed = *seed_override;
  } else if (auto seed = p.Get<uint64_t>(doc, "seed", "scenario", true)) {
    s.seed = *seed;
  }

  // Range checks run even after parse issues; fields that already failed to
  // parse are not reported twice.
  auto field = [](std::string issue) {
    if (issue.rfind("scenario.", 0) == 0) issue.erase(0, 9);
    return issue.substr(0, issue.find_first_of(".:["));
  };
  std::set<std::string> failed;
  for (const auto& i : p.issues) failed.insert(field(i));
  for (auto& i : ValidateScenario(s)) {
    if (!failed.count(field(i))) p.issues.push_back(std::move(i));
  }
  if (!p.issues.empty()) throw ScenarioError(p.issues);
  return s;
}

Scenario LoadScenario(const std::string& path,
                      std::optional<uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ScenarioError({"cannot open scenario file '" + path + "'"});
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseScenario(buf.str(), fs::path(path).parent_path().string(),
                       seed_override);
}

sched::NetworkBudget PlanningBudget(const Scenario& s) {
  sched::NetworkBudget budget;
  if (s.policy.d_ctrl) {
    budget.ctrl = *s.policy.d_ctrl;
  } else {
    budget.ctrl = NetworkModel(s.network, s.seed).PlanningBound();
  }
  budget.data_per_request = s.policy.d_data_per_request;
  return budget;
}

std::vector<sched::PolicyConfig> ResolvePolicies(const Scenario& s) {
  return ResolvePolicies(s, s.initial_policy ? *s.initial_policy : s.policy);
}

std::vector<sched::PolicyConfig> ResolvePolicies(const Scenario& s,
                                                 const PolicySpec& policy) {
  const sched::NetworkBudget budget = PlanningBudget(s);
  std::vector<sched::PolicyConfig> out;
  out.reserve(s.models.size());
  for (const auto& m : s.models) {
    sched::PolicyConfig c;
    c.kind = policy.kind;
    c.network = budget;
    c.gathering = policy.gathering;
    c.target_batch = policy.target_batch;
    if (c.kind == sched::PolicyKind::kTimeout) {
      if (policy.timeout) {
        c.timeout = *policy.timeout;
      } else if (policy.timeout_slo_fraction) {
        c.timeout = Duration(static_cast<int64_t>(std::llround(
            m.slo.count() * *policy.timeout_slo_fraction)));
      }
    }
    out.push_back(c);
  }
  return out;
}

double AggregateRate(const Scenario& s) {
  const auto& a = s.workload.arrival;
  if (a.kind == ArrivalSpec::Kind::kPiecewise) {
    double peak = 0;
    for (const auto& seg : a.segments) peak = std::max(peak, seg.second);
    return peak;
  }
  return a.rate;
}

Scenario WithRate(const Scenario& s, double rate) {
  Scenario out = s;
  auto& a = out.workload.arrival;
  if (a.kind == ArrivalSpec::Kind::kReplay) {
    throw std::invalid_argument("cannot re-rate a replay workload");
  }
  if (a.kind == ArrivalSpec::Kind::kPiecewise) {
    const double peak = AggregateRate(s);
    for (auto& seg : a.segments) {
      seg.second = peak > 0 ? seg.second * rate / peak : rate;
    }
  } else {
    a.rate = rate;
  }
  return out;
}

}  // namespace batchsym::sim

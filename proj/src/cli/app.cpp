#include "batchsym/cli/app.h"

#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "batchsym/cli/experiments.h"
#include "batchsym/metrics/analytic.h"
#include "batchsym/metrics/goodput.h"
#include "batchsym/metrics/scale_bench.h"
#include "batchsym/metrics/stats_io.h"
#include "batchsym/partition/partition.h"
#include "batchsym/profile/csv.h"
#include "batchsym/profile/model_zoo.h"
#include "batchsym/sim/result_io.h"

namespace batchsym::cli {

namespace {

// Usage and validation problems; mapped to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioFlags {
  std::string scenario;
  std::string policy;
  std::optional<double> timeout_ms;
  std::optional<double> timeout_fraction;
  std::optional<uint64_t> seed;

  void Attach(CLI::App* cmd) {
    cmd->add_option("--scenario", scenario,
                    "scenario file or bundled scenario name")
        ->required();
    cmd->add_option("--policy", policy, "override: deferred, eager, timeout");
    cmd->add_option("--timeout-ms", timeout_ms, "timeout policy: absolute k");
    cmd->add_option("--timeout-slo-fraction", timeout_fraction,
                    "timeout policy: k as a fraction of each SLO");
    cmd->add_option("--seed", seed, "override the scenario seed");
  }

  sim::Scenario Load() const {
    sim::Scenario s = sim::LoadScenario(sim::ResolveScenarioPath(scenario), seed);
    if (!policy.empty()) {
      auto kind = sched::ParsePolicyKind(policy);
      if (!kind) throw UsageError("unknown policy '" + policy + "'");
      s = WithPolicy(s, *kind);
    }
    if (timeout_ms || timeout_fraction) {
      if (s.policy.kind != sched::PolicyKind::kTimeout) {
        throw UsageError("timeout flags need the timeout policy");
      }
      s.policy.timeout.reset();
      s.policy.timeout_slo_fraction.reset();
      if (timeout_ms) s.policy.timeout = FromMillis(*timeout_ms);
      if (timeout_fraction) s.policy.timeout_slo_fraction = *timeout_fraction;
    }
    auto issues = sim::ValidateScenario(s);
    if (!issues.empty()) throw sim::ScenarioError(std::move(issues));
    return s;
  }
};

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  for (auto& f : SplitFields(s)) {
    if (!f.empty()) out.push_back(f);
  }
  return out;
}

std::vector<double> ParseGrid(const std::string& s) {
  std::vector<double> out;
  for (const auto& f : SplitList(s)) {
    char* end = nullptr;
    const double v = std::strtod(f.c_str(), &end);
    if (end != f.c_str() + f.size()) throw UsageError("bad grid value '" + f + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("empty grid");
  return out;
}

std::vector<uint32_t> ParseCounts(const std::string& s) {
  std::vector<uint32_t> out;
  for (double v : ParseGrid(s)) {
    if (v < 0 || v != static_cast<uint32_t>(v)) {
      throw UsageError("counts must be non-negative integers");
    }
    out.push_back(static_cast<uint32_t>(v));
  }
  return out;
}

void CheckOutputParent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw UsageError("output directory '" + parent.string() + "' does not exist");
  }
}

int Simulate(const ScenarioFlags& f, const std::string& out_dir,
             std::ostream& out) {
  CheckOutputParent(out_dir);
  const sim::Scenario s = f.Load();
  const sim::RunResult r = sim::RunScenario(s);
  const metrics::RunStats st = metrics::ComputeStats(r);
  metrics::WriteRunOutputs(out_dir, r, st, sched::PolicyName(s.policy.kind));
  out << std::fixed << std::setprecision(3) << s.name << ": "
      << st.arrivals << " measured requests, goodput " << st.goodput
      << " r/s, bad rate " << st.bad_rate << ", idle "
      << st.mean_idle_fraction << ", median batch " << st.median_batch
      << "\n";
  return kExitOk;
}

int Trace(const ScenarioFlags& f, const std::string& path, std::ostream& out) {
  CheckOutputParent(path);
  sim::Scenario s = f.Load();
  s.record_trace = true;
  const sim::RunResult r = sim::RunScenario(s);
  sim::WriteFileAtomic(path, sim::TraceCsv(r));
  out << r.trace.size() << " trace events written to " << path << "\n";
  return kExitOk;
}

int Goodput(const ScenarioFlags& f, std::optional<double> p99_ms,
            const metrics::GoodputOptions& base, const std::string& path,
            std::ostream& out) {
  if (!path.empty()) CheckOutputParent(path);
  const sim::Scenario s = f.Load();
  metrics::GoodputOptions o = base;
  if (p99_ms) o.latency_bound = FromMillis(*p99_ms);
  const metrics::GoodputResult g = metrics::GoodputSearch(s, o);
  if (!path.empty()) {
    std::ostringstream csv;
    csv.precision(10);
    csv << "rate_rps,feasible,goodput_rps,bad_rate,idle_fraction,median_batch\n";
    for (const auto& p : g.probes) {
      csv << p.rate << ',' << (p.feasible ? 1 : 0) << ',' << p.goodput << ','
          << p.bad_rate << ',' << p.idle_fraction << ',' << p.median_batch
          << '\n';
    }
    sim::WriteFileAtomic(path, csv.str());
  }
  out << std::fixed << std::setprecision(1) << s.name << " ("
      << sched::PolicyName(s.policy.kind) << "): goodput " << g.rate
      << " r/s after " << g.probes.size() << " probes";
  if (!g.diagnostics.empty()) out << " [" << g.diagnostics << "]";
  out << "\n";
  return kExitOk;
}

int Analytic(const std::string& model, const std::string& zoo,
             std::optional<double> slo_ms, uint32_t gpus,
             const std::string& path, std::ostream& out) {
  if (!path.empty()) CheckOutputParent(path);
  if (gpus == 0) throw UsageError("--gpus must be positive");
  const auto entries = LoadModelZoo(sim::ResolveZooPath(zoo));
  const ZooEntry* e = nullptr;
  for (const auto& z : entries) {
    if (z.name == model) e = &z;
  }
  if (!e) throw UsageError("model '" + model + "' not in zoo '" + zoo + "'");
  const Duration slo = slo_ms ? FromMillis(*slo_ms) : e->slo;
  const ModelSpec spec = MakeLinearModel(0, e->name, e->alpha, e->beta, slo);
  std::ostringstream csv;
  csv << "model,slo_ms,gpus,mode,batch_size,throughput_rps\n";
  out << std::fixed << std::setprecision(1);
  for (auto mode : {metrics::CoordinationMode::kNoCoordination,
                    metrics::CoordinationMode::kStaggered}) {
    const auto sol = metrics::AnalyticalSolution(spec.profile, slo, gpus, mode);
    out << metrics::CoordinationModeName(mode) << ": ";
    if (sol.feasible) {
      out << "b=" << sol.batch << ", " << sol.throughput << " r/s\n";
    } else {
      out << "infeasible\n";
    }
    csv << e->name << ',' << ToMillis(slo) << ',' << gpus << ','
        << metrics::CoordinationModeName(mode) << ',' << sol.batch << ','
        << std::fixed << std::setprecision(3) << sol.throughput << '\n';
  }
  if (!path.empty()) sim::WriteFileAtomic(path, csv.str());
  return kExitOk;
}

int Partition(const std::string& problem_path, double budget_s, uint64_t seed,
              const std::string& baseline, const std::string& path,
              std::ostream& out) {
  if (!path.empty()) CheckOutputParent(path);
  if (!(budget_s > 0)) throw UsageError("--budget must be positive");
  if (!baseline.empty() && baseline != "random") {
    throw UsageError("unknown baseline '" + baseline + "'");
  }
  const partition::Problem p = partition::LoadProblem(problem_path);
  partition::SolveOptions o;
  o.seed = seed;
  o.time_budget = std::chrono::milliseconds(std::llround(budget_s * 1000));
  const partition::SolveResult r = baseline == "random"
                                       ? partition::RandomSolve(p, o)
                                       : partition::Solve(p, o);
  if (!path.empty()) {
    sim::WriteFileAtomic(path, partition::AssignmentCsv(p, r.assignment));
  }
  const auto& e = r.evaluation;
  out << std::setprecision(6) << "objective " << e.objective << " (delta_rate "
      << e.delta_rate << ", delta_mem " << e.delta_mem << ")";
  if (p.subclusters > 1) {
    const auto imb = partition::ImbalanceFactor(p, r.assignment);
    out << ", imbalance rate " << imb.rate << " mem " << imb.mem;
  }
  out << ", " << r.restarts << (baseline == "random" ? " samples" : " restarts")
      << "\n";
  if (!e.feasible()) {
    out << "infeasible, score " << e.infeasibility << ":\n";
    for (const auto& v : e.violations) out << "  " << v << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int ScaleBench(const std::string& workers, const std::string& gpus,
               double duration_ms, uint32_t models, const std::string& path,
               std::ostream& out) {
  if (!path.empty()) CheckOutputParent(path);
  std::ostringstream csv;
  csv << "workers,gpus,seconds,decisions,dropped,batches,decisions_per_sec,"
         "ns_per_decision\n";
  out << std::fixed << std::setprecision(1);
  for (uint32_t w : ParseCounts(workers)) {
    for (uint32_t g : ParseCounts(gpus)) {
      metrics::ScaleBenchConfig c;
      c.workers = w;
      c.gpus = g;
      c.models = models;
      c.duration = std::chrono::microseconds(std::llround(duration_ms * 1000));
      const auto r = metrics::RunScaleBench(c);
      csv << w << ',' << g << ',' << r.seconds << ',' << r.decisions << ','
          << r.dropped << ',' << r.batches << ',' << r.decisions_per_sec << ','
          << r.ns_per_decision << '\n';
      out << "workers " << w << ", gpus " << g << ": " << r.decisions_per_sec
          << " decisions/s, " << r.ns_per_decision << " ns/decision\n";
    }
  }
  if (!path.empty()) sim::WriteFileAtomic(path, csv.str());
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Deadline-aware batch scheduling simulator", "batchsym"};
  app.require_subcommand(1, 1);

  ScenarioFlags sim_flags;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "run one scenario");
  sim_flags.Attach(simulate);
  simulate->add_option("--out", sim_out, "output directory")->required();

  ScenarioFlags trace_flags;
  std::string trace_out;
  auto* trace = app.add_subcommand("trace", "write the execution trace CSV");
  trace_flags.Attach(trace);
  trace->add_option("--out", trace_out, "trace CSV path")->required();

  ScenarioFlags gp_flags;
  std::optional<double> p99_ms;
  std::string gp_out;
  metrics::GoodputOptions gp_opts;
  auto* goodput = app.add_subcommand("goodput", "binary-search the goodput");
  gp_flags.Attach(goodput);
  goodput->add_option("--p99", p99_ms,
                      "p99 bound in ms for every model (default: its SLO)");
  goodput->add_option("--tolerance", gp_opts.tolerance, "relative tolerance");
  goodput->add_option("--max-iterations", gp_opts.max_iterations);
  goodput->add_option("--out", gp_out, "probe CSV path");

  ScenarioFlags sw_flags;
  std::string dimension;
  std::string grid;
  std::string policies = "deferred,eager";
  std::string sw_out;
  SweepOptions sw_opts;
  auto* sweep = app.add_subcommand("sweep", "goodput over a parameter grid");
  sw_flags.Attach(sweep);
  sweep->add_option("--dimension", dimension,
                    "beta_ratio, timeout, offered_load or slo")
      ->required();
  sweep->add_option("--grid", grid, "comma-separated values")->required();
  sweep->add_option("--policies", policies, "comma-separated policies");
  sweep->add_option("--slo-ref-batch", sw_opts.slo_ref_batch,
                    "beta_ratio: SLO = 2 l(b)");
  sweep->add_option("--capacity", sw_opts.capacity,
                    "offered_load: capacity in r/s (default: measured)");
  sweep->add_option("--out", sw_out, "sweep CSV path")->required();

  std::string model;
  std::string zoo;
  std::optional<double> an_slo;
  uint32_t an_gpus = 0;
  std::string an_out;
  auto* analytic = app.add_subcommand("analytic", "closed-form batch sizes");
  analytic->add_option("--model", model)->required();
  analytic->add_option("--zoo", zoo, "zoo file or 1080ti, a100, table2")
      ->required();
  analytic->add_option("--slo", an_slo, "SLO in ms (default: zoo value)");
  analytic->add_option("--gpus", an_gpus)->required();
  analytic->add_option("--out", an_out, "CSV path");

  std::string problem;
  double budget = 0;
  uint64_t part_seed = 0;
  std::string baseline;
  std::string part_out;
  auto* part = app.add_subcommand("partition", "sub-cluster partitioning");
  part->add_option("--problem", problem)->required();
  part->add_option("--budget", budget, "time budget in seconds")->required();
  part->add_option("--seed", part_seed)->required();
  part->add_option("--baseline", baseline, "random");
  part->add_option("--out", part_out, "assignment CSV path");

  std::string sb_workers = "1,8";
  std::string sb_gpus = "64,4096";
  double sb_ms = 500;
  uint32_t sb_models = 16;
  std::string sb_out;
  auto* bench = app.add_subcommand("scale-bench", "wall-clock scheduler bench");
  bench->add_option("--workers", sb_workers, "comma-separated worker counts");
  bench->add_option("--gpus", sb_gpus, "comma-separated GPU counts");
  bench->add_option("--duration-ms", sb_ms);
  bench->add_option("--models", sb_models);
  bench->add_option("--out", sb_out, "CSV path");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*simulate) return Simulate(sim_flags, sim_out, out);
    if (*trace) return Trace(trace_flags, trace_out, out);
    if (*goodput) return Goodput(gp_flags, p99_ms, gp_opts, gp_out, out);
    if (*sweep) {
      CheckOutputParent(sw_out);
      auto dim = ParseDimension(dimension);
      if (!dim) throw UsageError("unknown dimension '" + dimension + "'");
      sw_opts.dimension = *dim;
      sw_opts.grid = ParseGrid(grid);
      sw_opts.policies.clear();
      for (const auto& p : SplitList(policies)) {
        auto kind = sched::ParsePolicyKind(p);
        if (!kind) throw UsageError("unknown policy '" + p + "'");
        sw_opts.policies.push_back(*kind);
      }
      sw_opts.threads = DefaultThreads();
      const sim::Scenario s = sw_flags.Load();
      const auto rows = RunSweep(s, sw_opts);
      sim::WriteFileAtomic(sw_out, SweepCsv(rows));
      out << rows.size() << " sweep rows written to " << sw_out << "\n";
      return kExitOk;
    }
    if (*analytic) return Analytic(model, zoo, an_slo, an_gpus, an_out, out);
    if (*part) {
      return Partition(problem, budget, part_seed, baseline, part_out, out);
    }
    if (*bench) {
      return ScaleBench(sb_workers, sb_gpus, sb_ms, sb_models, sb_out, out);
    }
  } catch (const sim::ScenarioError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IngestError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace batchsym::cli

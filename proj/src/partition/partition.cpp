#include "batchsym/partition/partition.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "batchsym/profile/csv.h"
#include "batchsym/sim/rng.h"

namespace batchsym::partition {

namespace {

using Clock = std::chrono::steady_clock;

// Relative slack for floating-point capacity checks.
constexpr double kSlack = 1e-9;

double Excess(double value, double cap) {
  if (std::isinf(cap)) return 0;
  const double over = value - cap;
  if (over <= kSlack * std::max(1.0, std::abs(cap))) return 0;
  return over / std::max(1.0, std::abs(cap));
}

double MoveCost(const Problem& p, size_t i, uint32_t to) {
  if (!p.current) return 0;
  return (*p.current)[i] == to ? 0 : 2 * p.models[i].change_cost;
}

// Lexicographic: feasibility first, then objective, then spread.
struct Score {
  double infeasibility = 0;
  double objective = 0;
  double spread = 0;

  // Float noise below the tolerances counts as a tie.
  bool operator<(const Score& o) const {
    if (std::abs(infeasibility - o.infeasibility) > 1e-12) {
      return infeasibility < o.infeasibility;
    }
    if (std::abs(objective - o.objective) >
        1e-9 * std::max(1.0, std::abs(o.objective))) {
      return objective < o.objective;
    }
    if (std::abs(spread - o.spread) > 1e-9 * std::max(1.0, std::abs(o.spread))) {
      return spread < o.spread;
    }
    return false;
  }
};

// Per-sub-cluster sums kept up to date under moves; O(l + log m) per score.
class State {
 public:
  State(const Problem& p, Assignment x)
      : p_(p),
        w_(p.Weight()),
        x_(std::move(x)),
        rate_(p.subclusters, 0),
        mem_(p.subclusters, 0),
        dyn_(p.subclusters) {
    const double l = p.subclusters;
    double r = 0;
    double s = 0;
    for (const auto& m : p.models) {
      r += m.rate;
      s += m.static_mem;
    }
    rate_avg_ = r / l;
    mem_avg_ = s / l;
    for (size_t i = 0; i < x_.size(); ++i) {
      Add(i, x_[i]);
      change_ += MoveCost(p, i, x_[i]);
    }
  }

  const Assignment& assignment() const { return x_; }
  double change() const { return change_; }

  Score score() const {
    Score sc;
    double dr = 0;
    double ds = 0;
    for (uint32_t j = 0; j < p_.subclusters; ++j) {
      const double er = rate_[j] - rate_avg_;
      const double es = mem_[j] - mem_avg_;
      dr = std::max(dr, std::abs(er));
      ds = std::max(ds, std::abs(es));
      sc.spread += er * er + w_ * w_ * es * es;
      const double peak = mem_[j] + (dyn_[j].empty() ? 0 : *dyn_[j].rbegin());
      sc.infeasibility += Excess(rate_[j], p_.rate_max) + Excess(peak, p_.mem_max);
    }
    sc.infeasibility += Excess(change_, p_.change_max);
    sc.objective = dr + w_ * ds;
    return sc;
  }

  void Move(size_t i, uint32_t to) {
    const uint32_t from = x_[i];
    change_ += MoveCost(p_, i, to) - MoveCost(p_, i, from);
    Remove(i, from);
    Add(i, to);
    x_[i] = to;
  }

 private:
  void Add(size_t i, uint32_t j) {
    rate_[j] += p_.models[i].rate;
    mem_[j] += p_.models[i].static_mem;
    dyn_[j].insert(p_.models[i].dynamic_mem);
  }
  void Remove(size_t i, uint32_t j) {
    rate_[j] -= p_.models[i].rate;
    mem_[j] -= p_.models[i].static_mem;
    dyn_[j].erase(dyn_[j].find(p_.models[i].dynamic_mem));
  }

  const Problem& p_;
  double w_;
  Assignment x_;
  std::vector<double> rate_;
  std::vector<double> mem_;
  std::vector<std::multiset<double>> dyn_;
  double rate_avg_ = 0;
  double mem_avg_ = 0;
  double change_ = 0;
};

// Greedy: heaviest models first (random tie order), each to the
// sub-cluster that scores best after placement.
Assignment GreedyStart(const Problem& p, sim::CounterRng& rng) {
  const size_t m = p.models.size();
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  std::vector<double> key(m);
  const double w = p.Weight();
  for (size_t i = 0; i < m; ++i) {
    key[i] = (p.models[i].rate + w * p.models[i].static_mem) * jitter(rng);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return key[a] > key[b]; });

  // Each model is scored against the models already placed.
  Assignment x(m, 0);
  std::vector<double> rate(p.subclusters, 0);
  std::vector<double> mem(p.subclusters, 0);
  std::vector<double> dyn(p.subclusters, 0);
  const double rate_avg =
      std::accumulate(p.models.begin(), p.models.end(), 0.0,
                      [](double s, const ModelLoad& l) { return s + l.rate; }) /
      p.subclusters;
  const double mem_avg =
      std::accumulate(p.models.begin(), p.models.end(), 0.0,
                      [](double s, const ModelLoad& l) {
                        return s + l.static_mem;
                      }) /
      p.subclusters;
  for (size_t i : order) {
    const auto& ml = p.models[i];
    uint32_t best = 0;
    double best_cost = kUnbounded;
    for (uint32_t j = 0; j < p.subclusters; ++j) {
      const double over = Excess(rate[j] + ml.rate, p.rate_max) +
                          Excess(mem[j] + ml.static_mem +
                                     std::max(dyn[j], ml.dynamic_mem),
                                 p.mem_max);
      const double fill = (rate[j] + ml.rate) / std::max(rate_avg, 1e-12) +
                          (mem[j] + ml.static_mem) / std::max(mem_avg, 1e-12);
      const double cost = over * 1e6 + fill;
      if (cost < best_cost) {
        best_cost = cost;
        best = j;
      }
    }
    x[i] = best;
    rate[best] += ml.rate;
    mem[best] += ml.static_mem;
    dyn[best] = std::max(dyn[best], ml.dynamic_mem);
  }
  return x;
}

// Random moves away from the current placement, each kept only if the
// change budget still holds.
Assignment PerturbCurrent(const Problem& p, sim::CounterRng& rng) {
  Assignment x = *p.current;
  const size_t m = x.size();
  std::uniform_int_distribution<size_t> model(0, m - 1);
  std::uniform_int_distribution<uint32_t> target(0, p.subclusters - 1);
  std::uniform_int_distribution<size_t> tries(1, m);
  double change = 0;
  for (size_t t = tries(rng); t > 0; --t) {
    const size_t i = model(rng);
    const uint32_t to = target(rng);
    const double next = change - MoveCost(p, i, x[i]) + MoveCost(p, i, to);
    if (next <= p.change_max + kSlack) {
      x[i] = to;
      change = next;
    }
  }
  return x;
}

bool OutOfTime(Clock::time_point deadline) { return Clock::now() >= deadline; }

// First-improvement descent; returns when a full pass finds nothing.
void LocalSearch(const Problem& p, State& s, sim::CounterRng& rng,
                 Clock::time_point deadline) {
  const size_t m = p.models.size();
  const uint32_t l = p.subclusters;
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  Score cur = s.score();
  bool improved = true;
  while (improved) {
    improved = false;
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t i : order) {
      const uint32_t from = s.assignment()[i];
      for (uint32_t step = 1; step < l; ++step) {
        const uint32_t to = (from + step) % l;
        s.Move(i, to);
        const Score next = s.score();
        if (next < cur && (!p.current || s.change() <= p.change_max + kSlack)) {
          cur = next;
          improved = true;
          break;
        }
        s.Move(i, from);
      }
    }
    if (OutOfTime(deadline)) return;
    for (size_t a = 0; a < m; ++a) {
      const size_t i = order[a];
      for (size_t b = a + 1; b < m; ++b) {
        const size_t k = order[b];
        const uint32_t xi = s.assignment()[i];
        const uint32_t xk = s.assignment()[k];
        if (xi == xk) continue;
        s.Move(i, xk);
        s.Move(k, xi);
        const Score next = s.score();
        if (next < cur && (!p.current || s.change() <= p.change_max + kSlack)) {
          cur = next;
          improved = true;
        } else {
          s.Move(k, xk);
          s.Move(i, xi);
        }
      }
      if ((a & 15) == 0 && OutOfTime(deadline)) return;
    }
  }
}

SolveResult Finish(const Problem& p, Assignment best, uint64_t restarts) {
  SolveResult r;
  r.evaluation = Evaluate(p, best);
  r.assignment = std::move(best);
  r.restarts = restarts;
  return r;
}

// Spread only guides the descent; full evaluations compare on the first two
// keys.
Score ScoreOf(const Evaluation& e) {
  return Score{e.infeasibility, e.objective, 0};
}

}  // namespace

double Problem::Weight() const {
  if (weight) return *weight;
  double r = 0;
  double s = 0;
  for (const auto& m : models) {
    r += m.rate;
    s += m.static_mem;
  }
  return s > 0 ? r / s : 1.0;
}

void ValidateProblem(const Problem& p) {
  if (p.subclusters == 0) throw std::invalid_argument("subclusters must be >= 1");
  if (p.models.empty()) throw std::invalid_argument("no models");
  for (const auto& m : p.models) {
    if (m.rate < 0 || m.static_mem < 0 || m.dynamic_mem < 0 ||
        m.change_cost < 0) {
      throw std::invalid_argument("model " + m.name +
                                  ": quantities must be non-negative");
    }
  }
  if (p.rate_max < 0 || p.mem_max < 0 || p.change_max < 0) {
    throw std::invalid_argument("caps must be non-negative");
  }
  if (p.weight && *p.weight < 0) throw std::invalid_argument("weight < 0");
  if (p.current) {
    if (p.current->size() != p.models.size()) {
      throw std::invalid_argument("current assignment size mismatch");
    }
    for (uint32_t j : *p.current) {
      if (j >= p.subclusters) {
        throw std::invalid_argument("current assignment out of range");
      }
    }
  }
}

Evaluation Evaluate(const Problem& p, const Assignment& x) {
  if (x.size() != p.models.size()) {
    throw std::invalid_argument("assignment size mismatch");
  }
  const uint32_t l = p.subclusters;
  Evaluation e;
  e.rate_sums.assign(l, 0);
  e.mem_sums.assign(l, 0);
  e.mem_peak.assign(l, 0);
  std::vector<double> dyn(l, 0);
  double total_rate = 0;
  double total_mem = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= l) throw std::invalid_argument("sub-cluster out of range");
    const auto& m = p.models[i];
    e.rate_sums[x[i]] += m.rate;
    e.mem_sums[x[i]] += m.static_mem;
    dyn[x[i]] = std::max(dyn[x[i]], m.dynamic_mem);
    total_rate += m.rate;
    total_mem += m.static_mem;
    e.change_cost += MoveCost(p, i, x[i]);
  }
  const double rate_avg = total_rate / l;
  const double mem_avg = total_mem / l;
  for (uint32_t j = 0; j < l; ++j) {
    e.delta_rate = std::max(e.delta_rate, std::abs(e.rate_sums[j] - rate_avg));
    e.delta_mem = std::max(e.delta_mem, std::abs(e.mem_sums[j] - mem_avg));
    e.mem_peak[j] = e.mem_sums[j] + dyn[j];
    if (const double ex = Excess(e.rate_sums[j], p.rate_max); ex > 0) {
      e.infeasibility += ex;
      std::ostringstream msg;
      msg << "sub-cluster " << j << ": rate " << e.rate_sums[j] << " > "
          << p.rate_max;
      e.violations.push_back(msg.str());
    }
    if (const double ex = Excess(e.mem_peak[j], p.mem_max); ex > 0) {
      e.infeasibility += ex;
      std::ostringstream msg;
      msg << "sub-cluster " << j << ": memory " << e.mem_peak[j] << " > "
          << p.mem_max;
      e.violations.push_back(msg.str());
    }
  }
  if (const double ex = Excess(e.change_cost, p.change_max); ex > 0) {
    e.infeasibility += ex;
    std::ostringstream msg;
    msg << "change cost " << e.change_cost << " > " << p.change_max;
    e.violations.push_back(msg.str());
  }
  e.objective = e.delta_rate + p.Weight() * e.delta_mem;
  return e;
}

Imbalance ImbalanceFactor(const Problem& p, const Assignment& x) {
  const Evaluation e = Evaluate(p, x);
  auto factor = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double avg = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    if (!(avg > 0)) throw std::invalid_argument("imbalance needs avg > 0");
    return (*hi - *lo) / avg;
  };
  return Imbalance{factor(e.rate_sums), factor(e.mem_sums)};
}

SolveResult Solve(const Problem& p, const SolveOptions& options) {
  ValidateProblem(p);
  const auto deadline = Clock::now() + options.time_budget;
  sim::CounterRng rng(options.seed, "partition");
  std::optional<Assignment> best;
  Score best_score;
  uint64_t restarts = 0;
  while (true) {
    // Alternate greedy and uniform starts for diversity.
    Assignment start;
    if (p.current) {
      start = restarts == 0 ? *p.current : PerturbCurrent(p, rng);
    } else if (restarts % 2 == 0) {
      start = GreedyStart(p, rng);
    } else {
      std::uniform_int_distribution<uint32_t> pick(0, p.subclusters - 1);
      start.resize(p.models.size());
      for (auto& j : start) j = pick(rng);
    }
    State s(p, std::move(start));
    LocalSearch(p, s, rng, deadline);
    ++restarts;
    const Score sc = s.score();
    if (!best || sc < best_score) {
      best = s.assignment();
      best_score = sc;
    }
    if (OutOfTime(deadline)) break;
    if (options.max_restarts && restarts >= options.max_restarts) break;
  }
  return Finish(p, std::move(*best), restarts);
}

SolveResult RandomSolve(const Problem& p, const SolveOptions& options) {
  ValidateProblem(p);
  const auto deadline = Clock::now() + options.time_budget;
  sim::CounterRng rng(options.seed, "partition-random");
  std::uniform_int_distribution<uint32_t> pick(0, p.subclusters - 1);
  std::optional<Assignment> best;
  Score best_score;
  uint64_t tries = 0;
  Assignment x(p.models.size());
  while (true) {
    for (auto& j : x) j = pick(rng);
    const Score sc = ScoreOf(Evaluate(p, x));
    ++tries;
    if (!best || sc < best_score) {
      best = x;
      best_score = sc;
    }
    if ((tries & 63) == 0 && OutOfTime(deadline)) break;
    if (options.max_restarts && tries >= options.max_restarts) break;
  }
  return Finish(p, std::move(*best), tries);
}

Problem ParseProblem(std::istream& in, const std::string& source) {
  Problem p;
  std::string line;
  size_t lineno = 0;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<size_t> row_lines;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = Trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string body = Trim(t.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;  // plain comment
      const std::string key = Trim(body.substr(0, eq));
      const std::string val = Trim(body.substr(eq + 1));
      char* end = nullptr;
      const double v = std::strtod(val.c_str(), &end);
      if (val.empty() || end != val.c_str() + val.size()) {
        throw IngestError(source, lineno, "config '" + key + "': not a number");
      }
      if (key == "subclusters" || key == "l") {
        if (v < 1 || v != std::floor(v)) {
          throw IngestError(source, lineno, "subclusters must be a positive integer");
        }
        p.subclusters = static_cast<uint32_t>(v);
      } else if (key == "rate_max") {
        p.rate_max = v;
      } else if (key == "mem_max") {
        p.mem_max = v;
      } else if (key == "weight") {
        p.weight = v;
      } else if (key == "change_max") {
        p.change_max = v;
      } else {
        throw IngestError(source, lineno, "unknown config key '" + key + "'");
      }
      continue;
    }
    if (header.empty()) {
      header = SplitFields(t);
      continue;
    }
    rows.push_back(SplitFields(t));
    row_lines.push_back(lineno);
  }
  const std::vector<std::string> base = {"model", "rate_rps", "static_mem_mb",
                                         "dynamic_mem_mb"};
  if (header.size() < base.size() ||
      !std::equal(base.begin(), base.end(), header.begin())) {
    throw IngestError(source, 0,
                      "header must start with "
                      "model,rate_rps,static_mem_mb,dynamic_mem_mb");
  }
  int current_col = -1;
  int cost_col = -1;
  for (size_t c = base.size(); c < header.size(); ++c) {
    if (header[c] == "current") {
      current_col = static_cast<int>(c);
    } else if (header[c] == "change_cost") {
      cost_col = static_cast<int>(c);
    } else {
      throw IngestError(source, 0, "unknown column '" + header[c] + "'");
    }
  }
  auto number = [&](const std::string& f, size_t ln, const char* col) {
    char* end = nullptr;
    const double v = std::strtod(f.c_str(), &end);
    if (f.empty() || end != f.c_str() + f.size()) {
      throw IngestError(source, ln, std::string("column '") + col +
                                        "': not a number: '" + f + "'");
    }
    return v;
  };
  std::vector<uint32_t> current;
  for (size_t r = 0; r < rows.size(); ++r) {
    const auto& f = rows[r];
    const size_t ln = row_lines[r];
    if (f.size() != header.size()) {
      throw IngestError(source, ln, "expected " + std::to_string(header.size()) +
                                        " fields, got " + std::to_string(f.size()));
    }
    ModelLoad m;
    m.name = f[0];
    m.rate = number(f[1], ln, "rate_rps");
    m.static_mem = number(f[2], ln, "static_mem_mb");
    m.dynamic_mem = number(f[3], ln, "dynamic_mem_mb");
    if (m.rate < 0 || m.static_mem < 0 || m.dynamic_mem < 0) {
      throw IngestError(source, ln, "quantities must be non-negative");
    }
    if (cost_col >= 0) m.change_cost = number(f[cost_col], ln, "change_cost");
    if (current_col >= 0) {
      const double c = number(f[current_col], ln, "current");
      if (c < 0 || c != std::floor(c) || c >= p.subclusters) {
        throw IngestError(source, ln, "current sub-cluster out of range");
      }
      current.push_back(static_cast<uint32_t>(c));
    }
    p.models.push_back(std::move(m));
  }
  if (p.models.empty()) throw IngestError(source, lineno, "no models");
  if (current_col >= 0) p.current = std::move(current);
  ValidateProblem(p);
  return p;
}

Problem LoadProblem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError(path, 0, "cannot open problem file");
  return ParseProblem(in, path);
}

std::string AssignmentCsv(const Problem& p, const Assignment& x) {
  std::ostringstream out;
  out << "model,subcluster\n";
  for (size_t i = 0; i < x.size(); ++i) {
    out << p.models[i].name << ',' << x[i] << '\n';
  }
  return out.str();
}

}  // namespace batchsym::partition

#include "batchsym/sim/simulator.h"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace batchsym::sim {

namespace {
constexpr size_t kNoIndex = std::numeric_limits<size_t>::max();
}  // namespace

sched::TimerHandle VirtualTimers::Schedule(TimePoint at, sched::TimerClass cls,
                                           std::function<void()> fn) {
  return queue_.Push(std::max(at, now_), cls, std::move(fn));
}

bool VirtualTimers::Step() {
  if (queue_.empty()) return false;
  auto [handle, fn] = queue_.Pop();
  now_ = handle.at;
  ++fired_;
  fn();
  return true;
}

const char* OutcomeName(Outcome outcome) {
  switch (outcome) {
    case Outcome::kPending:
      return "pending";
    case Outcome::kCompleted:
      return "completed";
    case Outcome::kLate:
      return "late";
    case Outcome::kDropped:
      return "dropped";
  }
  return "?";
}

const char* TraceKindName(TraceEvent::Kind kind) {
  switch (kind) {
    case TraceEvent::Kind::kDispatch:
      return "dispatch";
    case TraceEvent::Kind::kDispatchShrunk:
      return "dispatch_shrunk";
    case TraceEvent::Kind::kDrop:
      return "drop";
  }
  return "?";
}

Simulator::Simulator(Scenario scenario)
    : scenario_(std::move(scenario)),
      timers_(scenario_.arrivals_first ? sched::kArrivalsFirst
                                       : sched::kTimersFirst),
      network_(scenario_.network, scenario_.seed) {
  auto issues = ValidateScenario(scenario_);
  if (!issues.empty()) throw ScenarioError(std::move(issues));
  scheduler_ = std::make_unique<sched::Scheduler>(
      scenario_.models, ResolvePolicies(scenario_), scenario_.gpus,
      PlanningBudget(scenario_), timers_,
      static_cast<sched::ExecutionSink&>(*this));
  gpus_.resize(scenario_.gpus);

  result_.scenario = scenario_.name;
  result_.seed = scenario_.seed;
  result_.gpu_count = scenario_.gpus;
  for (const auto& m : scenario_.models) {
    result_.model_names.push_back(m.name);
    result_.model_slos.push_back(m.slo);
  }
  result_.measure_begin = TimePoint(scenario_.warmup);
  result_.measure_end = TimePoint(scenario_.duration - scenario_.cooldown);
}

Simulator::~Simulator() = default;

void Simulator::SetArrivals(std::vector<Arrival> arrivals) {
  for (size_t i = 1; i < arrivals.size(); ++i) {
    if (arrivals[i].at < arrivals[i - 1].at ||
        arrivals[i].ordinal <= arrivals[i - 1].ordinal) {
      throw std::invalid_argument("arrivals must be ordered by time and ordinal");
    }
  }
  for (const auto& a : arrivals) {
    if (a.model >= scenario_.models.size()) {
      throw std::invalid_argument("arrival for unknown model");
    }
  }
  arrivals_ = std::move(arrivals);
}

SimCounters Simulator::Counters() const {
  SimCounters c = counters_;
  c.queued = 0;
  for (size_t m = 0; m < scheduler_->model_count(); ++m) {
    c.queued += scheduler_->model(static_cast<ModelId>(m)).queued();
  }
  return c;
}

RunResult Simulator::Run() {
  if (ran_) throw std::logic_error("Simulator::Run called twice");
  ran_ = true;
  if (!arrivals_) {
    arrivals_ = GenerateArrivals(scenario_.workload, scenario_.models,
                                 scenario_.duration, scenario_.seed);
  }
  const uint64_t max_ordinal =
      arrivals_->empty() ? 0 : arrivals_->back().ordinal;
  index_by_id_.assign(arrivals_->empty() ? 0 : max_ordinal + 2, kNoIndex);
  result_.requests.reserve(arrivals_->size());

  if (scenario_.initial_policy) {
    // Runs ahead of same-tick arrivals and timers.
    timers_.Schedule(TimePoint(scenario_.policy_switch_at),
                     sched::TimerClass::kCompletion, [this] {
                       const auto policies =
                           ResolvePolicies(scenario_, scenario_.policy);
                       for (size_t m = 0; m < policies.size(); ++m) {
                         scheduler_->SetPolicy(static_cast<ModelId>(m),
                                               policies[m]);
                       }
                     });
  }
  ScheduleNextArrival();
  while (timers_.Step()) {
    if (observer_) observer_(*this);
  }
  result_.end = timers_.Now();
  result_.rank_stats = scheduler_->rank().stats();
  result_.events = timers_.fired();
  return std::move(result_);
}

void Simulator::ScheduleNextArrival() {
  if (next_arrival_ >= arrivals_->size()) return;
  const size_t index = next_arrival_++;
  timers_.Schedule((*arrivals_)[index].at, sched::TimerClass::kArrival,
                   [this, index] { OnArrival(index); });
}

void Simulator::OnArrival(size_t index) {
  const Arrival& a = (*arrivals_)[index];
  const ModelSpec& model = scenario_.models[a.model];
  sched::Request r;
  r.id = a.ordinal + 1;
  r.model = a.model;
  r.arrival = a.at;
  r.deadline = a.at + model.slo;

  RequestRecord rec;
  rec.id = r.id;
  rec.model = r.model;
  rec.arrival = r.arrival;
  rec.deadline = r.deadline;
  index_by_id_[r.id] = result_.requests.size();
  result_.requests.push_back(rec);
  ++counters_.arrivals;

  ScheduleNextArrival();
  scheduler_->OnNewRequest(r);
}

void Simulator::Execute(sched::ExecutionOrder order) {
  GpuState& gpu = gpus_.at(order.gpu);
  const TimePoint received = order.sent_at + network_.Sample();
  const Duration exec =
      scenario_.models[order.model].profile.ExecLatency(
          static_cast<uint32_t>(order.requests.size()));

  BatchRecord b;
  b.model = order.model;
  b.gpu = order.gpu;
  b.sent_at = order.sent_at;
  b.planned_start = order.start;
  b.start = std::max({order.start, received, gpu.busy_until});
  b.finish = b.start + exec;
  b.size = static_cast<uint32_t>(order.requests.size());
  b.shrunk = order.shrunk;
  b.requests.reserve(b.size);
  for (const auto& r : order.requests) {
    b.requests.push_back(r.id);
    RequestRecord& rec = result_.requests[index_by_id_.at(r.id)];
    rec.dispatch = order.sent_at;
    rec.start = b.start;
    rec.finish = b.finish;
    rec.batch_size = b.size;
  }
  gpu.busy_until = b.finish;
  gpu.in_flight += b.size;
  counters_.in_flight += b.size;

  if (scenario_.record_trace) {
    TraceEvent e;
    e.at = order.sent_at;
    e.kind = order.shrunk ? TraceEvent::Kind::kDispatchShrunk
                          : TraceEvent::Kind::kDispatch;
    e.model = order.model;
    e.gpu = order.gpu;
    e.batch_size = b.size;
    e.start = b.start;
    e.finish = b.finish;
    e.requests = b.requests;
    result_.trace.push_back(std::move(e));
  }

  const size_t batch_index = result_.batches.size();
  if (b.finish != order.finish) {
    // The backend reports the real finish once the order reaches it.
    const GpuId g = order.gpu;
    const TimePoint expected = order.finish;
    const TimePoint actual = b.finish;
    timers_.Schedule(received, sched::TimerClass::kCompletion,
                     [this, g, expected, actual] {
                       scheduler_->CorrectGpu(g, expected, actual);
                     });
  }
  timers_.Schedule(b.finish, sched::TimerClass::kCompletion,
                   [this, batch_index] { OnCompletion(batch_index); });
  result_.batches.push_back(std::move(b));
}

void Simulator::OnCompletion(size_t batch_index) {
  const BatchRecord& b = result_.batches[batch_index];
  for (RequestId id : b.requests) {
    RequestRecord& rec = result_.requests[index_by_id_[id]];
    rec.outcome =
        rec.finish <= rec.deadline ? Outcome::kCompleted : Outcome::kLate;
  }
  gpus_[b.gpu].in_flight -= b.size;
  counters_.in_flight -= b.size;
  counters_.completed += b.size;
}

void Simulator::Dropped(ModelId model,
                        std::span<const sched::Request> requests) {
  TraceEvent e;
  e.at = timers_.Now();
  e.kind = TraceEvent::Kind::kDrop;
  e.model = model;
  e.batch_size = static_cast<uint32_t>(requests.size());
  for (const auto& r : requests) {
    result_.requests[index_by_id_.at(r.id)].outcome = Outcome::kDropped;
    e.requests.push_back(r.id);
  }
  counters_.dropped += requests.size();
  if (scenario_.record_trace) result_.trace.push_back(std::move(e));
}

RunResult RunScenario(const Scenario& scenario) {
  return Simulator(scenario).Run();
}

}  // namespace batchsym::sim

#include "sunny/replay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "sunny/errors.hpp"
#include "sunny/scheduler.hpp"

namespace sunny {

namespace {
constexpr double kEps = 1e-9;
}

ReplayPlan plan_from_record(const SolverRecord& rec, ProblemKind kind,
                            Direction dir, double timeout,
                            std::optional<double> bound) {
  const bool conditioned = bound && rec.with_bound;
  const Outcome outcome = conditioned ? rec.with_bound->outcome : rec.outcome;
  const double time_s = conditioned ? rec.with_bound->time_s : rec.time_s;
  const auto& trace = conditioned ? rec.with_bound->trace : rec.trace;

  ReplayPlan plan;
  for (const auto& pt : trace) {
    if (bound && !improves(pt.value, *bound, dir)) continue;
    plan.solutions.push_back({pt.t, pt.value});
  }

  if (kind == ProblemKind::Csp) {
    switch (outcome) {
      case Outcome::Sat:
        plan.terminal = RawTerminal::CspSolved;
        plan.terminal_t = time_s;
        break;
      case Outcome::Uns:
        plan.terminal = RawTerminal::Unsat;
        plan.terminal_t = time_s;
        break;
      default:
        break;  // ran out of time: emits nothing
    }
  } else {
    switch (outcome) {
      case Outcome::Opt:
        plan.terminal = RawTerminal::Complete;
        plan.terminal_t = time_s;
        break;
      case Outcome::Uns:
        plan.terminal = RawTerminal::Unsat;
        plan.terminal_t = time_s;
        break;
      case Outcome::Unb:
        plan.terminal = RawTerminal::Unbounded;
        plan.terminal_t = time_s;
        break;
      case Outcome::Sat:
        // Quit before its deadline without a proof; at the horizon it was
        // still working and simply emits nothing further.
        if (time_s < timeout - kEps) {
          plan.terminal = RawTerminal::SelfStop;
          plan.terminal_t = time_s;
        }
        break;
      case Outcome::Unk:
        break;
    }
  }

  if (plan.terminal_t && !plan.solutions.empty())
    plan.terminal_t = std::max(*plan.terminal_t, plan.solutions.back().t);
  return plan;
}

PlanSource kb_plan_source(const KnowledgeBase& kb, const std::string& instance_id) {
  const ProblemInstance& inst = kb.instance(instance_id);
  const ProblemKind kind = inst.kind;
  const Direction dir = inst.direction;
  const double timeout = kb.timeout();
  const KnowledgeBase* kbp = &kb;
  std::string id = instance_id;
  return [kbp, id, kind, dir, timeout](const std::string& solver,
                                       std::optional<double> bound) {
    return plan_from_record(kbp->record(id, solver), kind, dir, timeout, bound);
  };
}

ReplayBackend::ReplayBackend(std::vector<std::string> portfolio, PlanSource source)
    : portfolio_(std::move(portfolio)), source_(std::move(source)) {
  lives_.resize(portfolio_.size());
}

ReplayBackend::Live& ReplayBackend::live(const std::string& solver) {
  for (std::size_t i = 0; i < portfolio_.size(); ++i)
    if (portfolio_[i] == solver) {
      if (!lives_[i]) throw std::logic_error("solver '" + solver + "' never launched");
      return *lives_[i];
    }
  throw std::logic_error("unknown solver '" + solver + "'");
}

const ReplayBackend::Live* ReplayBackend::find(const std::string& solver) const {
  for (std::size_t i = 0; i < portfolio_.size(); ++i)
    if (portfolio_[i] == solver) return lives_[i] ? &*lives_[i] : nullptr;
  return nullptr;
}

void ReplayBackend::launch(const std::string& solver, double now,
                           std::optional<double> bound) {
  for (std::size_t i = 0; i < portfolio_.size(); ++i) {
    if (portfolio_[i] != solver) continue;
    Live l;
    l.plan = source_(solver, bound);
    l.running = true;
    l.segment_start = now;
    lives_[i] = std::move(l);
    return;
  }
  throw std::logic_error("unknown solver '" + solver + "'");
}

void ReplayBackend::pause(const std::string& solver, double now) {
  Live& l = live(solver);
  l.consumed += now - l.segment_start;
  l.running = false;
}

void ReplayBackend::resume(const std::string& solver, double now,
                           std::optional<double>) {
  Live& l = live(solver);
  l.segment_start = now;
  l.running = true;
}

void ReplayBackend::stop(const std::string& solver, double) {
  live(solver).running = false;
}

std::optional<ReplayBackend::NextEvent> ReplayBackend::peek_one(
    const std::string& solver, const Live& l) const {
  if (!l.running) return std::nullopt;
  if (l.cursor < l.plan.solutions.size()) {
    const auto& s = l.plan.solutions[l.cursor];
    NextEvent e;
    e.t = l.segment_start + (s.t - l.consumed);
    e.event.kind = SolverEvent::Kind::Solution;
    e.event.solver = solver;
    e.event.value = s.value;
    return e;
  }
  if (l.plan.terminal_t && !l.terminal_fired) {
    NextEvent e;
    e.t = l.segment_start + (*l.plan.terminal_t - l.consumed);
    e.event.kind = SolverEvent::Kind::Terminal;
    e.event.solver = solver;
    e.event.terminal = l.plan.terminal;
    return e;
  }
  return std::nullopt;
}

std::optional<ReplayBackend::NextEvent> ReplayBackend::peek() const {
  std::optional<NextEvent> best;
  for (std::size_t i = 0; i < portfolio_.size(); ++i) {
    if (!lives_[i]) continue;
    auto e = peek_one(portfolio_[i], *lives_[i]);
    if (e && (!best || e->t < best->t)) best = std::move(e);
  }
  return best;
}

void ReplayBackend::consume(const NextEvent& ev) {
  Live& l = live(ev.event.solver);
  if (ev.event.kind == SolverEvent::Kind::Solution)
    l.cursor += 1;
  else
    l.terminal_fired = true;
}

SolveResult run_virtual(Engine& engine, ReplayBackend& backend) {
  engine.begin(0.0);
  double last_t = 0.0;
  for (long guard = 0; guard < 50'000'000; ++guard) {
    if (engine.done()) return engine.result();
    auto ev = backend.peek();
    double dl = engine.next_deadline();
    if (!ev && !std::isfinite(dl)) {
      engine.on_quiescence(last_t);
      continue;
    }
    if (ev && (!std::isfinite(dl) || ev->t <= dl + 1e-12)) {
      last_t = std::max(last_t, ev->t);
      backend.consume(*ev);
      engine.on_event(ev->t, ev->event);
    } else {
      last_t = std::max(last_t, dl);
      engine.on_deadline(dl);
    }
  }
  throw std::logic_error("virtual run did not converge");
}

SolveResult solve_replay(const KnowledgeBase& kb, const std::string& instance_id,
                         const ExecutorConfig& cfg,
                         const std::vector<std::string>* candidates) {
  const ProblemInstance& inst = kb.instance(instance_id);
  const std::vector<std::string>& portfolio = kb.portfolio();

  std::vector<std::string> cands;
  if (candidates) {
    cands = *candidates;
  } else {
    for (const auto& other : kb.instances())
      if (other.id != instance_id && other.kind == inst.kind)
        cands.push_back(other.id);
  }

  ReplayBackend backend(portfolio, kb_plan_source(kb, instance_id));
  Job job{instance_id, inst.kind, inst.direction};
  Engine engine(job, cfg, portfolio, backend);
  engine.set_nbh_cost(cfg.sim_overhead);
  engine.set_schedule_hook([&kb, &inst, cands, k = cfg.k](
                               double budget, const std::vector<std::string>& allowed) {
    if (cands.empty()) {
      // Nothing to predict from: split the budget evenly.
      Schedule even;
      for (const auto& s : allowed)
        even.entries.push_back({s, budget / static_cast<double>(allowed.size())});
      return even;
    }
    Neighbourhood nbh = neighbours(inst.features, kb, k, cands);
    return sunny_schedule(inst.kind, nbh, kb, budget, allowed);
  });
  return run_virtual(engine, backend);
}

SolveResult simulate_run(const KnowledgeBase& kb, const std::string& instance_id,
                         const ParallelSchedule& placement,
                         const ExecutorConfig& cfg) {
  const ProblemInstance& inst = kb.instance(instance_id);
  ExecutorConfig local = cfg;
  local.cores = static_cast<int>(placement.cores.size());
  if (local.cores < 1) throw ValidationError("placement has no cores");

  ReplayBackend backend(kb.portfolio(), kb_plan_source(kb, instance_id));
  Job job{instance_id, inst.kind, inst.direction};
  Engine engine(job, local, kb.portfolio(), backend);
  engine.set_preset_schedule(placement);
  return run_virtual(engine, backend);
}

}  // namespace sunny

#include "sunny/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "sunny/errors.hpp"

namespace sunny {

namespace {

constexpr double kEps = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Engine::Engine(Job job, ExecutorConfig cfg, std::vector<std::string> portfolio,
               Backend& backend)
    : job_(std::move(job)),
      cfg_(std::move(cfg)),
      portfolio_(std::move(portfolio)),
      backend_(backend) {
  validate_config(cfg_);
  if (portfolio_.empty()) throw ValidationError("portfolio is empty");
  {
    auto sorted = portfolio_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ValidationError("portfolio has duplicate solver ids");
  }
  const bool has_dir = job_.direction != Direction::None;
  if ((job_.kind == ProblemKind::Cop) != has_dir)
    throw ValidationError("instance '" + job_.instance +
                          "': objective direction does not match problem kind");
  states_.reserve(portfolio_.size());
  for (const auto& s : portfolio_) {
    RunState st;
    st.solver_id = s;
    states_.push_back(std::move(st));
  }
  warned_no_inject_.assign(portfolio_.size(), false);
}

void Engine::set_schedule_hook(
    std::function<Schedule(double, const std::vector<std::string>&)> hook) {
  schedule_hook_ = std::move(hook);
}

void Engine::set_preset_schedule(ParallelSchedule preset) {
  preset_ = std::move(preset);
}

RunState& Engine::st(const std::string& solver) {
  for (auto& s : states_)
    if (s.solver_id == solver) return s;
  throw std::logic_error("unknown solver '" + solver + "'");
}

const RunState& Engine::state(const std::string& solver) const {
  return const_cast<Engine*>(this)->st(solver);
}

double Engine::tw(const std::string& solver) const {
  auto it = cfg_.solver_options.find(solver);
  if (it != cfg_.solver_options.end() && it->second.wait_time)
    return *it->second.wait_time;
  return cfg_.wait_time;
}

double Engine::tr(const std::string& solver) const {
  auto it = cfg_.solver_options.find(solver);
  if (it != cfg_.solver_options.end() && it->second.restart_time)
    return *it->second.restart_time;
  return cfg_.restart_time;
}

bool Engine::bound_obsolete(const RunState& s) const {
  if (!global_bound_) return false;
  if (!s.best_bound) return true;
  return improves(*global_bound_, *s.best_bound, job_.direction);
}

// Where the current slice runs out, pushed back while the waiting policy
// still protects a fresh solution.
double Engine::effective_expiry(const RunState& s) const {
  double base = s.segment_start + (s.allotted_s - s.slice_used_s);
  if (s.last_solution_at) base = std::max(base, *s.last_solution_at + tw(s.solver_id));
  return base;
}

std::optional<double> Engine::restart_eligible_at(const RunState& s) const {
  if (job_.kind != ProblemKind::Cop || !global_bound_) return std::nullopt;
  if (!backend_.can_inject(s.solver_id)) return std::nullopt;
  if (!bound_obsolete(s)) return std::nullopt;
  double anchor = s.clock_anchor;
  if (s.last_solution_at) anchor = std::max(anchor, *s.last_solution_at);
  // Effort time may already exceed the threshold when a run resumes into an
  // existing bound; eligibility still can't predate the running segment.
  return std::max(anchor + tr(s.solver_id), s.segment_start);
}

int Engine::running_count() const {
  int n = 0;
  for (const auto& c : cores_)
    if (!c.running.empty()) ++n;
  return n;
}

void Engine::log(double t, std::string kind, std::string solver,
                 std::optional<double> value, std::string detail) {
  EventRecord rec;
  rec.t = t;
  rec.kind = std::move(kind);
  rec.solver = std::move(solver);
  rec.value = value;
  rec.detail = std::move(detail);
  events_.push_back(std::move(rec));
}

void Engine::begin(double now) {
  if (!cores_.empty()) throw std::logic_error("begin called twice");
  cores_.resize(static_cast<std::size_t>(cfg_.cores));

  if (preset_) {
    if (preset_->cores.size() != cores_.size())
      throw ValidationError("preset placement expects " +
                            std::to_string(preset_->cores.size()) +
                            " cores, executor has " + std::to_string(cfg_.cores));
    for (std::size_t i = 0; i < preset_->cores.size(); ++i) {
      for (const auto& e : preset_->cores[i].entries) {
        if (std::find(portfolio_.begin(), portfolio_.end(), e.solver_id) ==
            portfolio_.end())
          throw ValidationError("preset names unknown solver '" + e.solver_id + "'");
        if (!(e.time_s > 0)) throw ValidationError("preset slice must be positive");
        cores_[i].queue.push_back(e);
      }
    }
    phase_ = Phase::Dynamic;
    nbh_done_ = true;
    log(now, "dynamic", "", std::nullopt, "preset");
    dispatch_all(now);
    return;
  }

  for (const auto& e : cfg_.static_schedule.entries) {
    if (std::find(portfolio_.begin(), portfolio_.end(), e.solver_id) ==
        portfolio_.end())
      throw ValidationError("static schedule names unknown solver '" + e.solver_id + "'");
    if (!(e.time_s > 0)) throw ValidationError("static slice must be positive");
    static_queue_.push_back(e);
  }
  log(now, "presolve", "");
  dispatch_all(now);
}

void Engine::dispatch_all(double now) {
  for (std::size_t i = 0; i < cores_.size(); ++i)
    dispatch_core(static_cast<int>(i), now);
  if (result_) return;
  if (phase_ == Phase::Presolve) {
    maybe_start_nbh(now);
    check_presolve_end(now);
  } else {
    check_exhaustion(now);
  }
}

bool Engine::queued_anywhere(const std::string& solver) const {
  for (const auto& c : cores_)
    for (const auto& e : c.queue)
      if (e.solver_id == solver) return true;
  return false;
}

void Engine::dispatch_core(int core, double now) {
  if (result_) return;
  Core& c = cores_[static_cast<std::size_t>(core)];
  if (!c.running.empty()) return;

  if (phase_ == Phase::Presolve) {
    while (!static_queue_.empty()) {
      ScheduleEntry e = static_queue_.front();
      static_queue_.pop_front();
      if (st(e.solver_id).status != RunStatus::Pending) continue;
      start_run(core, e.solver_id, e.time_s, now);
      return;
    }
    return;
  }

  while (!c.queue.empty()) {
    ScheduleEntry e = c.queue.front();
    c.queue.pop_front();
    RunStatus s = st(e.solver_id).status;
    if (s != RunStatus::Pending && s != RunStatus::Suspended) continue;
    start_run(core, e.solver_id, e.time_s, now);
    return;
  }

  // Planned work for this core is gone; adopt whoever is runnable and not
  // reserved by another core's queue.
  for (auto want : {RunStatus::Pending, RunStatus::Suspended}) {
    for (const auto& r : states_) {
      if (r.status != want) continue;
      if (queued_anywhere(r.solver_id)) continue;
      start_run(core, r.solver_id, kInf, now);
      return;
    }
  }
}

void Engine::start_run(int core, const std::string& solver, double allotted,
                       double now) {
  RunState& s = st(solver);
  if (s.status == RunStatus::Suspended) {
    const bool cold = !backend_.can_pause(solver);
    std::optional<double> inj;
    if (cold && job_.kind == ProblemKind::Cop && backend_.can_inject(solver))
      inj = global_bound_;
    backend_.resume(solver, now, inj);
    if (cold) {
      // The run starts over: progress and knowledge reset, the slice doesn't.
      s.consumed_s = 0.0;
      s.clock_anchor = now;
      s.last_solution_at.reset();
      s.found_any = false;
      s.injected_bound = inj;
      s.best_bound = inj;
      log(now, "resume", solver, inj, "cold");
    } else {
      // Suspension froze the run: shift effort-based anchors by the gap so
      // paused wall time never counts toward the policies.
      double gap = now - s.segment_start;
      s.clock_anchor += gap;
      if (s.last_solution_at) *s.last_solution_at += gap;
      log(now, "resume", solver);
    }
  } else if (s.status == RunStatus::Pending) {
    std::optional<double> inj;
    if (job_.kind == ProblemKind::Cop && backend_.can_inject(solver))
      inj = global_bound_;
    backend_.launch(solver, now, inj);
    s.consumed_s = 0.0;
    s.clock_anchor = now;
    s.injected_bound = inj;
    s.best_bound = inj;
    log(now, "start", solver, inj);
  } else {
    throw std::logic_error("start_run on solver in state " +
                           std::string(to_string(s.status)));
  }
  s.status = RunStatus::Running;
  s.core = core;
  s.allotted_s = allotted;
  s.slice_used_s = 0.0;
  s.segment_start = now;
  cores_[static_cast<std::size_t>(core)].running = solver;
}

void Engine::suspend_run(const std::string& solver, double now) {
  RunState& s = st(solver);
  s.consumed_s += now - s.segment_start;
  s.slice_used_s += now - s.segment_start;
  s.segment_start = now;  // marks the suspension instant for gap accounting
  s.status = RunStatus::Suspended;
  release_core(solver);
  backend_.pause(solver, now);
  log(now, "suspend", solver);
}

void Engine::release_core(const std::string& solver) {
  RunState& s = st(solver);
  if (s.core >= 0) cores_[static_cast<std::size_t>(s.core)].running.clear();
  s.core = -1;
}

void Engine::maybe_start_nbh(double now) {
  if (phase_ != Phase::Presolve || nbh_started_) return;
  bool idle = false;
  for (const auto& c : cores_)
    if (c.running.empty()) idle = true;
  if (!idle) return;
  nbh_started_ = true;
  nbh_done_at_ = now + nbh_cost_;
  log(now, "nbh_start", "");
}

void Engine::check_presolve_end(double now) {
  if (phase_ != Phase::Presolve || result_) return;
  if (!nbh_done_) return;
  if (!static_queue_.empty()) return;
  if (running_count() > 0) return;
  enter_dynamic(now);
}

void Engine::enter_dynamic(double now) {
  phase_ = Phase::Dynamic;
  double budget = std::max(cfg_.timeout - now, 1e-3);

  std::vector<std::string> active;
  for (const auto& s : states_)
    if (s.status == RunStatus::Pending || s.status == RunStatus::Suspended)
      active.push_back(s.solver_id);
  if (active.empty()) {
    finish_with_best(now);
    return;
  }
  log(now, "dynamic", "", budget);

  if (active.size() <= cores_.size()) {
    // Enough cores for everyone: no prediction, each survivor gets its own
    // core for the rest of the run.
    for (std::size_t i = 0; i < active.size(); ++i)
      cores_[i].queue.push_back(ScheduleEntry{active[i], kInf});
  } else {
    if (!schedule_hook_)
      throw std::logic_error("no schedule hook installed for the main phase");
    Schedule sched = schedule_hook_(budget, active);
    validate_schedule(sched, budget);
    ParallelSchedule placed = parallelise(sched, cfg_.cores, budget);
    for (std::size_t i = 0; i < placed.cores.size() && i < cores_.size(); ++i)
      for (const auto& e : placed.cores[i].entries) cores_[i].queue.push_back(e);
  }
  dispatch_all(now);
}

void Engine::do_restart(const std::string& solver, double now) {
  RunState& s = st(solver);
  log(now, "restart", solver, global_bound_);
  backend_.stop(solver, now);
  backend_.launch(solver, now, global_bound_);
  s.restarts += 1;
  s.slice_used_s += now - s.segment_start;  // the slice keeps draining
  s.consumed_s = 0.0;                       // the run itself starts over
  s.segment_start = now;
  s.clock_anchor = now;
  s.last_solution_at.reset();
  s.found_any = false;
  s.injected_bound = global_bound_;
  s.best_bound = global_bound_;
}

void Engine::sweep_restarts(double now, const std::string& except) {
  if (job_.kind != ProblemKind::Cop || !global_bound_) return;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    RunState& s = states_[i];
    if (s.solver_id == except || s.status != RunStatus::Running) continue;
    if (!apply_restart_policy(s, global_bound_, job_.direction, now, tr(s.solver_id)))
      continue;
    if (!backend_.can_inject(s.solver_id)) {
      if (!warned_no_inject_[i]) {
        warned_no_inject_[i] = true;
        log(now, "no_inject", s.solver_id);
      }
      continue;
    }
    do_restart(s.solver_id, now);
  }
}

void Engine::on_event(double now, const SolverEvent& ev) {
  if (result_) return;
  RunState& s = st(ev.solver);
  if (s.status != RunStatus::Running) return;  // stale output after a stop

  if (ev.kind == SolverEvent::Kind::Solution) {
    s.found_any = true;
    s.last_solution_at = now;
    if (ev.value && s.injected_bound &&
        !improves(*ev.value, *s.injected_bound, job_.direction))
      log(now, "bound_violation", ev.solver, ev.value);
    if (ev.value && (!s.best_bound || improves(*ev.value, *s.best_bound, job_.direction)))
      s.best_bound = *ev.value;
    log(now, "solution", ev.solver, ev.value);
    if (job_.kind == ProblemKind::Csp) {
      finish_definitive(Outcome::Sat, ev.solver, now);
      return;
    }
    if (ev.value && (!global_bound_ || improves(*ev.value, *global_bound_, job_.direction))) {
      global_bound_ = *ev.value;
      bound_holder_ = ev.solver;
      log(now, "bound", ev.solver, ev.value);
      if (phase_ == Phase::Tail) {
        // Past the deadline we only wait for a first answer.
        finish_with_best(now);
        return;
      }
      sweep_restarts(now, ev.solver);
    }
    return;
  }

  handle_terminal(ev.solver, now, ev);
}

void Engine::handle_terminal(const std::string& solver, double now,
                             const SolverEvent& ev) {
  RunState& s = st(solver);
  const int core = s.core;
  s.consumed_s += now - s.segment_start;
  s.slice_used_s += now - s.segment_start;
  s.segment_start = now;
  release_core(solver);

  switch (ev.terminal) {
    case RawTerminal::Crash:
      s.status = RunStatus::Discarded;
      log(now, "fail", solver, std::nullopt, ev.detail);
      break;
    case RawTerminal::SelfStop:
      s.status = RunStatus::Finished;
      log(now, "finish", solver);
      break;
    case RawTerminal::CspSolved:
      s.status = RunStatus::Finished;
      s.found_any = true;
      s.last_solution_at = now;
      log(now, "solution", solver, ev.value);
      finish_definitive(Outcome::Sat, solver, now);
      return;
    case RawTerminal::Complete:
      s.status = RunStatus::Finished;
      if (job_.kind == ProblemKind::Csp) {
        finish_definitive(s.found_any ? Outcome::Sat : Outcome::Uns, solver, now);
      } else if (s.found_any) {
        finish_definitive(Outcome::Opt, solver, now);
      } else if (s.injected_bound && global_bound_) {
        // Nothing beats the bound it started from, so that bound is optimal.
        finish_definitive(Outcome::Opt, solver, now);
      } else {
        finish_definitive(Outcome::Uns, solver, now);
      }
      return;
    case RawTerminal::Unsat:
      s.status = RunStatus::Finished;
      if (job_.kind == ProblemKind::Cop && s.injected_bound && global_bound_) {
        finish_definitive(Outcome::Opt, solver, now);
      } else {
        finish_definitive(Outcome::Uns, solver, now);
      }
      return;
    case RawTerminal::Unbounded:
      s.status = RunStatus::Finished;
      finish_definitive(Outcome::Unb, solver, now);
      return;
  }

  // Crash or clean give-up: hand the core to the next candidate.
  dispatch_core(core, now);
  if (result_) return;
  if (phase_ == Phase::Presolve) {
    maybe_start_nbh(now);
    check_presolve_end(now);
  } else {
    check_exhaustion(now);
  }
}

double Engine::next_deadline() const {
  if (result_) return kInf;
  double m = kInf;
  if (nbh_started_ && !nbh_done_) m = std::min(m, nbh_done_at_);
  if (phase_ == Phase::Presolve || phase_ == Phase::Dynamic)
    m = std::min(m, cfg_.timeout);
  for (const auto& s : states_) {
    if (s.status != RunStatus::Running) continue;
    if (std::isfinite(s.allotted_s)) m = std::min(m, effective_expiry(s));
    if (auto t = restart_eligible_at(s)) m = std::min(m, *t);
  }
  return m;
}

void Engine::on_deadline(double now) {
  if (result_) return;

  if (nbh_started_ && !nbh_done_ && nbh_done_at_ <= now + kEps) {
    nbh_done_ = true;
    log(now, "nbh_done", "");
    check_presolve_end(now);
    if (result_) return;
  }

  for (std::size_t i = 0; i < cores_.size(); ++i) {
    const std::string solver = cores_[i].running;
    if (solver.empty()) continue;
    RunState& s = st(solver);
    if (!std::isfinite(s.allotted_s)) continue;
    if (effective_expiry(s) > now + kEps) continue;
    if (apply_waiting_policy(s, now, tw(solver))) continue;

    if (phase_ == Phase::Presolve) {
      // Static slices never stretch; the core idles until the main phase if
      // no pre-scheduled work is left.
      suspend_run(solver, now);
      dispatch_core(static_cast<int>(i), now);
      if (result_) return;
      continue;
    }

    bool has_next = false;
    for (const auto& e : cores_[i].queue) {
      RunStatus q = st(e.solver_id).status;
      if (q == RunStatus::Pending || q == RunStatus::Suspended) {
        has_next = true;
        break;
      }
    }
    if (has_next) {
      suspend_run(solver, now);
      dispatch_core(static_cast<int>(i), now);
    } else {
      // Last planned occupant keeps the core for as long as it takes.
      s.allotted_s = kInf;
      log(now, "extend", solver);
    }
    if (result_) return;
  }

  if (job_.kind == ProblemKind::Cop && global_bound_) {
    for (auto& s : states_) {
      if (s.status != RunStatus::Running) continue;
      auto t = restart_eligible_at(s);
      if (!t || *t > now + kEps) continue;
      if (apply_restart_policy(s, global_bound_, job_.direction, now, tr(s.solver_id)))
        do_restart(s.solver_id, now);
    }
    if (result_) return;
  }

  if ((phase_ == Phase::Presolve || phase_ == Phase::Dynamic) &&
      cfg_.timeout <= now + kEps) {
    if (cfg_.anytime && !global_bound_) {
      phase_ = Phase::Tail;
      log(now, "anytime", "");
    } else {
      finish_with_best(cfg_.timeout);
      return;
    }
  }

  if (phase_ == Phase::Presolve) {
    maybe_start_nbh(now);
    check_presolve_end(now);
  } else {
    check_exhaustion(now);
  }
}

void Engine::on_quiescence(double now) {
  if (result_) return;
  finish_with_best(now);
}

void Engine::check_exhaustion(double now) {
  if (result_ || phase_ == Phase::Presolve) return;
  if (running_count() == 0) finish_with_best(now);
}

void Engine::finish_definitive(Outcome outcome, const std::string& winner,
                               double now) {
  stop_everything(now);
  std::optional<double> bound;
  if (outcome == Outcome::Opt) bound = global_bound_;
  log(now, "result", winner, bound, std::string(outcome_label(outcome)));
  SolveResult r;
  r.outcome = outcome;
  r.best_bound = bound;
  r.winner = winner;
  r.wall_time_s = now;
  r.events = events_;
  result_ = std::move(r);
}

void Engine::finish_with_best(double now) {
  stop_everything(now);
  SolveResult r;
  if (global_bound_) {
    r.outcome = Outcome::Sat;
    r.best_bound = global_bound_;
    r.winner = bound_holder_;
  } else {
    r.outcome = Outcome::Unk;
  }
  r.wall_time_s = now;
  log(now, "result", r.winner.value_or(""), r.best_bound,
      std::string(outcome_label(r.outcome)));
  r.events = events_;
  result_ = std::move(r);
}

void Engine::stop_everything(double now) {
  for (auto& s : states_) {
    if (s.status != RunStatus::Running) continue;
    backend_.stop(s.solver_id, now);
    s.consumed_s += now - s.segment_start;
    s.segment_start = now;
    s.status = RunStatus::Finished;
    if (s.core >= 0) cores_[static_cast<std::size_t>(s.core)].running.clear();
    s.core = -1;
  }
}

const SolveResult& Engine::result() const {
  if (!result_) throw std::logic_error("no result yet");
  return *result_;
}

}  // namespace sunny

#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sunny/executor.hpp"
#include "sunny/types.hpp"

namespace sunny {

// What the engine solves: a reference the backend understands (knowledge-base
// id or file path) plus the problem's nature.
struct Job {
  std::string instance;
  ProblemKind kind = ProblemKind::Csp;
  Direction direction = Direction::None;
};

// Raw end-of-run signals as backends observe them; the engine maps them to
// outcomes using context (problem kind, injected bounds, solutions seen).
enum class RawTerminal {
  Complete,    // search space exhausted ("==========")
  Unsat,       // proved unsatisfiable
  Unbounded,   // proved unbounded
  SelfStop,    // gave up cleanly without an answer
  CspSolved,   // decision problem answered positively
  Crash        // died prematurely
};

struct SolverEvent {
  enum class Kind { Solution, Terminal };
  Kind kind = Kind::Solution;
  std::string solver;
  std::optional<double> value;  // objective, when one was reported
  RawTerminal terminal = RawTerminal::Complete;
  std::string detail;
};

// Driving side of a solver adapter. The engine issues commands; the driver
// collects the resulting SolverEvents and feeds them back with timestamps.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual void launch(const std::string& solver, double now,
                      std::optional<double> bound) = 0;
  virtual void pause(const std::string& solver, double now) = 0;
  // `bound` feeds adapters that emulate pausing by kill + relaunch.
  virtual void resume(const std::string& solver, double now,
                      std::optional<double> bound) = 0;
  virtual void stop(const std::string& solver, double now) = 0;
  virtual bool can_pause(const std::string& solver) const = 0;
  virtual bool can_inject(const std::string& solver) const = 0;
};

// Portfolio orchestrator: owns every RunState and the serialized event log,
// schedules work onto cores, and applies the waiting/restart policies. It
// never reads a clock; drivers push time in via the `now` arguments, which
// lets one state machine serve both the trace-replay simulation and real
// subprocess execution.
//
// Run structure: a pre-solving phase executes the static schedule first-come
// first-served while the neighbourhood task waits for a free core; the main
// phase runs the predicted schedule split across cores (or one solver per
// core when enough cores exist); in anytime mode a tail phase keeps solvers
// alive past the timeout until something is known.
class Engine {
 public:
  Engine(Job job, ExecutorConfig cfg, std::vector<std::string> portfolio,
         Backend& backend);

  // Main-phase schedule maker: budget and the solvers still eligible.
  void set_schedule_hook(
      std::function<Schedule(double, const std::vector<std::string>&)> hook);
  // Skips pre-solving entirely and runs exactly this placement.
  void set_preset_schedule(ParallelSchedule preset);
  // Cost charged to the neighbourhood task (simulated presolve overhead
  // under a virtual clock; ~0 under a wall clock).
  void set_nbh_cost(double cost) { nbh_cost_ = cost; }

  void begin(double now);
  // Earliest wall time at which the engine wants control (slice boundaries,
  // restart eligibilities, neighbourhood completion, the global deadline);
  // +inf when it only waits for solver events.
  double next_deadline() const;
  void on_deadline(double now);
  void on_event(double now, const SolverEvent& ev);
  // No event can ever arrive and no deadline is pending (virtual clock only).
  void on_quiescence(double now);

  bool done() const { return result_.has_value(); }
  const SolveResult& result() const;

  const RunState& state(const std::string& solver) const;

 private:
  enum class Phase { Presolve, Dynamic, Tail };

  struct Core {
    std::deque<ScheduleEntry> queue;
    std::string running;  // empty when idle
  };

  RunState& st(const std::string& solver);
  double tw(const std::string& solver) const;
  double tr(const std::string& solver) const;
  bool bound_obsolete(const RunState& s) const;
  double effective_expiry(const RunState& s) const;
  std::optional<double> restart_eligible_at(const RunState& s) const;
  int running_count() const;

  void log(double t, std::string kind, std::string solver,
           std::optional<double> value = std::nullopt, std::string detail = {});
  void start_run(int core, const std::string& solver, double allotted, double now);
  void suspend_run(const std::string& solver, double now);
  void release_core(const std::string& solver);
  void dispatch_core(int core, double now);
  void dispatch_all(double now);
  bool queued_anywhere(const std::string& solver) const;
  void maybe_start_nbh(double now);
  void check_presolve_end(double now);
  void enter_dynamic(double now);
  void do_restart(const std::string& solver, double now);
  void sweep_restarts(double now, const std::string& except);
  void handle_terminal(const std::string& solver, double now, const SolverEvent& ev);
  void finish_definitive(Outcome outcome, const std::string& winner, double now);
  void finish_with_best(double now);
  void stop_everything(double now);
  void check_exhaustion(double now);

  Job job_;
  ExecutorConfig cfg_;
  std::vector<std::string> portfolio_;
  Backend& backend_;

  Phase phase_ = Phase::Presolve;
  std::vector<RunState> states_;
  std::vector<Core> cores_;
  std::deque<ScheduleEntry> static_queue_;
  std::optional<ParallelSchedule> preset_;
  std::function<Schedule(double, const std::vector<std::string>&)> schedule_hook_;

  double nbh_cost_ = 0.0;
  bool nbh_started_ = false;
  bool nbh_done_ = false;
  double nbh_done_at_ = 0.0;

  std::optional<double> global_bound_;
  std::string bound_holder_;
  std::vector<bool> warned_no_inject_;

  std::vector<EventRecord> events_;
  std::optional<SolveResult> result_;
};

}  // namespace sunny

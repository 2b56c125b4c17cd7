#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sunny/scheduler.hpp"
#include "sunny/types.hpp"

namespace sunny {

// Lifecycle of one portfolio solver inside a run. Discarded (reached after a
// failure) is absorbing: the solver is never launched again.
enum class RunStatus { Pending, Running, Suspended, Finished, Failed, Discarded };

std::string_view to_string(RunStatus s);

// Per-solver execution tuning; entries come from the solver registry and
// override the run-wide defaults.
struct SolverOptions {
  std::string command;              // process template; {instance} required,
                                    // {obj_bound} iff bounds can be injected
  bool pause_supported = true;
  std::optional<double> wait_time;
  std::optional<double> restart_time;
  std::optional<double> mem_limit_mb;
  std::string obj_pattern;          // objective regex override
  std::string free_search_option;   // appended when search annotations are ignored
};

struct ExecutorConfig {
  int cores = 1;
  double timeout = 1800.0;      // T: overall budget in seconds
  double wait_time = 2.0;       // T_w: grace period after a fresh solution
  double restart_time = 5.0;    // T_r: stale-bound restart threshold
  int k = 70;                   // neighbourhood size
  Schedule static_schedule;     // presolve schedule, empty by default
  bool anytime = true;          // keep running past T until something is known
  std::optional<double> mem_limit_mb;
  bool ignore_search_annotations = false;
  double sim_overhead = 5.0;    // modeled presolve cost under the virtual clock
  std::map<std::string, SolverOptions> solver_options;
};

void validate_config(const ExecutorConfig& cfg);

// Mutable view of one solver during a run.
struct RunState {
  std::string solver_id;
  RunStatus status = RunStatus::Pending;
  int core = -1;                      // occupied core (0-based) while running
  double allotted_s = 0.0;            // current slice; +inf when open-ended
  double consumed_s = 0.0;            // solver time since launch or last restart
  double slice_used_s = 0.0;          // time already charged to the current slice
  double segment_start = 0.0;         // wall time the running segment began
  double clock_anchor = 0.0;          // launch-or-last-restart wall time
  std::optional<double> last_solution_at;
  std::optional<double> best_bound;   // best objective this solver knows
  std::optional<double> injected_bound;
  int restarts = 0;
  bool found_any = false;             // solutions in the current incarnation
};

// Keep a running solver alive at its slice boundary iff it produced a
// solution within the last wait_time seconds.
bool apply_waiting_policy(const RunState& st, double now, double wait_time);

// Restart a running solver iff it has gone restart_time seconds without a
// solution (counted from launch/restart or its last solution, whichever is
// later) while its own bound is strictly worse than the portfolio-wide best
// (no bound counts as worse).
bool apply_restart_policy(const RunState& st, std::optional<double> global_best,
                          Direction dir, double now, double restart_time);

struct EventRecord {
  double t = 0.0;
  std::string kind;
  std::string solver;
  std::optional<double> value;
  std::string detail;
};

struct SolveResult {
  Outcome outcome = Outcome::Unk;
  std::optional<double> best_bound;
  std::optional<std::string> winner;
  double wall_time_s = 0.0;
  std::vector<EventRecord> events;
};

}  // namespace sunny

#include "sunny/executor.hpp"

#include <limits>

#include "sunny/errors.hpp"

namespace sunny {

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Pending: return "pending";
    case RunStatus::Running: return "running";
    case RunStatus::Suspended: return "suspended";
    case RunStatus::Finished: return "finished";
    case RunStatus::Failed: return "failed";
    case RunStatus::Discarded: return "discarded";
  }
  return "pending";
}

void validate_config(const ExecutorConfig& cfg) {
  if (cfg.cores < 1) throw ValidationError("core count must be at least 1");
  if (cfg.timeout <= 0.0) throw ValidationError("timeout must be positive");
  if (cfg.wait_time < 0.0) throw ValidationError("wait time must be non-negative");
  if (cfg.restart_time < 0.0) throw ValidationError("restart time must be non-negative");
  if (cfg.k < 1) throw ValidationError("neighbourhood size must be at least 1");
  if (cfg.sim_overhead < 0.0) throw ValidationError("presolve overhead must be non-negative");
  if (!cfg.static_schedule.empty()) {
    // Only shape constraints here; the static schedule's total is free.
    validate_schedule(cfg.static_schedule, cfg.static_schedule.total());
  }
}

bool apply_waiting_policy(const RunState& st, double now, double wait_time) {
  return st.last_solution_at && (now - *st.last_solution_at) < wait_time;
}

bool apply_restart_policy(const RunState& st, std::optional<double> global_best,
                          Direction dir, double now, double restart_time) {
  if (!global_best) return false;
  double anchor = st.clock_anchor;
  if (st.last_solution_at) anchor = std::max(anchor, *st.last_solution_at);
  if (now - anchor < restart_time) return false;
  if (!st.best_bound) return true;  // knows nothing: the global bound helps
  return improves(*global_best, *st.best_bound, dir);
}

}  // namespace sunny

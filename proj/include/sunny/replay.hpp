#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sunny/engine.hpp"
#include "sunny/kb.hpp"

namespace sunny {

// What a recorded run will emit when replayed: solution timestamps (solver
// time, from that run's own zero) and at most one terminal signal.
struct ReplayPlan {
  struct Sol {
    double t = 0.0;
    double value = 0.0;
  };
  std::vector<Sol> solutions;
  std::optional<double> terminal_t;
  RawTerminal terminal = RawTerminal::Complete;
};

// Produces the plan for launching `solver` with an optional injected bound.
// Swappable so tests can script arbitrary behaviour (crashes included).
using PlanSource =
    std::function<ReplayPlan(const std::string& solver, std::optional<double> bound)>;

// Plan derived from a knowledge-base record. Without a bound the recorded
// run replays as-is. With one, the bound-conditioned record is used when the
// record carries it; otherwise the plain trace is filtered down to the
// strictly better solutions (the run itself is unchanged, it just reports
// less).
ReplayPlan plan_from_record(const SolverRecord& rec, ProblemKind kind,
                            Direction dir, double timeout,
                            std::optional<double> bound);

PlanSource kb_plan_source(const KnowledgeBase& kb, const std::string& instance_id);

// Simulated solver processes: event times are computed from plans, and
// pausing simply freezes a run's position. Everything is deterministic.
class ReplayBackend : public Backend {
 public:
  ReplayBackend(std::vector<std::string> portfolio, PlanSource source);

  void launch(const std::string& solver, double now,
              std::optional<double> bound) override;
  void pause(const std::string& solver, double now) override;
  void resume(const std::string& solver, double now,
              std::optional<double> bound) override;
  void stop(const std::string& solver, double now) override;
  bool can_pause(const std::string&) const override { return true; }
  bool can_inject(const std::string&) const override { return true; }

  struct NextEvent {
    double t = 0.0;
    SolverEvent event;
  };
  // Earliest pending event over running solvers; ties resolve to the solver
  // listed first, which keeps whole runs reproducible.
  std::optional<NextEvent> peek() const;
  void consume(const NextEvent& ev);

 private:
  struct Live {
    ReplayPlan plan;
    std::size_t cursor = 0;
    bool terminal_fired = false;
    bool running = false;
    double consumed = 0.0;       // solver time elapsed before this segment
    double segment_start = 0.0;  // wall time the current segment began
  };

  Live& live(const std::string& solver);
  const Live* find(const std::string& solver) const;
  std::optional<NextEvent> peek_one(const std::string& solver, const Live& l) const;

  std::vector<std::string> portfolio_;
  std::vector<std::optional<Live>> lives_;
  PlanSource source_;
};

// Runs the engine against a replay backend under a virtual clock until it
// reports a result. Simultaneous event and deadline: the event wins.
SolveResult run_virtual(Engine& engine, ReplayBackend& backend);

// Full portfolio run for one knowledge-base instance under simulated time.
// `candidates` limits the prediction neighbourhood (defaults to every other
// instance); the portfolio itself is the knowledge base's solver set.
SolveResult solve_replay(const KnowledgeBase& kb, const std::string& instance_id,
                         const ExecutorConfig& cfg,
                         const std::vector<std::string>* candidates = nullptr);

// Replays a fixed placement with no pre-solving phase and no prediction
// overhead; used to score externally supplied schedules.
SolveResult simulate_run(const KnowledgeBase& kb, const std::string& instance_id,
                         const ParallelSchedule& placement,
                         const ExecutorConfig& cfg);

}  // namespace sunny

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sunny/kb.hpp"
#include "sunny/types.hpp"

namespace sunny {

enum class Metric { Proven, Time, Score, Area };

std::string_view to_string(Metric m);
bool lower_is_better(Metric m);

// Best and worst objective values observed for one instance across the
// compared solver set (every reported solution counts, so each trace point
// falls inside [worst_known, best_known]). Undefined (any_solution = false)
// when no solver reported a value.
struct InstanceBounds {
  Direction direction = Direction::Minimize;
  bool any_solution = false;
  bool optimum_proven = false;
  double best_known = 0.0;
  double worst_known = 0.0;
};

InstanceBounds compute_bounds(Direction dir,
                              std::span<const SolverRecord> records);

// proven = 1 iff the run answered with a proof strictly before T (for CSPs a
// sat answer counts as the proof); time = the run time then, T otherwise.
struct ProvenTime {
  int proven = 0;
  double time_s = 0.0;
};

ProvenTime eval_proven_time(const SolverRecord& rec, ProblemKind kind, double T);

// Solution-quality score in {0} ∪ [0.25, 0.75] ∪ {1}: 0 with no answer, 1
// with a proof, otherwise 0.75 - 0.5 * |v - best| / |worst - best| for the
// run's final value v found strictly inside [0, T) (0.75 when best =
// worst). Values outside [worst, best] are rejected.
double eval_score(const SolverRecord& rec, const InstanceBounds& bounds, double T);

// Integral over [0, T] of 1 - q(t), where q steps from 0 to the score-like
// quality of each reported solution and to 1 once a proof lands. Equals T
// exactly when the run scores 0, and 0 for an instant proof.
double eval_area(const SolverRecord& rec, const InstanceBounds& bounds, double T);

// Per-base cache of the four metrics for every (solver, instance) pair, plus
// the oracle baselines derived from them. Score and area are defined for cop
// instances only; querying them for a csp is a logic error.
class MetricTable {
 public:
  explicit MetricTable(const KnowledgeBase& kb);

  double value(Metric m, std::size_t solver_idx, std::size_t instance_idx) const;
  double average(Metric m, std::size_t solver_idx) const;

  // Virtual best solver: per-instance best value across the whole portfolio.
  double vbs(Metric m, std::size_t instance_idx) const;

  // Virtual parallel solver: the c solvers with the best base-wide average
  // for m (ties by solver id), evaluated per instance as the best among
  // them. Selection with c = 1 is the single best solver; c = |portfolio|
  // coincides with the VBS.
  std::vector<std::size_t> vps_selection(Metric m, int c) const;
  double vps(Metric m, std::span<const std::size_t> selection,
             std::size_t instance_idx) const;

  const InstanceBounds& bounds(std::size_t instance_idx) const;
  const KnowledgeBase& kb() const { return kb_; }

 private:
  const KnowledgeBase& kb_;
  std::vector<InstanceBounds> bounds_;
  // values_[metric][solver][instance]; NaN where undefined.
  std::vector<std::vector<std::vector<double>>> values_;
};

}  // namespace sunny

#pragma once

#include <span>
#include <string>
#include <vector>

#include "sunny/kb.hpp"
#include "sunny/types.hpp"

namespace sunny {

struct ScheduleEntry {
  std::string solver_id;
  double time_s = 0.0;
};

// Sequential schedule: pairwise-distinct solvers with positive time slices
// summing to the budget (1 ms tolerance).
struct Schedule {
  std::vector<ScheduleEntry> entries;
  double total() const;
  bool empty() const { return entries.empty(); }
};

// Per-core sequential schedules; cores_[i] belongs to core i+1.
struct ParallelSchedule {
  std::vector<Schedule> cores;
};

// Schedule construction for a decision-problem neighbourhood:
//  1. selection: the smallest sub-portfolio reaching the full portfolio's
//     neighbourhood coverage, ties by smaller total best-case solving time
//     (timeouts count as T), then by lexicographic solver-id tuple;
//  2. allocation: one slot per (solver, neighbourhood instance it solves);
//     instances no solver answers add slots for the backup solver (the one
//     answering the most neighbourhood instances, time then id tie-break);
//     each slice is budget * slots / total;
//  3. ordering: ascending total neighbourhood solving time, ties by id.
// Zero-slot solvers are dropped.
Schedule sunny_schedule_csp(const Neighbourhood& nbh, const KnowledgeBase& kb,
                            double budget);
Schedule sunny_schedule_csp(const Neighbourhood& nbh, const KnowledgeBase& kb,
                            double budget, std::span<const std::string> solvers);

// Optimization variant: selection maximizes the summed per-instance best
// score (smallest cardinality, ties by smaller summed best-case area then id
// tuple); allocation is proportional to each solver's summed score
// (fractional slots); ordering is by ascending mean area.
Schedule sunny_schedule_cop(const Neighbourhood& nbh, const KnowledgeBase& kb,
                            double budget);
Schedule sunny_schedule_cop(const Neighbourhood& nbh, const KnowledgeBase& kb,
                            double budget, std::span<const std::string> solvers);

Schedule sunny_schedule(ProblemKind kind, const Neighbourhood& nbh,
                        const KnowledgeBase& kb, double budget,
                        std::span<const std::string> solvers);

// Spreads a sequential schedule over c cores. Solvers are ranked by
// descending allotted time (ties by schedule position); cores 1..min(c-1, n)
// each run the solver of that rank for the whole window T; the last core
// runs the remaining solvers in their original order with times scaled by
// T / (their allotted sum); any core beyond the solver count stays empty.
// With c = 1 this is the identity.
ParallelSchedule parallelise(const Schedule& sigma, int cores, double T);

void validate_schedule(const Schedule& s, double budget);

}  // namespace sunny

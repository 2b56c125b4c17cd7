#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sunny {

enum class ProblemKind { Csp, Cop };

// Objective sense. None is reserved for decision problems.
enum class Direction { Minimize, Maximize, None };

// Final answer vocabulary shared by knowledge-base records and solve results.
// Sat: solution(s) found without a completeness proof (for a CSP this is the
// definitive answer). Opt/Uns/Unb carry a proof. Unk: nothing learned.
enum class Outcome { Sat, Uns, Unk, Opt, Unb };

// One solution found during a run: objective value v reached after t seconds
// of solver time.
struct TracePoint {
  double t = 0.0;
  double value = 0.0;
};

struct ProblemInstance {
  std::string id;
  ProblemKind kind = ProblemKind::Csp;
  Direction direction = Direction::None;
  std::vector<double> features;
};

// How a solver behaves after being handed an externally found objective bound
// (it restarts its search constrained to strictly better solutions). Optional
// per record; when absent the replay model fast-forwards the plain trace.
struct BoundConditioned {
  Outcome outcome = Outcome::Unk;
  double time_s = 0.0;
  std::vector<TracePoint> trace;
};

// Recorded behaviour of one solver on one instance under timeout T.
struct SolverRecord {
  std::string solver_id;
  Outcome outcome = Outcome::Unk;
  double time_s = 0.0;
  std::vector<TracePoint> trace;
  std::optional<BoundConditioned> with_bound;
};

std::string_view to_string(ProblemKind k);
std::string_view to_string(Direction d);
std::string_view to_string(Outcome o);       // lower-case, CSV form
std::string_view outcome_label(Outcome o);   // upper-case, report form

ProblemKind parse_kind(std::string_view s);
Direction parse_direction(std::string_view s);
Outcome parse_outcome(std::string_view s);

// True when `challenger` is strictly better than `incumbent` for the given
// objective sense.
bool improves(double challenger, double incumbent, Direction dir);

}  // namespace sunny

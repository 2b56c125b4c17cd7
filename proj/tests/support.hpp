#pragma once

// Shared in-memory fixtures for the unit suites. The hand-built bases keep
// their expected outputs next to them; tests recompute those with independent
// brute-force oracles before comparing against the library.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sunny/kb.hpp"
#include "sunny/types.hpp"

namespace fixtures {

inline sunny::ProblemInstance inst(std::string id, sunny::ProblemKind kind,
                                   sunny::Direction dir,
                                   std::vector<double> features) {
  sunny::ProblemInstance p;
  p.id = std::move(id);
  p.kind = kind;
  p.direction = dir;
  p.features = std::move(features);
  return p;
}

inline sunny::SolverRecord rec(std::string solver, sunny::Outcome outcome,
                               double time_s,
                               std::vector<sunny::TracePoint> trace = {}) {
  sunny::SolverRecord r;
  r.solver_id = std::move(solver);
  r.outcome = outcome;
  r.time_s = time_s;
  r.trace = std::move(trace);
  return r;
}

inline sunny::SolverRecord with_bound(sunny::SolverRecord r,
                                      sunny::Outcome outcome, double time_s,
                                      std::vector<sunny::TracePoint> trace = {}) {
  sunny::BoundConditioned bc;
  bc.outcome = outcome;
  bc.time_s = time_s;
  bc.trace = std::move(trace);
  r.with_bound = std::move(bc);
  return r;
}

// Three decision solvers, five instances, i5 unsolved by everyone. The
// schedule over the full base as neighbourhood with a 1800 s budget is
// [(x, 1440), (y, 360)].
inline sunny::KnowledgeBase csp_oracle_kb() {
  using sunny::Outcome;
  const double T = 1800.0;
  auto K = sunny::ProblemKind::Csp;
  auto N = sunny::Direction::None;
  std::vector<sunny::ProblemInstance> is = {
      inst("i1", K, N, {1, 0}), inst("i2", K, N, {2, 0}),
      inst("i3", K, N, {3, 1}), inst("i4", K, N, {4, 1}),
      inst("i5", K, N, {5, 2}),
  };
  std::vector<std::string> solvers = {"x", "y", "z"};
  std::vector<std::vector<sunny::SolverRecord>> rs = {
      {rec("x", Outcome::Sat, 100), rec("y", Outcome::Unk, T),
       rec("z", Outcome::Sat, 400)},
      {rec("x", Outcome::Sat, 200), rec("y", Outcome::Unk, T),
       rec("z", Outcome::Unk, T)},
      {rec("x", Outcome::Unk, T), rec("y", Outcome::Sat, 50),
       rec("z", Outcome::Sat, 600)},
      {rec("x", Outcome::Sat, 300), rec("y", Outcome::Unk, T),
       rec("z", Outcome::Unk, T)},
      {rec("x", Outcome::Unk, T), rec("y", Outcome::Unk, T),
       rec("z", Outcome::Unk, T)},
  };
  return sunny::KnowledgeBase::from_parts(std::move(is), std::move(solvers),
                                          std::move(rs), T);
}

// Three optimizing solvers, four minimization instances. Every solver is
// needed for full score coverage; the schedule over the full base is
// [(u, 4800/7), (w, 600), (v, 3600/7)].
inline sunny::KnowledgeBase cop_oracle_kb() {
  using sunny::Outcome;
  const double T = 1800.0;
  auto K = sunny::ProblemKind::Cop;
  auto M = sunny::Direction::Minimize;
  std::vector<sunny::ProblemInstance> is = {
      inst("c1", K, M, {0, 1}), inst("c2", K, M, {1, 2}),
      inst("c3", K, M, {2, 3}), inst("c4", K, M, {3, 4}),
  };
  std::vector<std::string> solvers = {"u", "v", "w"};
  std::vector<std::vector<sunny::SolverRecord>> rs = {
      {rec("u", Outcome::Opt, 300, {{10, 50}}),
       rec("v", Outcome::Sat, T, {{5, 60}}), rec("w", Outcome::Unk, T)},
      {rec("u", Outcome::Sat, T, {{100, 40}}),
       rec("v", Outcome::Opt, 900, {{20, 30}}),
       rec("w", Outcome::Sat, T, {{50, 35}})},
      {rec("u", Outcome::Unk, T), rec("v", Outcome::Sat, T, {{600, 100}}),
       rec("w", Outcome::Opt, 100, {{5, 90}})},
      {rec("u", Outcome::Sat, T, {{9, 20}}), rec("v", Outcome::Unk, T),
       rec("w", Outcome::Sat, T, {{8, 22}})},
  };
  return sunny::KnowledgeBase::from_parts(std::move(is), std::move(solvers),
                                          std::move(rs), T);
}

// Five 2-D instances with a distance tie between a and b for the query
// (0.5, 0.5); three nearest are [a, b, c].
inline sunny::KnowledgeBase knn_kb() {
  using sunny::Outcome;
  const double T = 1800.0;
  auto K = sunny::ProblemKind::Csp;
  auto N = sunny::Direction::None;
  std::vector<sunny::ProblemInstance> is = {
      inst("a", K, N, {0, 0}),   inst("b", K, N, {1, 0}),
      inst("c", K, N, {0, 2}),   inst("d", K, N, {3, 3}),
      inst("e", K, N, {-1, -1}),
  };
  std::vector<std::string> solvers = {"s"};
  std::vector<std::vector<sunny::SolverRecord>> rs;
  for (std::size_t i = 0; i < is.size(); ++i)
    rs.push_back({rec("s", Outcome::Sat, 10)});
  return sunny::KnowledgeBase::from_parts(std::move(is), std::move(solvers),
                                          std::move(rs), T);
}

// Three all-solving-or-not solvers with distinct average times; selection
// oracles per metric are easy to read off.
inline sunny::KnowledgeBase vps_kb() {
  using sunny::Outcome;
  const double T = 1800.0;
  auto K = sunny::ProblemKind::Csp;
  auto N = sunny::Direction::None;
  std::vector<sunny::ProblemInstance> is = {
      inst("i1", K, N, {0}), inst("i2", K, N, {1}), inst("i3", K, N, {2})};
  std::vector<std::string> solvers = {"A", "B", "C"};
  std::vector<std::vector<sunny::SolverRecord>> rs = {
      {rec("A", Outcome::Sat, 10), rec("B", Outcome::Sat, 5),
       rec("C", Outcome::Sat, 100)},
      {rec("A", Outcome::Sat, 20), rec("B", Outcome::Sat, 40),
       rec("C", Outcome::Unk, T)},
      {rec("A", Outcome::Sat, 30), rec("B", Outcome::Sat, 40),
       rec("C", Outcome::Sat, 50)},
  };
  return sunny::KnowledgeBase::from_parts(std::move(is), std::move(solvers),
                                          std::move(rs), T);
}

// Deterministic pseudo-random doubles. mt19937_64 output is pinned by the
// standard; std::uniform_real_distribution is not, so scale raw draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double unit() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  std::uint64_t below(std::uint64_t n) { return eng_() % n; }

 private:
  std::mt19937_64 eng_;
};

// Random decision base: ~60% of (instance, solver) pairs solve, the rest
// time out. Feature space is 3-D uniform.
inline sunny::KnowledgeBase random_csp_kb(std::uint64_t seed, int n_solvers,
                                          int n_instances,
                                          double timeout = 1800.0) {
  using sunny::Outcome;
  Rng rng(seed);
  std::vector<std::string> solvers;
  for (int s = 0; s < n_solvers; ++s) solvers.push_back("s" + std::to_string(s));
  std::vector<sunny::ProblemInstance> is;
  std::vector<std::vector<sunny::SolverRecord>> rs;
  for (int i = 0; i < n_instances; ++i) {
    is.push_back(inst("p" + std::to_string(i), sunny::ProblemKind::Csp,
                      sunny::Direction::None,
                      {rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 10)}));
    std::vector<sunny::SolverRecord> row;
    for (const auto& s : solvers) {
      if (rng.unit() < 0.6)
        row.push_back(rec(s, Outcome::Sat, rng.uniform(0.5, timeout * 0.8)));
      else
        row.push_back(rec(s, Outcome::Unk, timeout));
    }
    rs.push_back(std::move(row));
  }
  return sunny::KnowledgeBase::from_parts(std::move(is), std::move(solvers),
                                          std::move(rs), timeout);
}

// Random minimization base with decreasing-value traces; ~30% of solving
// runs also prove optimality before the timeout.
inline sunny::KnowledgeBase random_cop_kb(std::uint64_t seed, int n_solvers,
                                          int n_instances,
                                          double timeout = 1800.0) {
  using sunny::Outcome;
  Rng rng(seed);
  std::vector<std::string> solvers;
  for (int s = 0; s < n_solvers; ++s) solvers.push_back("s" + std::to_string(s));
  std::vector<sunny::ProblemInstance> is;
  std::vector<std::vector<sunny::SolverRecord>> rs;
  for (int i = 0; i < n_instances; ++i) {
    is.push_back(inst("p" + std::to_string(i), sunny::ProblemKind::Cop,
                      sunny::Direction::Minimize,
                      {rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 10)}));
    std::vector<sunny::SolverRecord> row;
    for (const auto& s : solvers) {
      if (rng.unit() < 0.3) {
        row.push_back(rec(s, Outcome::Unk, timeout));
        continue;
      }
      int points = 1 + static_cast<int>(rng.below(4));
      std::vector<sunny::TracePoint> trace;
      double t = 0.0;
      double v = rng.uniform(100, 200);
      for (int p = 0; p < points; ++p) {
        t += rng.uniform(0.5, timeout / 5);
        v -= rng.uniform(1, 30);
        if (t >= timeout) break;
        trace.push_back({t, v});
      }
      if (trace.empty()) {
        row.push_back(rec(s, Outcome::Unk, timeout));
      } else if (rng.unit() < 0.3) {
        double done = trace.back().t + rng.uniform(1, timeout / 5);
        if (done < timeout)
          row.push_back(rec(s, Outcome::Opt, done, std::move(trace)));
        else
          row.push_back(rec(s, Outcome::Sat, timeout, std::move(trace)));
      } else {
        row.push_back(rec(s, Outcome::Sat, timeout, std::move(trace)));
      }
    }
    rs.push_back(std::move(row));
  }
  return sunny::KnowledgeBase::from_parts(std::move(is), std::move(solvers),
                                          std::move(rs), timeout);
}

}  // namespace fixtures

#include "sunny/scheduler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "sunny/errors.hpp"
#include "sunny/metrics.hpp"

namespace sunny {

namespace {

constexpr double kBudgetTolerance = 1e-3;  // 1 ms
constexpr double kScoreEps = 1e-9;

struct Candidates {
  std::vector<std::size_t> solver_idx;   // into kb portfolio
  std::vector<std::size_t> inst_idx;     // into kb instances
};

Candidates resolve(const Neighbourhood& nbh, const KnowledgeBase& kb,
                   double budget, std::span<const std::string> solvers,
                   ProblemKind expected_kind) {
  if (budget <= 0.0) throw ValidationError("schedule budget must be positive");
  if (nbh.ids.empty()) throw ValidationError("empty neighbourhood");
  Candidates c;
  for (const auto& id : nbh.ids) {
    const std::size_t i = kb.instance_index(id);
    if (kb.instances()[i].kind != expected_kind)
      throw ValidationError("instance '" + id + "' is not a " +
                            std::string(to_string(expected_kind)) +
                            "; neighbourhoods must be kind-pure");
    c.inst_idx.push_back(i);
  }
  if (solvers.empty()) {
    for (std::size_t s = 0; s < kb.portfolio().size(); ++s) c.solver_idx.push_back(s);
  } else {
    for (const auto& id : solvers) c.solver_idx.push_back(kb.solver_index(id));
  }
  if (c.solver_idx.empty()) throw ValidationError("no solvers to schedule");
  return c;
}

bool record_answers(const SolverRecord& rec, ProblemKind kind, double T) {
  if (kind == ProblemKind::Csp)
    return (rec.outcome == Outcome::Sat || rec.outcome == Outcome::Uns) && rec.time_s < T;
  return (rec.outcome == Outcome::Opt || rec.outcome == Outcome::Uns ||
          rec.outcome == Outcome::Unb) &&
         rec.time_s < T;
}

// Enumerates index subsets of {0..n-1} of the given cardinality in
// lexicographic order, invoking fn(members).
template <typename Fn>
void for_each_subset(std::size_t n, std::size_t card, Fn&& fn) {
  std::vector<std::size_t> comb(card);
  std::iota(comb.begin(), comb.end(), 0);
  while (true) {
    fn(comb);
    std::size_t i = card;
    while (i > 0) {
      --i;
      if (comb[i] != i + n - card) break;
      if (i == 0) return;
    }
    if (comb[i] == i + n - card) return;
    ++comb[i];
    for (std::size_t j = i + 1; j < card; ++j) comb[j] = comb[j - 1] + 1;
  }
}

std::vector<std::string> id_tuple(const KnowledgeBase& kb,
                                  const std::vector<std::size_t>& solver_pos,
                                  const Candidates& c) {
  std::vector<std::string> ids;
  ids.reserve(solver_pos.size());
  for (std::size_t p : solver_pos) ids.push_back(kb.portfolio()[c.solver_idx[p]]);
  std::sort(ids.begin(), ids.end());
  return ids;
}

Schedule finalize(std::vector<std::pair<std::string, double>> picks, double budget,
                  std::vector<double> order_key) {
  // order_key parallels picks; ascending, ties by id.
  std::vector<std::size_t> order(picks.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (order_key[a] != order_key[b]) return order_key[a] < order_key[b];
    return picks[a].first < picks[b].first;
  });
  Schedule sched;
  for (std::size_t i : order)
    if (picks[i].second > 0.0) sched.entries.push_back({picks[i].first, picks[i].second});
  validate_schedule(sched, budget);
  return sched;
}

}  // namespace

double Schedule::total() const {
  double sum = 0.0;
  for (const auto& e : entries) sum += e.time_s;
  return sum;
}

void validate_schedule(const Schedule& s, double budget) {
  double sum = 0.0;
  std::vector<std::string> ids;
  for (const auto& e : s.entries) {
    if (e.time_s <= 0.0)
      throw ValidationError("schedule slice for '" + e.solver_id + "' is not positive");
    sum += e.time_s;
    ids.push_back(e.solver_id);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw ValidationError("schedule repeats a solver");
  if (std::abs(sum - budget) > kBudgetTolerance)
    throw ValidationError("schedule sums to " + std::to_string(sum) +
                          ", expected " + std::to_string(budget));
}

Schedule sunny_schedule_csp(const Neighbourhood& nbh, const KnowledgeBase& kb,
                            double budget) {
  return sunny_schedule_csp(nbh, kb, budget, {});
}

Schedule sunny_schedule_csp(const Neighbourhood& nbh, const KnowledgeBase& kb,
                            double budget, std::span<const std::string> solvers) {
  const Candidates c = resolve(nbh, kb, budget, solvers, ProblemKind::Csp);
  const double T = kb.timeout();
  const std::size_t ns = c.solver_idx.size();
  const std::size_t ni = c.inst_idx.size();

  // solves[s] = bitmask over neighbourhood instances; times[s][i] with
  // timeouts counted as T.
  const std::size_t words = (ni + 63) / 64;
  std::vector<std::vector<std::uint64_t>> solves(ns, std::vector<std::uint64_t>(words, 0));
  std::vector<std::vector<double>> times(ns, std::vector<double>(ni, T));
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t i = 0; i < ni; ++i) {
      const SolverRecord& rec = kb.record_at(c.inst_idx[i], c.solver_idx[s]);
      if (record_answers(rec, ProblemKind::Csp, T)) {
        solves[s][i / 64] |= std::uint64_t{1} << (i % 64);
        times[s][i] = rec.time_s;
      }
    }
  }

  auto coverage_of = [&](const std::vector<std::size_t>& members) {
    std::size_t covered = 0;
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t bits = 0;
      for (std::size_t m : members) bits |= solves[m][w];
      covered += static_cast<std::size_t>(std::popcount(bits));
    }
    return covered;
  };
  std::vector<std::size_t> all(ns);
  std::iota(all.begin(), all.end(), 0);
  const std::size_t target = coverage_of(all);

  // Selection: smallest cardinality reaching the target coverage; ties by
  // total best-case time, then by id tuple.
  std::vector<std::size_t> selected;
  for (std::size_t card = 1; card <= ns && selected.empty(); ++card) {
    double best_time = std::numeric_limits<double>::infinity();
    std::vector<std::string> best_ids;
    std::vector<std::size_t> best_members;
    for_each_subset(ns, card, [&](const std::vector<std::size_t>& members) {
      if (coverage_of(members) != target) return;
      double total = 0.0;
      for (std::size_t i = 0; i < ni; ++i) {
        double lo = T;
        for (std::size_t m : members) lo = std::min(lo, times[m][i]);
        total += lo;
      }
      auto ids = id_tuple(kb, members, c);
      if (total < best_time - kBudgetTolerance ||
          (std::abs(total - best_time) <= kBudgetTolerance && ids < best_ids)) {
        best_time = total;
        best_ids = std::move(ids);
        best_members = members;
      }
    });
    selected = std::move(best_members);
  }
  if (selected.empty()) throw ValidationError("sub-portfolio selection failed");

  // Allocation: one slot per answered instance; unanswered instances feed the
  // backup solver.
  std::vector<double> slots(ns, 0.0);
  for (std::size_t m : selected)
    for (std::size_t w = 0; w < words; ++w)
      slots[m] += static_cast<double>(std::popcount(solves[m][w]));

  std::size_t uncovered = ni - target;
  if (uncovered > 0) {
    // Backup: answers the most neighbourhood instances; ties by smaller total
    // time, then by id.
    std::size_t backup = 0;
    double backup_solved = -1.0, backup_time = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      double solved = 0.0, total = 0.0;
      for (std::size_t w = 0; w < words; ++w)
        solved += static_cast<double>(std::popcount(solves[s][w]));
      for (std::size_t i = 0; i < ni; ++i) total += times[s][i];
      const std::string& sid = kb.portfolio()[c.solver_idx[s]];
      const std::string& bid = kb.portfolio()[c.solver_idx[backup]];
      if (solved > backup_solved ||
          (solved == backup_solved &&
           (total < backup_time - kBudgetTolerance ||
            (std::abs(total - backup_time) <= kBudgetTolerance && sid < bid)))) {
        backup = s;
        backup_solved = solved;
        backup_time = total;
      }
    }
    slots[backup] += static_cast<double>(uncovered);
    if (std::find(selected.begin(), selected.end(), backup) == selected.end())
      selected.push_back(backup);
  }

  double total_slots = 0.0;
  for (std::size_t m : selected) total_slots += slots[m];
  if (total_slots <= 0.0) throw ValidationError("no solver earned any slot");

  std::vector<std::pair<std::string, double>> picks;
  std::vector<double> order_key;
  for (std::size_t m : selected) {
    const std::string& id = kb.portfolio()[c.solver_idx[m]];
    picks.emplace_back(id, budget * slots[m] / total_slots);
    double total = 0.0;
    for (std::size_t i = 0; i < ni; ++i) total += times[m][i];
    order_key.push_back(total);
  }
  return finalize(std::move(picks), budget, std::move(order_key));
}

Schedule sunny_schedule_cop(const Neighbourhood& nbh, const KnowledgeBase& kb,
                            double budget) {
  return sunny_schedule_cop(nbh, kb, budget, {});
}

Schedule sunny_schedule_cop(const Neighbourhood& nbh, const KnowledgeBase& kb,
                            double budget, std::span<const std::string> solvers) {
  const Candidates c = resolve(nbh, kb, budget, solvers, ProblemKind::Cop);
  const double T = kb.timeout();
  const std::size_t ns = c.solver_idx.size();
  const std::size_t ni = c.inst_idx.size();

  // Scores and areas w.r.t. the compared solver set only.
  std::vector<std::vector<double>> score(ns, std::vector<double>(ni));
  std::vector<std::vector<double>> area(ns, std::vector<double>(ni));
  for (std::size_t i = 0; i < ni; ++i) {
    std::vector<SolverRecord> recs;
    recs.reserve(ns);
    for (std::size_t s = 0; s < ns; ++s)
      recs.push_back(kb.record_at(c.inst_idx[i], c.solver_idx[s]));
    const InstanceBounds bounds =
        compute_bounds(kb.instances()[c.inst_idx[i]].direction, recs);
    for (std::size_t s = 0; s < ns; ++s) {
      score[s][i] = eval_score(recs[s], bounds, T);
      area[s][i] = eval_area(recs[s], bounds, T);
    }
  }

  auto subset_score = [&](const std::vector<std::size_t>& members) {
    double sum = 0.0;
    for (std::size_t i = 0; i < ni; ++i) {
      double best = 0.0;
      for (std::size_t m : members) best = std::max(best, score[m][i]);
      sum += best;
    }
    return sum;
  };
  std::vector<std::size_t> all(ns);
  std::iota(all.begin(), all.end(), 0);
  const double target = subset_score(all);

  // Selection: smallest cardinality whose best subset score matches the full
  // portfolio's; ties by smaller summed best-case area, then id tuple.
  std::vector<std::size_t> selected;
  for (std::size_t card = 1; card <= ns && selected.empty(); ++card) {
    double best_area = std::numeric_limits<double>::infinity();
    std::vector<std::string> best_ids;
    std::vector<std::size_t> best_members;
    for_each_subset(ns, card, [&](const std::vector<std::size_t>& members) {
      if (subset_score(members) < target - kScoreEps) return;
      double atotal = 0.0;
      for (std::size_t i = 0; i < ni; ++i) {
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t m : members) lo = std::min(lo, area[m][i]);
        atotal += lo;
      }
      auto ids = id_tuple(kb, members, c);
      if (atotal < best_area - kBudgetTolerance ||
          (std::abs(atotal - best_area) <= kBudgetTolerance && ids < best_ids)) {
        best_area = atotal;
        best_ids = std::move(ids);
        best_members = members;
      }
    });
    selected = std::move(best_members);
  }
  if (selected.empty()) throw ValidationError("sub-portfolio selection failed");

  // Allocation proportional to summed score; a neighbourhood with no signal
  // at all falls back to the whole budget on the selected solver.
  std::vector<double> slots(ns, 0.0);
  double total_slots = 0.0;
  for (std::size_t m : selected) {
    for (std::size_t i = 0; i < ni; ++i) slots[m] += score[m][i];
    total_slots += slots[m];
  }

  std::vector<std::pair<std::string, double>> picks;
  std::vector<double> order_key;
  for (std::size_t m : selected) {
    const std::string& id = kb.portfolio()[c.solver_idx[m]];
    const double share = total_slots > 0.0
                             ? budget * slots[m] / total_slots
                             : budget / static_cast<double>(selected.size());
    picks.emplace_back(id, share);
    double mean_area = 0.0;
    for (std::size_t i = 0; i < ni; ++i) mean_area += area[m][i];
    order_key.push_back(mean_area / static_cast<double>(ni));
  }
  return finalize(std::move(picks), budget, std::move(order_key));
}

Schedule sunny_schedule(ProblemKind kind, const Neighbourhood& nbh,
                        const KnowledgeBase& kb, double budget,
                        std::span<const std::string> solvers) {
  return kind == ProblemKind::Csp ? sunny_schedule_csp(nbh, kb, budget, solvers)
                                  : sunny_schedule_cop(nbh, kb, budget, solvers);
}

ParallelSchedule parallelise(const Schedule& sigma, int cores, double T) {
  if (cores < 1) throw ValidationError("core count must be positive");
  validate_schedule(sigma, T);
  const std::size_t n = sigma.entries.size();
  const std::size_t c = static_cast<std::size_t>(cores);

  // Rank by descending allotted time, ties by original position.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sigma.entries[a].time_s > sigma.entries[b].time_s;
  });
  std::vector<std::size_t> rank(n);  // rank[pos] = 1-based rank
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r + 1;

  ParallelSchedule ps;
  ps.cores.resize(c);
  const std::size_t dedicated = std::min(c - 1, n);
  for (std::size_t i = 0; i < dedicated; ++i)
    ps.cores[i].entries.push_back({sigma.entries[order[i]].solver_id, T});

  // Last core: every solver ranked >= c, original order, scaled to fill T.
  double tail_sum = 0.0;
  for (std::size_t pos = 0; pos < n; ++pos)
    if (rank[pos] >= c) tail_sum += sigma.entries[pos].time_s;
  if (tail_sum > 0.0) {
    const double scale = T / tail_sum;
    for (std::size_t pos = 0; pos < n; ++pos)
      if (rank[pos] >= c)
        ps.cores[c - 1].entries.push_back(
            {sigma.entries[pos].solver_id, sigma.entries[pos].time_s * scale});
  }
  return ps;
}

}  // namespace sunny

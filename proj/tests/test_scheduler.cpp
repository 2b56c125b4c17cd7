#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "sunny/errors.hpp"
#include "sunny/metrics.hpp"
#include "sunny/scheduler.hpp"
#include "support.hpp"

using namespace sunny;

namespace {

const std::string kTable1 = std::string(TEST_DATA_DIR) + "/table1";

Neighbourhood whole_base(const KnowledgeBase& kb) {
  Neighbourhood n;
  for (const auto& inst : kb.instances()) n.ids.push_back(inst.id);
  return n;
}

// Brute-force reference for the decision variant: enumerate every subset mask
// and replay the selection/allocation/ordering rules from their definitions.
Schedule csp_reference(const KnowledgeBase& kb, const Neighbourhood& nbh,
                       double budget) {
  const double T = kb.timeout();
  const std::size_t ns = kb.portfolio().size();
  const std::size_t ni = nbh.ids.size();

  std::vector<std::vector<bool>> solves(ns, std::vector<bool>(ni, false));
  std::vector<std::vector<double>> times(ns, std::vector<double>(ni, T));
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t i = 0; i < ni; ++i) {
      const SolverRecord& r = kb.record(nbh.ids[i], kb.portfolio()[s]);
      if ((r.outcome == Outcome::Sat || r.outcome == Outcome::Uns) && r.time_s < T) {
        solves[s][i] = true;
        times[s][i] = r.time_s;
      }
    }

  auto coverage = [&](unsigned mask) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < ni; ++i)
      for (std::size_t s = 0; s < ns; ++s)
        if ((mask >> s & 1u) && solves[s][i]) {
          ++n;
          break;
        }
    return n;
  };
  auto best_time_sum = [&](unsigned mask) {
    double sum = 0;
    for (std::size_t i = 0; i < ni; ++i) {
      double lo = T;
      for (std::size_t s = 0; s < ns; ++s)
        if ((mask >> s & 1u)) lo = std::min(lo, times[s][i]);
      sum += lo;
    }
    return sum;
  };
  auto ids_of = [&](unsigned mask) {
    std::vector<std::string> ids;
    for (std::size_t s = 0; s < ns; ++s)
      if (mask >> s & 1u) ids.push_back(kb.portfolio()[s]);
    std::sort(ids.begin(), ids.end());
    return ids;
  };

  const std::size_t target = coverage((1u << ns) - 1);
  unsigned best_mask = 0;
  std::size_t best_card = ns + 1;
  double best_sum = std::numeric_limits<double>::infinity();
  std::vector<std::string> best_ids;
  for (unsigned mask = 1; mask < (1u << ns); ++mask) {
    if (coverage(mask) != target) continue;
    std::size_t card = static_cast<std::size_t>(__builtin_popcount(mask));
    double sum = best_time_sum(mask);
    auto ids = ids_of(mask);
    bool better = card < best_card ||
                  (card == best_card &&
                   (sum < best_sum - 1e-3 ||
                    (std::abs(sum - best_sum) <= 1e-3 && ids < best_ids)));
    if (better) {
      best_mask = mask;
      best_card = card;
      best_sum = sum;
      best_ids = ids;
    }
  }

  std::vector<double> slots(ns, 0);
  for (std::size_t s = 0; s < ns; ++s)
    if (best_mask >> s & 1u)
      for (std::size_t i = 0; i < ni; ++i)
        if (solves[s][i]) slots[s] += 1;

  std::size_t uncovered = ni - target;
  if (uncovered > 0) {
    std::size_t backup = 0;
    double bs = -1, bt = 0;
    for (std::size_t s = 0; s < ns; ++s) {
      double solved = 0, total = 0;
      for (std::size_t i = 0; i < ni; ++i) {
        solved += solves[s][i] ? 1 : 0;
        total += times[s][i];
      }
      bool better = solved > bs ||
                    (solved == bs &&
                     (total < bt - 1e-3 ||
                      (std::abs(total - bt) <= 1e-3 &&
                       kb.portfolio()[s] < kb.portfolio()[backup])));
      if (better) {
        backup = s;
        bs = solved;
        bt = total;
      }
    }
    slots[backup] += static_cast<double>(uncovered);
    best_mask |= 1u << backup;
  }

  double total_slots = std::accumulate(slots.begin(), slots.end(), 0.0);
  struct Row {
    std::string id;
    double share, key;
  };
  std::vector<Row> rows;
  for (std::size_t s = 0; s < ns; ++s) {
    if (!(best_mask >> s & 1u) || slots[s] <= 0) continue;
    double total = 0;
    for (std::size_t i = 0; i < ni; ++i) total += times[s][i];
    rows.push_back({kb.portfolio()[s], budget * slots[s] / total_slots, total});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.key != b.key ? a.key < b.key : a.id < b.id;
  });
  Schedule out;
  for (const Row& r : rows) out.entries.push_back({r.id, r.share});
  return out;
}

void check_same(const Schedule& got, const Schedule& want) {
  REQUIRE(got.entries.size() == want.entries.size());
  for (std::size_t i = 0; i < got.entries.size(); ++i) {
    CHECK(got.entries[i].solver_id == want.entries[i].solver_id);
    CHECK(got.entries[i].time_s ==
          doctest::Approx(want.entries[i].time_s).epsilon(1e-9));
  }
}

}  // namespace

TEST_CASE("reproduces the worked decision example") {
  KnowledgeBase kb =
      KnowledgeBase::load(kTable1 + "/instances.csv", kTable1 + "/runtimes.csv");
  Schedule sigma = sunny_schedule_csp(whole_base(kb), kb, 1800);

  REQUIRE(sigma.entries.size() == 3);
  CHECK(sigma.entries[0].solver_id == "s4");
  CHECK(sigma.entries[0].time_s == doctest::Approx(720).epsilon(1e-6));
  CHECK(sigma.entries[1].solver_id == "s1");
  CHECK(sigma.entries[1].time_s == doctest::Approx(720).epsilon(1e-6));
  CHECK(sigma.entries[2].solver_id == "s2");
  CHECK(sigma.entries[2].time_s == doctest::Approx(360).epsilon(1e-6));

  ParallelSchedule p = parallelise(sigma, 2, 1800);
  REQUIRE(p.cores.size() == 2);
  REQUIRE(p.cores[0].entries.size() == 1);
  CHECK(p.cores[0].entries[0].solver_id == "s4");
  CHECK(p.cores[0].entries[0].time_s == doctest::Approx(1800));
  REQUIRE(p.cores[1].entries.size() == 2);
  CHECK(p.cores[1].entries[0].solver_id == "s1");
  CHECK(p.cores[1].entries[0].time_s == doctest::Approx(1200));
  CHECK(p.cores[1].entries[1].solver_id == "s2");
  CHECK(p.cores[1].entries[1].time_s == doctest::Approx(600));

  check_same(sigma, csp_reference(kb, whole_base(kb), 1800));
}

TEST_CASE("decision schedule routes backup slots to the strongest solver") {
  KnowledgeBase kb = fixtures::csp_oracle_kb();
  Schedule sigma = sunny_schedule_csp(whole_base(kb), kb, 1800);

  REQUIRE(sigma.entries.size() == 2);
  CHECK(sigma.entries[0].solver_id == "x");
  CHECK(sigma.entries[0].time_s == doctest::Approx(1440).epsilon(1e-9));
  CHECK(sigma.entries[1].solver_id == "y");
  CHECK(sigma.entries[1].time_s == doctest::Approx(360).epsilon(1e-9));

  check_same(sigma, csp_reference(kb, whole_base(kb), 1800));
}

TEST_CASE("decision schedule matches brute force on random bases") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    KnowledgeBase kb = fixtures::random_csp_kb(seed, 5, 12);
    Schedule sigma = sunny_schedule_csp(whole_base(kb), kb, 1800);
    check_same(sigma, csp_reference(kb, whole_base(kb), 1800));
    validate_schedule(sigma, 1800);
  }
}

TEST_CASE("optimization schedule weights slices by summed score") {
  KnowledgeBase kb = fixtures::cop_oracle_kb();
  Schedule sigma = sunny_schedule_cop(whole_base(kb), kb, 1800);

  REQUIRE(sigma.entries.size() == 3);
  CHECK(sigma.entries[0].solver_id == "u");
  CHECK(sigma.entries[0].time_s == doctest::Approx(4800.0 / 7.0).epsilon(1e-9));
  CHECK(sigma.entries[1].solver_id == "w");
  CHECK(sigma.entries[1].time_s == doctest::Approx(600).epsilon(1e-9));
  CHECK(sigma.entries[2].solver_id == "v");
  CHECK(sigma.entries[2].time_s == doctest::Approx(3600.0 / 7.0).epsilon(1e-9));

  // Independent selection check: every proper subset loses summed best score.
  MetricTable table(kb);
  auto subset_score = [&](std::vector<std::size_t> members) {
    double sum = 0;
    for (std::size_t i = 0; i < kb.instances().size(); ++i) {
      double best = 0;
      for (std::size_t m : members)
        best = std::max(best, table.value(Metric::Score, m, i));
      sum += best;
    }
    return sum;
  };
  double full = subset_score({0, 1, 2});
  CHECK(full == doctest::Approx(3.75));
  CHECK(subset_score({0}) < full);
  CHECK(subset_score({1}) < full);
  CHECK(subset_score({2}) < full);
  CHECK(subset_score({0, 1}) < full);
  CHECK(subset_score({0, 2}) < full);
  CHECK(subset_score({1, 2}) < full);
}

TEST_CASE("degenerate neighbourhoods fall back to one catch-all slice") {
  using fixtures::inst;
  using fixtures::rec;
  const double T = 1800;

  KnowledgeBase blind = KnowledgeBase::from_parts(
      {inst("a", ProblemKind::Csp, Direction::None, {0}),
       inst("b", ProblemKind::Csp, Direction::None, {1})},
      {"s1", "s2"},
      {{rec("s1", Outcome::Unk, T), rec("s2", Outcome::Unk, T)},
       {rec("s1", Outcome::Unk, T), rec("s2", Outcome::Unk, T)}},
      T);
  Schedule sigma = sunny_schedule_csp(whole_base(blind), blind, 900);
  REQUIRE(sigma.entries.size() == 1);
  CHECK(sigma.entries[0].solver_id == "s1");
  CHECK(sigma.entries[0].time_s == doctest::Approx(900));

  KnowledgeBase blind_cop = KnowledgeBase::from_parts(
      {inst("a", ProblemKind::Cop, Direction::Minimize, {0}),
       inst("b", ProblemKind::Cop, Direction::Minimize, {1})},
      {"s1", "s2"},
      {{rec("s1", Outcome::Unk, T), rec("s2", Outcome::Unk, T)},
       {rec("s1", Outcome::Unk, T), rec("s2", Outcome::Unk, T)}},
      T);
  Schedule cop = sunny_schedule_cop(whole_base(blind_cop), blind_cop, 900);
  REQUIRE(cop.entries.size() == 1);
  CHECK(cop.entries[0].time_s == doctest::Approx(900));
}

TEST_CASE("spreading keeps each busy core filled to the window") {
  fixtures::Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const double T = 1800;
    int n = 1 + static_cast<int>(rng.below(6));
    Schedule sigma;
    std::vector<double> cuts{0, T};
    for (int i = 0; i + 1 < n; ++i) cuts.push_back(rng.uniform(1, T - 1));
    std::sort(cuts.begin(), cuts.end());
    for (int i = 0; i < n; ++i) {
      double len = cuts[i + 1] - cuts[i];
      if (len <= 0) len = 0.5;  // degenerate draw; keep the slice legal
      sigma.entries.push_back({"s" + std::to_string(i), len});
    }
    // Re-normalize to the exact budget after the degenerate fix-ups.
    double total = sigma.total();
    for (auto& e : sigma.entries) e.time_s *= T / total;

    for (int c = 1; c <= 8; ++c) {
      ParallelSchedule p = parallelise(sigma, c, T);
      REQUIRE(p.cores.size() == static_cast<std::size_t>(c));
      std::set<std::string> seen;
      std::size_t placed = 0;
      for (const auto& core : p.cores) {
        if (core.entries.empty()) continue;
        CHECK(core.total() == doctest::Approx(T).epsilon(1e-9));
        for (const auto& e : core.entries) {
          CHECK(seen.insert(e.solver_id).second);
          ++placed;
        }
      }
      CHECK(placed == sigma.entries.size());
      if (c == 1) check_same(p.cores[0], sigma);
    }
  }
}

TEST_CASE("schedule validation rejects broken inputs") {
  Schedule ok;
  ok.entries = {{"a", 100}, {"b", 50}};
  CHECK_NOTHROW(validate_schedule(ok, 150));

  Schedule overdrawn = ok;
  CHECK_THROWS_AS(validate_schedule(overdrawn, 151), ValidationError);

  Schedule dup;
  dup.entries = {{"a", 100}, {"a", 50}};
  CHECK_THROWS_AS(validate_schedule(dup, 150), ValidationError);

  Schedule nonpos;
  nonpos.entries = {{"a", 0}};
  CHECK_THROWS_AS(validate_schedule(nonpos, 0), ValidationError);

  KnowledgeBase kb = fixtures::csp_oracle_kb();
  CHECK_THROWS_AS(sunny_schedule_csp(whole_base(kb), kb, 0), ValidationError);
  CHECK_THROWS_AS(sunny_schedule_csp(Neighbourhood{}, kb, 100), ValidationError);

  // Kind purity: an optimization neighbourhood cannot feed the decision rule.
  KnowledgeBase cop = fixtures::cop_oracle_kb();
  CHECK_THROWS_AS(sunny_schedule_csp(whole_base(cop), cop, 100), ValidationError);
  CHECK_THROWS_AS(sunny_schedule_cop(whole_base(kb), kb, 100), ValidationError);

  CHECK_THROWS_AS(parallelise(ok, 0, 150), ValidationError);
}

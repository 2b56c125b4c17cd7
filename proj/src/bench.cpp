#include "sunny/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sunny/errors.hpp"
#include "sunny/replay.hpp"

namespace sunny {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kTieEps = 1e-9;

// A portfolio run reshaped like a runtime record so the metric evaluators
// apply to it unchanged. The trace is the improving global-bound sequence.
SolverRecord pseudo_record(const SolveResult& r, double T) {
  SolverRecord rec;
  rec.solver_id = "portfolio";
  rec.outcome = r.outcome;
  rec.time_s = std::min(r.wall_time_s, T);
  for (const auto& ev : r.events)
    if (ev.kind == "bound" && ev.value) rec.trace.push_back({ev.t, *ev.value});
  return rec;
}

struct Accum {
  double proven = 0.0;
  double time = 0.0;
  double score = 0.0;
  double area = 0.0;
  int n = 0;
};

void set_stat(StrategyStats& st, Metric m, double mean) {
  switch (m) {
    case Metric::Proven: st.proven_pct = 100.0 * mean; break;
    case Metric::Time: st.time_s = mean; break;
    case Metric::Score: st.score_x100 = 100.0 * mean; break;
    case Metric::Area: st.area_s = mean; break;
  }
}

std::vector<Metric> metrics_for(bool cop) {
  std::vector<Metric> m{Metric::Proven, Metric::Time};
  if (cop) {
    m.push_back(Metric::Score);
    m.push_back(Metric::Area);
  }
  return m;
}

// vps(c) per requested core count, then vbs, then every solver.
void append_baselines(KindSection& section, const MetricTable& table,
                      const std::vector<std::size_t>& members, bool cop,
                      const std::vector<int>& cores) {
  const KnowledgeBase& kb = table.kb();
  const auto metrics = metrics_for(cop);
  const int nsolvers = static_cast<int>(kb.portfolio().size());
  const double denom = static_cast<double>(members.size());

  for (int c : cores) {
    if (c > nsolvers) continue;  // oracle over more solvers than exist
    StrategyStats st;
    st.score_x100 = kNan;
    st.area_s = kNan;
    for (Metric m : metrics) {
      auto sel = table.vps_selection(m, c);
      double sum = 0.0;
      for (std::size_t i : members) sum += table.vps(m, sel, i);
      set_stat(st, m, sum / denom);
    }
    section.strategies.emplace_back("vps(" + std::to_string(c) + ")", st);
  }

  {
    StrategyStats st;
    st.score_x100 = kNan;
    st.area_s = kNan;
    for (Metric m : metrics) {
      double sum = 0.0;
      for (std::size_t i : members) sum += table.vbs(m, i);
      set_stat(st, m, sum / denom);
    }
    section.strategies.emplace_back("vbs", st);
  }

  for (std::size_t s = 0; s < kb.portfolio().size(); ++s) {
    StrategyStats st;
    st.score_x100 = kNan;
    st.area_s = kNan;
    for (Metric m : metrics) {
      double sum = 0.0;
      for (std::size_t i : members) sum += table.value(m, s, i);
      set_stat(st, m, sum / denom);
    }
    section.strategies.emplace_back("solver:" + kb.portfolio()[s], st);
  }
}

std::vector<std::size_t> kind_members(const KnowledgeBase& kb, ProblemKind kind) {
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < kb.instances().size(); ++i)
    if (kb.instances()[i].kind == kind) members.push_back(i);
  return members;
}

}  // namespace

FoldPlan make_folds(const KnowledgeBase& kb, std::uint64_t seed, int fold_count) {
  if (fold_count < 2) throw ValidationError("fold count must be at least 2");
  const std::size_t n = kb.instances().size();
  if (n < static_cast<std::size_t>(fold_count))
    throw ValidationError("knowledge base has " + std::to_string(n) +
                          " instances, fewer than " + std::to_string(fold_count) +
                          " folds");

  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& inst : kb.instances()) ids.push_back(inst.id);

  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(ids[i], ids[j]);
  }

  FoldPlan plan;
  plan.seed = seed;
  plan.folds.resize(static_cast<std::size_t>(fold_count));
  for (std::size_t i = 0; i < n; ++i)
    plan.folds[i % static_cast<std::size_t>(fold_count)].push_back(ids[i]);
  return plan;
}

BenchReport cross_validate(const KnowledgeBase& kb, const std::vector<int>& cores,
                           const ExecutorConfig& cfg, std::uint64_t seed) {
  if (cores.empty()) throw ValidationError("no core counts requested");
  for (int c : cores)
    if (c < 1) throw ValidationError("core counts must be positive");

  FoldPlan plan = make_folds(kb, seed);

  // Stable evaluation order: folds as planned, members by base position.
  for (auto& fold : plan.folds)
    std::sort(fold.begin(), fold.end(),
              [&kb](const std::string& a, const std::string& b) {
                return kb.instance_index(a) < kb.instance_index(b);
              });

  // runs[c][instance index] = simulated portfolio result
  std::map<int, std::map<std::size_t, SolveResult>> runs;
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    std::vector<std::string> training;
    for (std::size_t g = 0; g < plan.folds.size(); ++g)
      if (g != f)
        training.insert(training.end(), plan.folds[g].begin(), plan.folds[g].end());
    std::sort(training.begin(), training.end(),
              [&kb](const std::string& a, const std::string& b) {
                return kb.instance_index(a) < kb.instance_index(b);
              });

    for (const auto& id : plan.folds[f]) {
      const ProblemInstance& inst = kb.instance(id);
      std::vector<std::string> cands;
      for (const auto& t : training)
        if (kb.instance(t).kind == inst.kind) cands.push_back(t);
      for (int c : cores) {
        ExecutorConfig local = cfg;
        local.cores = c;
        local.anytime = false;  // replay scoring needs runs capped at T
        runs[c][kb.instance_index(id)] = solve_replay(kb, id, local, &cands);
      }
    }
  }

  const double T = kb.timeout();
  MetricTable table(kb);
  BenchReport report;
  report.seed = seed;
  report.timeout = T;
  report.cores = cores;

  for (ProblemKind kind : {ProblemKind::Csp, ProblemKind::Cop}) {
    std::vector<std::size_t> members = kind_members(kb, kind);
    if (members.empty()) continue;

    const bool cop = kind == ProblemKind::Cop;
    KindSection section;
    section.instances = static_cast<int>(members.size());
    const auto metrics = metrics_for(cop);

    // Portfolio rows, plus per-instance values kept for the win counts.
    std::map<int, std::map<Metric, std::vector<double>>> sunny_values;
    for (int c : cores) {
      Accum acc;
      for (std::size_t i : members) {
        const SolveResult& r = runs.at(c).at(i);
        SolverRecord rec = pseudo_record(r, T);
        ProvenTime pt = eval_proven_time(rec, kind, T);
        acc.proven += pt.proven;
        acc.time += pt.time_s;
        sunny_values[c][Metric::Proven].push_back(pt.proven);
        sunny_values[c][Metric::Time].push_back(pt.time_s);
        if (cop) {
          const InstanceBounds& b = table.bounds(i);
          double sc = eval_score(rec, b, T);
          double ar = eval_area(rec, b, T);
          acc.score += sc;
          acc.area += ar;
          sunny_values[c][Metric::Score].push_back(sc);
          sunny_values[c][Metric::Area].push_back(ar);
        }
        acc.n += 1;
      }
      StrategyStats st;
      st.proven_pct = 100.0 * acc.proven / acc.n;
      st.time_s = acc.time / acc.n;
      st.score_x100 = cop ? 100.0 * acc.score / acc.n : kNan;
      st.area_s = cop ? acc.area / acc.n : kNan;
      section.strategies.emplace_back("sunny(" + std::to_string(c) + ")", st);
    }

    append_baselines(section, table, members, cop, cores);

    for (int c : cores) {
      std::map<std::string, int> wins;
      for (Metric m : metrics) {
        int count = 0;
        const auto& vals = sunny_values.at(c).at(m);
        for (std::size_t idx = 0; idx < members.size(); ++idx) {
          double mine = vals[idx];
          double oracle = table.vbs(m, members[idx]);
          bool win = lower_is_better(m) ? mine < oracle - kTieEps
                                        : mine > oracle + kTieEps;
          if (win) ++count;
        }
        wins[std::string(to_string(m))] = count;
      }
      section.vbs_wins.emplace_back("sunny(" + std::to_string(c) + ")",
                                    std::move(wins));
    }

    if (cop)
      report.cop = std::move(section);
    else
      report.csp = std::move(section);
  }

  return report;
}

BenchReport metric_baselines(const KnowledgeBase& kb, const std::vector<int>& cores) {
  if (cores.empty()) throw ValidationError("no core counts requested");
  for (int c : cores)
    if (c < 1) throw ValidationError("core counts must be positive");

  MetricTable table(kb);
  BenchReport report;
  report.timeout = kb.timeout();
  report.cores = cores;
  for (ProblemKind kind : {ProblemKind::Csp, ProblemKind::Cop}) {
    std::vector<std::size_t> members = kind_members(kb, kind);
    if (members.empty()) continue;
    const bool cop = kind == ProblemKind::Cop;
    KindSection section;
    section.instances = static_cast<int>(members.size());
    append_baselines(section, table, members, cop, cores);
    if (cop)
      report.cop = std::move(section);
    else
      report.csp = std::move(section);
  }
  return report;
}

}  // namespace sunny

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sunny/executor.hpp"
#include "sunny/kb.hpp"
#include "sunny/metrics.hpp"

namespace sunny {

// Disjoint, exhaustive instance partition; sizes differ by at most one.
struct FoldPlan {
  std::uint64_t seed = 0;
  std::vector<std::vector<std::string>> folds;
};

// Seeded uniform shuffle, then round-robin assignment. The shuffle is
// hand-rolled over mt19937_64 so the plan is identical on every platform.
FoldPlan make_folds(const KnowledgeBase& kb, std::uint64_t seed,
                    int fold_count = 10);

// Dataset means for one strategy; NaN marks metrics a kind doesn't have.
struct StrategyStats {
  double proven_pct = 0.0;
  double time_s = 0.0;
  double score_x100 = 0.0;
  double area_s = 0.0;
};

struct KindSection {
  int instances = 0;
  std::vector<std::pair<std::string, StrategyStats>> strategies;
  // Per portfolio strategy: how many test instances strictly beat the VBS,
  // keyed by metric name.
  std::vector<std::pair<std::string, std::map<std::string, int>>> vbs_wins;
};

struct BenchReport {
  std::uint64_t seed = 0;
  double timeout = 0.0;
  std::vector<int> cores;
  std::optional<KindSection> csp;
  std::optional<KindSection> cop;
};

// 10-fold cross-validation under trace replay: each fold in turn is the test
// set, the rest form the prediction base; portfolio runs are simulated per
// core count, then averaged next to the VPS/VBS oracles and the individual
// solvers. Deterministic for a fixed seed.
BenchReport cross_validate(const KnowledgeBase& kb, const std::vector<int>& cores,
                           const ExecutorConfig& cfg, std::uint64_t seed);

// Just the oracle and per-solver baseline rows, straight from the records
// (no simulation, no folds).
BenchReport metric_baselines(const KnowledgeBase& kb, const std::vector<int>& cores);

}  // namespace sunny

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sunny/types.hpp"

namespace sunny {

// Immutable-after-load store of training instances and per-solver runtime
// records. Every (instance, solver) pair holds exactly one record; records of
// proven outcomes (opt/uns/unb) end strictly before the timeout, unk records
// consume it entirely. Feature vectors share one dimensionality; features
// that are constant across the whole base carry no information and are
// excluded from distance computations.
class KnowledgeBase {
 public:
  // Loads instances.csv (id,kind,direction,f1..fm) and runtimes.csv
  // ("#timeout=<T>" header, then instance_id,solver_id,outcome,time_s,trace
  // rows with optional bound_outcome,bound_time,bound_trace columns).
  static KnowledgeBase load(const std::string& instances_path,
                            const std::string& runtimes_path);

  // In-memory construction path; applies the same validation as load().
  // Records are keyed [instance][solver] following the given orders.
  static KnowledgeBase from_parts(std::vector<ProblemInstance> instances,
                                  std::vector<std::string> portfolio,
                                  std::vector<std::vector<SolverRecord>> records,
                                  double timeout);

  const std::vector<ProblemInstance>& instances() const { return instances_; }
  const std::vector<std::string>& portfolio() const { return portfolio_; }
  double timeout() const { return timeout_; }

  bool has_instance(std::string_view id) const;
  const ProblemInstance& instance(std::string_view id) const;
  std::size_t instance_index(std::string_view id) const;
  std::size_t solver_index(std::string_view id) const;

  const SolverRecord& record(std::string_view instance_id,
                             std::string_view solver_id) const;
  const SolverRecord& record_at(std::size_t instance_idx,
                                std::size_t solver_idx) const;

  // Min-max normalization of a raw feature vector onto [-1, 1] with clamping;
  // constant features are dropped, so the result has usable_features() dims.
  std::vector<double> normalize(std::span<const double> raw) const;
  std::size_t feature_count() const { return feature_count_; }
  std::size_t usable_features() const { return usable_.size(); }

 private:
  KnowledgeBase() = default;
  void index_and_validate();

  std::vector<ProblemInstance> instances_;
  std::vector<std::string> portfolio_;
  std::vector<std::vector<SolverRecord>> records_;  // [instance][solver]
  double timeout_ = 0.0;
  std::size_t feature_count_ = 0;

  std::vector<std::size_t> usable_;            // indices of non-constant features
  std::vector<double> feat_min_, feat_max_;    // per usable feature
  std::vector<std::string> instance_ids_;      // sorted copies for lookup
  std::vector<std::size_t> instance_order_;
  std::vector<std::string> solver_ids_;
  std::vector<std::size_t> solver_order_;
};

// k nearest training instances by Euclidean distance over normalized
// features, ascending; equal distances break by lexicographic instance id.
struct Neighbourhood {
  std::vector<std::string> ids;
};

// Candidates default to the whole base. |result| = min(k, |candidates|).
Neighbourhood neighbours(std::span<const double> raw_features,
                         const KnowledgeBase& kb, int k);
Neighbourhood neighbours(std::span<const double> raw_features,
                         const KnowledgeBase& kb, int k,
                         std::span<const std::string> candidates);

}  // namespace sunny

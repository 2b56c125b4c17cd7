#include "sunny/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sunny/errors.hpp"

namespace sunny {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool proven_outcome(const SolverRecord& rec, ProblemKind kind) {
  if (kind == ProblemKind::Csp)
    return rec.outcome == Outcome::Sat || rec.outcome == Outcome::Uns;
  return rec.outcome == Outcome::Opt || rec.outcome == Outcome::Uns ||
         rec.outcome == Outcome::Unb;
}

// Quality of a solution value relative to the instance bounds: the score a
// run would earn for ending on that value without a proof.
double band_quality(double value, const InstanceBounds& bounds) {
  const double spread = std::abs(bounds.worst_known - bounds.best_known);
  if (spread == 0.0) return 0.75;
  const double off = std::abs(value - bounds.best_known);
  if (off > spread + 1e-9 ||
      (bounds.direction == Direction::Minimize &&
       value < bounds.best_known - 1e-9) ||
      (bounds.direction == Direction::Maximize &&
       value > bounds.best_known + 1e-9))
    throw ValidationError("solution value " + std::to_string(value) +
                          " lies outside the known bounds [" +
                          std::to_string(bounds.worst_known) + ", " +
                          std::to_string(bounds.best_known) + "]");
  return 0.75 - 0.5 * off / spread;
}
}  // namespace

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Proven: return "proven";
    case Metric::Time: return "time";
    case Metric::Score: return "score";
    case Metric::Area: return "area";
  }
  return "proven";
}

bool lower_is_better(Metric m) {
  return m == Metric::Time || m == Metric::Area;
}

InstanceBounds compute_bounds(Direction dir, std::span<const SolverRecord> records) {
  InstanceBounds b;
  b.direction = dir;
  auto take = [&b, dir](double v) {
    if (!b.any_solution) {
      b.any_solution = true;
      b.best_known = b.worst_known = v;
      return;
    }
    if (improves(v, b.best_known, dir)) b.best_known = v;
    if (improves(b.worst_known, v, dir)) b.worst_known = v;
  };
  for (const SolverRecord& rec : records) {
    if (rec.outcome == Outcome::Opt) b.optimum_proven = true;
    for (const TracePoint& pt : rec.trace) take(pt.value);
    if (rec.with_bound)
      for (const TracePoint& pt : rec.with_bound->trace) take(pt.value);
  }
  return b;
}

ProvenTime eval_proven_time(const SolverRecord& rec, ProblemKind kind, double T) {
  if (proven_outcome(rec, kind) && rec.time_s < T) return {1, rec.time_s};
  return {0, T};
}

double eval_score(const SolverRecord& rec, const InstanceBounds& bounds, double T) {
  if (proven_outcome(rec, ProblemKind::Cop) && rec.time_s < T) return 1.0;
  // Only solutions landing inside [0, T) count, mirroring the area integral;
  // this keeps "area = T exactly when the score is 0" true at the boundary.
  const TracePoint* last = nullptr;
  for (const TracePoint& pt : rec.trace)
    if (pt.t < T) last = &pt;
  if (!last) return 0.0;
  return band_quality(last->value, bounds);
}

double eval_area(const SolverRecord& rec, const InstanceBounds& bounds, double T) {
  // Accumulate the step integral of 1 - q(t).
  const bool proven = proven_outcome(rec, ProblemKind::Cop) && rec.time_s < T;
  double area = 0.0;
  double prev_t = 0.0;
  double q = 0.0;
  for (const TracePoint& pt : rec.trace) {
    if (pt.t >= T) break;
    area += (pt.t - prev_t) * (1.0 - q);
    prev_t = pt.t;
    q = band_quality(pt.value, bounds);
  }
  if (proven && rec.time_s < T) {
    area += (rec.time_s - prev_t) * (1.0 - q);
    prev_t = rec.time_s;
    q = 1.0;
  }
  area += (T - prev_t) * (1.0 - q);
  return area;
}

MetricTable::MetricTable(const KnowledgeBase& kb) : kb_(kb) {
  const auto& instances = kb.instances();
  const std::size_t ni = instances.size();
  const std::size_t ns = kb.portfolio().size();
  const double T = kb.timeout();

  bounds_.resize(ni);
  for (std::size_t i = 0; i < ni; ++i) {
    std::vector<SolverRecord> recs;
    recs.reserve(ns);
    for (std::size_t s = 0; s < ns; ++s) recs.push_back(kb.record_at(i, s));
    bounds_[i] = compute_bounds(instances[i].direction, recs);
  }

  values_.assign(4, std::vector<std::vector<double>>(ns, std::vector<double>(ni, kNaN)));
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t i = 0; i < ni; ++i) {
      const SolverRecord& rec = kb.record_at(i, s);
      const ProblemKind kind = instances[i].kind;
      const ProvenTime pt = eval_proven_time(rec, kind, T);
      values_[0][s][i] = pt.proven;
      values_[1][s][i] = pt.time_s;
      if (kind == ProblemKind::Cop) {
        values_[2][s][i] = eval_score(rec, bounds_[i], T);
        values_[3][s][i] = eval_area(rec, bounds_[i], T);
      }
    }
  }
}

double MetricTable::value(Metric m, std::size_t solver_idx, std::size_t instance_idx) const {
  const double v = values_[static_cast<std::size_t>(m)][solver_idx][instance_idx];
  if (std::isnan(v))
    throw std::logic_error("metric " + std::string(to_string(m)) +
                           " is undefined for csp instance '" +
                           kb_.instances()[instance_idx].id + "'");
  return v;
}

double MetricTable::average(Metric m, std::size_t solver_idx) const {
  const auto& row = values_[static_cast<std::size_t>(m)][solver_idx];
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : row) {
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  if (n == 0)
    throw std::logic_error("metric " + std::string(to_string(m)) +
                           " is undefined for every instance");
  return sum / static_cast<double>(n);
}

double MetricTable::vbs(Metric m, std::size_t instance_idx) const {
  double best = kNaN;
  for (std::size_t s = 0; s < kb_.portfolio().size(); ++s) {
    const double v = value(m, s, instance_idx);
    if (std::isnan(best) || (lower_is_better(m) ? v < best : v > best)) best = v;
  }
  return best;
}

std::vector<std::size_t> MetricTable::vps_selection(Metric m, int c) const {
  const std::size_t ns = kb_.portfolio().size();
  if (c < 1 || static_cast<std::size_t>(c) > ns)
    throw ValidationError("vps size must lie in [1, |portfolio|]");
  std::vector<std::size_t> order(ns);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = average(m, a);
    const double vb = average(m, b);
    if (va != vb) return lower_is_better(m) ? va < vb : va > vb;
    return kb_.portfolio()[a] < kb_.portfolio()[b];
  });
  order.resize(static_cast<std::size_t>(c));
  return order;
}

double MetricTable::vps(Metric m, std::span<const std::size_t> selection,
                        std::size_t instance_idx) const {
  if (selection.empty()) throw ValidationError("empty vps selection");
  double best = kNaN;
  for (std::size_t s : selection) {
    const double v = value(m, s, instance_idx);
    if (std::isnan(best) || (lower_is_better(m) ? v < best : v > best)) best = v;
  }
  return best;
}

const InstanceBounds& MetricTable::bounds(std::size_t instance_idx) const {
  return bounds_[instance_idx];
}

}  // namespace sunny

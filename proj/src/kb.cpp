#include "sunny/kb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "sunny/csv.hpp"
#include "sunny/errors.hpp"

namespace sunny {

namespace {

constexpr double kTimeEps = 1e-9;

std::string loc(const std::string& path, std::size_t line_no) {
  return path + ":" + std::to_string(line_no);
}

std::vector<TracePoint> parse_trace(std::string_view field, const std::string& where) {
  std::vector<TracePoint> trace;
  std::string s = csv::trim(field);
  if (s.empty()) return trace;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(';', start);
    std::string item = s.substr(start, end == std::string::npos ? std::string::npos
                                                                : end - start);
    std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw ParseError(where, "trace entry '" + item + "' is not of the form t:v");
    TracePoint pt;
    pt.t = csv::parse_number(item.substr(0, colon), where);
    pt.value = csv::parse_number(item.substr(colon + 1), where);
    trace.push_back(pt);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return trace;
}

void check_trace(const std::vector<TracePoint>& trace, Direction dir, double horizon,
                 const std::string& what) {
  double prev_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const TracePoint& pt = trace[i];
    if (pt.t < 0.0) throw ValidationError(what + ": trace time " + std::to_string(pt.t) + " is negative");
    if (pt.t <= prev_t)
      throw ValidationError(what + ": trace times must be strictly increasing");
    if (pt.t > horizon + kTimeEps)
      throw ValidationError(what + ": trace time exceeds the record's horizon");
    if (i > 0 && !improves(pt.value, trace[i - 1].value, dir))
      throw ValidationError(what + ": trace values must strictly improve");
    prev_t = pt.t;
  }
}

}  // namespace

KnowledgeBase KnowledgeBase::load(const std::string& instances_path,
                                  const std::string& runtimes_path) {
  KnowledgeBase kb;

  // --- instances.csv ---
  auto ilines = csv::read_lines(instances_path);
  if (ilines.empty()) throw ParseError(instances_path, "empty file");
  auto header = csv::split_fields(ilines[0]);
  if (header.size() < 3 || csv::trim(header[0]) != "id" ||
      csv::trim(header[1]) != "kind" || csv::trim(header[2]) != "direction")
    throw ParseError(loc(instances_path, 1),
                     "header must start with id,kind,direction");
  kb.feature_count_ = header.size() - 3;

  for (std::size_t ln = 1; ln < ilines.size(); ++ln) {
    if (csv::trim(ilines[ln]).empty()) continue;
    auto fields = csv::split_fields(ilines[ln]);
    const std::string where = loc(instances_path, ln + 1);
    if (fields.size() != header.size())
      throw ParseError(where, "expected " + std::to_string(header.size()) +
                                  " fields, got " + std::to_string(fields.size()));
    ProblemInstance inst;
    inst.id = csv::trim(fields[0]);
    if (inst.id.empty()) throw ParseError(where, "empty instance id");
    try {
      inst.kind = parse_kind(csv::trim(fields[1]));
      inst.direction = parse_direction(csv::trim(fields[2]));
    } catch (const ParseError& e) {
      throw ParseError(where, e.what());
    }
    for (std::size_t f = 3; f < fields.size(); ++f)
      inst.features.push_back(csv::parse_number(fields[f], where));
    kb.instances_.push_back(std::move(inst));
  }

  // --- runtimes.csv ---
  auto rlines = csv::read_lines(runtimes_path);
  if (rlines.empty()) throw ParseError(runtimes_path, "empty file");
  const std::string head = csv::trim(rlines[0]);
  if (head.rfind("#timeout=", 0) != 0)
    throw ParseError(loc(runtimes_path, 1), "first line must be #timeout=<T>");
  kb.timeout_ = csv::parse_number(head.substr(9), loc(runtimes_path, 1));

  std::unordered_map<std::string, std::size_t> inst_idx;
  for (std::size_t i = 0; i < kb.instances_.size(); ++i)
    inst_idx[kb.instances_[i].id] = i;

  std::unordered_map<std::string, std::size_t> solver_idx;
  std::vector<std::vector<std::pair<bool, SolverRecord>>> cells;  // [inst][solver]

  for (std::size_t ln = 1; ln < rlines.size(); ++ln) {
    if (csv::trim(rlines[ln]).empty()) continue;
    auto fields = csv::split_fields(rlines[ln]);
    const std::string where = loc(runtimes_path, ln + 1);
    if (fields.size() != 5 && fields.size() != 8)
      throw ParseError(where, "expected 5 fields (or 8 with a bound-conditioned "
                              "record), got " + std::to_string(fields.size()));
    const std::string iid = csv::trim(fields[0]);
    auto it = inst_idx.find(iid);
    if (it == inst_idx.end())
      throw ParseError(where, "unknown instance '" + iid + "'");

    SolverRecord rec;
    rec.solver_id = csv::trim(fields[1]);
    if (rec.solver_id.empty()) throw ParseError(where, "empty solver id");
    try {
      rec.outcome = parse_outcome(csv::trim(fields[2]));
    } catch (const ParseError& e) {
      throw ParseError(where, e.what());
    }
    rec.time_s = csv::parse_number(fields[3], where);
    rec.trace = parse_trace(fields[4], where);
    if (fields.size() == 8) {
      BoundConditioned bc;
      try {
        bc.outcome = parse_outcome(csv::trim(fields[5]));
      } catch (const ParseError& e) {
        throw ParseError(where, e.what());
      }
      bc.time_s = csv::parse_number(fields[6], where);
      bc.trace = parse_trace(fields[7], where);
      rec.with_bound = std::move(bc);
    }

    auto [sit, inserted] = solver_idx.try_emplace(rec.solver_id, kb.portfolio_.size());
    if (inserted) kb.portfolio_.push_back(rec.solver_id);
    const std::size_t si = sit->second;

    cells.resize(kb.instances_.size());
    for (auto& row : cells) row.resize(kb.portfolio_.size());
    auto& cell = cells[it->second][si];
    if (cell.first)
      throw ParseError(where, "duplicate record for (" + iid + ", " + rec.solver_id + ")");
    cell = {true, std::move(rec)};
  }

  kb.records_.assign(kb.instances_.size(), {});
  for (std::size_t i = 0; i < kb.instances_.size(); ++i) {
    kb.records_[i].resize(kb.portfolio_.size());
    for (std::size_t s = 0; s < kb.portfolio_.size(); ++s) {
      if (i >= cells.size() || s >= cells[i].size() || !cells[i][s].first)
        throw ValidationError("missing record for (" + kb.instances_[i].id + ", " +
                              (s < kb.portfolio_.size() ? kb.portfolio_[s] : "?") + ")");
      kb.records_[i][s] = std::move(cells[i][s].second);
    }
  }

  kb.index_and_validate();
  return kb;
}

KnowledgeBase KnowledgeBase::from_parts(std::vector<ProblemInstance> instances,
                                        std::vector<std::string> portfolio,
                                        std::vector<std::vector<SolverRecord>> records,
                                        double timeout) {
  KnowledgeBase kb;
  kb.instances_ = std::move(instances);
  kb.portfolio_ = std::move(portfolio);
  kb.records_ = std::move(records);
  kb.timeout_ = timeout;
  if (!kb.instances_.empty()) kb.feature_count_ = kb.instances_[0].features.size();
  kb.index_and_validate();
  return kb;
}

void KnowledgeBase::index_and_validate() {
  if (timeout_ <= 0.0) throw ValidationError("timeout must be positive");
  if (instances_.empty()) throw ValidationError("knowledge base holds no instances");
  if (portfolio_.empty()) throw ValidationError("knowledge base holds no solvers");

  std::set<std::string> seen_ids;
  for (const auto& inst : instances_) {
    if (!seen_ids.insert(inst.id).second)
      throw ValidationError("duplicate instance id '" + inst.id + "'");
    if (inst.features.size() != feature_count_)
      throw ValidationError("instance '" + inst.id + "' has " +
                            std::to_string(inst.features.size()) + " features, expected " +
                            std::to_string(feature_count_));
    const bool is_csp = inst.kind == ProblemKind::Csp;
    if (is_csp != (inst.direction == Direction::None))
      throw ValidationError("instance '" + inst.id +
                            "': direction none and kind csp must coincide");
  }
  std::set<std::string> seen_solvers(portfolio_.begin(), portfolio_.end());
  if (seen_solvers.size() != portfolio_.size())
    throw ValidationError("duplicate solver id in portfolio");

  if (records_.size() != instances_.size())
    throw ValidationError("record matrix has wrong instance count");
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const ProblemInstance& inst = instances_[i];
    if (records_[i].size() != portfolio_.size())
      throw ValidationError("record matrix row for '" + inst.id + "' has wrong solver count");
    for (std::size_t s = 0; s < portfolio_.size(); ++s) {
      const SolverRecord& rec = records_[i][s];
      const std::string what = "record (" + inst.id + ", " + portfolio_[s] + ")";
      if (rec.solver_id != portfolio_[s])
        throw ValidationError(what + ": solver id mismatch ('" + rec.solver_id + "')");
      if (rec.time_s < 0.0 || rec.time_s > timeout_ + kTimeEps)
        throw ValidationError(what + ": time outside [0, T]");
      const bool proven = rec.outcome == Outcome::Opt || rec.outcome == Outcome::Uns ||
                          rec.outcome == Outcome::Unb;
      if (proven && rec.time_s >= timeout_ - kTimeEps)
        throw ValidationError(what + ": proven outcomes must end before the timeout");
      if (rec.outcome == Outcome::Unk && std::abs(rec.time_s - timeout_) > kTimeEps)
        throw ValidationError(what + ": unk records must consume the whole timeout");
      if (inst.kind == ProblemKind::Csp) {
        if (rec.outcome == Outcome::Opt || rec.outcome == Outcome::Unb)
          throw ValidationError(what + ": outcome not applicable to a csp");
        if (!rec.trace.empty())
          throw ValidationError(what + ": csp records carry no trace");
        if (rec.outcome == Outcome::Sat && rec.time_s >= timeout_ - kTimeEps)
          throw ValidationError(what + ": sat csp records must end before the timeout");
        if (rec.with_bound)
          throw ValidationError(what + ": bound-conditioned records apply to cops only");
      } else {
        if (rec.outcome == Outcome::Unk && !rec.trace.empty())
          throw ValidationError(what + ": unk records carry no trace");
        if (rec.outcome == Outcome::Uns && !rec.trace.empty())
          throw ValidationError(what + ": uns records carry no trace");
        if (rec.outcome == Outcome::Sat && rec.trace.empty())
          throw ValidationError(what + ": sat cop records must carry their solutions");
        check_trace(rec.trace, inst.direction,
                    rec.outcome == Outcome::Unk ? timeout_ : rec.time_s, what);
        if (rec.with_bound) {
          const BoundConditioned& bc = *rec.with_bound;
          if (bc.time_s < 0.0)
            throw ValidationError(what + ": bound-conditioned time is negative");
          check_trace(bc.trace, inst.direction,
                      bc.outcome == Outcome::Unk ? timeout_ : bc.time_s,
                      what + " (bound-conditioned)");
        }
      }
    }
  }

  // Normalization bounds; constant features are excluded from distances.
  usable_.clear();
  feat_min_.clear();
  feat_max_.clear();
  for (std::size_t f = 0; f < feature_count_; ++f) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& inst : instances_) {
      lo = std::min(lo, inst.features[f]);
      hi = std::max(hi, inst.features[f]);
    }
    if (hi > lo) {
      usable_.push_back(f);
      feat_min_.push_back(lo);
      feat_max_.push_back(hi);
    }
  }

  // Sorted views for binary-search lookups.
  instance_ids_.clear();
  instance_order_.clear();
  for (std::size_t i = 0; i < instances_.size(); ++i) instance_order_.push_back(i);
  std::sort(instance_order_.begin(), instance_order_.end(),
            [&](std::size_t a, std::size_t b) { return instances_[a].id < instances_[b].id; });
  for (std::size_t i : instance_order_) instance_ids_.push_back(instances_[i].id);

  solver_ids_.clear();
  solver_order_.clear();
  for (std::size_t s = 0; s < portfolio_.size(); ++s) solver_order_.push_back(s);
  std::sort(solver_order_.begin(), solver_order_.end(),
            [&](std::size_t a, std::size_t b) { return portfolio_[a] < portfolio_[b]; });
  for (std::size_t s : solver_order_) solver_ids_.push_back(portfolio_[s]);
}

bool KnowledgeBase::has_instance(std::string_view id) const {
  auto it = std::lower_bound(instance_ids_.begin(), instance_ids_.end(), id);
  return it != instance_ids_.end() && *it == id;
}

std::size_t KnowledgeBase::instance_index(std::string_view id) const {
  auto it = std::lower_bound(instance_ids_.begin(), instance_ids_.end(), id);
  if (it == instance_ids_.end() || *it != id)
    throw ValidationError("unknown instance '" + std::string(id) + "'");
  return instance_order_[static_cast<std::size_t>(it - instance_ids_.begin())];
}

const ProblemInstance& KnowledgeBase::instance(std::string_view id) const {
  return instances_[instance_index(id)];
}

std::size_t KnowledgeBase::solver_index(std::string_view id) const {
  auto it = std::lower_bound(solver_ids_.begin(), solver_ids_.end(), id);
  if (it == solver_ids_.end() || *it != id)
    throw ValidationError("unknown solver '" + std::string(id) + "'");
  return solver_order_[static_cast<std::size_t>(it - solver_ids_.begin())];
}

const SolverRecord& KnowledgeBase::record(std::string_view instance_id,
                                          std::string_view solver_id) const {
  return records_[instance_index(instance_id)][solver_index(solver_id)];
}

const SolverRecord& KnowledgeBase::record_at(std::size_t instance_idx,
                                             std::size_t solver_idx) const {
  return records_[instance_idx][solver_idx];
}

std::vector<double> KnowledgeBase::normalize(std::span<const double> raw) const {
  if (raw.size() != feature_count_)
    throw ValidationError("feature vector has " + std::to_string(raw.size()) +
                          " entries, expected " + std::to_string(feature_count_));
  std::vector<double> out;
  out.reserve(usable_.size());
  for (std::size_t u = 0; u < usable_.size(); ++u) {
    double x = raw[usable_[u]];
    double v = -1.0 + 2.0 * (x - feat_min_[u]) / (feat_max_[u] - feat_min_[u]);
    out.push_back(std::clamp(v, -1.0, 1.0));
  }
  return out;
}

Neighbourhood neighbours(std::span<const double> raw_features,
                         const KnowledgeBase& kb, int k) {
  std::vector<std::string> all;
  all.reserve(kb.instances().size());
  for (const auto& inst : kb.instances()) all.push_back(inst.id);
  return neighbours(raw_features, kb, k, all);
}

Neighbourhood neighbours(std::span<const double> raw_features,
                         const KnowledgeBase& kb, int k,
                         std::span<const std::string> candidates) {
  if (k <= 0) throw ValidationError("neighbourhood size must be positive");
  if (candidates.empty()) throw ValidationError("no candidate instances for the neighbourhood");
  const std::vector<double> q = kb.normalize(raw_features);

  struct Entry {
    double dist2;
    std::string id;
  };
  std::vector<Entry> entries;
  entries.reserve(candidates.size());
  for (const auto& cid : candidates) {
    const ProblemInstance& inst = kb.instance(cid);
    const std::vector<double> v = kb.normalize(inst.features);
    double d2 = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double d = q[i] - v[i];
      d2 += d * d;
    }
    entries.push_back({d2, cid});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    return a.id < b.id;
  });

  Neighbourhood nbh;
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), entries.size());
  for (std::size_t i = 0; i < take; ++i) nbh.ids.push_back(entries[i].id);
  return nbh;
}

}  // namespace sunny

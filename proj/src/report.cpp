#include "sunny/report.hpp"

#include <cmath>
#include <cstdio>

namespace sunny {

namespace {

using nlohmann::ordered_json;

std::string two_dp(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

ordered_json stat_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  // Two-decimal quantization keeps report bytes stable and table-like.
  return std::round(v * 100.0) / 100.0;
}

ordered_json section_to_json(const KindSection& s, bool cop) {
  ordered_json j;
  j["instances"] = s.instances;
  ordered_json strategies = ordered_json::object();
  for (const auto& [name, st] : s.strategies) {
    ordered_json row;
    row["proven_pct"] = stat_or_null(st.proven_pct);
    row["time_s"] = stat_or_null(st.time_s);
    if (cop) {
      row["score_x100"] = stat_or_null(st.score_x100);
      row["area_s"] = stat_or_null(st.area_s);
    }
    strategies[name] = std::move(row);
  }
  j["strategies"] = std::move(strategies);
  ordered_json wins = ordered_json::object();
  for (const auto& [name, per_metric] : s.vbs_wins) {
    ordered_json row = ordered_json::object();
    for (const auto& [metric, count] : per_metric) row[metric] = count;
    wins[name] = std::move(row);
  }
  j["vbs_wins"] = std::move(wins);
  return j;
}

}  // namespace

ordered_json report_to_json(const BenchReport& r) {
  ordered_json j;
  j["seed"] = r.seed;
  j["timeout_s"] = r.timeout;
  j["cores"] = r.cores;
  if (r.csp) j["csp"] = section_to_json(*r.csp, false);
  if (r.cop) j["cop"] = section_to_json(*r.cop, true);
  return j;
}

std::string report_to_csv(const BenchReport& r) {
  std::string out;
  auto emit_section = [&out](const KindSection& s, const char* kind, bool cop) {
    if (out.empty()) {
      out = "kind,metric";
      for (const auto& [name, st] : s.strategies) {
        out += ',';
        out += name;
      }
      out += '\n';
    }
    struct Row {
      const char* label;
      double StrategyStats::*field;
    };
    std::vector<Row> rows{{"proven_pct", &StrategyStats::proven_pct},
                          {"time_s", &StrategyStats::time_s}};
    if (cop) {
      rows.push_back({"score_x100", &StrategyStats::score_x100});
      rows.push_back({"area_s", &StrategyStats::area_s});
    }
    for (const Row& row : rows) {
      out += kind;
      out += ',';
      out += row.label;
      for (const auto& [name, st] : s.strategies) {
        out += ',';
        double v = st.*row.field;
        out += std::isnan(v) ? "" : two_dp(v);
      }
      out += '\n';
    }
  };
  if (r.csp) emit_section(*r.csp, "csp", false);
  if (r.cop) emit_section(*r.cop, "cop", true);
  return out;
}

ordered_json solve_result_to_json(const SolveResult& r) {
  ordered_json j;
  j["outcome"] = std::string(outcome_label(r.outcome));
  j["best_bound"] = r.best_bound ? ordered_json(*r.best_bound) : ordered_json(nullptr);
  j["winner"] = r.winner ? ordered_json(*r.winner) : ordered_json(nullptr);
  j["wall_time_s"] = r.wall_time_s;
  ordered_json events = ordered_json::array();
  for (const auto& ev : r.events) {
    ordered_json e;
    e["t"] = ev.t;
    e["kind"] = ev.kind;
    e["solver"] = ev.solver;
    e["value"] = ev.value ? ordered_json(*ev.value) : ordered_json(nullptr);
    e["detail"] = ev.detail;
    events.push_back(std::move(e));
  }
  j["events"] = std::move(events);
  return j;
}

}  // namespace sunny

#pragma once

#include <string>

#include "json.hpp"
#include "sunny/bench.hpp"
#include "sunny/executor.hpp"

namespace sunny {

// Stable-order JSON view of a benchmark report; serializing it twice for the
// same inputs yields identical bytes.
nlohmann::ordered_json report_to_json(const BenchReport& r);

// Table-shaped CSV: one row per (kind, metric), one column per strategy,
// cells fixed to two decimals.
std::string report_to_csv(const BenchReport& r);

// Run outcome as a schema-stable JSON object (null for absent fields).
nlohmann::ordered_json solve_result_to_json(const SolveResult& r);

}  // namespace sunny

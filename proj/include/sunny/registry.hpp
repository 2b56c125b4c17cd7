#pragma once

#include <map>
#include <string>
#include <vector>

#include "sunny/executor.hpp"

namespace sunny {

// Solver adapter definitions; section order fixes the portfolio order.
struct SolverRegistry {
  std::vector<std::string> order;
  std::map<std::string, SolverOptions> options;
};

// Key/value registry text:
//   [solver_id]
//   command = minizinc --solver x {instance} {obj_bound}
//   pause = true
//   wait_time = 2
//   restart_time = 5
//   mem_limit = 4096
//   obj_pattern = <regex with one capture group>
//   free_search_option = -f
// '#' and ';' start comments. command is mandatory and must contain
// {instance}; bound injection is enabled by the {obj_bound} placeholder.
SolverRegistry parse_registry_text(const std::string& text,
                                   const std::string& where);
SolverRegistry load_registry(const std::string& path);

}  // namespace sunny

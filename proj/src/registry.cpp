#include "sunny/registry.hpp"

#include <algorithm>
#include <set>

#include "sunny/csv.hpp"
#include "sunny/errors.hpp"

namespace sunny {

namespace {

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ParseError(where, "expected a boolean, got '" + v + "'");
}

}  // namespace

SolverRegistry parse_registry_text(const std::string& text,
                                   const std::string& where) {
  SolverRegistry reg;
  std::string current;
  std::set<std::string> seen_keys;

  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    const std::string at = where + ":" + std::to_string(lineno);

    std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    std::string body{csv::trim(line)};
    if (body.empty()) continue;

    if (body.front() == '[') {
      if (body.back() != ']') throw ParseError(at, "unterminated section header");
      std::string id{csv::trim(body.substr(1, body.size() - 2))};
      if (id.empty()) throw ParseError(at, "empty solver id");
      if (reg.options.count(id))
        throw ParseError(at, "duplicate solver section '" + id + "'");
      reg.order.push_back(id);
      reg.options[id] = SolverOptions{};
      current = id;
      seen_keys.clear();
      continue;
    }

    if (current.empty()) throw ParseError(at, "key outside any [solver] section");
    std::size_t eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(at, "expected key = value");
    std::string key{csv::trim(body.substr(0, eq))};
    std::string value{csv::trim(body.substr(eq + 1))};
    if (!seen_keys.insert(key).second)
      throw ParseError(at, "duplicate key '" + key + "'");

    SolverOptions& o = reg.options[current];
    if (key == "command") {
      o.command = value;
    } else if (key == "pause") {
      o.pause_supported = parse_bool(value, at);
    } else if (key == "wait_time") {
      o.wait_time = csv::parse_number(value, at);
    } else if (key == "restart_time") {
      o.restart_time = csv::parse_number(value, at);
    } else if (key == "mem_limit") {
      o.mem_limit_mb = csv::parse_number(value, at);
    } else if (key == "obj_pattern") {
      o.obj_pattern = value;
    } else if (key == "free_search_option") {
      o.free_search_option = value;
    } else {
      throw ParseError(at, "unknown key '" + key + "'");
    }
  }

  for (const auto& id : reg.order) {
    const SolverOptions& o = reg.options.at(id);
    if (o.command.empty())
      throw ParseError(where, "solver '" + id + "' has no command");
    if (o.command.find("{instance}") == std::string::npos)
      throw ParseError(where, "solver '" + id + "' command lacks {instance}");
    if (o.wait_time && *o.wait_time < 0)
      throw ParseError(where, "solver '" + id + "': wait_time must be >= 0");
    if (o.restart_time && *o.restart_time < 0)
      throw ParseError(where, "solver '" + id + "': restart_time must be >= 0");
    if (o.mem_limit_mb && *o.mem_limit_mb <= 0)
      throw ParseError(where, "solver '" + id + "': mem_limit must be positive");
  }
  if (reg.order.empty()) throw ParseError(where, "registry defines no solvers");
  return reg;
}

SolverRegistry load_registry(const std::string& path) {
  auto lines = csv::read_lines(path);
  std::string text;
  for (const auto& l : lines) {
    text += l;
    text += '\n';
  }
  return parse_registry_text(text, path);
}

}  // namespace sunny

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sunny/bench.hpp"
#include "sunny/csv.hpp"
#include "sunny/errors.hpp"
#include "sunny/kb.hpp"
#include "sunny/process.hpp"
#include "sunny/registry.hpp"
#include "sunny/replay.hpp"
#include "sunny/report.hpp"
#include "sunny/scheduler.hpp"

namespace {

constexpr int kExitAnswered = 0;
constexpr int kExitUnknown = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

sunny::KnowledgeBase load_kb(const std::string& dir) {
  return sunny::KnowledgeBase::load(dir + "/instances.csv", dir + "/runtimes.csv");
}

sunny::Schedule load_static_schedule(const std::string& path) {
  sunny::Schedule s;
  auto lines = sunny::csv::read_lines(path);
  std::size_t lineno = 0;
  for (const auto& raw : lines) {
    ++lineno;
    std::string line = sunny::csv::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = sunny::csv::split_fields(line);
    if (fields.size() != 2)
      throw sunny::ParseError(path + ":" + std::to_string(lineno),
                              "expected 'solver_id,seconds'");
    double t = sunny::csv::parse_number(fields[1],
                                        path + ":" + std::to_string(lineno));
    s.entries.push_back({fields[0], t});
  }
  return s;
}

std::vector<double> parse_feature_list(const std::string& text) {
  std::vector<double> v;
  for (const auto& f : sunny::csv::split_fields(text))
    v.push_back(sunny::csv::parse_number(f, "--features"));
  return v;
}

int outcome_exit(sunny::Outcome o) {
  return o == sunny::Outcome::Unk ? kExitUnknown : kExitAnswered;
}

void print_result(const sunny::SolveResult& r) {
  std::cout << sunny::solve_result_to_json(r).dump(2) << "\n";
}

// Non-flag problems with the invocation (bad mode combination etc.).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveArgs {
  std::string instance;
  std::string kb_dir;
  std::string solvers_file;
  std::string static_file;
  std::string features_text;
  std::string kind_text = "csp";
  std::string direction_text = "none";
  int cores = 1;
  double timeout = 1800.0;
  double wait_time = 2.0;
  double restart_time = 5.0;
  int k = 70;
  bool no_anytime = false;
  double mem_limit = 0.0;
  bool ignore_annotations = false;
  double sim_overhead = 5.0;
};

int run_solve(const SolveArgs& a) {
  sunny::ExecutorConfig cfg;
  cfg.cores = a.cores;
  cfg.timeout = a.timeout;
  cfg.wait_time = a.wait_time;
  cfg.restart_time = a.restart_time;
  cfg.k = a.k;
  cfg.anytime = !a.no_anytime;
  cfg.sim_overhead = a.sim_overhead;
  cfg.ignore_search_annotations = a.ignore_annotations;
  if (a.mem_limit > 0) cfg.mem_limit_mb = a.mem_limit;
  if (!a.static_file.empty()) cfg.static_schedule = load_static_schedule(a.static_file);

  std::optional<sunny::KnowledgeBase> kb;
  if (!a.kb_dir.empty()) kb = load_kb(a.kb_dir);

  if (a.solvers_file.empty()) {
    // Replay mode: the instance names a knowledge-base member.
    if (!kb) throw UsageError("no --kb given and no --solvers registry either");
    if (!kb->has_instance(a.instance))
      throw sunny::ValidationError("instance '" + a.instance +
                                   "' is not in the knowledge base");
    sunny::SolveResult r = sunny::solve_replay(*kb, a.instance, cfg);
    print_result(r);
    return outcome_exit(r.outcome);
  }

  // Process mode: the instance is a file handed to real solver commands.
  sunny::SolverRegistry reg = sunny::load_registry(a.solvers_file);
  cfg.solver_options = reg.options;

  sunny::Job job;
  job.instance = a.instance;
  job.kind = sunny::parse_kind(a.kind_text);
  job.direction = sunny::parse_direction(a.direction_text);

  std::function<sunny::Schedule(double, const std::vector<std::string>&)> hook;
  if (!a.features_text.empty()) {
    if (!kb)
      throw UsageError("--features needs --kb to predict against");
    std::vector<double> feats = parse_feature_list(a.features_text);
    std::vector<std::string> cands;
    for (const auto& inst : kb->instances())
      if (inst.kind == job.kind) cands.push_back(inst.id);
    if (cands.empty())
      throw sunny::ValidationError("knowledge base has no instances of this kind");
    const sunny::KnowledgeBase& base = *kb;
    auto kind = job.kind;
    int k = cfg.k;
    hook = [&base, feats, cands, kind, k](double budget,
                                          const std::vector<std::string>& allowed) {
      sunny::Neighbourhood nbh = sunny::neighbours(feats, base, k, cands);
      return sunny::sunny_schedule(kind, nbh, base, budget, allowed);
    };
  } else {
    std::cerr << "note: no --features given; prediction falls back to an even "
                 "split when needed\n";
  }

  sunny::SolveResult r = sunny::solve_processes(job, cfg, reg.order, hook);
  print_result(r);
  return outcome_exit(r.outcome);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel portfolio solver with k-NN schedule prediction"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key=value config file (sections per subcommand)");

  const int hw_cores =
      std::max(1, static_cast<int>(std::thread::hardware_concurrency()));

  SolveArgs sa;
  sa.cores = hw_cores;
  auto* solve = app.add_subcommand(
      "solve", "Solve one instance with the two-phase portfolio executor");
  solve->add_option("instance", sa.instance,
                    "Knowledge-base instance id (replay) or problem file (with "
                    "--solvers)")
      ->required();
  solve->add_option("--kb", sa.kb_dir,
                    "Knowledge-base directory holding instances.csv and "
                    "runtimes.csv")
      ->envname("SUNNY_PORT_KB")
      ->check(CLI::ExistingDirectory);
  solve->add_option("--solvers", sa.solvers_file,
                    "Solver registry file; switches to real-process execution")
      ->check(CLI::ExistingFile);
  solve->add_option("--cores", sa.cores, "Parallel cores available")
      ->capture_default_str();
  solve->add_option("--timeout", sa.timeout, "Overall budget T in seconds")
      ->capture_default_str();
  solve->add_option("--wait-time", sa.wait_time,
                    "T_w: seconds a fresh solution shields its solver from "
                    "interruption")
      ->capture_default_str();
  solve->add_option("--restart-time", sa.restart_time,
                    "T_r: seconds without improvement before an obsolete-bound "
                    "solver restarts")
      ->capture_default_str();
  solve->add_option("--static-schedule", sa.static_file,
                    "Presolve schedule file, lines of solver_id,seconds")
      ->check(CLI::ExistingFile);
  solve->add_option("--k", sa.k, "Neighbourhood size for prediction")
      ->capture_default_str();
  solve->add_flag("--no-anytime", sa.no_anytime,
                  "Stop at T with the best known answer instead of running on");
  solve->add_option("--mem-limit", sa.mem_limit,
                    "Per-solver memory cap in MB (process mode)");
  solve->add_flag("--ignore-search-annotations", sa.ignore_annotations,
                  "Append each solver's free-search option to its command");
  solve->add_option("--sim-overhead", sa.sim_overhead,
                    "Simulated prediction overhead in seconds (replay mode)")
      ->capture_default_str();
  solve->add_option("--features", sa.features_text,
                    "Comma-separated feature vector for prediction in process "
                    "mode");
  solve->add_option("--kind", sa.kind_text, "Problem kind: csp or cop")
      ->capture_default_str();
  solve->add_option("--direction", sa.direction_text,
                    "Objective direction: min, max or none")
      ->capture_default_str();

  std::string sc_kb, sc_instance, sc_features, sc_kind = "csp";
  int sc_cores = hw_cores, sc_k = 70;
  double sc_timeout = 1800.0;
  auto* schedule = app.add_subcommand(
      "schedule", "Print the predicted parallel schedule for an instance");
  schedule->add_option("--kb", sc_kb, "Knowledge-base directory")
      ->envname("SUNNY_PORT_KB")
      ->check(CLI::ExistingDirectory)
      ->required();
  schedule->add_option("--instance", sc_instance,
                       "Target instance id (features come from the base)");
  schedule->add_option("--features", sc_features,
                       "Raw feature vector, comma-separated (alternative to "
                       "--instance)");
  schedule->add_option("--kind", sc_kind, "Problem kind when using --features")
      ->capture_default_str();
  schedule->add_option("--cores", sc_cores, "Cores to spread the schedule over")
      ->capture_default_str();
  schedule->add_option("--timeout", sc_timeout, "Budget T in seconds")
      ->capture_default_str();
  schedule->add_option("--k", sc_k, "Neighbourhood size")
      ->capture_default_str();

  std::string mt_kb;
  std::vector<int> mt_cores{1, 2, 4, 8};
  bool mt_csv = false;
  auto* metrics = app.add_subcommand(
      "metrics", "Per-solver metric averages with VBS/VPS oracle rows");
  metrics->add_option("--kb", mt_kb, "Knowledge-base directory")
      ->envname("SUNNY_PORT_KB")
      ->check(CLI::ExistingDirectory)
      ->required();
  metrics->add_option("--cores", mt_cores, "VPS core counts")
      ->delimiter(',')
      ->capture_default_str();
  metrics->add_flag("--csv", mt_csv, "Emit the CSV table instead of JSON");

  std::string bn_kb, bn_out, bn_csv;
  std::vector<int> bn_cores{1, 2, 4, 8};
  std::uint64_t bn_seed = 1;
  double bn_timeout = 0.0, bn_sim_overhead = 5.0;
  int bn_k = 70;
  auto* bench = app.add_subcommand(
      "bench", "Cross-validated portfolio benchmark over a knowledge base");
  bench->add_option("--kb", bn_kb, "Knowledge-base directory")
      ->envname("SUNNY_PORT_KB")
      ->check(CLI::ExistingDirectory)
      ->required();
  bench->add_option("--cores", bn_cores, "Portfolio core counts to simulate")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--seed", bn_seed, "Fold-shuffle seed")
      ->capture_default_str();
  bench->add_option("--out", bn_out, "Write the JSON report to this file");
  bench->add_option("--csv", bn_csv, "Write the CSV table to this file");
  bench->add_option("--k", bn_k, "Neighbourhood size")->capture_default_str();
  bench->add_option("--sim-overhead", bn_sim_overhead,
                    "Simulated prediction overhead in seconds")
      ->capture_default_str();
  bench->add_option("--timeout", bn_timeout,
                    "Override T (default: the knowledge base's own)");

  std::string kv_dir;
  auto* kb_cmd = app.add_subcommand("kb", "Knowledge-base utilities");
  kb_cmd->require_subcommand(1);
  auto* kb_validate =
      kb_cmd->add_subcommand("validate", "Load a knowledge base and report");
  kb_validate->add_option("dir", kv_dir, "Knowledge-base directory")
      ->check(CLI::ExistingDirectory)
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*solve) return run_solve(sa);

    if (*schedule) {
      if (sc_instance.empty() == sc_features.empty())
        throw UsageError("give exactly one of --instance or --features");
      sunny::KnowledgeBase kb = load_kb(sc_kb);
      std::vector<double> feats;
      sunny::ProblemKind kind;
      if (!sc_instance.empty()) {
        const auto& inst = kb.instance(sc_instance);
        feats = inst.features;
        kind = inst.kind;
      } else {
        feats = parse_feature_list(sc_features);
        kind = sunny::parse_kind(sc_kind);
      }
      std::vector<std::string> cands;
      for (const auto& inst : kb.instances())
        if (inst.kind == kind) cands.push_back(inst.id);
      if (cands.empty())
        throw sunny::ValidationError("knowledge base has no instances of this kind");
      sunny::Neighbourhood nbh = sunny::neighbours(feats, kb, sc_k, cands);
      sunny::Schedule sigma =
          sunny::sunny_schedule(kind, nbh, kb, sc_timeout, kb.portfolio());
      sunny::ParallelSchedule placed =
          sunny::parallelise(sigma, sc_cores, sc_timeout);
      nlohmann::ordered_json cores_json = nlohmann::ordered_json::array();
      for (const auto& core : placed.cores) {
        nlohmann::ordered_json one = nlohmann::ordered_json::array();
        for (const auto& e : core.entries)
          one.push_back(nlohmann::ordered_json::array({e.solver_id, e.time_s}));
        cores_json.push_back(std::move(one));
      }
      nlohmann::ordered_json out;
      out["cores"] = std::move(cores_json);
      std::cout << out.dump() << "\n";
      return 0;
    }

    if (*metrics) {
      sunny::KnowledgeBase kb = load_kb(mt_kb);
      sunny::BenchReport r = sunny::metric_baselines(kb, mt_cores);
      if (mt_csv)
        std::cout << sunny::report_to_csv(r);
      else
        std::cout << sunny::report_to_json(r).dump(2) << "\n";
      return 0;
    }

    if (*bench) {
      sunny::KnowledgeBase kb = load_kb(bn_kb);
      sunny::ExecutorConfig cfg;
      cfg.k = bn_k;
      cfg.sim_overhead = bn_sim_overhead;
      cfg.timeout = bn_timeout > 0 ? bn_timeout : kb.timeout();
      sunny::BenchReport r = sunny::cross_validate(kb, bn_cores, cfg, bn_seed);
      nlohmann::ordered_json j = sunny::report_to_json(r);
      if (!bn_out.empty()) {
        std::ofstream f(bn_out);
        if (!f) throw sunny::ParseError(bn_out, "cannot write report");
        f << j.dump(2) << "\n";
      } else {
        std::cout << j.dump(2) << "\n";
      }
      if (!bn_csv.empty()) {
        std::ofstream f(bn_csv);
        if (!f) throw sunny::ParseError(bn_csv, "cannot write table");
        f << sunny::report_to_csv(r);
      }
      return 0;
    }

    if (*kb_validate) {
      sunny::KnowledgeBase kb = load_kb(kv_dir);
      char t[32];
      std::snprintf(t, sizeof t, "%g", kb.timeout());
      std::cout << kb.instances().size() << " instances, "
                << kb.portfolio().size() << " solvers, T=" << t << "\n";
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

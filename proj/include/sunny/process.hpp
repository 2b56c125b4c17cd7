#pragma once

#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "sunny/engine.hpp"

namespace sunny {

// Incremental reader of the solver output convention: a solution block ends
// with "----------", "==========" closes the search exhaustively,
// "=====UNSATISFIABLE=====" and "=====UNBOUNDED=====" are proofs. Objective
// values come from "% obj = <int>" comments or the last "objective"
// assignment inside the block (overridable with a custom pattern holding one
// capture group).
class SolutionStreamParser {
 public:
  explicit SolutionStreamParser(const std::string& obj_pattern = {});

  struct Item {
    SolverEvent::Kind kind = SolverEvent::Kind::Solution;
    std::optional<double> value;
    RawTerminal terminal = RawTerminal::Complete;
    std::string detail;
  };

  std::vector<Item> feed(std::string_view chunk);
  // Stream closed: anything but a clean post-terminal close is a crash.
  std::vector<Item> finish();
  bool saw_terminal() const { return terminal_seen_; }

 private:
  void scan_line(std::string_view line, std::vector<Item>& out);

  std::string partial_;
  std::vector<std::regex> patterns_;
  std::optional<double> block_value_;
  bool terminal_seen_ = false;
  bool finished_ = false;
};

// Fills {instance} and, when a bound is given, {obj_bound}; without a bound
// the whole whitespace-delimited token containing {obj_bound} is dropped.
std::string render_command(const std::string& tmpl, const std::string& instance,
                           std::optional<double> bound);

// One solver process behind /bin/sh, its stdout on a nonblocking pipe.
// Signals target the whole process group.
class Subprocess {
 public:
  Subprocess(const std::string& command, std::optional<double> mem_limit_mb);
  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  int fd() const { return fd_; }
  bool eof() const { return eof_; }
  // Drains whatever is buffered right now; empty result means nothing yet.
  std::string read_available();
  void suspend();
  void resume();
  void terminate();

 private:
  void reap();

  pid_t pid_ = -1;
  int fd_ = -1;
  bool eof_ = false;
  bool reaped_ = false;
};

// Real-process adapter: spawns registry commands, pauses via SIGSTOP when a
// solver supports it and falls back to kill + relaunch-with-bound otherwise.
class ProcessBackend : public Backend {
 public:
  ProcessBackend(std::string instance_path, const ExecutorConfig& cfg,
                 std::vector<std::string> portfolio);

  void launch(const std::string& solver, double now,
              std::optional<double> bound) override;
  void pause(const std::string& solver, double now) override;
  void resume(const std::string& solver, double now,
              std::optional<double> bound) override;
  void stop(const std::string& solver, double now) override;
  bool can_pause(const std::string& solver) const override;
  bool can_inject(const std::string& solver) const override;

  // Waits up to wait_ms for solver output and returns the parsed events in
  // arrival order. Suspended solvers keep their output buffered in the pipe.
  std::vector<SolverEvent> poll_events(int wait_ms);
  // True while any stream could still produce events.
  bool any_active() const;

 private:
  struct Slot {
    std::unique_ptr<Subprocess> proc;
    std::unique_ptr<SolutionStreamParser> parser;
    bool suspended = false;
    bool closed = false;  // stream fully consumed or solver stopped
  };

  const SolverOptions& opts(const std::string& solver) const;
  Slot& slot(const std::string& solver);
  void spawn(const std::string& solver, std::optional<double> bound);

  std::string instance_;
  const ExecutorConfig& cfg_;
  std::vector<std::string> portfolio_;
  std::vector<Slot> slots_;
};

// Wall-clock portfolio run over real processes. The schedule hook may be
// empty, in which case the budget is split evenly when prediction would be
// needed.
SolveResult solve_processes(
    const Job& job, const ExecutorConfig& cfg,
    const std::vector<std::string>& portfolio,
    std::function<Schedule(double, const std::vector<std::string>&)> hook = {});

}  // namespace sunny

#include "sunny/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>
#include <utility>

#include "sunny/errors.hpp"

namespace sunny {

namespace {

const char* kSolutionEnd = "----------";
const char* kComplete = "==========";
const char* kUnsat = "=====UNSATISFIABLE=====";
const char* kUnbounded = "=====UNBOUNDED=====";

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::string format_bound(double v) {
  if (std::nearbyint(v) == v && std::abs(v) < 1e15)
    return std::to_string(static_cast<long long>(v));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SolutionStreamParser::SolutionStreamParser(const std::string& obj_pattern) {
  if (!obj_pattern.empty()) {
    patterns_.emplace_back(obj_pattern);
  } else {
    patterns_.emplace_back(R"(^\s*%\s*obj\s*=\s*(-?\d+(?:\.\d+)?)\s*$)");
    patterns_.emplace_back(R"(\bobjective\s*[=:]\s*(-?\d+(?:\.\d+)?))");
  }
}

void SolutionStreamParser::scan_line(std::string_view line,
                                     std::vector<Item>& out) {
  if (terminal_seen_) return;  // anything after a proof is noise
  std::string_view body = strip(line);
  if (body == kSolutionEnd) {
    Item it;
    it.kind = SolverEvent::Kind::Solution;
    it.value = block_value_;
    out.push_back(it);
    block_value_.reset();
    return;
  }
  if (body == kComplete || body == kUnsat || body == kUnbounded) {
    Item it;
    it.kind = SolverEvent::Kind::Terminal;
    it.terminal = body == kComplete    ? RawTerminal::Complete
                  : body == kUnsat     ? RawTerminal::Unsat
                                       : RawTerminal::Unbounded;
    terminal_seen_ = true;
    out.push_back(it);
    return;
  }
  std::string text(body);
  for (const auto& re : patterns_) {
    std::smatch m;
    if (std::regex_search(text, m, re) && m.size() > 1) {
      block_value_ = std::strtod(m[1].str().c_str(), nullptr);
      return;
    }
  }
}

std::vector<SolutionStreamParser::Item> SolutionStreamParser::feed(
    std::string_view chunk) {
  std::vector<Item> out;
  for (char c : chunk) {
    if (c == '\n') {
      scan_line(partial_, out);
      partial_.clear();
    } else {
      partial_.push_back(c);
    }
  }
  return out;
}

std::vector<SolutionStreamParser::Item> SolutionStreamParser::finish() {
  std::vector<Item> out;
  if (finished_) return out;
  finished_ = true;
  if (!partial_.empty()) {
    scan_line(partial_, out);
    partial_.clear();
  }
  if (!terminal_seen_) {
    Item it;
    it.kind = SolverEvent::Kind::Terminal;
    it.terminal = RawTerminal::Crash;
    it.detail = "stream closed before any proof";
    out.push_back(it);
  }
  return out;
}

std::string render_command(const std::string& tmpl, const std::string& instance,
                           std::optional<double> bound) {
  static const std::string kInst = "{instance}";
  static const std::string kBound = "{obj_bound}";
  std::string cmd = tmpl;
  for (std::size_t pos = cmd.find(kInst); pos != std::string::npos;
       pos = cmd.find(kInst, pos))
    cmd.replace(pos, kInst.size(), instance);

  std::size_t pos = cmd.find(kBound);
  while (pos != std::string::npos) {
    if (bound) {
      cmd.replace(pos, kBound.size(), format_bound(*bound));
    } else {
      std::size_t begin = pos;
      while (begin > 0 && cmd[begin - 1] != ' ' && cmd[begin - 1] != '\t') --begin;
      std::size_t end = pos + kBound.size();
      while (end < cmd.size() && cmd[end] != ' ' && cmd[end] != '\t') ++end;
      while (end < cmd.size() && (cmd[end] == ' ' || cmd[end] == '\t')) ++end;
      cmd.erase(begin, end - begin);
    }
    pos = cmd.find(kBound);
  }
  return cmd;
}

Subprocess::Subprocess(const std::string& command,
                       std::optional<double> mem_limit_mb) {
  int pipefd[2];
  if (pipe(pipefd) != 0) throw std::runtime_error("pipe() failed");
  pid_ = fork();
  if (pid_ < 0) {
    close(pipefd[0]);
    close(pipefd[1]);
    throw std::runtime_error("fork() failed");
  }
  if (pid_ == 0) {
    setpgid(0, 0);
    if (mem_limit_mb) {
      rlimit lim;
      lim.rlim_cur = lim.rlim_max =
          static_cast<rlim_t>(*mem_limit_mb * 1024.0 * 1024.0);
      setrlimit(RLIMIT_AS, &lim);
    }
    dup2(pipefd[1], STDOUT_FILENO);
    close(pipefd[0]);
    close(pipefd[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid_, pid_);  // also from the parent: closes the startup race
  close(pipefd[1]);
  fd_ = pipefd[0];
  fcntl(fd_, F_SETFL, O_NONBLOCK);
}

Subprocess::~Subprocess() {
  terminate();
  if (fd_ >= 0) close(fd_);
}

std::string Subprocess::read_available() {
  std::string data;
  if (fd_ < 0 || eof_) return data;
  char buf[4096];
  for (;;) {
    ssize_t n = read(fd_, buf, sizeof buf);
    if (n > 0) {
      data.append(buf, static_cast<std::size_t>(n));
      continue;
    }
    if (n == 0) {
      eof_ = true;
    }
    break;  // EAGAIN or EOF or error; errors surface as silence then EOF
  }
  return data;
}

void Subprocess::suspend() {
  if (pid_ > 0 && !reaped_) kill(-pid_, SIGSTOP);
}

void Subprocess::resume() {
  if (pid_ > 0 && !reaped_) kill(-pid_, SIGCONT);
}

void Subprocess::terminate() {
  if (pid_ > 0 && !reaped_) {
    kill(-pid_, SIGCONT);  // a stopped process ignores SIGKILL until resumed
    kill(-pid_, SIGKILL);
    reap();
  }
}

void Subprocess::reap() {
  if (reaped_ || pid_ <= 0) return;
  int status = 0;
  waitpid(pid_, &status, 0);
  reaped_ = true;
}

ProcessBackend::ProcessBackend(std::string instance_path,
                               const ExecutorConfig& cfg,
                               std::vector<std::string> portfolio)
    : instance_(std::move(instance_path)),
      cfg_(cfg),
      portfolio_(std::move(portfolio)) {
  slots_.resize(portfolio_.size());
  for (const auto& s : portfolio_) {
    const SolverOptions& o = opts(s);
    if (o.command.empty())
      throw ValidationError("solver '" + s + "' has no command configured");
    if (o.command.find("{instance}") == std::string::npos)
      throw ValidationError("solver '" + s + "' command lacks {instance}");
  }
}

const SolverOptions& ProcessBackend::opts(const std::string& solver) const {
  auto it = cfg_.solver_options.find(solver);
  if (it == cfg_.solver_options.end())
    throw ValidationError("solver '" + solver + "' is not configured");
  return it->second;
}

ProcessBackend::Slot& ProcessBackend::slot(const std::string& solver) {
  for (std::size_t i = 0; i < portfolio_.size(); ++i)
    if (portfolio_[i] == solver) return slots_[i];
  throw std::logic_error("unknown solver '" + solver + "'");
}

void ProcessBackend::spawn(const std::string& solver, std::optional<double> bound) {
  const SolverOptions& o = opts(solver);
  std::string cmd = render_command(o.command, instance_, bound);
  if (cfg_.ignore_search_annotations && !o.free_search_option.empty())
    cmd += " " + o.free_search_option;
  std::optional<double> mem = o.mem_limit_mb ? o.mem_limit_mb : cfg_.mem_limit_mb;
  Slot& sl = slot(solver);
  sl.proc = std::make_unique<Subprocess>(cmd, mem);
  sl.parser = std::make_unique<SolutionStreamParser>(o.obj_pattern);
  sl.suspended = false;
  sl.closed = false;
}

void ProcessBackend::launch(const std::string& solver, double,
                            std::optional<double> bound) {
  spawn(solver, bound);
}

void ProcessBackend::pause(const std::string& solver, double) {
  Slot& sl = slot(solver);
  if (!sl.proc) return;
  if (opts(solver).pause_supported) {
    sl.proc->suspend();
    sl.suspended = true;
  } else {
    // No safe way to freeze it: throw the run away, resume() relaunches
    // from the best known bound.
    sl.proc.reset();
    sl.closed = true;
  }
}

void ProcessBackend::resume(const std::string& solver, double,
                            std::optional<double> bound) {
  Slot& sl = slot(solver);
  if (sl.proc && opts(solver).pause_supported) {
    sl.proc->resume();
    sl.suspended = false;
  } else {
    spawn(solver, bound);
  }
}

void ProcessBackend::stop(const std::string& solver, double) {
  Slot& sl = slot(solver);
  sl.proc.reset();  // destructor kills the group and reaps
  sl.closed = true;
}

bool ProcessBackend::can_pause(const std::string& solver) const {
  return opts(solver).pause_supported;
}

bool ProcessBackend::can_inject(const std::string& solver) const {
  return opts(solver).command.find("{obj_bound}") != std::string::npos;
}

bool ProcessBackend::any_active() const {
  for (const auto& sl : slots_)
    if (sl.proc && !sl.closed) return true;
  return false;
}

std::vector<SolverEvent> ProcessBackend::poll_events(int wait_ms) {
  std::vector<SolverEvent> out;
  std::vector<pollfd> fds;
  std::vector<std::size_t> who;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    Slot& sl = slots_[i];
    if (!sl.proc || sl.closed || sl.suspended || sl.proc->eof()) continue;
    fds.push_back(pollfd{sl.proc->fd(), POLLIN, 0});
    who.push_back(i);
  }
  if (fds.empty()) {
    if (wait_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(wait_ms));
    return out;
  }
  int rc = poll(fds.data(), fds.size(), wait_ms);
  if (rc <= 0) return out;

  for (std::size_t j = 0; j < fds.size(); ++j) {
    if ((fds[j].revents & (POLLIN | POLLHUP | POLLERR)) == 0) continue;
    Slot& sl = slots_[who[j]];
    const std::string& solver = portfolio_[who[j]];
    std::string data = sl.proc->read_available();
    auto items = sl.parser->feed(data);
    if (sl.proc->eof()) {
      auto tailitems = sl.parser->finish();
      items.insert(items.end(), tailitems.begin(), tailitems.end());
      sl.closed = true;
    }
    for (const auto& it : items) {
      SolverEvent ev;
      ev.kind = it.kind;
      ev.solver = solver;
      ev.value = it.value;
      ev.terminal = it.terminal;
      ev.detail = it.detail;
      out.push_back(std::move(ev));
    }
  }
  return out;
}

SolveResult solve_processes(
    const Job& job, const ExecutorConfig& cfg,
    const std::vector<std::string>& portfolio,
    std::function<Schedule(double, const std::vector<std::string>&)> hook) {
  ProcessBackend backend(job.instance, cfg, portfolio);
  Engine engine(job, cfg, portfolio, backend);
  engine.set_nbh_cost(0.0);
  if (hook) {
    engine.set_schedule_hook(std::move(hook));
  } else {
    engine.set_schedule_hook(
        [](double budget, const std::vector<std::string>& allowed) {
          Schedule even;
          for (const auto& s : allowed)
            even.entries.push_back(
                {s, budget / static_cast<double>(allowed.size())});
          return even;
        });
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto now = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  engine.begin(now());
  while (!engine.done()) {
    double dl = engine.next_deadline();
    double t = now();
    int wait_ms = 100;
    if (std::isfinite(dl)) {
      double gap = (dl - t) * 1000.0;
      wait_ms = std::clamp(static_cast<int>(gap) + 1, 0, 100);
    }
    auto events = backend.poll_events(wait_ms);
    double stamp = now();
    for (const auto& ev : events) {
      engine.on_event(stamp, ev);
      if (engine.done()) break;
    }
    if (engine.done()) break;
    dl = engine.next_deadline();
    if (std::isfinite(dl) && now() >= dl) {
      engine.on_deadline(now());
    } else if (!std::isfinite(dl) && !backend.any_active()) {
      engine.on_quiescence(now());
    }
  }
  return engine.result();
}

}  // namespace sunny

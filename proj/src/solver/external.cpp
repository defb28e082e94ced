#include "keyforge/error.hpp"
#include "keyforge/solver.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

namespace kf {

BackendSpec BackendSpec::embedded(double timeout) {
  BackendSpec spec;
  spec.timeout = timeout;
  return spec;
}

BackendSpec BackendSpec::external(const std::string &command_line, double timeout, std::string name) {
  BackendSpec spec;
  spec.kind = BackendKind::External;
  std::istringstream ss(command_line);
  for (std::string word; ss >> word;)
    spec.command.push_back(word);
  if (spec.command.empty())
    throw Error(ErrorKind::InvalidArgument, "empty solver command");
  spec.timeout = timeout;
  spec.name = name.empty() ? std::filesystem::path(spec.command[0]).filename().string() : std::move(name);
  return spec;
}

std::string resolve_executable(const std::string &exe) {
  if (exe.empty())
    return {};
  if (exe.find('/') != std::string::npos)
    return ::access(exe.c_str(), X_OK) == 0 ? exe : std::string();
  const char *path = std::getenv("PATH");
  if (!path)
    return {};
  std::string_view rest(path);
  while (true) {
    auto colon = rest.find(':');
    std::string dir(rest.substr(0, colon));
    std::string candidate = (dir.empty() ? std::string(".") : dir) + "/" + exe;
    if (::access(candidate.c_str(), X_OK) == 0)
      return candidate;
    if (colon == std::string_view::npos)
      break;
    rest.remove_prefix(colon + 1);
  }
  return {};
}

namespace {

/// Removes the file when going out of scope.
struct TempFile {
  std::string path;
  ~TempFile() {
    if (!path.empty())
      ::unlink(path.c_str());
  }
};

TempFile write_temp_dimacs(const CnfFormula &formula) {
  std::string dir = "/tmp";
  if (const char *t = std::getenv("TMPDIR"); t && *t)
    dir = t;
  std::string templ = dir + "/keyforge-XXXXXX.cnf";
  int fd = ::mkstemps(templ.data(), 4);
  if (fd < 0)
    throw Error(ErrorKind::Io, "cannot create temporary file in " + dir + ": " + std::strerror(errno));
  TempFile file{templ};
  std::string text = to_dimacs(formula);
  std::size_t done = 0;
  while (done < text.size()) {
    ssize_t n = ::write(fd, text.data() + done, text.size() - done);
    if (n < 0 && errno == EINTR)
      continue;
    if (n <= 0) {
      ::close(fd);
      throw Error(ErrorKind::Io, "cannot write " + templ + ": " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
  ::close(fd);
  return file;
}

} // namespace

SolveResult solve_external(const CnfFormula &formula, const BackendSpec &spec) {
  if (spec.command.empty())
    throw Error(ErrorKind::SpawnFailure, "no solver command configured");
  const auto start = std::chrono::steady_clock::now();
  TempFile cnf = write_temp_dimacs(formula);

  std::vector<std::string> args;
  bool substituted = false;
  for (const auto &a : spec.command) {
    auto pos = a.find("{cnf}");
    if (pos == std::string::npos) {
      args.push_back(a);
    } else {
      args.push_back(a.substr(0, pos) + cnf.path + a.substr(pos + 5));
      substituted = true;
    }
  }
  if (!substituted)
    args.push_back(cnf.path);
  std::vector<char *> argv;
  for (auto &a : args)
    argv.push_back(a.data());
  argv.push_back(nullptr);

  int out_pipe[2];
  int err_pipe[2];
  if (::pipe2(out_pipe, O_CLOEXEC) != 0 || ::pipe2(err_pipe, O_CLOEXEC) != 0)
    throw Error(ErrorKind::SpawnFailure, std::string("pipe: ") + std::strerror(errno));

  pid_t pid = ::fork();
  if (pid < 0)
    throw Error(ErrorKind::SpawnFailure, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(out_pipe[1], STDOUT_FILENO);
    int devnull = ::open("/dev/null", O_WRONLY);
    if (devnull >= 0)
      ::dup2(devnull, STDERR_FILENO);
    ::execvp(argv[0], argv.data());
    int e = errno;
    [[maybe_unused]] auto n = ::write(err_pipe[1], &e, sizeof e);
    ::_exit(127);
  }
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);

  int exec_errno = 0;
  ssize_t got = ::read(err_pipe[0], &exec_errno, sizeof exec_errno);
  ::close(err_pipe[0]);
  if (got == static_cast<ssize_t>(sizeof exec_errno)) {
    ::close(out_pipe[0]);
    int status = 0;
    ::waitpid(pid, &status, 0);
    throw Error(ErrorKind::SpawnFailure, "cannot run '" + spec.command[0] + "': " + std::strerror(exec_errno));
  }

  const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(spec.timeout));
  std::string output;
  bool timed_out = false;
  char buf[65536];
  for (;;) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      timed_out = true;
      ::kill(pid, SIGKILL);
      break;
    }
    auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    pollfd pfd{out_pipe[0], POLLIN, 0};
    int r = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(wait_ms + 1, 1000)));
    if (r < 0 && errno == EINTR)
      continue;
    if (r <= 0)
      continue;
    ssize_t n = ::read(out_pipe[0], buf, sizeof buf);
    if (n < 0 && errno == EINTR)
      continue;
    if (n <= 0)
      break;
    output.append(buf, static_cast<std::size_t>(n));
  }
  ::close(out_pipe[0]);

  int status = 0;
  rusage usage{};
  while (::wait4(pid, &status, 0, &usage) < 0 && errno == EINTR) {
  }

  SolveResult result;
  result.resources.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.resources.peak_memory = static_cast<std::uint64_t>(usage.ru_maxrss) * 1024U;
  if (timed_out) {
    result.status = SolveStatus::Timeout;
    return result;
  }

  SolverOutput parsed = parse_solver_output(output, formula.num_vars());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (parsed.verdict == SolverVerdict::Unknown && output.find("\ns ") == std::string::npos &&
      !output.starts_with("s ")) {
    if (code == 20) {
      parsed.verdict = SolverVerdict::Unsat;
    } else if (code == 10) {
      throw Error(ErrorKind::MalformedOutput, spec.name + " exited with 10 but printed no model");
    } else {
      throw Error(ErrorKind::MalformedOutput,
                  spec.name + " printed no status line (exit code " + std::to_string(code) + ")");
    }
  }
  switch (parsed.verdict) {
  case SolverVerdict::Sat: {
    std::vector<bool> model = std::move(parsed.model);
    model.resize(static_cast<std::size_t>(formula.num_vars()) + 1, false);
    if (!formula.satisfied_by(model))
      throw Error(ErrorKind::MalformedOutput, spec.name + " returned a model that violates the formula");
    result.status = SolveStatus::Sat;
    result.model = std::move(model);
    break;
  }
  case SolverVerdict::Unsat: result.status = SolveStatus::Unsat; break;
  case SolverVerdict::Unknown:
    result.status = SolveStatus::Error;
    result.message = spec.name + " reported UNKNOWN";
    break;
  }
  return result;
}

} // namespace kf

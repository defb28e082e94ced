#include "keyforge/attack.hpp"
#include "keyforge/bench.hpp"
#include "keyforge/error.hpp"
#include "keyforge/exec.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <sys/wait.h>
#include <unistd.h>

namespace kf {

RunRecord run_cell(const LockedCircuit &locked, const Circuit &oracle, const BackendSpec &backend,
                   const RunRecord &cell, double timeout, DivcEncoding encoding) {
  RunRecord rec = cell;
  try {
    AttackLimits limits;
    limits.timeout = timeout;
    limits.encoding = encoding;
    limits.seed = cell.seed;
    BackendSpec b = backend;
    b.timeout = timeout;
    AttackResult r = sat_attack(locked, oracle, b, limits);
    rec.iterations = r.trace.iterations.size();
    rec.peak_memory = r.trace.peak_memory;
    rec.mean_learned_len = r.trace.mean_learned_len;
    if (r.status == AttackStatus::Timeout) {
      rec.status = RunStatus::Timeout;
      rec.wall_time = timeout;
    } else {
      rec.status = RunStatus::Solved;
      rec.wall_time = r.trace.total_time;
      rec.key_verified = r.key && r.key->verified;
    }
  } catch (const std::exception &) {
    rec.status = RunStatus::Error;
  }
  return rec;
}

namespace {

using CellKey = std::tuple<std::string, std::string, unsigned, std::string, unsigned>;

CellKey key_of(const RunRecord &r) { return {r.circuit, r.scheme, r.overhead, r.backend, r.repetition}; }

struct Job {
  std::size_t slot;
  const LockedCircuit *locked; ///< null when locking failed
  const Circuit *oracle;
  const BackendSpec *backend;
};

/// Runs one job in a forked child and returns its record over a pipe.
class WorkerPool {
public:
  WorkerPool(unsigned jobs, double timeout, DivcEncoding encoding)
      : jobs_(jobs), timeout_(timeout), encoding_(encoding) {}

  template <typename Done> void run(const std::vector<Job> &queue, std::vector<RunRecord> &slots, Done &&done) {
    std::size_t next = 0;
    while (next < queue.size() || !running_.empty()) {
      while (next < queue.size() && running_.size() < jobs_)
        spawn(queue[next++], slots);
      int status = 0;
      pid_t pid = ::waitpid(-1, &status, 0);
      if (pid < 0)
        throw Error(ErrorKind::Io, "waitpid failed");
      auto it = running_.find(pid);
      if (it == running_.end())
        continue;
      auto [slot, fd] = it->second;
      running_.erase(it);
      std::string text;
      char buf[4096];
      for (ssize_t n; (n = ::read(fd, buf, sizeof buf)) > 0;)
        text.append(buf, static_cast<std::size_t>(n));
      ::close(fd);
      RunRecord &rec = slots[slot];
      if (WIFEXITED(status) && WEXITSTATUS(status) == 0) {
        auto parsed = parse_records_csv(text);
        if (parsed.size() == 1)
          rec = parsed[0];
        else
          rec.status = RunStatus::Error;
      } else {
        rec.status = RunStatus::Error;
      }
      done(rec);
    }
  }

private:
  void spawn(const Job &job, std::vector<RunRecord> &slots) {
    int fds[2];
    if (::pipe(fds) != 0)
      throw Error(ErrorKind::Io, "pipe failed");
    pid_t pid = ::fork();
    if (pid < 0)
      throw Error(ErrorKind::Io, "fork failed");
    if (pid == 0) {
      ::close(fds[0]);
      // OpenMP runtimes are not fork-safe; the child stays serial.
      set_default_exec(Exec::Serial);
      RunRecord rec = slots[job.slot];
      if (job.locked)
        rec = run_cell(*job.locked, *job.oracle, *job.backend, rec, timeout_, encoding_);
      std::string text = emit_csv(std::span<const RunRecord>(&rec, 1));
      std::size_t done = 0;
      while (done < text.size()) {
        ssize_t n = ::write(fds[1], text.data() + done, text.size() - done);
        if (n <= 0)
          ::_exit(1);
        done += static_cast<std::size_t>(n);
      }
      ::_exit(0);
    }
    ::close(fds[1]);
    running_[pid] = {job.slot, fds[0]};
  }

  unsigned jobs_;
  double timeout_;
  DivcEncoding encoding_;
  std::map<pid_t, std::pair<std::size_t, int>> running_;
};

} // namespace

std::vector<RunRecord> run_matrix(const ExperimentSpec &spec, const ProgressFn &progress) {
  if (spec.backends.empty())
    throw Error(ErrorKind::NoBackend, "no solver backend configured");
  for (const auto &b : spec.backends)
    if (b.kind == BackendKind::External && (b.command.empty() || resolve_executable(b.command[0]).empty()))
      throw Error(ErrorKind::NoBackend,
                  "solver '" + (b.command.empty() ? b.name : b.command[0]) + "' not found");
  std::vector<CorpusEntry> corpus = load_corpus(spec.circuits);

  std::map<CellKey, RunRecord> journaled;
  std::ofstream journal;
  if (spec.journal) {
    if (std::filesystem::exists(*spec.journal)) {
      std::ifstream in(*spec.journal, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      for (auto &r : parse_records_csv(ss.str()))
        journaled[key_of(r)] = r;
      journal.open(*spec.journal, std::ios::app | std::ios::binary);
    } else {
      journal.open(*spec.journal, std::ios::binary);
      journal << emit_csv(std::span<const RunRecord>{});
    }
    if (!journal)
      throw Error(ErrorKind::Io, "cannot open journal " + spec.journal->string());
  }
  auto finished = [&](const RunRecord &rec) {
    if (journal.is_open()) {
      std::string row = emit_csv(std::span<const RunRecord>(&rec, 1));
      journal << row.substr(row.find('\n') + 1) << std::flush;
    }
    if (progress)
      progress(rec);
  };

  std::vector<RunRecord> slots;
  std::vector<Job> queue;
  std::vector<std::unique_ptr<LockedCircuit>> locked_store;
  for (const auto &entry : corpus) {
    for (Scheme scheme : spec.schemes) {
      for (unsigned overhead : spec.overheads) {
        std::unique_ptr<LockedCircuit> locked;
        try {
          locked = std::make_unique<LockedCircuit>(
              lock(entry.circuit, scheme, overhead, lock_seed(entry.name, scheme, overhead, spec.seed)));
        } catch (const Error &) {
          // Recorded as errors below; the matrix continues.
        }
        for (const auto &backend : spec.backends) {
          for (unsigned r = 0; r < spec.repetitions; ++r) {
            RunRecord rec;
            rec.circuit = entry.name;
            rec.scheme = std::string(to_string(scheme));
            rec.overhead = overhead;
            rec.backend = backend.name;
            rec.repetition = r;
            rec.seed = cell_seed(entry.name, scheme, overhead, backend.name, r, spec.seed);
            auto it = journaled.find(key_of(rec));
            if (it != journaled.end()) {
              slots.push_back(it->second);
              continue;
            }
            queue.push_back({slots.size(), locked.get(), &entry.circuit, &backend});
            slots.push_back(std::move(rec));
          }
        }
        locked_store.push_back(std::move(locked));
      }
    }
  }

  if (spec.jobs == 0) {
    for (const Job &job : queue) {
      RunRecord &rec = slots[job.slot];
      if (job.locked)
        rec = run_cell(*job.locked, *job.oracle, *job.backend, rec, spec.timeout, spec.encoding);
      finished(rec);
    }
  } else {
    WorkerPool pool(spec.jobs, spec.timeout, spec.encoding);
    pool.run(queue, slots, finished);
  }
  return slots;
}

} // namespace kf

#pragma once

#include "keyforge/cnf.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kf {

enum class SolveStatus { Sat, Unsat, Timeout, Error };

std::string_view to_string(SolveStatus status);

struct ResourceReport {
  double wall_time = 0.0;       ///< seconds
  std::uint64_t peak_memory = 0; ///< bytes
  std::uint64_t conflicts = 0;
  std::uint64_t decisions = 0;
  std::uint64_t propagations = 0;
  std::uint64_t restarts = 0;
  std::uint64_t learned_clauses = 0;
  double mean_learned_len = 0.0; ///< literals per learned clause, this call
};

struct SolveResult {
  SolveStatus status = SolveStatus::Error;
  /// Indexed by variable, entry 0 unused. Present iff status is Sat.
  std::optional<std::vector<bool>> model;
  /// Short learned clauses not exported before (embedded backend only).
  std::optional<std::vector<Clause>> learned;
  ResourceReport resources;
  std::string message;
};

/// Limits for one solve call. Exhausting either yields Timeout.
struct Budget {
  std::optional<std::chrono::steady_clock::time_point> deadline;
  std::optional<std::uint64_t> max_conflicts;

  static Budget seconds(double s);
};

struct SolverOptions {
  std::uint64_t seed = 0;
  std::size_t export_max_len = 8;
  unsigned export_max_lbd = 4;
  bool export_learned = true;
};

//===----------------------------------------------------------------------===//
// Embedded CDCL
//===----------------------------------------------------------------------===//

SolveResult solve_embedded(const CnfFormula &formula, std::span<const Lit> assumptions = {},
                           const Budget &budget = {}, const SolverOptions &options = {});

namespace detail {
class CdclSolver;
}

/// Incremental embedded solver: clauses accumulate across calls and learned
/// clauses are kept. Calls after close() throw SessionClosed.
class Session {
public:
  explicit Session(SolverOptions options = {});
  ~Session();
  Session(Session &&) noexcept;
  Session &operator=(Session &&) noexcept;

  void add_clauses(std::span<const Clause> clauses);
  /// Adds `new_clauses`, then solves the accumulated formula.
  SolveResult solve_incremental(std::span<const Clause> new_clauses, std::span<const Lit> assumptions = {},
                                const Budget &budget = {});
  SolveResult solve(std::span<const Lit> assumptions = {}, const Budget &budget = {}) {
    return solve_incremental({}, assumptions, budget);
  }

  Var num_vars() const;
  std::size_t num_clauses() const;
  void close();
  bool closed() const { return !solver_; }

private:
  detail::CdclSolver &checked();

  std::unique_ptr<detail::CdclSolver> solver_;
};

//===----------------------------------------------------------------------===//
// Backends
//===----------------------------------------------------------------------===//

enum class BackendKind { Embedded, External };

struct BackendSpec {
  BackendKind kind = BackendKind::Embedded;
  std::string name = "embedded";
  /// Executable plus arguments; `{cnf}` is replaced by the DIMACS path, or
  /// the path is appended when no argument contains it.
  std::vector<std::string> command;
  double timeout = 86400.0; ///< seconds

  static BackendSpec embedded(double timeout = 86400.0);
  /// Splits `command_line` on whitespace.
  static BackendSpec external(const std::string &command_line, double timeout = 86400.0, std::string name = "");
};

/// Locates `exe` (absolute, relative with '/', or on PATH). Empty when not
/// found.
std::string resolve_executable(const std::string &exe);

/// Runs an external solver on a DIMACS temp file. Throws SpawnFailure when
/// the process cannot start and MalformedOutput on unparsable output or an
/// invalid model. Exceeding the timeout yields status Timeout.
SolveResult solve_external(const CnfFormula &formula, const BackendSpec &spec);

} // namespace kf

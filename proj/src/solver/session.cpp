#include "cdcl.hpp"
#include "keyforge/error.hpp"
#include "keyforge/solver.hpp"

namespace kf {

std::string_view to_string(SolveStatus status) {
  switch (status) {
  case SolveStatus::Sat: return "sat";
  case SolveStatus::Unsat: return "unsat";
  case SolveStatus::Timeout: return "timeout";
  case SolveStatus::Error: return "error";
  }
  return "error";
}

Budget Budget::seconds(double s) {
  Budget b;
  b.deadline = std::chrono::steady_clock::now() +
               std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(s));
  return b;
}

SolveResult solve_embedded(const CnfFormula &formula, std::span<const Lit> assumptions, const Budget &budget,
                           const SolverOptions &options) {
  detail::CdclSolver solver(options);
  solver.reserve_vars(formula.num_vars());
  for (const auto &clause : formula.clauses())
    solver.add_clause(clause);
  return solver.solve(assumptions, budget);
}

Session::Session(SolverOptions options) : solver_(std::make_unique<detail::CdclSolver>(options)) {}
Session::~Session() = default;
Session::Session(Session &&) noexcept = default;
Session &Session::operator=(Session &&) noexcept = default;

detail::CdclSolver &Session::checked() {
  if (!solver_)
    throw Error(ErrorKind::SessionClosed, "solver session is closed");
  return *solver_;
}

void Session::add_clauses(std::span<const Clause> clauses) {
  auto &s = checked();
  for (const auto &clause : clauses)
    s.add_clause(clause);
}

SolveResult Session::solve_incremental(std::span<const Clause> new_clauses, std::span<const Lit> assumptions,
                                       const Budget &budget) {
  add_clauses(new_clauses);
  return checked().solve(assumptions, budget);
}

Var Session::num_vars() const { return solver_ ? solver_->num_vars() : 0; }
std::size_t Session::num_clauses() const { return solver_ ? solver_->num_clauses() : 0; }
void Session::close() { solver_.reset(); }

} // namespace kf

#include "keyforge/cnf.hpp"
#include "keyforge/error.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace kf {

Clause normalize_clause(Clause clause) {
  Clause out;
  out.reserve(clause.size());
  for (Lit l : clause)
    if (std::find(out.begin(), out.end(), l) == out.end())
      out.push_back(l);
  return out;
}

void CnfFormula::add_clause(Clause clause) {
  clause = normalize_clause(std::move(clause));
  for (Lit l : clause) {
    if (l.var() == 0)
      throw Error(ErrorKind::InvalidArgument, "literal with variable 0");
    ensure_vars(l.var());
  }
  clauses_.push_back(std::move(clause));
}

void CnfFormula::append(std::span<const Clause> clauses) {
  for (const auto &c : clauses)
    add_clause(c);
}

bool CnfFormula::satisfied_by(const std::vector<bool> &model) const {
  for (const auto &clause : clauses_) {
    bool sat = false;
    for (Lit l : clause) {
      bool value = l.var() < model.size() && model[l.var()];
      if (value != l.negated()) {
        sat = true;
        break;
      }
    }
    if (!sat)
      return false;
  }
  return true;
}

//===----------------------------------------------------------------------===//
// DIMACS
//===----------------------------------------------------------------------===//

std::string to_dimacs(const CnfFormula &formula) {
  std::string out = "p cnf " + std::to_string(formula.num_vars()) + " " + std::to_string(formula.num_clauses()) + "\n";
  for (const auto &clause : formula.clauses()) {
    for (Lit l : clause) {
      out += std::to_string(l.dimacs());
      out += ' ';
    }
    out += "0\n";
  }
  return out;
}

namespace {

/// Whitespace-separated integers of one line.
template <typename F> void for_each_int(std::string_view line, F &&f) {
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i >= line.size())
      break;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])))
      ++j;
    long long value = 0;
    auto [ptr, ec] = std::from_chars(line.data() + i, line.data() + j, value);
    if (ec != std::errc() || ptr != line.data() + j)
      throw Error(ErrorKind::MalformedOutput, "expected an integer, got '" + std::string(line.substr(i, j - i)) + "'");
    f(value);
    i = j;
  }
}

template <typename F> void for_each_line(std::string_view text, F &&f) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    auto line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    f(line);
    if (eol == std::string_view::npos)
      break;
    pos = eol + 1;
  }
}

} // namespace

CnfFormula parse_dimacs(std::string_view text) {
  CnfFormula formula;
  bool header = false;
  std::size_t declared_clauses = 0;
  Clause current;
  for_each_line(text, [&](std::string_view line) {
    auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos)
      return;
    line.remove_prefix(first);
    if (line[0] == 'c' || line[0] == '%')
      return;
    if (line[0] == 'p') {
      std::istringstream ss{std::string(line)};
      std::string p, cnf;
      long long vars = -1, clauses = -1;
      ss >> p >> cnf >> vars >> clauses;
      if (cnf != "cnf" || vars < 0 || clauses < 0)
        throw Error(ErrorKind::MalformedOutput, "bad DIMACS header '" + std::string(line) + "'");
      formula.ensure_vars(static_cast<Var>(vars));
      declared_clauses = static_cast<std::size_t>(clauses);
      header = true;
      return;
    }
    if (!header)
      throw Error(ErrorKind::MalformedOutput, "clause before DIMACS header");
    for_each_int(line, [&](long long v) {
      if (v == 0) {
        formula.add_clause(std::move(current));
        current.clear();
      } else {
        current.push_back(Lit(static_cast<std::int32_t>(v)));
      }
    });
  });
  if (!current.empty())
    throw Error(ErrorKind::MalformedOutput, "unterminated clause at end of DIMACS input");
  if (header && formula.num_clauses() != declared_clauses)
    throw Error(ErrorKind::MalformedOutput, "DIMACS header declares " + std::to_string(declared_clauses) +
                                                " clauses, found " + std::to_string(formula.num_clauses()));
  return formula;
}

SolverOutput parse_solver_output(std::string_view text, Var num_vars) {
  SolverOutput out;
  bool have_status = false;
  bool model_lines = false;
  bool model_done = false;
  std::vector<std::pair<Var, bool>> assigned;
  for_each_line(text, [&](std::string_view line) {
    if (line.empty())
      return;
    if (line[0] == 's' && (line.size() == 1 || line[1] == ' ')) {
      auto status = line.substr(1);
      status.remove_prefix(std::min(status.find_first_not_of(' '), status.size()));
      SolverVerdict v;
      if (status.starts_with("SATISFIABLE"))
        v = SolverVerdict::Sat;
      else if (status.starts_with("UNSATISFIABLE"))
        v = SolverVerdict::Unsat;
      else if (status.starts_with("UNKNOWN") || status.starts_with("INDETERMINATE"))
        v = SolverVerdict::Unknown;
      else
        throw Error(ErrorKind::MalformedOutput, "unrecognized status line '" + std::string(line) + "'");
      if (have_status && v != out.verdict)
        throw Error(ErrorKind::MalformedOutput, "conflicting status lines");
      out.verdict = v;
      have_status = true;
      return;
    }
    if (line[0] == 'v' && (line.size() == 1 || line[1] == ' ')) {
      model_lines = true;
      for_each_int(line.substr(1), [&](long long v) {
        if (model_done)
          return;
        if (v == 0) {
          model_done = true;
          return;
        }
        auto var = static_cast<Var>(v < 0 ? -v : v);
        if (num_vars != 0 && var > num_vars)
          throw Error(ErrorKind::MalformedOutput, "model mentions variable " + std::to_string(var) +
                                                      " beyond " + std::to_string(num_vars));
        assigned.emplace_back(var, v > 0);
      });
    }
  });
  if (out.verdict == SolverVerdict::Sat && !model_lines)
    throw Error(ErrorKind::MalformedOutput, "satisfiable result without model lines");
  if (model_lines && !model_done)
    throw Error(ErrorKind::MalformedOutput, "model not terminated by 0");
  if (model_lines && out.verdict == SolverVerdict::Unsat)
    throw Error(ErrorKind::MalformedOutput, "model given for an unsatisfiable result");
  Var max_var = num_vars;
  for (auto [var, value] : assigned)
    max_var = std::max(max_var, var);
  if (model_lines) {
    out.model.assign(static_cast<std::size_t>(max_var) + 1, false);
    for (auto [var, value] : assigned)
      out.model[var] = value;
  }
  return out;
}

} // namespace kf

#pragma once

#include "keyforge/bits.hpp"
#include "keyforge/netlist.hpp"

#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kf {

struct LockedCircuit;

/// CNF variables are 1-based as in DIMACS.
using Var = std::uint32_t;

/// Signed DIMACS-style literal: +v or -v.
class Lit {
public:
  constexpr Lit() = default;
  constexpr explicit Lit(std::int32_t dimacs) : value_(dimacs) {}
  static constexpr Lit pos(Var v) { return Lit(static_cast<std::int32_t>(v)); }
  static constexpr Lit neg(Var v) { return Lit(-static_cast<std::int32_t>(v)); }

  constexpr Var var() const { return static_cast<Var>(value_ < 0 ? -value_ : value_); }
  constexpr bool negated() const { return value_ < 0; }
  constexpr std::int32_t dimacs() const { return value_; }
  constexpr Lit operator~() const { return Lit(-value_); }
  /// Literal for `v` that is true when the variable equals `value`.
  static constexpr Lit of(Var v, bool value) { return value ? pos(v) : neg(v); }

  friend constexpr auto operator<=>(Lit, Lit) = default;

private:
  std::int32_t value_ = 0;
};

using Clause = std::vector<Lit>;

/// Variable count plus clause list. Clauses are normalized on insertion:
/// duplicate literals are dropped; the variable count grows to cover every
/// referenced variable.
class CnfFormula {
public:
  CnfFormula() = default;
  explicit CnfFormula(Var num_vars) : num_vars_(num_vars) {}

  Var new_var() { return ++num_vars_; }
  Var num_vars() const { return num_vars_; }
  void ensure_vars(Var n) {
    if (n > num_vars_)
      num_vars_ = n;
  }

  void add_clause(Clause clause);
  void add_clause(std::initializer_list<Lit> lits) { add_clause(Clause(lits)); }
  void append(std::span<const Clause> clauses);

  const std::vector<Clause> &clauses() const { return clauses_; }
  std::size_t num_clauses() const { return clauses_.size(); }

  /// True if `model` (indexed by variable, entry 0 unused) satisfies every
  /// clause.
  bool satisfied_by(const std::vector<bool> &model) const;

private:
  Var num_vars_ = 0;
  std::vector<Clause> clauses_;
};

/// Removes duplicate literals, keeping first occurrence order.
Clause normalize_clause(Clause clause);

//===----------------------------------------------------------------------===//
// Tseitin encoding
//===----------------------------------------------------------------------===//

/// Clauses emitted per gate (n = number of inputs):
///   AND/NAND/OR/NOR   n + 1
///   XOR/XNOR          4 per 2-input stage, n - 1 stages (n - 2 helper vars)
///   NOT/BUF           2
///   MUX2              6 (4 defining + 2 redundant data-agreement clauses)
///   LUT               2^L, one per table row
std::size_t tseitin_clause_count(const Gate &gate);

/// Literal of every net of one circuit copy.
struct EncodedCopy {
  std::vector<Lit> net;
};

/// Encodes `circuit` into `formula`. `pi_binding[i]`, when set, is reused as
/// the literal of primary input i; otherwise a fresh variable is allocated.
EncodedCopy tseitin(const Circuit &circuit, CnfFormula &formula, std::span<const std::optional<Lit>> pi_binding = {});

//===----------------------------------------------------------------------===//
// Attack formulas
//===----------------------------------------------------------------------===//

enum class DivcEncoding {
  /// Fresh copies whose data inputs are fixed by unit clauses.
  Plain,
  /// Nets determined by the fixed inputs alone are folded to constants before
  /// encoding; only the key-dependent logic is emitted.
  ConstantPropagated,
};

/// Incrementally grown miter state for the oracle-guided attack. Holds the
/// key-differentiating base formula, the accumulated DI-validation groups,
/// and accumulated learned clauses. Groups are append-only.
class SatcState {
public:
  /// Two copies sharing data inputs X, keys K1 and K2, constrained to differ
  /// on at least one output.
  static SatcState build_kdc(const LockedCircuit &locked, DivcEncoding encoding = DivcEncoding::Plain);

  /// Appends the DI-validation constraint for one observed (x, y) pair and
  /// returns the index of the new clause group. x follows the locked
  /// circuit's data-input order, y its output order.
  std::size_t add_divc(const BitVector &x_di, const BitVector &y_f);

  /// Throws ForeignVariable if a clause mentions an unknown variable.
  void add_learned(std::span<const Clause> clauses);

  /// SCKVC and (K1 = K2), for extracting a key once no DI remains.
  CnfFormula build_keygen() const;

  /// Full formula KDC, SCKVC and LCAC, as a snapshot.
  CnfFormula satc() const;

  const CnfFormula &kdc() const { return kdc_; }
  std::size_t num_dis() const { return divc_groups_.size(); }
  const std::vector<Clause> &divc_group(std::size_t i) const { return divc_groups_[i]; }
  const std::vector<Clause> &lcac() const { return lcac_; }
  Var num_vars() const { return num_vars_; }
  std::size_t num_clauses() const;

  std::span<const Var> data_vars() const { return x_vars_; }
  std::span<const Var> key1_vars() const { return k1_vars_; }
  std::span<const Var> key2_vars() const { return k2_vars_; }

  /// `var <id> = <copy>:<netname>` lines for every circuit-net variable.
  void write_var_map(std::ostream &out) const;

private:
  SatcState() = default;
  void label_copy(const std::string &label, const EncodedCopy &copy);
  std::vector<Clause> encode_divc_plain(const BitVector &x, const BitVector &y, std::size_t index);
  std::vector<Clause> encode_divc_folded(const BitVector &x, const BitVector &y, std::size_t index);

  std::shared_ptr<const Circuit> circuit_;
  DivcEncoding encoding_ = DivcEncoding::Plain;
  std::vector<std::size_t> data_pi_;
  std::vector<std::size_t> key_pi_;
  CnfFormula kdc_;
  std::vector<Var> x_vars_, k1_vars_, k2_vars_;
  std::vector<std::vector<Clause>> divc_groups_;
  std::vector<Clause> lcac_;
  Var num_vars_ = 0;
  std::optional<Var> true_var_;
  std::vector<std::pair<Var, std::string>> labels_;
};

/// Miter of two circuits over shared, name-matched inputs; satisfiable iff
/// some input makes a name-matched output differ. Both circuits must have
/// the same input and output names.
struct MiterFormula {
  CnfFormula formula;
  std::vector<Var> input_vars; ///< in `left` primary-input order
};
MiterFormula build_miter(const Circuit &left, const Circuit &right);

//===----------------------------------------------------------------------===//
// DIMACS
//===----------------------------------------------------------------------===//

std::string to_dimacs(const CnfFormula &formula);
CnfFormula parse_dimacs(std::string_view text);

enum class SolverVerdict { Sat, Unsat, Unknown };

struct SolverOutput {
  SolverVerdict verdict = SolverVerdict::Unknown;
  /// Indexed by variable; entry 0 unused. Variables absent from the `v`
  /// lines are false.
  std::vector<bool> model;
};

/// Reads SAT-competition output (`s ...` status line, `v ...` model lines).
/// Throws MalformedOutput on contradictory or truncated output.
SolverOutput parse_solver_output(std::string_view text, Var num_vars = 0);

} // namespace kf

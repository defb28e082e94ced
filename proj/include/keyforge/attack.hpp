#pragma once

#include "keyforge/bits.hpp"
#include "keyforge/cnf.hpp"
#include "keyforge/exec.hpp"
#include "keyforge/obfuscate.hpp"
#include "keyforge/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kf {

struct AttackLimits {
  double timeout = 86400.0; ///< seconds, whole attack
  DivcEncoding encoding = DivcEncoding::Plain;
  std::uint64_t seed = 0; ///< embedded solver seed
};

/// One SAT call that produced a discriminating input.
struct AttackIteration {
  BitVector x_di;
  BitVector y_f;
  double solve_time = 0.0;
  std::size_t clauses = 0; ///< SATC size after adding this DI
  Var vars = 0;
  std::size_t learned_exported = 0;
  std::uint64_t learned_clauses = 0;
  double mean_learned_len = 0.0;
  std::uint64_t conflicts = 0;
};

struct AttackTrace {
  std::string circuit;
  std::string backend;
  bool incremental = false;
  std::size_t num_keys = 0;
  std::size_t num_data_inputs = 0;
  std::vector<AttackIteration> iterations;
  double final_solve_time = 0.0; ///< the call that found no further DI
  double keygen_time = 0.0;
  double total_time = 0.0;
  std::uint64_t peak_memory = 0;
  std::uint64_t oracle_queries = 0;
  std::uint64_t learned_clauses = 0;
  double mean_learned_len = 0.0; ///< over every learned clause of the attack
  std::size_t lcac_clauses = 0;
};

struct RecoveredKey {
  BitVector bits;
  bool verified = false;
};

enum class AttackStatus { Solved, Timeout };

struct AttackResult {
  AttackStatus status = AttackStatus::Timeout;
  std::optional<RecoveredKey> key;
  AttackTrace trace;
};

/// Oracle-guided attack: find DIs until none remains, then extract a key
/// and check it by equivalence. The oracle is matched to the locked netlist
/// by input and output names. Running out of time yields status Timeout and
/// the partial trace. Throws InvalidObfuscation when no key is consistent
/// with the observed DIs, SolverError on a backend failure.
AttackResult sat_attack(const LockedCircuit &locked, const Circuit &oracle, const BackendSpec &backend,
                        const AttackLimits &limits = {});

/// Formal equivalence of the oracle and the locked netlist under `key`,
/// cross-checked by exhaustive simulation for up to 16 data inputs.
bool verify_key(const LockedCircuit &locked, const BitVector &key, const Circuit &oracle);

/// Line-oriented log of a trace.
std::string format_trace(const AttackTrace &trace, const std::optional<RecoveredKey> &key = std::nullopt);

//===----------------------------------------------------------------------===//
// Exhaustive references
//===----------------------------------------------------------------------===//

/// Oracle outputs for data inputs `x` (locked data-input order), matched by
/// name. Throws InvalidArgument if the interfaces differ.
class OracleAdapter {
public:
  OracleAdapter(const LockedCircuit &locked, const Circuit &oracle);
  BitVector query(const BitVector &x);
  std::uint64_t queries() const { return queries_; }

private:
  const Circuit *oracle_;
  std::vector<std::size_t> input_map_;  ///< oracle PI position per locked data input
  std::vector<std::size_t> output_map_; ///< oracle PO position per locked PO
  std::uint64_t queries_ = 0;
};

/// Every key under which the locked netlist matches the oracle on all inputs,
/// as key integers (bit i = keyinput i) in increasing order. Requires
/// K <= 16 and at most 16 data inputs, else TooLarge.
std::vector<std::uint64_t> brute_force_svk(const LockedCircuit &locked, const Circuit &oracle,
                                           Exec exec = Exec::Default);

namespace detail {
std::vector<std::uint64_t> brute_force_svk_serial(const LockedCircuit &, const Circuit &);
std::vector<std::uint64_t> brute_force_svk_omp(const LockedCircuit &, const Circuit &);
} // namespace detail

/// Candidate-key set tracked by enumeration while DIs arrive.
class SckTracker {
public:
  explicit SckTracker(const LockedCircuit &locked);

  /// Drops the keys that mislabel the DI; returns how many were removed.
  std::size_t apply(const BitVector &x_di, const BitVector &y_f);
  std::span<const std::uint64_t> candidates() const { return candidates_; }
  std::size_t size() const { return candidates_.size(); }

private:
  const LockedCircuit *locked_;
  std::vector<std::size_t> data_pos_;
  std::vector<std::size_t> key_pos_;
  std::vector<std::uint64_t> candidates_;
};

} // namespace kf

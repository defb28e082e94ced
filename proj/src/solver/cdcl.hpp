#pragma once

#include "keyforge/solver.hpp"

#include <cstdint>
#include <vector>

namespace kf::detail {

/// Conflict-driven clause-learning solver. Internal literal encoding is
/// 2 * (var - 1) + sign.
class CdclSolver {
public:
  explicit CdclSolver(SolverOptions options = {});

  void reserve_vars(Var n);
  /// Only valid between solve calls (the solver is then at level 0).
  void add_clause(std::span<const Lit> clause);
  SolveResult solve(std::span<const Lit> assumptions, const Budget &budget);

  Var num_vars() const { return static_cast<Var>(activity_.size()); }
  std::size_t num_clauses() const { return num_original_ + learnts_.size(); }

private:
  using ILit = std::uint32_t;
  using CRef = std::uint32_t;
  static constexpr CRef kNoReason = 0xffffffffU;
  static constexpr ILit kNoLit = 0xffffffffU;

  struct Watcher {
    CRef cref;
    ILit blocker;
  };

  enum Flag : std::uint32_t { kLearnt = 1, kDeleted = 2, kKeep = 4 };

  // Arena layout per clause: size, flags | lbd << 8, activity (float bits),
  // literals.
  std::uint32_t size(CRef c) const { return arena_[c]; }
  std::uint32_t &flags(CRef c) { return arena_[c + 1]; }
  std::uint32_t flags(CRef c) const { return arena_[c + 1]; }
  std::uint32_t lbd(CRef c) const { return arena_[c + 1] >> 8; }
  float activity(CRef c) const;
  void set_activity(CRef c, float a);
  ILit *lits(CRef c) { return &arena_[c + 3]; }
  const ILit *lits(CRef c) const { return &arena_[c + 3]; }

  static std::uint32_t var_of(ILit l) { return l >> 1; }
  std::int8_t value(ILit l) const { return lit_value_[l]; }
  int decision_level() const { return static_cast<int>(trail_lim_.size()); }
  std::uint32_t abstract_level(std::uint32_t v) const { return 1U << (level_[v] & 31); }

  CRef alloc(const std::vector<ILit> &lits, bool learnt, std::uint32_t lbd);
  void attach(CRef c);
  void enqueue(ILit l, CRef reason);
  CRef propagate();
  void analyze(CRef conflict, std::vector<ILit> &learnt, int &bt_level, std::uint32_t &lbd);
  bool redundant(ILit l, std::uint32_t abstract_levels);
  std::uint32_t compute_lbd(const std::vector<ILit> &lits);
  void cancel_until(int level);
  ILit pick_branch();
  int search(std::int64_t max_conflicts, std::span<const Lit> assumptions);
  void reduce_db();
  void collect_garbage();
  bool out_of_budget();
  void note_memory();

  void bump_var(std::uint32_t v);
  void bump_clause(CRef c);
  void heap_insert(std::uint32_t v);
  std::uint32_t heap_pop();
  void heap_up(std::size_t i);
  void heap_down(std::size_t i);
  bool heap_less(std::uint32_t a, std::uint32_t b) const { return activity_[a] > activity_[b]; }

  SolverOptions options_;
  bool ok_ = true;

  std::vector<std::uint32_t> arena_;
  std::size_t wasted_ = 0;
  std::vector<CRef> learnts_;
  std::size_t num_original_ = 0;
  std::vector<std::vector<Watcher>> watches_;

  std::vector<std::int8_t> lit_value_;
  std::vector<int> level_;
  std::vector<CRef> reason_;
  std::vector<std::uint8_t> polarity_;
  std::vector<std::uint8_t> seen_;
  std::vector<double> activity_;
  std::vector<std::uint32_t> heap_;
  std::vector<std::int32_t> heap_index_;
  double var_inc_ = 1.0;
  double clause_inc_ = 1.0;

  std::vector<ILit> trail_;
  std::vector<std::size_t> trail_lim_;
  std::size_t qhead_ = 0;

  std::vector<ILit> analyze_stack_;
  std::vector<ILit> analyze_clear_;
  std::vector<std::uint32_t> level_stamp_;
  std::uint32_t stamp_ = 0;

  std::vector<ILit> learned_units_;
  std::size_t exported_units_ = 0;
  std::uint64_t next_reduce_ = 2000;
  std::uint64_t reduce_increment_ = 300;

  // Lifetime and per-call statistics.
  std::uint64_t conflicts_ = 0;
  ResourceReport call_;
  double learned_len_sum_ = 0.0;
  std::uint64_t peak_memory_ = 0;
  const Budget *budget_ = nullptr;
  std::uint64_t call_conflict_start_ = 0;
  bool budget_hit_ = false;

#ifdef KEYFORGE_VERIFY_MODELS
  std::vector<Clause> originals_;
#endif
};

} // namespace kf::detail

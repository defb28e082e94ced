#include "cdcl.hpp"

#include "keyforge/bits.hpp"
#include "keyforge/error.hpp"

#include <algorithm>
#include <bit>
#include <chrono>

namespace kf::detail {

namespace {

constexpr double kVarDecay = 0.95;
constexpr double kClauseDecay = 0.999;
constexpr std::int64_t kRestartUnit = 100;

double luby(double y, int x) {
  int size = 1, seq = 0;
  while (size < x + 1) {
    ++seq;
    size = 2 * size + 1;
  }
  while (size - 1 != x) {
    size = (size - 1) >> 1;
    --seq;
    x = x % size;
  }
  double r = 1;
  for (int i = 0; i < seq; ++i)
    r *= y;
  return r;
}

} // namespace

CdclSolver::CdclSolver(SolverOptions options) : options_(options) {}

float CdclSolver::activity(CRef c) const { return std::bit_cast<float>(arena_[c + 2]); }
void CdclSolver::set_activity(CRef c, float a) { arena_[c + 2] = std::bit_cast<std::uint32_t>(a); }

void CdclSolver::reserve_vars(Var n) {
  std::size_t old = activity_.size();
  if (n <= old)
    return;
  lit_value_.resize(2 * static_cast<std::size_t>(n), 0);
  watches_.resize(2 * static_cast<std::size_t>(n));
  level_.resize(n, 0);
  reason_.resize(n, kNoReason);
  polarity_.resize(n, 1);
  seen_.resize(n, 0);
  heap_index_.resize(n, -1);
  activity_.resize(n, 0.0);
  level_stamp_.resize(n + 1, 0);
  for (std::size_t v = old; v < n; ++v) {
    // A tiny seed-dependent offset only breaks ties among untouched variables.
    activity_[v] = static_cast<double>(mix64(options_.seed ^ (v + 1)) >> 11) * 0x1p-53 * 1e-6;
    heap_insert(static_cast<std::uint32_t>(v));
  }
}

CdclSolver::CRef CdclSolver::alloc(const std::vector<ILit> &lits, bool learnt, std::uint32_t lbd) {
  auto c = static_cast<CRef>(arena_.size());
  arena_.push_back(static_cast<std::uint32_t>(lits.size()));
  arena_.push_back((learnt ? kLearnt : 0U) | (lbd << 8));
  arena_.push_back(std::bit_cast<std::uint32_t>(0.0F));
  arena_.insert(arena_.end(), lits.begin(), lits.end());
  return c;
}

void CdclSolver::attach(CRef c) {
  const ILit *l = lits(c);
  watches_[l[0]].push_back({c, l[1]});
  watches_[l[1]].push_back({c, l[0]});
}

void CdclSolver::add_clause(std::span<const Lit> clause) {
#ifdef KEYFORGE_VERIFY_MODELS
  originals_.emplace_back(clause.begin(), clause.end());
#endif
  if (!ok_)
    return;
  Var max_var = 0;
  for (Lit l : clause) {
    if (l.var() == 0)
      throw Error(ErrorKind::InvalidArgument, "literal with variable 0");
    max_var = std::max(max_var, l.var());
  }
  reserve_vars(max_var);
  std::vector<ILit> ls;
  ls.reserve(clause.size());
  for (Lit l : clause)
    ls.push_back(2 * (l.var() - 1) + (l.negated() ? 1U : 0U));
  std::sort(ls.begin(), ls.end());
  std::vector<ILit> kept;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    ILit l = ls[i];
    if (value(l) == 1 || (i + 1 < ls.size() && ls[i + 1] == (l ^ 1U)))
      return; // satisfied at level 0, or tautology
    if (value(l) == -1 || (i > 0 && ls[i - 1] == l))
      continue;
    kept.push_back(l);
  }
  if (kept.empty()) {
    ok_ = false;
  } else if (kept.size() == 1) {
    enqueue(kept[0], kNoReason);
    ok_ = propagate() == kNoReason;
  } else {
    attach(alloc(kept, false, 0));
    ++num_original_;
  }
}

void CdclSolver::enqueue(ILit l, CRef reason) {
  std::uint32_t v = var_of(l);
  lit_value_[l] = 1;
  lit_value_[l ^ 1U] = -1;
  level_[v] = decision_level();
  reason_[v] = reason;
  trail_.push_back(l);
}

CdclSolver::CRef CdclSolver::propagate() {
  CRef conflict = kNoReason;
  while (qhead_ < trail_.size()) {
    ILit p = trail_[qhead_++];
    ILit false_lit = p ^ 1U;
    auto &ws = watches_[false_lit];
    ++call_.propagations;
    std::size_t i = 0, j = 0;
    const std::size_t n = ws.size();
    while (i < n) {
      Watcher w = ws[i];
      if (value(w.blocker) == 1) {
        ws[j++] = ws[i++];
        continue;
      }
      if (flags(w.cref) & kDeleted) {
        ++i;
        continue;
      }
      ILit *c = lits(w.cref);
      if (c[0] == false_lit)
        std::swap(c[0], c[1]);
      ++i;
      ILit first = c[0];
      Watcher nw{w.cref, first};
      if (first != w.blocker && value(first) == 1) {
        ws[j++] = nw;
        continue;
      }
      const std::uint32_t sz = size(w.cref);
      bool moved = false;
      for (std::uint32_t k = 2; k < sz; ++k) {
        if (value(c[k]) != -1) {
          c[1] = c[k];
          c[k] = false_lit;
          watches_[c[1]].push_back(nw);
          moved = true;
          break;
        }
      }
      if (moved)
        continue;
      ws[j++] = nw;
      if (value(first) == -1) {
        conflict = w.cref;
        qhead_ = trail_.size();
        while (i < n)
          ws[j++] = ws[i++];
      } else {
        enqueue(first, w.cref);
      }
    }
    ws.resize(j);
    if (conflict != kNoReason)
      break;
  }
  return conflict;
}

std::uint32_t CdclSolver::compute_lbd(const std::vector<ILit> &lits) {
  ++stamp_;
  std::uint32_t n = 0;
  for (ILit l : lits) {
    auto lv = static_cast<std::size_t>(level_[var_of(l)]);
    if (level_stamp_[lv] != stamp_) {
      level_stamp_[lv] = stamp_;
      ++n;
    }
  }
  return n;
}

void CdclSolver::analyze(CRef conflict, std::vector<ILit> &learnt, int &bt_level, std::uint32_t &lbd) {
  learnt.clear();
  learnt.push_back(kNoLit);
  int path = 0;
  ILit p = kNoLit;
  std::size_t index = trail_.size();
  CRef c = conflict;
  do {
    if (flags(c) & kLearnt)
      bump_clause(c);
    const ILit *cl = lits(c);
    for (std::uint32_t j = (p == kNoLit ? 0 : 1); j < size(c); ++j) {
      ILit q = cl[j];
      std::uint32_t v = var_of(q);
      if (!seen_[v] && level_[v] > 0) {
        bump_var(v);
        seen_[v] = 1;
        if (level_[v] >= decision_level())
          ++path;
        else
          learnt.push_back(q);
      }
    }
    while (!seen_[var_of(trail_[--index])]) {
    }
    p = trail_[index];
    c = reason_[var_of(p)];
    seen_[var_of(p)] = 0;
    --path;
  } while (path > 0);
  learnt[0] = p ^ 1U;

  analyze_clear_.assign(learnt.begin(), learnt.end());
  std::uint32_t abstract_levels = 0;
  for (std::size_t i = 1; i < learnt.size(); ++i)
    abstract_levels |= abstract_level(var_of(learnt[i]));
  std::size_t keep = 1;
  for (std::size_t i = 1; i < learnt.size(); ++i)
    if (reason_[var_of(learnt[i])] == kNoReason || !redundant(learnt[i], abstract_levels))
      learnt[keep++] = learnt[i];
  learnt.resize(keep);

  if (learnt.size() == 1) {
    bt_level = 0;
  } else {
    std::size_t max_i = 1;
    for (std::size_t i = 2; i < learnt.size(); ++i)
      if (level_[var_of(learnt[i])] > level_[var_of(learnt[max_i])])
        max_i = i;
    std::swap(learnt[1], learnt[max_i]);
    bt_level = level_[var_of(learnt[1])];
  }
  lbd = compute_lbd(learnt);
  for (ILit l : analyze_clear_)
    seen_[var_of(l)] = 0;
}

bool CdclSolver::redundant(ILit l, std::uint32_t abstract_levels) {
  analyze_stack_.clear();
  analyze_stack_.push_back(l);
  const std::size_t top = analyze_clear_.size();
  while (!analyze_stack_.empty()) {
    CRef c = reason_[var_of(analyze_stack_.back())];
    analyze_stack_.pop_back();
    const ILit *cl = lits(c);
    for (std::uint32_t i = 1; i < size(c); ++i) {
      ILit q = cl[i];
      std::uint32_t v = var_of(q);
      if (seen_[v] || level_[v] == 0)
        continue;
      if (reason_[v] != kNoReason && (abstract_level(v) & abstract_levels) != 0) {
        seen_[v] = 1;
        analyze_stack_.push_back(q);
        analyze_clear_.push_back(q);
      } else {
        for (std::size_t j = top; j < analyze_clear_.size(); ++j)
          seen_[var_of(analyze_clear_[j])] = 0;
        analyze_clear_.resize(top);
        return false;
      }
    }
  }
  return true;
}

void CdclSolver::cancel_until(int level) {
  if (decision_level() <= level)
    return;
  for (std::size_t i = trail_.size(); i-- > trail_lim_[static_cast<std::size_t>(level)];) {
    ILit l = trail_[i];
    std::uint32_t v = var_of(l);
    lit_value_[l] = 0;
    lit_value_[l ^ 1U] = 0;
    reason_[v] = kNoReason;
    polarity_[v] = static_cast<std::uint8_t>(l & 1U);
    if (heap_index_[v] < 0)
      heap_insert(v);
  }
  trail_.resize(trail_lim_[static_cast<std::size_t>(level)]);
  trail_lim_.resize(static_cast<std::size_t>(level));
  qhead_ = trail_.size();
}

CdclSolver::ILit CdclSolver::pick_branch() {
  while (!heap_.empty()) {
    std::uint32_t v = heap_pop();
    if (lit_value_[2 * v] == 0)
      return 2 * v + polarity_[v];
  }
  return kNoLit;
}

void CdclSolver::bump_var(std::uint32_t v) {
  activity_[v] += var_inc_;
  if (activity_[v] > 1e100) {
    for (auto &a : activity_)
      a *= 1e-100;
    var_inc_ *= 1e-100;
  }
  if (heap_index_[v] >= 0)
    heap_up(static_cast<std::size_t>(heap_index_[v]));
}

void CdclSolver::bump_clause(CRef c) {
  float a = activity(c) + static_cast<float>(clause_inc_);
  set_activity(c, a);
  if (a > 1e20F) {
    for (CRef l : learnts_)
      set_activity(l, activity(l) * 1e-20F);
    clause_inc_ *= 1e-20;
  }
}

void CdclSolver::heap_insert(std::uint32_t v) {
  heap_index_[v] = static_cast<std::int32_t>(heap_.size());
  heap_.push_back(v);
  heap_up(heap_.size() - 1);
}

std::uint32_t CdclSolver::heap_pop() {
  std::uint32_t top = heap_[0];
  heap_[0] = heap_.back();
  heap_index_[heap_[0]] = 0;
  heap_.pop_back();
  heap_index_[top] = -1;
  if (!heap_.empty())
    heap_down(0);
  return top;
}

void CdclSolver::heap_up(std::size_t i) {
  std::uint32_t v = heap_[i];
  while (i > 0) {
    std::size_t parent = (i - 1) / 2;
    if (!heap_less(v, heap_[parent]))
      break;
    heap_[i] = heap_[parent];
    heap_index_[heap_[i]] = static_cast<std::int32_t>(i);
    i = parent;
  }
  heap_[i] = v;
  heap_index_[v] = static_cast<std::int32_t>(i);
}

void CdclSolver::heap_down(std::size_t i) {
  std::uint32_t v = heap_[i];
  for (;;) {
    std::size_t child = 2 * i + 1;
    if (child >= heap_.size())
      break;
    if (child + 1 < heap_.size() && heap_less(heap_[child + 1], heap_[child]))
      ++child;
    if (!heap_less(heap_[child], v))
      break;
    heap_[i] = heap_[child];
    heap_index_[heap_[i]] = static_cast<std::int32_t>(i);
    i = child;
  }
  heap_[i] = v;
  heap_index_[v] = static_cast<std::int32_t>(i);
}

void CdclSolver::reduce_db() {
  std::vector<CRef> candidates;
  std::vector<CRef> kept;
  for (CRef c : learnts_) {
    const ILit first = lits(c)[0];
    bool locked = reason_[var_of(first)] == c && value(first) == 1;
    if (locked || lbd(c) <= 2 || (flags(c) & kKeep))
      kept.push_back(c);
    else
      candidates.push_back(c);
  }
  std::sort(candidates.begin(), candidates.end(), [&](CRef a, CRef b) {
    if (lbd(a) != lbd(b))
      return lbd(a) > lbd(b);
    if (activity(a) != activity(b))
      return activity(a) < activity(b);
    return a < b;
  });
  const std::size_t remove = candidates.size() / 2;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i < remove) {
      flags(candidates[i]) |= kDeleted;
      wasted_ += 3 + size(candidates[i]);
    } else {
      kept.push_back(candidates[i]);
    }
  }
  std::sort(kept.begin(), kept.end());
  learnts_ = std::move(kept);
  if (wasted_ * 5 > arena_.size())
    collect_garbage();
  note_memory();
}

void CdclSolver::collect_garbage() {
  std::vector<std::uint32_t> fresh;
  fresh.reserve(arena_.size() - wasted_);
  std::vector<CRef> forward_learnts;
  // Walk the arena in order; the forwarding address replaces the activity
  // word of each moved clause.
  for (CRef c = 0; c < arena_.size();) {
    std::uint32_t sz = size(c);
    CRef next = c + 3 + sz;
    if (!(flags(c) & kDeleted)) {
      auto to = static_cast<CRef>(fresh.size());
      fresh.insert(fresh.end(), arena_.begin() + c, arena_.begin() + next);
      flags(c) |= kDeleted;
      arena_[c + 2] = to;
      if (flags(c) & kLearnt)
        forward_learnts.push_back(to);
    }
    c = next;
  }
  for (ILit l : trail_) {
    CRef &r = reason_[var_of(l)];
    if (r != kNoReason)
      r = arena_[r + 2];
  }
  arena_ = std::move(fresh);
  wasted_ = 0;
  learnts_ = std::move(forward_learnts);
  for (auto &ws : watches_)
    ws.clear();
  for (CRef c = 0; c < arena_.size(); c += 3 + size(c))
    attach(c);
}

bool CdclSolver::out_of_budget() {
  if (!budget_)
    return false;
  if (budget_->max_conflicts && conflicts_ - call_conflict_start_ >= *budget_->max_conflicts)
    return budget_hit_ = true;
  if (budget_->deadline && std::chrono::steady_clock::now() >= *budget_->deadline)
    return budget_hit_ = true;
  return false;
}

void CdclSolver::note_memory() {
  std::uint64_t bytes = arena_.capacity() * sizeof(std::uint32_t);
  for (const auto &ws : watches_)
    bytes += ws.capacity() * sizeof(Watcher);
  bytes += watches_.capacity() * sizeof(std::vector<Watcher>);
  bytes += lit_value_.capacity() + polarity_.capacity() + seen_.capacity();
  bytes += (level_.capacity() + heap_index_.capacity()) * sizeof(int);
  bytes += (reason_.capacity() + heap_.capacity() + trail_.capacity() + learnts_.capacity()) * 4;
  bytes += activity_.capacity() * sizeof(double);
  peak_memory_ = std::max(peak_memory_, bytes);
}

/// Returns 1 for a model, -1 for a refutation (under the assumptions), 0 when
/// the restart limit or the budget was reached.
int CdclSolver::search(std::int64_t max_conflicts, std::span<const Lit> assumptions) {
  std::int64_t local_conflicts = 0;
  std::vector<ILit> learnt;
  for (;;) {
    CRef conflict = propagate();
    if (conflict != kNoReason) {
      ++conflicts_;
      ++call_.conflicts;
      ++local_conflicts;
      if (decision_level() == 0) {
        ok_ = false;
        return -1;
      }
      int bt_level = 0;
      std::uint32_t glue = 0;
      analyze(conflict, learnt, bt_level, glue);
      cancel_until(bt_level);
      ++call_.learned_clauses;
      learned_len_sum_ += static_cast<double>(learnt.size());
      if (learnt.size() == 1) {
        enqueue(learnt[0], kNoReason);
        learned_units_.push_back(learnt[0]);
      } else {
        CRef c = alloc(learnt, true, glue);
        learnts_.push_back(c);
        attach(c);
        bump_clause(c);
        enqueue(learnt[0], c);
      }
      var_inc_ /= kVarDecay;
      clause_inc_ /= kClauseDecay;
      if ((conflicts_ & 31U) == 0 && out_of_budget())
        return 0;
      if (budget_ && budget_->max_conflicts && out_of_budget())
        return 0;
      continue;
    }
    if (max_conflicts >= 0 && local_conflicts >= max_conflicts) {
      cancel_until(0);
      return 0;
    }
    if (conflicts_ >= next_reduce_) {
      next_reduce_ = conflicts_ + 2000 + reduce_increment_;
      reduce_increment_ += 300;
      reduce_db();
    }
    ILit next = kNoLit;
    while (decision_level() < static_cast<int>(assumptions.size())) {
      Lit a = assumptions[static_cast<std::size_t>(decision_level())];
      ILit p = 2 * (a.var() - 1) + (a.negated() ? 1U : 0U);
      if (value(p) == 1) {
        trail_lim_.push_back(trail_.size());
      } else if (value(p) == -1) {
        return -1;
      } else {
        next = p;
        break;
      }
    }
    if (next == kNoLit) {
      ++call_.decisions;
      if ((call_.decisions & 1023U) == 0 && out_of_budget())
        return 0;
      next = pick_branch();
      if (next == kNoLit)
        return 1;
    }
    trail_lim_.push_back(trail_.size());
    enqueue(next, kNoReason);
  }
}

SolveResult CdclSolver::solve(std::span<const Lit> assumptions, const Budget &budget) {
  const auto start = std::chrono::steady_clock::now();
  call_ = ResourceReport{};
  learned_len_sum_ = 0.0;
  budget_ = &budget;
  budget_hit_ = false;
  call_conflict_start_ = conflicts_;
  for (Lit a : assumptions)
    reserve_vars(a.var());

  SolveResult result;
  int outcome = ok_ ? 0 : -1;
  if (ok_) {
    cancel_until(0);
    if (propagate() != kNoReason) {
      ok_ = false;
      outcome = -1;
    }
  }
  for (int restart = 0; outcome == 0; ++restart) {
    outcome = search(static_cast<std::int64_t>(luby(2, restart) * kRestartUnit), assumptions);
    if (outcome != 0 || budget_hit_ || out_of_budget())
      break;
    ++call_.restarts;
  }

  if (outcome == 1) {
    std::vector<bool> model(static_cast<std::size_t>(num_vars()) + 1, false);
    for (std::uint32_t v = 0; v < num_vars(); ++v)
      model[v + 1] = lit_value_[2 * v] == 1;
    result.status = SolveStatus::Sat;
    result.model = std::move(model);
  } else if (outcome == -1) {
    result.status = SolveStatus::Unsat;
  } else {
    result.status = SolveStatus::Timeout;
  }
  cancel_until(0);
  budget_ = nullptr;

#ifdef KEYFORGE_VERIFY_MODELS
  if (result.model) {
    for (const auto &clause : originals_) {
      bool sat = std::any_of(clause.begin(), clause.end(),
                             [&](Lit l) { return (*result.model)[l.var()] != l.negated(); });
      if (!sat)
        throw Error(ErrorKind::SolverError, "embedded solver produced a model violating an input clause");
    }
  }
#endif

  if (options_.export_learned) {
    std::vector<Clause> out;
    auto to_lit = [](ILit l) { return Lit::of(var_of(l) + 1, (l & 1U) == 0); };
    for (; exported_units_ < learned_units_.size(); ++exported_units_)
      out.push_back({to_lit(learned_units_[exported_units_])});
    for (CRef c : learnts_) {
      if ((flags(c) & kKeep) || size(c) > options_.export_max_len || lbd(c) > options_.export_max_lbd)
        continue;
      flags(c) |= kKeep;
      Clause clause;
      for (std::uint32_t i = 0; i < size(c); ++i)
        clause.push_back(to_lit(lits(c)[i]));
      out.push_back(std::move(clause));
    }
    result.learned = std::move(out);
  }

  note_memory();
  call_.peak_memory = peak_memory_;
  call_.mean_learned_len = call_.learned_clauses ? learned_len_sum_ / static_cast<double>(call_.learned_clauses) : 0.0;
  call_.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.resources = call_;
  return result;
}

} // namespace kf::detail

#include "keyforge/analysis.hpp"
#include "keyforge/attack.hpp"
#include "keyforge/error.hpp"

namespace kf {

namespace {

/// Exhaustive comparison over every data-input pattern, 64 at a time.
bool equal_by_simulation(const Circuit &a, const Circuit &b) {
  const std::size_t n = a.primary_inputs().size();
  std::vector<std::size_t> b_pos;
  for (NetId pi : a.primary_inputs())
    b_pos.push_back(*b.input_position(*b.find_net(a.net_name(pi))));
  std::vector<std::size_t> b_out;
  for (NetId po : a.primary_outputs()) {
    NetId other = *b.find_net(a.net_name(po));
    auto outs = b.primary_outputs();
    b_out.push_back(static_cast<std::size_t>(std::find(outs.begin(), outs.end(), other) - outs.begin()));
  }
  PatternSource src(n, std::max<std::size_t>(64, (std::size_t{1} << n) + 63) / 64 * 64, 0);
  std::vector<PatternWord> in_a(n), in_b(n);
  for (std::size_t blk = 0; blk < src.num_blocks(); ++blk) {
    src.fill(blk, in_a);
    for (std::size_t i = 0; i < n; ++i)
      in_b[b_pos[i]] = in_a[i];
    auto ya = simulate_block(a, in_a);
    auto yb = simulate_block(b, in_b);
    PatternWord mask = src.valid_mask(blk);
    for (std::size_t j = 0; j < ya.size(); ++j)
      if ((ya[j] ^ yb[b_out[j]]) & mask)
        return false;
  }
  return true;
}

} // namespace

bool verify_key(const LockedCircuit &locked, const BitVector &key, const Circuit &oracle) {
  Circuit keyed = apply_key(locked, key);
  MiterFormula miter = build_miter(oracle, keyed);
  SolveResult r = solve_embedded(miter.formula, {}, {}, SolverOptions{0, 8, 4, false});
  if (r.status != SolveStatus::Sat && r.status != SolveStatus::Unsat)
    throw Error(ErrorKind::SolverError, "equivalence check did not finish");
  const bool equivalent = r.status == SolveStatus::Unsat;
  if (oracle.primary_inputs().size() <= 16 && equal_by_simulation(oracle, keyed) != equivalent)
    throw Error(ErrorKind::SolverError, "formal and simulation-based equivalence checks disagree");
  return equivalent;
}

} // namespace kf

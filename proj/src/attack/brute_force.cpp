#include "keyforge/analysis.hpp"
#include "keyforge/attack.hpp"
#include "keyforge/error.hpp"

#include <algorithm>

namespace kf {

namespace {

constexpr std::size_t kMaxBruteForceBits = 16;
constexpr std::size_t kMaxTrackedKeys = 20;

/// Shared setup of the exhaustive key search: oracle responses for every
/// input block, and the PI positions of data and key inputs.
struct SvkProblem {
  const Circuit *locked;
  std::vector<std::size_t> data_pos, key_pos;
  PatternSource patterns;
  std::vector<std::vector<PatternWord>> expected; ///< per block, locked PO order

  SvkProblem(const LockedCircuit &lc, const Circuit &oracle)
      : locked(&lc.circuit), patterns(1, 64, 0) {
    const std::size_t k = lc.num_keys();
    auto data = lc.data_inputs();
    if (k > kMaxBruteForceBits || data.size() > kMaxBruteForceBits)
      throw Error(ErrorKind::TooLarge, "exhaustive key search needs at most 16 key and 16 data inputs");
    for (NetId x : data)
      data_pos.push_back(*lc.circuit.input_position(x));
    for (NetId key : lc.key_inputs)
      key_pos.push_back(*lc.circuit.input_position(key));

    OracleAdapter adapter(lc, oracle); // validates the interfaces
    std::vector<std::size_t> oracle_in;
    for (NetId x : data)
      oracle_in.push_back(*oracle.input_position(*oracle.find_net(lc.circuit.net_name(x))));
    std::vector<std::size_t> oracle_out;
    auto opos = oracle.primary_outputs();
    for (NetId y : lc.circuit.primary_outputs()) {
      NetId n = *oracle.find_net(lc.circuit.net_name(y));
      oracle_out.push_back(static_cast<std::size_t>(std::find(opos.begin(), opos.end(), n) - opos.begin()));
    }

    const std::size_t n = data.size();
    patterns = PatternSource(n, std::max<std::size_t>(64, std::size_t{1} << n), 0);
    std::vector<PatternWord> xw(n), ow(n);
    for (std::size_t b = 0; b < patterns.num_blocks(); ++b) {
      patterns.fill(b, xw);
      for (std::size_t i = 0; i < n; ++i)
        ow[oracle_in[i]] = xw[i];
      auto y = simulate_block(oracle, ow);
      std::vector<PatternWord> ordered(oracle_out.size());
      for (std::size_t j = 0; j < ordered.size(); ++j)
        ordered[j] = y[oracle_out[j]];
      expected.push_back(std::move(ordered));
    }
  }

  bool key_valid(std::uint64_t key, std::vector<PatternWord> &in) const {
    std::vector<PatternWord> xw(data_pos.size());
    for (std::size_t i = 0; i < key_pos.size(); ++i)
      in[key_pos[i]] = ((key >> i) & 1U) ? ~PatternWord{0} : PatternWord{0};
    for (std::size_t b = 0; b < patterns.num_blocks(); ++b) {
      patterns.fill(b, xw);
      for (std::size_t i = 0; i < data_pos.size(); ++i)
        in[data_pos[i]] = xw[i];
      auto y = simulate_block(*locked, in);
      const PatternWord mask = patterns.valid_mask(b);
      for (std::size_t j = 0; j < y.size(); ++j)
        if ((y[j] ^ expected[b][j]) & mask)
          return false;
    }
    return true;
  }
};

} // namespace

namespace detail {

std::vector<std::uint64_t> brute_force_svk_serial(const LockedCircuit &lc, const Circuit &oracle) {
  SvkProblem p(lc, oracle);
  std::vector<PatternWord> in(lc.circuit.primary_inputs().size());
  std::vector<std::uint64_t> svk;
  const std::uint64_t keys = std::uint64_t{1} << lc.num_keys();
  for (std::uint64_t k = 0; k < keys; ++k)
    if (p.key_valid(k, in))
      svk.push_back(k);
  return svk;
}

std::vector<std::uint64_t> brute_force_svk_omp(const LockedCircuit &lc, const Circuit &oracle) {
  SvkProblem p(lc, oracle);
  const auto keys = static_cast<std::int64_t>(std::uint64_t{1} << lc.num_keys());
  std::vector<unsigned char> valid(static_cast<std::size_t>(keys), 0);
#pragma omp parallel
  {
    std::vector<PatternWord> in(lc.circuit.primary_inputs().size());
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t k = 0; k < keys; ++k)
      valid[static_cast<std::size_t>(k)] = p.key_valid(static_cast<std::uint64_t>(k), in) ? 1 : 0;
  }
  std::vector<std::uint64_t> svk;
  for (std::int64_t k = 0; k < keys; ++k)
    if (valid[static_cast<std::size_t>(k)])
      svk.push_back(static_cast<std::uint64_t>(k));
  return svk;
}

} // namespace detail

std::vector<std::uint64_t> brute_force_svk(const LockedCircuit &locked, const Circuit &oracle, Exec exec) {
  return resolve_exec(exec) == Exec::Serial ? detail::brute_force_svk_serial(locked, oracle)
                                            : detail::brute_force_svk_omp(locked, oracle);
}

SckTracker::SckTracker(const LockedCircuit &locked) : locked_(&locked) {
  if (locked.num_keys() > kMaxTrackedKeys)
    throw Error(ErrorKind::TooLarge, "candidate-key tracking supports at most 20 key inputs");
  for (NetId x : locked.data_inputs())
    data_pos_.push_back(*locked.circuit.input_position(x));
  for (NetId k : locked.key_inputs)
    key_pos_.push_back(*locked.circuit.input_position(k));
  candidates_.resize(std::size_t{1} << locked.num_keys());
  for (std::size_t k = 0; k < candidates_.size(); ++k)
    candidates_[k] = k;
}

std::size_t SckTracker::apply(const BitVector &x_di, const BitVector &y_f) {
  // Lanes carry candidate keys; the data inputs are broadcast.
  std::vector<PatternWord> in(locked_->circuit.primary_inputs().size());
  for (std::size_t i = 0; i < data_pos_.size(); ++i)
    in[data_pos_[i]] = x_di[i] ? ~PatternWord{0} : PatternWord{0};
  std::vector<std::uint64_t> kept;
  for (std::size_t base = 0; base < candidates_.size(); base += 64) {
    const std::size_t lanes = std::min<std::size_t>(64, candidates_.size() - base);
    for (std::size_t b = 0; b < key_pos_.size(); ++b) {
      PatternWord w = 0;
      for (std::size_t l = 0; l < lanes; ++l)
        w |= static_cast<PatternWord>((candidates_[base + l] >> b) & 1U) << l;
      in[key_pos_[b]] = w;
    }
    auto y = simulate_block(locked_->circuit, in);
    PatternWord mismatch = 0;
    for (std::size_t j = 0; j < y.size(); ++j)
      mismatch |= y[j] ^ (y_f[j] ? ~PatternWord{0} : PatternWord{0});
    for (std::size_t l = 0; l < lanes; ++l)
      if (!((mismatch >> l) & 1U))
        kept.push_back(candidates_[base + l]);
  }
  std::size_t removed = candidates_.size() - kept.size();
  candidates_ = std::move(kept);
  return removed;
}

} // namespace kf

#pragma once

#include "keyforge/bits.hpp"
#include "keyforge/exec.hpp"
#include "keyforge/netlist.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kf {

//===----------------------------------------------------------------------===//
// Simulation
//===----------------------------------------------------------------------===//

/// Values in primary_inputs() order; returns values in primary_outputs()
/// order. Throws MissingInput if the input count is wrong.
BitVector simulate(const Circuit &circuit, const BitVector &inputs);

/// Name-keyed variant; every primary input must be present.
BitVector simulate(const Circuit &circuit, const std::map<std::string, bool, std::less<>> &inputs);

/// 64 patterns per word: bit i of every word belongs to pattern i.
using PatternWord = std::uint64_t;

/// Word-parallel simulation; `inputs` in primary_inputs() order, result in
/// primary_outputs() order.
std::vector<PatternWord> simulate_block(const Circuit &circuit, std::span<const PatternWord> inputs);

/// Fills `values` (one word per net) for the given input block.
void simulate_block_nets(const Circuit &circuit, std::span<const PatternWord> inputs, std::span<PatternWord> values);

/// Evaluates one gate over pattern words.
PatternWord eval_gate_word(const Gate &gate, std::span<const PatternWord> values);

//===----------------------------------------------------------------------===//
// Pattern source shared by the statistical kernels
//===----------------------------------------------------------------------===//

/// Yields `n_patterns` uniformly random patterns, or every input combination
/// exactly once when 2^inputs <= n_patterns. Word w of input i depends only on
/// (seed, w, i), so kernels may visit blocks in any order.
class PatternSource {
public:
  PatternSource(std::size_t num_inputs, std::size_t n_patterns, std::uint64_t seed);

  std::size_t num_blocks() const { return blocks_; }
  std::size_t num_patterns() const { return patterns_; }
  bool exhaustive() const { return exhaustive_; }

  void fill(std::size_t block, std::span<PatternWord> inputs) const;
  /// Mask of valid pattern lanes in `block`.
  PatternWord valid_mask(std::size_t block) const;

private:
  std::size_t inputs_;
  std::size_t blocks_;
  std::size_t patterns_;
  std::uint64_t seed_;
  bool exhaustive_;
};

//===----------------------------------------------------------------------===//
// Testability metrics
//===----------------------------------------------------------------------===//

/// Default pattern budget for the metrics that drive key-gate placement.
inline constexpr std::size_t kDefaultPatternBudget = 1024;

/// Empirical probability of logic 1 per net (indexed by NetId::index).
/// `n_patterns` must be a positive multiple of 64.
std::vector<double> signal_probabilities(const Circuit &circuit, std::size_t n_patterns, std::uint64_t seed,
                                         Exec exec = Exec::Default);

/// Stuck-at fault impact of one net. nop = patterns where the fault flips at
/// least one output, noo = total flipped output bits over those patterns.
struct FaultImpact {
  NetId net;
  std::uint64_t nop0 = 0;
  std::uint64_t noo0 = 0;
  std::uint64_t nop1 = 0;
  std::uint64_t noo1 = 0;

  std::uint64_t score() const { return nop0 * noo0 + nop1 * noo1; }
  friend bool operator==(const FaultImpact &, const FaultImpact &) = default;
};

/// One entry per net (primary inputs included), in NetId order.
std::vector<FaultImpact> fault_impact(const Circuit &circuit, std::size_t n_patterns, std::uint64_t seed,
                                      Exec exec = Exec::Default);

/// Vertices are the candidate nets; an edge joins two nets whose output cones
/// share a primary output while neither net lies on every path from the other
/// to those shared outputs.
struct InterferenceGraph {
  std::vector<NetId> vertices;
  std::vector<std::pair<std::size_t, std::size_t>> edges; ///< (i, j), i < j
  std::vector<std::vector<std::size_t>> adjacency;

  std::size_t degree(std::size_t v) const { return adjacency[v].size(); }
  bool adjacent(std::size_t a, std::size_t b) const;
};

InterferenceGraph interference_graph(const Circuit &circuit, std::span<const NetId> locations,
                                     Exec exec = Exec::Default);

/// Bitset over primary outputs reachable from each net (including itself
/// when it is an output). Word count = ceil(num_outputs / 64).
std::vector<std::vector<std::uint64_t>> output_cones(const Circuit &circuit);

/// Nets reachable from `net` through fanout (excluding `net` itself).
std::vector<bool> transitive_fanout(const Circuit &circuit, NetId net);

namespace detail {
std::vector<double> signal_probabilities_serial(const Circuit &, std::size_t, std::uint64_t);
std::vector<double> signal_probabilities_omp(const Circuit &, std::size_t, std::uint64_t);
std::vector<FaultImpact> fault_impact_serial(const Circuit &, std::size_t, std::uint64_t);
std::vector<FaultImpact> fault_impact_omp(const Circuit &, std::size_t, std::uint64_t);
InterferenceGraph interference_serial(const Circuit &, std::span<const NetId>);
InterferenceGraph interference_omp(const Circuit &, std::span<const NetId>);
} // namespace detail

} // namespace kf

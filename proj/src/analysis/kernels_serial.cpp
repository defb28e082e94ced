// Serial reference kernels. These favour obviousness over speed: fault
// simulation re-simulates the whole circuit for every fault. The OpenMP
// kernels in kernels_omp.cpp must agree with these bit for bit.

#include "keyforge/analysis.hpp"
#include "metrics_internal.hpp"

#include <bit>

namespace kf::detail {

std::vector<double> signal_probabilities_serial(const Circuit &circuit, std::size_t n_patterns, std::uint64_t seed) {
  PatternSource source(circuit.primary_inputs().size(), n_patterns, seed);
  std::vector<std::uint64_t> ones(circuit.num_nets(), 0);
  std::vector<PatternWord> inputs(circuit.primary_inputs().size());
  std::vector<PatternWord> values(circuit.num_nets());
  for (std::size_t b = 0; b < source.num_blocks(); ++b) {
    source.fill(b, inputs);
    simulate_block_nets(circuit, inputs, values);
    PatternWord mask = source.valid_mask(b);
    for (std::size_t n = 0; n < values.size(); ++n)
      ones[n] += static_cast<std::uint64_t>(std::popcount(values[n] & mask));
  }
  std::vector<double> p(circuit.num_nets());
  for (std::size_t n = 0; n < p.size(); ++n)
    p[n] = static_cast<double>(ones[n]) / static_cast<double>(source.num_patterns());
  return p;
}

namespace {

void simulate_with_fault(const Circuit &circuit, std::span<const PatternWord> inputs, NetId fault, PatternWord stuck,
                         std::span<PatternWord> values) {
  auto pis = circuit.primary_inputs();
  for (std::size_t i = 0; i < pis.size(); ++i)
    values[pis[i].index] = inputs[i];
  if (circuit.is_primary_input(fault))
    values[fault.index] = stuck;
  auto gates = circuit.gates();
  for (std::size_t gi : circuit.topo_order()) {
    const Gate &g = gates[gi];
    values[g.output.index] = g.output == fault ? stuck : eval_gate_word(g, values);
  }
}

} // namespace

std::vector<FaultImpact> fault_impact_serial(const Circuit &circuit, std::size_t n_patterns, std::uint64_t seed) {
  PatternSource source(circuit.primary_inputs().size(), n_patterns, seed);
  std::vector<FaultImpact> result(circuit.num_nets());
  for (std::size_t n = 0; n < result.size(); ++n)
    result[n].net = NetId{static_cast<std::uint32_t>(n)};

  std::vector<PatternWord> inputs(circuit.primary_inputs().size());
  std::vector<PatternWord> good(circuit.num_nets());
  std::vector<PatternWord> bad(circuit.num_nets());
  auto pos = circuit.primary_outputs();
  for (std::size_t b = 0; b < source.num_blocks(); ++b) {
    source.fill(b, inputs);
    simulate_block_nets(circuit, inputs, good);
    PatternWord mask = source.valid_mask(b);
    for (std::size_t n = 0; n < circuit.num_nets(); ++n) {
      for (int stuck = 0; stuck < 2; ++stuck) {
        simulate_with_fault(circuit, inputs, NetId{static_cast<std::uint32_t>(n)}, stuck ? ~PatternWord{0} : 0, bad);
        PatternWord detected = 0;
        std::uint64_t flips = 0;
        for (NetId po : pos) {
          PatternWord diff = (good[po.index] ^ bad[po.index]) & mask;
          detected |= diff;
          flips += static_cast<std::uint64_t>(std::popcount(diff));
        }
        auto &fi = result[n];
        (stuck ? fi.nop1 : fi.nop0) += static_cast<std::uint64_t>(std::popcount(detected));
        (stuck ? fi.noo1 : fi.noo0) += flips;
      }
    }
  }
  return result;
}

InterferenceGraph interference_serial(const Circuit &circuit, std::span<const NetId> locations) {
  InterferenceGraph graph;
  graph.vertices.assign(locations.begin(), locations.end());
  auto cones = output_cones(circuit);
  std::vector<std::uint32_t> mark(circuit.num_nets(), 0);
  std::uint32_t stamp = 0;
  std::vector<NetId> stack;
  for (std::size_t i = 0; i < locations.size(); ++i) {
    for (std::size_t j = i + 1; j < locations.size(); ++j) {
      NetId u = locations[i], v = locations[j];
      std::vector<std::uint64_t> shared(cones[u.index].size());
      bool any = false;
      for (std::size_t w = 0; w < shared.size(); ++w) {
        shared[w] = cones[u.index][w] & cones[v.index][w];
        any = any || shared[w] != 0;
      }
      if (!any)
        continue;
      bool u_dominates_v = !reaches_shared_avoiding(circuit, v, u, shared, mark, ++stamp, stack);
      bool v_dominates_u = !reaches_shared_avoiding(circuit, u, v, shared, mark, ++stamp, stack);
      if (!u_dominates_v && !v_dominates_u)
        graph.edges.emplace_back(i, j);
    }
  }
  finish_graph(graph);
  return graph;
}

} // namespace kf::detail

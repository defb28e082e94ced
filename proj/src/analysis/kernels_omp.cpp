// OpenMP kernels. Results are reduced from integer counts, so they are
// identical to the serial reference regardless of thread count or schedule.

#include "keyforge/analysis.hpp"
#include "metrics_internal.hpp"

#include <algorithm>
#include <bit>


namespace kf::detail {

std::vector<double> signal_probabilities_omp(const Circuit &circuit, std::size_t n_patterns, std::uint64_t seed) {
  PatternSource source(circuit.primary_inputs().size(), n_patterns, seed);
  const std::size_t nets = circuit.num_nets();
  std::vector<std::uint64_t> ones(nets, 0);
  const auto blocks = static_cast<std::int64_t>(source.num_blocks());

#pragma omp parallel
  {
    std::vector<std::uint64_t> local(nets, 0);
    std::vector<PatternWord> inputs(circuit.primary_inputs().size());
    std::vector<PatternWord> values(nets);
#pragma omp for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
      source.fill(static_cast<std::size_t>(b), inputs);
      simulate_block_nets(circuit, inputs, values);
      PatternWord mask = source.valid_mask(static_cast<std::size_t>(b));
      for (std::size_t n = 0; n < nets; ++n)
        local[n] += static_cast<std::uint64_t>(std::popcount(values[n] & mask));
    }
#pragma omp critical
    for (std::size_t n = 0; n < nets; ++n)
      ones[n] += local[n];
  }

  std::vector<double> p(nets);
  for (std::size_t n = 0; n < nets; ++n)
    p[n] = static_cast<double>(ones[n]) / static_cast<double>(source.num_patterns());
  return p;
}

std::vector<FaultImpact> fault_impact_omp(const Circuit &circuit, std::size_t n_patterns, std::uint64_t seed) {
  PatternSource source(circuit.primary_inputs().size(), n_patterns, seed);
  const std::size_t nets = circuit.num_nets();
  const std::size_t blocks = source.num_blocks();
  auto gates = circuit.gates();
  auto topo = circuit.topo_order();
  auto pos = circuit.primary_outputs();

  // Fault-free values for every block, computed once and shared read-only.
  std::vector<PatternWord> good(blocks * nets);
  {
    std::vector<PatternWord> inputs(circuit.primary_inputs().size());
    for (std::size_t b = 0; b < blocks; ++b) {
      source.fill(b, inputs);
      simulate_block_nets(circuit, inputs, std::span<PatternWord>(good).subspan(b * nets, nets));
    }
  }

  std::vector<FaultImpact> result(nets);
  for (std::size_t n = 0; n < nets; ++n)
    result[n].net = NetId{static_cast<std::uint32_t>(n)};

#pragma omp parallel
  {
    std::vector<PatternWord> bad(nets);
    std::vector<std::size_t> cone;
#pragma omp for schedule(dynamic, 8)
    for (std::int64_t fault_i = 0; fault_i < static_cast<std::int64_t>(nets); ++fault_i) {
      NetId fault{static_cast<std::uint32_t>(fault_i)};
      // Gates in the fault's fanout cone, in topological order.
      auto reach = transitive_fanout(circuit, fault);
      cone.clear();
      for (std::size_t gi : topo)
        if (reach[gates[gi].output.index] && gates[gi].output != fault)
          cone.push_back(gi);

      FaultImpact &fi = result[static_cast<std::size_t>(fault_i)];
      for (std::size_t b = 0; b < blocks; ++b) {
        std::span<const PatternWord> g(good.data() + b * nets, nets);
        PatternWord mask = source.valid_mask(b);
        for (int stuck = 0; stuck < 2; ++stuck) {
          std::copy(g.begin(), g.end(), bad.begin());
          bad[fault.index] = stuck ? ~PatternWord{0} : 0;
          for (std::size_t gi : cone)
            bad[gates[gi].output.index] = eval_gate_word(gates[gi], bad);
          PatternWord detected = 0;
          std::uint64_t flips = 0;
          for (NetId po : pos) {
            PatternWord diff = (g[po.index] ^ bad[po.index]) & mask;
            detected |= diff;
            flips += static_cast<std::uint64_t>(std::popcount(diff));
          }
          (stuck ? fi.nop1 : fi.nop0) += static_cast<std::uint64_t>(std::popcount(detected));
          (stuck ? fi.noo1 : fi.noo0) += flips;
        }
      }
    }
  }
  return result;
}

InterferenceGraph interference_omp(const Circuit &circuit, std::span<const NetId> locations) {
  InterferenceGraph graph;
  graph.vertices.assign(locations.begin(), locations.end());
  const auto cones = output_cones(circuit);
  const auto count = static_cast<std::int64_t>(locations.size());

#pragma omp parallel
  {
    std::vector<std::pair<std::size_t, std::size_t>> local;
    std::vector<std::uint32_t> mark(circuit.num_nets(), 0);
    std::uint32_t stamp = 0;
    std::vector<NetId> stack;
    std::vector<std::uint64_t> shared;
#pragma omp for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < count; ++i) {
      NetId u = locations[static_cast<std::size_t>(i)];
      for (std::size_t j = static_cast<std::size_t>(i) + 1; j < locations.size(); ++j) {
        NetId v = locations[j];
        shared.assign(cones[u.index].size(), 0);
        bool any = false;
        for (std::size_t w = 0; w < shared.size(); ++w) {
          shared[w] = cones[u.index][w] & cones[v.index][w];
          any = any || shared[w] != 0;
        }
        if (!any)
          continue;
        if (!reaches_shared_avoiding(circuit, v, u, shared, mark, ++stamp, stack))
          continue;
        if (!reaches_shared_avoiding(circuit, u, v, shared, mark, ++stamp, stack))
          continue;
        local.emplace_back(static_cast<std::size_t>(i), j);
      }
    }
#pragma omp critical
    graph.edges.insert(graph.edges.end(), local.begin(), local.end());
  }
  finish_graph(graph);
  return graph;
}

} // namespace kf::detail

#include "keyforge/analysis.hpp"
#include "keyforge/error.hpp"
#include "metrics_internal.hpp"

#include <algorithm>

namespace kf {

bool InterferenceGraph::adjacent(std::size_t a, std::size_t b) const {
  const auto &adj = adjacency[a];
  return std::binary_search(adj.begin(), adj.end(), b);
}

std::vector<std::vector<std::uint64_t>> output_cones(const Circuit &circuit) {
  const std::size_t words = (circuit.primary_outputs().size() + 63) / 64;
  std::vector<std::vector<std::uint64_t>> cone(circuit.num_nets(), std::vector<std::uint64_t>(words, 0));
  auto pos = circuit.primary_outputs();
  for (std::size_t i = 0; i < pos.size(); ++i)
    cone[pos[i].index][i / 64] |= std::uint64_t{1} << (i % 64);
  auto gates = circuit.gates();
  auto topo = circuit.topo_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const Gate &g = gates[*it];
    for (NetId in : g.inputs)
      for (std::size_t w = 0; w < words; ++w)
        cone[in.index][w] |= cone[g.output.index][w];
  }
  return cone;
}

std::vector<bool> transitive_fanout(const Circuit &circuit, NetId net) {
  std::vector<bool> seen(circuit.num_nets(), false);
  std::vector<NetId> stack{net};
  auto gates = circuit.gates();
  while (!stack.empty()) {
    NetId n = stack.back();
    stack.pop_back();
    for (std::size_t gi : circuit.fanout(n)) {
      NetId out = gates[gi].output;
      if (!seen[out.index]) {
        seen[out.index] = true;
        stack.push_back(out);
      }
    }
  }
  return seen;
}

namespace detail {

bool reaches_shared_avoiding(const Circuit &circuit, NetId from, NetId avoid, const std::vector<std::uint64_t> &shared,
                             std::vector<std::uint32_t> &mark, std::uint32_t stamp, std::vector<NetId> &stack) {
  auto pos_hit = [&](NetId n) {
    if (!circuit.is_primary_output(n))
      return false;
    // Linear scan is fine: outputs are few relative to BFS cost.
    auto pos = circuit.primary_outputs();
    for (std::size_t i = 0; i < pos.size(); ++i)
      if (pos[i] == n)
        return ((shared[i / 64] >> (i % 64)) & 1U) != 0;
    return false;
  };
  auto gates = circuit.gates();
  stack.clear();
  stack.push_back(from);
  mark[from.index] = stamp;
  while (!stack.empty()) {
    NetId n = stack.back();
    stack.pop_back();
    if (pos_hit(n))
      return true;
    for (std::size_t gi : circuit.fanout(n)) {
      NetId out = gates[gi].output;
      if (out == avoid || mark[out.index] == stamp)
        continue;
      mark[out.index] = stamp;
      stack.push_back(out);
    }
  }
  return false;
}

void finish_graph(InterferenceGraph &graph) {
  std::sort(graph.edges.begin(), graph.edges.end());
  graph.adjacency.assign(graph.vertices.size(), {});
  for (auto [a, b] : graph.edges) {
    graph.adjacency[a].push_back(b);
    graph.adjacency[b].push_back(a);
  }
  for (auto &adj : graph.adjacency)
    std::sort(adj.begin(), adj.end());
}

void check_locations(const Circuit &circuit, std::span<const NetId> locations) {
  std::vector<bool> seen(circuit.num_nets(), false);
  for (NetId n : locations) {
    if (n.index >= circuit.num_nets())
      throw Error(ErrorKind::InvalidArgument, "location out of range");
    if (seen[n.index])
      throw Error(ErrorKind::InvalidArgument, "duplicate location '" + circuit.net_name(n) + "'");
    seen[n.index] = true;
  }
}

} // namespace detail

std::vector<double> signal_probabilities(const Circuit &circuit, std::size_t n_patterns, std::uint64_t seed,
                                         Exec exec) {
  return resolve_exec(exec) == Exec::Serial ? detail::signal_probabilities_serial(circuit, n_patterns, seed)
                                            : detail::signal_probabilities_omp(circuit, n_patterns, seed);
}

std::vector<FaultImpact> fault_impact(const Circuit &circuit, std::size_t n_patterns, std::uint64_t seed, Exec exec) {
  return resolve_exec(exec) == Exec::Serial ? detail::fault_impact_serial(circuit, n_patterns, seed)
                                            : detail::fault_impact_omp(circuit, n_patterns, seed);
}

InterferenceGraph interference_graph(const Circuit &circuit, std::span<const NetId> locations, Exec exec) {
  detail::check_locations(circuit, locations);
  return resolve_exec(exec) == Exec::Serial ? detail::interference_serial(circuit, locations)
                                            : detail::interference_omp(circuit, locations);
}

} // namespace kf

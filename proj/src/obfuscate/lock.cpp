#include "keyforge/analysis.hpp"
#include "keyforge/error.hpp"
#include "keyforge/obfuscate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace kf {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
  case Scheme::Rnd: return "rnd";
  case Scheme::Dac12: return "dac12";
  case Scheme::Toc13Xor: return "toc13xor";
  case Scheme::Toc13Mux: return "toc13mux";
  case Scheme::Iolts14: return "iolts14";
  }
  return "rnd";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
  for (Scheme s : kAllSchemes)
    if (to_string(s) == name)
      return s;
  return std::nullopt;
}

std::vector<NetId> LockedCircuit::data_inputs() const {
  std::vector<NetId> out;
  for (NetId pi : circuit.primary_inputs())
    if (std::find(key_inputs.begin(), key_inputs.end(), pi) == key_inputs.end())
      out.push_back(pi);
  return out;
}

std::size_t key_count(std::size_t gate_count, unsigned overhead_pct) {
  auto k = static_cast<std::size_t>(std::lround(static_cast<double>(overhead_pct) / 100.0 * static_cast<double>(gate_count)));
  return std::max<std::size_t>(1, k);
}

namespace {

struct Insertion {
  NetId net;
  GateKind kind;
  bool key_bit;
  NetId decoy{};
};

bool looks_like_key_name(std::string_view name) {
  constexpr std::string_view prefix = "keyinput";
  if (!name.starts_with(prefix) || name.size() == prefix.size())
    return false;
  return std::all_of(name.begin() + prefix.size(), name.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
}

/// Rewrites `c` so that each insertion's key gate drives the original net
/// name and the original driver moves to a fresh internal net.
LockedCircuit materialize(const Circuit &c, const std::vector<Insertion> &insertions) {
  NameAllocator names(&c);
  CircuitBuilder b(c.name());
  for (NetId pi : c.primary_inputs())
    b.add_input(c.net_name(pi));
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < insertions.size(); ++i) {
    keys.push_back(names.key());
    b.add_input(keys.back());
  }
  for (NetId po : c.primary_outputs())
    b.add_output(c.net_name(po));

  std::vector<int> at(c.num_nets(), -1);
  for (std::size_t i = 0; i < insertions.size(); ++i)
    at[insertions[i].net.index] = static_cast<int>(i);

  std::vector<std::string> inputs;
  for (const Gate &g : c.gates()) {
    inputs.clear();
    for (NetId n : g.inputs)
      inputs.push_back(c.net_name(n));
    const std::string &out = c.net_name(g.output);
    int idx = at[g.output.index];
    if (idx < 0) {
      b.add_gate(g.kind, inputs, out, g.lut_table);
      continue;
    }
    const Insertion &ins = insertions[static_cast<std::size_t>(idx)];
    const std::string &key = keys[static_cast<std::size_t>(idx)];
    std::string moved = names.internal(out);
    b.add_gate(g.kind, inputs, moved, g.lut_table);
    if (ins.kind == GateKind::Mux2) {
      const std::string &decoy = c.net_name(ins.decoy);
      if (ins.key_bit)
        b.add_gate(GateKind::Mux2, {key, decoy, moved}, out);
      else
        b.add_gate(GateKind::Mux2, {key, moved, decoy}, out);
    } else {
      b.add_gate(ins.kind, {moved, key}, out);
    }
  }

  LockedCircuit lc{std::move(b).build(), {}, BitVector{}, std::nullopt, c.name(), 0, 0};
  for (const auto &k : keys)
    lc.key_inputs.push_back(*lc.circuit.find_net(k));
  for (const auto &ins : insertions)
    lc.correct_key->push_back(ins.key_bit);
  return lc;
}

/// Gate outputs, highest fault-impact score first (ties: lower net index).
std::vector<NetId> rank_by_fault_impact(const Circuit &c, const std::vector<NetId> &eligible, std::uint64_t seed,
                                        const LockOptions &options) {
  auto fi = fault_impact(c, options.analysis_patterns, seed, options.exec);
  std::vector<NetId> ranked = eligible;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](NetId a, NetId b) { return fi[a.index].score() > fi[b.index].score(); });
  return ranked;
}

std::vector<NetId> dac12_select(const Circuit &c, const std::vector<NetId> &ranked, std::size_t k,
                                const LockOptions &options) {
  const std::size_t pool = std::min(ranked.size(), std::clamp<std::size_t>(2 * k, 64, 400));
  std::vector<NetId> candidates(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(pool));
  InterferenceGraph g = interference_graph(c, candidates, options.exec);

  std::vector<NetId> chosen;
  std::vector<bool> taken(candidates.size(), false);
  if (!g.edges.empty()) {
    // Grow cliques greedily by degree until no interfering vertex is left.
    while (chosen.size() < k) {
      std::size_t start = candidates.size();
      for (std::size_t v = 0; v < candidates.size(); ++v)
        if (!taken[v] && g.degree(v) > 0 && (start == candidates.size() || g.degree(v) > g.degree(start)))
          start = v;
      if (start == candidates.size())
        break;
      std::vector<std::size_t> clique{start};
      taken[start] = true;
      chosen.push_back(candidates[start]);
      while (chosen.size() < k) {
        std::size_t best = candidates.size();
        for (std::size_t v : g.adjacency[start]) {
          if (taken[v])
            continue;
          bool all = std::all_of(clique.begin(), clique.end(), [&](std::size_t u) { return g.adjacent(u, v); });
          if (all && (best == candidates.size() || g.degree(v) > g.degree(best) ||
                      (g.degree(v) == g.degree(best) && v < best)))
            best = v;
        }
        if (best == candidates.size())
          break;
        clique.push_back(best);
        taken[best] = true;
        chosen.push_back(candidates[best]);
      }
    }
  }
  // Remaining gates (or all of them for an edgeless graph) follow the
  // fault-impact ranking.
  for (NetId n : ranked) {
    if (chosen.size() >= k)
      break;
    if (std::find(chosen.begin(), chosen.end(), n) == chosen.end())
      chosen.push_back(n);
  }
  return chosen;
}

} // namespace

LockedCircuit lock(const Circuit &circuit, Scheme scheme, unsigned overhead_pct, std::uint64_t seed,
                   const LockOptions &options) {
  if (overhead_pct < 1 || overhead_pct > 100)
    throw Error(ErrorKind::InvalidArgument, "overhead must be between 1 and 100 percent");
  for (std::size_t n = 0; n < circuit.num_nets(); ++n)
    if (looks_like_key_name(circuit.net_name(NetId{static_cast<std::uint32_t>(n)})))
      throw Error(ErrorKind::InvalidArgument, "circuit already has a net named '" +
                                                  circuit.net_name(NetId{static_cast<std::uint32_t>(n)}) + "'");

  std::vector<NetId> eligible;
  for (const Gate &g : circuit.gates())
    eligible.push_back(g.output);
  std::sort(eligible.begin(), eligible.end());
  const std::size_t k = key_count(circuit.gates().size(), overhead_pct);
  if (eligible.empty() || k > eligible.size())
    throw Error(ErrorKind::TooFewLocations, std::to_string(k) + " key gates requested but '" + circuit.name() +
                                                "' has " + std::to_string(eligible.size()) + " eligible nets");

  std::mt19937_64 rng(mix64(seed));
  auto random_bit = [&]() { return (rng() >> 63) != 0; };
  auto xor_insertions = [&](const std::vector<NetId> &nets) {
    std::vector<Insertion> out;
    for (std::size_t i = 0; i < k; ++i) {
      bool bit = random_bit();
      out.push_back({nets[i], bit ? GateKind::Xnor : GateKind::Xor, bit});
    }
    return out;
  };

  std::vector<Insertion> insertions;
  switch (scheme) {
  case Scheme::Rnd: {
    std::vector<NetId> nets = eligible;
    for (std::size_t i = nets.size(); i > 1; --i)
      std::swap(nets[i - 1], nets[rng() % i]);
    insertions = xor_insertions(nets);
    break;
  }
  case Scheme::Toc13Xor:
    insertions = xor_insertions(rank_by_fault_impact(circuit, eligible, seed, options));
    break;
  case Scheme::Dac12:
    insertions = xor_insertions(dac12_select(circuit, rank_by_fault_impact(circuit, eligible, seed, options), k, options));
    break;
  case Scheme::Toc13Mux: {
    auto ranked = rank_by_fault_impact(circuit, eligible, seed, options);
    // Decoy edges added so far; decoy d feeding the MUX at n makes n part
    // of d's fanout.
    std::vector<std::vector<std::uint32_t>> extra(circuit.num_nets());
    std::vector<bool> reach;
    std::vector<std::uint32_t> stack;
    for (std::size_t i = 0; i < k; ++i) {
      NetId n = ranked[i];
      reach.assign(circuit.num_nets(), false);
      reach[n.index] = true;
      stack.assign(1, n.index);
      while (!stack.empty()) {
        std::uint32_t u = stack.back();
        stack.pop_back();
        auto push = [&](std::uint32_t w) {
          if (!reach[w]) {
            reach[w] = true;
            stack.push_back(w);
          }
        };
        for (std::size_t gi : circuit.fanout(NetId{u}))
          push(circuit.gates()[gi].output.index);
        for (std::uint32_t w : extra[u])
          push(w);
      }
      std::vector<NetId> decoys;
      for (std::uint32_t v = 0; v < circuit.num_nets(); ++v)
        if (!reach[v])
          decoys.push_back(NetId{v});
      if (decoys.empty())
        throw Error(ErrorKind::TooFewLocations, "no decoy net outside the fanout of '" + circuit.net_name(n) + "'");
      NetId decoy = decoys[rng() % decoys.size()];
      extra[decoy.index].push_back(n.index);
      bool bit = random_bit();
      insertions.push_back({n, GateKind::Mux2, bit, decoy});
    }
    break;
  }
  case Scheme::Iolts14: {
    auto p = signal_probabilities(circuit, options.analysis_patterns, seed, options.exec);
    std::vector<NetId> ranked = eligible;
    std::stable_sort(ranked.begin(), ranked.end(), [&](NetId a, NetId b) {
      return std::abs(p[a.index] - 0.5) > std::abs(p[b.index] - 0.5);
    });
    for (std::size_t i = 0; i < k; ++i) {
      NetId n = ranked[i];
      if (p[n.index] < 0.5)
        insertions.push_back({n, GateKind::And, true});
      else
        insertions.push_back({n, GateKind::Or, false});
    }
    break;
  }
  }

  LockedCircuit lc = materialize(circuit, insertions);
  lc.scheme = scheme;
  lc.seed = seed;
  lc.overhead_pct = overhead_pct;
  return lc;
}

} // namespace kf

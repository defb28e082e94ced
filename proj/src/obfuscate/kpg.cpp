#include "keyforge/error.hpp"
#include "keyforge/obfuscate.hpp"

#include <algorithm>

namespace kf {

NameAllocator::NameAllocator(const Circuit *existing, std::size_t first_key)
    : existing_(existing), next_key_(first_key) {}

bool NameAllocator::taken(const std::string &name) const {
  return reserved_.contains(name) || (existing_ && existing_->find_net(name));
}

void NameAllocator::reserve(std::string name) { reserved_.insert(std::move(name)); }

std::string NameAllocator::key() {
  std::string name;
  do
    name = "keyinput" + std::to_string(next_key_++);
  while (taken(name));
  reserve(name);
  return name;
}

std::string NameAllocator::internal(std::string_view hint) {
  std::string base = std::string(hint);
  if (base.starts_with(kSynthPrefix))
    base.erase(0, kSynthPrefix.size());
  std::string name;
  do
    name = std::string(kSynthPrefix) + base + "_" + std::to_string(next_internal_++);
  while (taken(name));
  reserve(name);
  return name;
}

namespace {

/// Binary MUX tree over `leaves` (size 2^selects.size()); level j uses
/// selects[j]. The root drives `output`.
void mux_tree(std::vector<std::string> leaves, std::span<const std::string> selects, const std::string &output,
              NameAllocator &names, std::vector<GateSpec> &gates) {
  for (std::size_t level = 0; level < selects.size(); ++level) {
    const bool last = level + 1 == selects.size();
    std::vector<std::string> next;
    for (std::size_t i = 0; i + 1 < leaves.size(); i += 2) {
      std::string out = last ? output : names.internal(output + "_mux");
      gates.push_back({GateKind::Mux2, {selects[level], leaves[i], leaves[i + 1]}, out, {}});
      next.push_back(std::move(out));
    }
    leaves = std::move(next);
  }
}

} // namespace

KpgSubcircuit lut_to_kpg(std::span<const std::string> inputs, const BitVector &table, const std::string &output,
                         NameAllocator &names) {
  if (inputs.empty() || table.size() != (std::size_t{1} << inputs.size()))
    throw Error(ErrorKind::ArityMismatch, "LUT '" + output + "' table size does not match its inputs");
  KpgSubcircuit kpg;
  kpg.output = output;
  for (std::size_t t = 0; t < table.size(); ++t)
    kpg.key_nets.push_back(names.key());
  kpg.correct_key = table;
  mux_tree(kpg.key_nets, inputs, output, names, kpg.gates);
  return kpg;
}

KpgSubcircuit camo_to_kpg(std::span<const std::string> inputs, std::span<const GateKind> possibilities,
                          std::size_t true_index, const std::string &output, NameAllocator &names) {
  const std::size_t m = possibilities.size();
  if (m < 2)
    throw Error(ErrorKind::InvalidArgument, "camouflaged cell '" + output + "' needs at least two possibilities");
  if (true_index >= m)
    throw Error(ErrorKind::InvalidArgument, "true index out of range for cell '" + output + "'");
  KpgSubcircuit kpg;
  kpg.output = output;
  std::vector<std::string> candidates;
  for (GateKind kind : possibilities) {
    if (kind == GateKind::Lut || !arity_ok(kind, inputs.size(), 0))
      throw Error(ErrorKind::ArityMismatch, std::string(to_string(kind)) + " cannot take " +
                                                std::to_string(inputs.size()) + " inputs in cell '" + output + "'");
    std::string out = names.internal(output + "_" + std::string(to_string(kind)));
    kpg.gates.push_back({kind, std::vector<std::string>(inputs.begin(), inputs.end()), out, {}});
    candidates.push_back(std::move(out));
  }
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < m)
    ++bits;
  for (std::size_t i = 0; i < bits; ++i) {
    kpg.key_nets.push_back(names.key());
    kpg.correct_key.push_back(((true_index >> i) & 1U) != 0);
  }
  // Codes past the last candidate select the last candidate.
  std::vector<std::string> leaves;
  for (std::size_t code = 0; code < (std::size_t{1} << bits); ++code)
    leaves.push_back(candidates[std::min(code, m - 1)]);
  mux_tree(std::move(leaves), kpg.key_nets, output, names, kpg.gates);
  return kpg;
}

namespace {

/// Copies `c`, replacing the gates for which `replace` yields a subcircuit.
template <typename F> LockedCircuit rebuild_with_kpgs(const Circuit &c, F &&replace) {
  NameAllocator names(&c);
  std::vector<GateSpec> gates;
  std::vector<std::string> keys;
  BitVector correct;
  std::vector<std::string> inputs;
  for (const Gate &g : c.gates()) {
    inputs.clear();
    for (NetId n : g.inputs)
      inputs.push_back(c.net_name(n));
    std::optional<KpgSubcircuit> kpg = replace(g, inputs, names);
    if (!kpg) {
      gates.push_back({g.kind, inputs, c.net_name(g.output), g.lut_table});
      continue;
    }
    gates.insert(gates.end(), kpg->gates.begin(), kpg->gates.end());
    keys.insert(keys.end(), kpg->key_nets.begin(), kpg->key_nets.end());
    correct.insert(correct.end(), kpg->correct_key.begin(), kpg->correct_key.end());
  }
  CircuitBuilder b(c.name());
  for (NetId pi : c.primary_inputs())
    b.add_input(c.net_name(pi));
  for (const auto &k : keys)
    b.add_input(k);
  for (NetId po : c.primary_outputs())
    b.add_output(c.net_name(po));
  for (const auto &g : gates)
    b.add_gate(g.kind, g.inputs, g.output, g.lut_table);
  LockedCircuit lc{std::move(b).build(), {}, std::move(correct), std::nullopt, c.name(), 0, 0};
  for (const auto &k : keys)
    lc.key_inputs.push_back(*lc.circuit.find_net(k));
  return lc;
}

} // namespace

LockedCircuit convert_luts(const Circuit &circuit) {
  return rebuild_with_kpgs(circuit, [&](const Gate &g, const std::vector<std::string> &inputs,
                                        NameAllocator &names) -> std::optional<KpgSubcircuit> {
    if (g.kind != GateKind::Lut)
      return std::nullopt;
    return lut_to_kpg(inputs, g.lut_table, circuit.net_name(g.output), names);
  });
}

LockedCircuit convert_camouflaged(const Circuit &circuit, std::span<const CamoCell> cells) {
  std::vector<const CamoCell *> by_net(circuit.num_nets(), nullptr);
  for (const auto &cell : cells) {
    auto d = cell.net.index < circuit.num_nets() ? circuit.driver(cell.net) : std::nullopt;
    if (!d)
      throw Error(ErrorKind::InvalidArgument, "camouflaged cell net is not driven by a gate");
    if (cell.true_index >= cell.possibilities.size() ||
        cell.possibilities[cell.true_index] != circuit.gates()[*d].kind)
      throw Error(ErrorKind::InvalidArgument,
                  "true possibility of cell '" + circuit.net_name(cell.net) + "' does not match its gate");
    by_net[cell.net.index] = &cell;
  }
  return rebuild_with_kpgs(circuit, [&](const Gate &g, const std::vector<std::string> &inputs,
                                        NameAllocator &names) -> std::optional<KpgSubcircuit> {
    const CamoCell *cell = by_net[g.output.index];
    if (!cell)
      return std::nullopt;
    return camo_to_kpg(inputs, cell->possibilities, cell->true_index, circuit.net_name(g.output), names);
  });
}

} // namespace kf

#include "keyforge/cnf.hpp"
#include "keyforge/error.hpp"
#include "tseitin_internal.hpp"

namespace kf {

namespace detail {

void encode_xor2(CnfFormula &f, Lit a, Lit b, Lit y) {
  f.add_clause({~a, ~b, ~y});
  f.add_clause({a, b, ~y});
  f.add_clause({a, ~b, y});
  f.add_clause({~a, b, y});
}

void encode_gate(CnfFormula &f, GateKind kind, std::span<const Lit> in, Lit y, const BitVector &table) {
  switch (kind) {
  case GateKind::And:
  case GateKind::Nand: {
    Lit out = kind == GateKind::And ? y : ~y;
    Clause big;
    for (Lit a : in) {
      big.push_back(~a);
      f.add_clause({a, ~out});
    }
    big.push_back(out);
    f.add_clause(std::move(big));
    return;
  }
  case GateKind::Or:
  case GateKind::Nor: {
    Lit out = kind == GateKind::Or ? y : ~y;
    Clause big;
    for (Lit a : in) {
      big.push_back(a);
      f.add_clause({~a, out});
    }
    big.push_back(~out);
    f.add_clause(std::move(big));
    return;
  }
  case GateKind::Xor:
  case GateKind::Xnor: {
    Lit out = kind == GateKind::Xor ? y : ~y;
    Lit acc = in[0];
    for (std::size_t i = 1; i < in.size(); ++i) {
      Lit next = (i + 1 == in.size()) ? out : Lit::pos(f.new_var());
      encode_xor2(f, acc, in[i], next);
      acc = next;
    }
    return;
  }
  case GateKind::Not:
    f.add_clause({in[0], y});
    f.add_clause({~in[0], ~y});
    return;
  case GateKind::Buf:
    f.add_clause({~in[0], y});
    f.add_clause({in[0], ~y});
    return;
  case GateKind::Mux2: {
    Lit s = in[0], d0 = in[1], d1 = in[2];
    f.add_clause({s, ~d0, y});
    f.add_clause({s, d0, ~y});
    f.add_clause({~s, ~d1, y});
    f.add_clause({~s, d1, ~y});
    f.add_clause({~d0, ~d1, y});
    f.add_clause({d0, d1, ~y});
    return;
  }
  case GateKind::Lut: {
    for (std::size_t row = 0; row < table.size(); ++row) {
      Clause c;
      for (std::size_t i = 0; i < in.size(); ++i)
        c.push_back(((row >> i) & 1U) ? ~in[i] : in[i]);
      c.push_back(table[row] ? y : ~y);
      f.add_clause(std::move(c));
    }
    return;
  }
  }
}

} // namespace detail

std::size_t tseitin_clause_count(const Gate &gate) {
  const std::size_t n = gate.inputs.size();
  switch (gate.kind) {
  case GateKind::And:
  case GateKind::Nand:
  case GateKind::Or:
  case GateKind::Nor: return n + 1;
  case GateKind::Xor:
  case GateKind::Xnor: return 4 * (n - 1);
  case GateKind::Not:
  case GateKind::Buf: return 2;
  case GateKind::Mux2: return 6;
  case GateKind::Lut: return gate.lut_table.size();
  }
  return 0;
}

EncodedCopy tseitin(const Circuit &circuit, CnfFormula &formula, std::span<const std::optional<Lit>> pi_binding) {
  auto pis = circuit.primary_inputs();
  if (!pi_binding.empty() && pi_binding.size() != pis.size())
    throw Error(ErrorKind::InvalidArgument, "input binding size does not match primary inputs");
  EncodedCopy copy;
  copy.net.assign(circuit.num_nets(), Lit());
  for (std::size_t i = 0; i < pis.size(); ++i) {
    if (!pi_binding.empty() && pi_binding[i])
      copy.net[pis[i].index] = *pi_binding[i];
    else
      copy.net[pis[i].index] = Lit::pos(formula.new_var());
  }
  auto gates = circuit.gates();
  // Allocate outputs in declaration order so numbering follows the file.
  for (const auto &g : gates)
    copy.net[g.output.index] = Lit::pos(formula.new_var());
  std::vector<Lit> ins;
  for (std::size_t gi : circuit.topo_order()) {
    const Gate &g = gates[gi];
    ins.clear();
    for (NetId n : g.inputs)
      ins.push_back(copy.net[n.index]);
    detail::encode_gate(formula, g.kind, ins, copy.net[g.output.index], g.lut_table);
  }
  return copy;
}

} // namespace kf

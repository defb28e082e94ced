#include "keyforge/analysis.hpp"
#include "keyforge/error.hpp"

#include <algorithm>
#include <bit>

namespace kf {

namespace {

bool eval_gate_scalar(const Gate &gate, const BitVector &values) {
  auto in = [&](std::size_t i) { return static_cast<bool>(values[gate.inputs[i].index]); };
  switch (gate.kind) {
  case GateKind::And:
  case GateKind::Nand: {
    bool v = true;
    for (std::size_t i = 0; i < gate.inputs.size(); ++i)
      v = v && in(i);
    return gate.kind == GateKind::And ? v : !v;
  }
  case GateKind::Or:
  case GateKind::Nor: {
    bool v = false;
    for (std::size_t i = 0; i < gate.inputs.size(); ++i)
      v = v || in(i);
    return gate.kind == GateKind::Or ? v : !v;
  }
  case GateKind::Xor:
  case GateKind::Xnor: {
    bool v = false;
    for (std::size_t i = 0; i < gate.inputs.size(); ++i)
      v = v != in(i);
    return gate.kind == GateKind::Xor ? v : !v;
  }
  case GateKind::Not: return !in(0);
  case GateKind::Buf: return in(0);
  case GateKind::Mux2: return in(0) ? in(2) : in(1);
  case GateKind::Lut: {
    std::size_t row = 0;
    for (std::size_t i = 0; i < gate.inputs.size(); ++i)
      if (in(i))
        row |= std::size_t{1} << i;
    return gate.lut_table[row];
  }
  }
  return false;
}

} // namespace

BitVector simulate(const Circuit &circuit, const BitVector &inputs) {
  auto pis = circuit.primary_inputs();
  if (inputs.size() != pis.size())
    throw Error(ErrorKind::MissingInput, "expected " + std::to_string(pis.size()) + " input values, got " +
                                             std::to_string(inputs.size()));
  BitVector values(circuit.num_nets(), false);
  for (std::size_t i = 0; i < pis.size(); ++i)
    values[pis[i].index] = inputs[i];
  auto gates = circuit.gates();
  for (std::size_t gi : circuit.topo_order())
    values[gates[gi].output.index] = eval_gate_scalar(gates[gi], values);
  BitVector out;
  out.reserve(circuit.primary_outputs().size());
  for (NetId po : circuit.primary_outputs())
    out.push_back(values[po.index]);
  return out;
}

BitVector simulate(const Circuit &circuit, const std::map<std::string, bool, std::less<>> &inputs) {
  BitVector ordered;
  for (NetId pi : circuit.primary_inputs()) {
    auto it = inputs.find(circuit.net_name(pi));
    if (it == inputs.end())
      throw Error(ErrorKind::MissingInput, "no value for primary input '" + circuit.net_name(pi) + "'");
    ordered.push_back(it->second);
  }
  return simulate(circuit, ordered);
}

PatternWord eval_gate_word(const Gate &gate, std::span<const PatternWord> values) {
  auto in = [&](std::size_t i) { return values[gate.inputs[i].index]; };
  switch (gate.kind) {
  case GateKind::And:
  case GateKind::Nand: {
    PatternWord v = ~PatternWord{0};
    for (std::size_t i = 0; i < gate.inputs.size(); ++i)
      v &= in(i);
    return gate.kind == GateKind::And ? v : ~v;
  }
  case GateKind::Or:
  case GateKind::Nor: {
    PatternWord v = 0;
    for (std::size_t i = 0; i < gate.inputs.size(); ++i)
      v |= in(i);
    return gate.kind == GateKind::Or ? v : ~v;
  }
  case GateKind::Xor:
  case GateKind::Xnor: {
    PatternWord v = 0;
    for (std::size_t i = 0; i < gate.inputs.size(); ++i)
      v ^= in(i);
    return gate.kind == GateKind::Xor ? v : ~v;
  }
  case GateKind::Not: return ~in(0);
  case GateKind::Buf: return in(0);
  case GateKind::Mux2: return (in(0) & in(2)) | (~in(0) & in(1));
  case GateKind::Lut: {
    PatternWord v = 0;
    for (std::size_t row = 0; row < gate.lut_table.size(); ++row) {
      if (!gate.lut_table[row])
        continue;
      PatternWord term = ~PatternWord{0};
      for (std::size_t i = 0; i < gate.inputs.size(); ++i)
        term &= ((row >> i) & 1U) ? in(i) : ~in(i);
      v |= term;
    }
    return v;
  }
  }
  return 0;
}

void simulate_block_nets(const Circuit &circuit, std::span<const PatternWord> inputs, std::span<PatternWord> values) {
  auto pis = circuit.primary_inputs();
  if (inputs.size() != pis.size())
    throw Error(ErrorKind::MissingInput, "expected " + std::to_string(pis.size()) + " input words, got " +
                                             std::to_string(inputs.size()));
  for (std::size_t i = 0; i < pis.size(); ++i)
    values[pis[i].index] = inputs[i];
  auto gates = circuit.gates();
  for (std::size_t gi : circuit.topo_order())
    values[gates[gi].output.index] = eval_gate_word(gates[gi], values);
}

std::vector<PatternWord> simulate_block(const Circuit &circuit, std::span<const PatternWord> inputs) {
  std::vector<PatternWord> values(circuit.num_nets(), 0);
  simulate_block_nets(circuit, inputs, values);
  std::vector<PatternWord> out;
  out.reserve(circuit.primary_outputs().size());
  for (NetId po : circuit.primary_outputs())
    out.push_back(values[po.index]);
  return out;
}

//===----------------------------------------------------------------------===//
// PatternSource
//===----------------------------------------------------------------------===//

PatternSource::PatternSource(std::size_t num_inputs, std::size_t n_patterns, std::uint64_t seed)
    : inputs_(num_inputs), seed_(seed) {
  if (n_patterns < 64 || n_patterns % 64 != 0)
    throw Error(ErrorKind::InvalidArgument, "pattern count must be a positive multiple of 64, got " +
                                                std::to_string(n_patterns));
  exhaustive_ = num_inputs < 40 && (std::uint64_t{1} << num_inputs) <= n_patterns;
  patterns_ = exhaustive_ ? (std::size_t{1} << num_inputs) : n_patterns;
  blocks_ = (patterns_ + 63) / 64;
}

void PatternSource::fill(std::size_t block, std::span<PatternWord> inputs) const {
  static constexpr PatternWord kLaneBits[6] = {0xaaaaaaaaaaaaaaaaULL, 0xccccccccccccccccULL, 0xf0f0f0f0f0f0f0f0ULL,
                                               0xff00ff00ff00ff00ULL, 0xffff0000ffff0000ULL, 0xffffffff00000000ULL};
  for (std::size_t i = 0; i < inputs_; ++i) {
    if (exhaustive_)
      inputs[i] = i < 6 ? kLaneBits[i] : (((block >> (i - 6)) & 1U) ? ~PatternWord{0} : 0);
    else
      inputs[i] = mix64(mix64(seed_ ^ (block * 0x9e3779b97f4a7c15ULL)) + i);
  }
}

PatternWord PatternSource::valid_mask(std::size_t block) const {
  std::size_t remaining = patterns_ - block * 64;
  return remaining >= 64 ? ~PatternWord{0} : ((PatternWord{1} << remaining) - 1);
}

} // namespace kf

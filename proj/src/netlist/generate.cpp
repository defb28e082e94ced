#include "keyforge/error.hpp"
#include "keyforge/netlist.hpp"

#include <algorithm>
#include <random>

namespace kf {

Circuit random_circuit(const RandomCircuitOptions &options) {
  if (options.inputs < 1 || options.gates < 1)
    throw Error(ErrorKind::InvalidArgument, "random circuit needs at least one input and one gate");

  std::mt19937_64 rng(options.seed);
  auto below = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  std::bernoulli_distribution local(options.locality);

  static constexpr GateKind kBinary[] = {GateKind::And, GateKind::Nand, GateKind::Or,
                                         GateKind::Nor, GateKind::Xor,  GateKind::Xnor};

  CircuitBuilder builder(options.name);
  std::vector<std::string> nets;
  for (std::size_t i = 0; i < options.inputs; ++i) {
    nets.push_back("i" + std::to_string(i));
    builder.add_input(nets.back());
  }

  std::vector<std::size_t> unused_inputs(options.inputs);
  for (std::size_t i = 0; i < options.inputs; ++i)
    unused_inputs[i] = i;
  std::shuffle(unused_inputs.begin(), unused_inputs.end(), rng);

  std::vector<std::size_t> fanout(options.inputs + options.gates, 0);
  const std::size_t window = std::max<std::size_t>(4, options.inputs / 2 + 2);

  auto pick_fanin = [&](std::vector<std::size_t> &chosen) {
    for (int attempt = 0; attempt < 16; ++attempt) {
      std::size_t idx;
      if (!unused_inputs.empty()) {
        idx = unused_inputs.back();
        unused_inputs.pop_back();
      } else if (local(rng) && nets.size() > window) {
        idx = nets.size() - 1 - below(window);
      } else {
        idx = below(nets.size());
      }
      if (std::find(chosen.begin(), chosen.end(), idx) == chosen.end()) {
        chosen.push_back(idx);
        return;
      }
    }
  };

  for (std::size_t g = 0; g < options.gates; ++g) {
    GateKind kind;
    std::size_t arity;
    std::size_t roll = below(100);
    if (roll < 8 || nets.size() < 2) {
      kind = below(4) == 0 ? GateKind::Buf : GateKind::Not;
      arity = 1;
    } else {
      kind = kBinary[below(std::size(kBinary))];
      arity = (options.allow_three_input && nets.size() >= 3 && below(100) < 15) ? 3 : 2;
    }
    std::vector<std::size_t> chosen;
    while (chosen.size() < arity) {
      auto before = chosen.size();
      pick_fanin(chosen);
      if (chosen.size() == before)
        break;
    }
    if (chosen.size() == 1 && arity > 1)
      kind = GateKind::Not;
    std::vector<std::string> ins;
    for (auto idx : chosen) {
      ins.push_back(nets[idx]);
      ++fanout[idx];
    }
    nets.push_back("g" + std::to_string(g));
    builder.add_gate(kind, ins, nets.back());
  }

  // Every sink becomes an output; top up from the deepest gates if needed.
  std::vector<std::size_t> outputs;
  for (std::size_t idx = options.inputs; idx < nets.size(); ++idx)
    if (fanout[idx] == 0)
      outputs.push_back(idx);
  for (std::size_t idx = nets.size(); idx-- > options.inputs && outputs.size() < options.min_outputs;)
    if (std::find(outputs.begin(), outputs.end(), idx) == outputs.end())
      outputs.push_back(idx);
  std::sort(outputs.begin(), outputs.end());
  for (auto idx : outputs)
    builder.add_output(nets[idx]);
  return std::move(builder).build();
}

} // namespace kf

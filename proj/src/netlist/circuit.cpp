#include "keyforge/error.hpp"
#include "keyforge/netlist.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>
#include <tuple>

namespace kf {

namespace {
constexpr std::int32_t kUndriven = -2;

std::string at_line(int line) { return line > 0 ? " (line " + std::to_string(line) + ")" : ""; }
} // namespace

std::string_view to_string(GateKind kind) {
  switch (kind) {
  case GateKind::And: return "AND";
  case GateKind::Nand: return "NAND";
  case GateKind::Or: return "OR";
  case GateKind::Nor: return "NOR";
  case GateKind::Xor: return "XOR";
  case GateKind::Xnor: return "XNOR";
  case GateKind::Not: return "NOT";
  case GateKind::Buf: return "BUF";
  case GateKind::Mux2: return "MUX";
  case GateKind::Lut: return "LUT";
  }
  return "?";
}

std::optional<GateKind> parse_gate_kind(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "AND") return GateKind::And;
  if (upper == "NAND") return GateKind::Nand;
  if (upper == "OR") return GateKind::Or;
  if (upper == "NOR") return GateKind::Nor;
  if (upper == "XOR") return GateKind::Xor;
  if (upper == "XNOR" || upper == "NXOR") return GateKind::Xnor;
  if (upper == "NOT" || upper == "INV") return GateKind::Not;
  if (upper == "BUF" || upper == "BUFF") return GateKind::Buf;
  if (upper == "MUX" || upper == "MUX2") return GateKind::Mux2;
  if (upper == "LUT") return GateKind::Lut;
  return std::nullopt;
}

bool arity_ok(GateKind kind, std::size_t arity, std::size_t lut_table_size) {
  switch (kind) {
  case GateKind::Not:
  case GateKind::Buf: return arity == 1;
  case GateKind::Mux2: return arity == 3;
  case GateKind::Lut: return arity >= 1 && arity <= 16 && lut_table_size == (std::size_t{1} << arity);
  default: return arity >= 2;
  }
}

//===----------------------------------------------------------------------===//
// Circuit
//===----------------------------------------------------------------------===//

std::optional<NetId> Circuit::find_net(std::string_view name) const {
  auto it = net_index_.find(name);
  if (it == net_index_.end())
    return std::nullopt;
  return NetId{it->second};
}

std::optional<std::size_t> Circuit::driver(NetId net) const {
  auto d = driver_[net.index];
  if (d < 0)
    return std::nullopt;
  return static_cast<std::size_t>(d);
}

std::optional<std::size_t> Circuit::input_position(NetId net) const {
  auto p = input_position_[net.index];
  if (p < 0)
    return std::nullopt;
  return static_cast<std::size_t>(p);
}

std::span<const std::size_t> Circuit::fanout(NetId net) const {
  return std::span<const std::size_t>(fanout_gates_)
      .subspan(fanout_offsets_[net.index], fanout_offsets_[net.index + 1] - fanout_offsets_[net.index]);
}

CircuitStats Circuit::stats() const {
  return {gates_.size(), primary_inputs_.size(), primary_outputs_.size(), depth_};
}

std::vector<std::size_t> topo_order(const Circuit &circuit) {
  auto order = circuit.topo_order();
  return {order.begin(), order.end()};
}

CircuitStats stats(const Circuit &circuit) { return circuit.stats(); }

//===----------------------------------------------------------------------===//
// CircuitBuilder
//===----------------------------------------------------------------------===//

CircuitBuilder::CircuitBuilder(std::string name) { circuit_.name_ = std::move(name); }

bool CircuitBuilder::has_net(std::string_view name) const {
  return circuit_.net_index_.find(name) != circuit_.net_index_.end();
}

NetId CircuitBuilder::net(std::string_view name) {
  auto it = circuit_.net_index_.find(name);
  if (it != circuit_.net_index_.end())
    return NetId{it->second};
  auto id = static_cast<std::uint32_t>(circuit_.net_names_.size());
  circuit_.net_names_.emplace_back(name);
  circuit_.net_index_.emplace(std::string(name), id);
  circuit_.driver_.push_back(kUndriven);
  circuit_.is_output_.push_back(false);
  driver_line_.push_back(0);
  output_line_.push_back(0);
  return NetId{id};
}

void CircuitBuilder::add_input(std::string_view name, int line) {
  NetId id = net(name);
  if (circuit_.driver_[id.index] != kUndriven)
    throw Error(ErrorKind::MultipleDrivers, "net '" + std::string(name) + "' already driven" + at_line(line));
  circuit_.driver_[id.index] = Circuit::kPrimaryInput;
  driver_line_[id.index] = line;
  circuit_.primary_inputs_.push_back(id);
}

void CircuitBuilder::add_output(std::string_view name, int line) {
  NetId id = net(name);
  if (circuit_.is_output_[id.index])
    return;
  circuit_.is_output_[id.index] = true;
  output_line_[id.index] = line;
  circuit_.primary_outputs_.push_back(id);
}

void CircuitBuilder::add_gate(GateKind kind, const std::vector<std::string> &inputs, std::string_view output,
                              BitVector lut_table, int line) {
  if (!arity_ok(kind, inputs.size(), lut_table.size()))
    throw Error(ErrorKind::ArityMismatch, std::string(to_string(kind)) + " gate driving '" + std::string(output) +
                                              "' has " + std::to_string(inputs.size()) + " inputs" + at_line(line));
  if (kind != GateKind::Lut && !lut_table.empty())
    throw Error(ErrorKind::ArityMismatch, "table given for non-LUT gate '" + std::string(output) + "'" + at_line(line));
  Gate gate;
  gate.kind = kind;
  gate.output = net(output);
  if (circuit_.driver_[gate.output.index] != kUndriven)
    throw Error(ErrorKind::MultipleDrivers, "net '" + std::string(output) + "' already driven" + at_line(line));
  for (const auto &in : inputs)
    gate.inputs.push_back(net(in));
  gate.lut_table = std::move(lut_table);
  circuit_.driver_[gate.output.index] = static_cast<std::int32_t>(circuit_.gates_.size());
  driver_line_[gate.output.index] = line;
  circuit_.gates_.push_back(std::move(gate));
}

Circuit CircuitBuilder::build() && {
  Circuit &c = circuit_;
  const std::size_t n = c.net_names_.size();

  for (std::size_t i = 0; i < n; ++i)
    if (c.driver_[i] == kUndriven)
      throw Error(ErrorKind::UndrivenNet, "net '" + c.net_names_[i] + "' has no driver" + at_line(output_line_[i]));

  c.input_position_.assign(n, -1);
  for (std::size_t i = 0; i < c.primary_inputs_.size(); ++i)
    c.input_position_[c.primary_inputs_[i].index] = static_cast<std::int32_t>(i);

  // Fanout lists in CSR form.
  c.fanout_offsets_.assign(n + 1, 0);
  for (const auto &g : c.gates_)
    for (NetId in : g.inputs)
      ++c.fanout_offsets_[in.index + 1];
  for (std::size_t i = 0; i < n; ++i)
    c.fanout_offsets_[i + 1] += c.fanout_offsets_[i];
  c.fanout_gates_.assign(c.fanout_offsets_[n], 0);
  {
    std::vector<std::size_t> cursor(c.fanout_offsets_.begin(), c.fanout_offsets_.end() - 1);
    for (std::size_t gi = 0; gi < c.gates_.size(); ++gi)
      for (NetId in : c.gates_[gi].inputs)
        c.fanout_gates_[cursor[in.index]++] = gi;
    for (std::size_t i = 0; i < n; ++i) {
      auto first = c.fanout_gates_.begin() + static_cast<std::ptrdiff_t>(c.fanout_offsets_[i]);
      auto last = c.fanout_gates_.begin() + static_cast<std::ptrdiff_t>(c.fanout_offsets_[i + 1]);
      std::sort(first, last);
    }
  }

  // Kahn's algorithm, smallest declaration index first.
  std::vector<std::size_t> pending(c.gates_.size());
  for (std::size_t gi = 0; gi < c.gates_.size(); ++gi) {
    std::size_t count = 0;
    for (NetId in : c.gates_[gi].inputs)
      if (c.driver_[in.index] >= 0)
        ++count;
    pending[gi] = count;
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t gi = 0; gi < c.gates_.size(); ++gi)
    if (pending[gi] == 0)
      ready.push(gi);
  c.topo_.clear();
  c.topo_.reserve(c.gates_.size());
  while (!ready.empty()) {
    std::size_t gi = ready.top();
    ready.pop();
    c.topo_.push_back(gi);
    NetId out = c.gates_[gi].output;
    // A gate reading `out` twice is listed twice and was counted twice.
    for (std::size_t k = c.fanout_offsets_[out.index]; k < c.fanout_offsets_[out.index + 1]; ++k) {
      std::size_t succ = c.fanout_gates_[k];
      if (--pending[succ] == 0)
        ready.push(succ);
    }
  }
  if (c.topo_.size() != c.gates_.size()) {
    for (std::size_t gi = 0; gi < c.gates_.size(); ++gi)
      if (pending[gi] != 0)
        throw Error(ErrorKind::CombinationalLoop, "net '" + c.net_names_[c.gates_[gi].output.index] +
                                                      "' lies on a combinational cycle" +
                                                      at_line(driver_line_[c.gates_[gi].output.index]));
  }

  std::vector<std::size_t> level(n, 0);
  for (std::size_t gi : c.topo_) {
    std::size_t l = 0;
    for (NetId in : c.gates_[gi].inputs)
      l = std::max(l, level[in.index]);
    level[c.gates_[gi].output.index] = l + 1;
  }
  c.depth_ = 0;
  for (NetId po : c.primary_outputs_)
    c.depth_ = std::max(c.depth_, level[po.index]);

  return std::move(circuit_);
}

bool structurally_equal(const Circuit &a, const Circuit &b) {
  auto names = [](const Circuit &c, std::span<const NetId> nets) {
    std::vector<std::string> out;
    for (NetId n : nets)
      out.push_back(c.net_name(n));
    return out;
  };
  if (names(a, a.primary_inputs()) != names(b, b.primary_inputs()))
    return false;
  if (names(a, a.primary_outputs()) != names(b, b.primary_outputs()))
    return false;
  if (a.gates().size() != b.gates().size())
    return false;
  using Key = std::tuple<std::string, GateKind, std::vector<std::string>, BitVector>;
  auto keys = [&](const Circuit &c) {
    std::vector<Key> out;
    for (const auto &g : c.gates())
      out.emplace_back(c.net_name(g.output), g.kind, names(c, g.inputs), g.lut_table);
    std::sort(out.begin(), out.end());
    return out;
  };
  return keys(a) == keys(b);
}

} // namespace kf

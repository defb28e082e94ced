#pragma once

#include "keyforge/bits.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kf {

struct NetId {
  std::uint32_t index = 0;

  friend auto operator<=>(NetId, NetId) = default;
};

enum class GateKind : std::uint8_t { And, Nand, Or, Nor, Xor, Xnor, Not, Buf, Mux2, Lut };

std::string_view to_string(GateKind kind);

/// Accepts the canonical names plus the common `.bench` aliases (BUFF).
std::optional<GateKind> parse_gate_kind(std::string_view name);

/// MUX2 inputs are (select, data0, data1): output = select ? data1 : data0.
/// LUT bit t is the output for input valuation t, input 0 being the LSB.
struct Gate {
  GateKind kind = GateKind::Buf;
  std::vector<NetId> inputs;
  NetId output;
  BitVector lut_table;
};

/// Checks that `arity` inputs are legal for `kind` (and, for LUTs, that the
/// table has 2^arity entries).
bool arity_ok(GateKind kind, std::size_t arity, std::size_t lut_table_size = 0);

struct CircuitStats {
  std::size_t gates = 0;
  std::size_t pis = 0;
  std::size_t pos = 0;
  std::size_t depth = 0;

  friend bool operator==(const CircuitStats &, const CircuitStats &) = default;
};

/// Immutable combinational netlist. Construction goes through
/// CircuitBuilder, which enforces single drivers, arity, and acyclicity, so a
/// Circuit value is always valid and may be shared freely across threads.
class Circuit {
public:
  static constexpr std::int32_t kPrimaryInput = -1;

  const std::string &name() const { return name_; }

  std::size_t num_nets() const { return net_names_.size(); }
  const std::string &net_name(NetId net) const { return net_names_[net.index]; }
  std::optional<NetId> find_net(std::string_view name) const;

  std::span<const Gate> gates() const { return gates_; }
  std::span<const NetId> primary_inputs() const { return primary_inputs_; }
  std::span<const NetId> primary_outputs() const { return primary_outputs_; }

  /// Index of the driving gate, or nullopt for a primary input.
  std::optional<std::size_t> driver(NetId net) const;
  bool is_primary_input(NetId net) const { return driver_[net.index] == kPrimaryInput; }
  /// Position of `net` within primary_inputs(), if it is one.
  std::optional<std::size_t> input_position(NetId net) const;
  bool is_primary_output(NetId net) const { return is_output_[net.index]; }

  /// Gate indices such that every gate follows the drivers of its inputs;
  /// ties are broken by declaration order.
  std::span<const std::size_t> topo_order() const { return topo_; }
  /// Gates reading `net`, in declaration order (once per occurrence).
  std::span<const std::size_t> fanout(NetId net) const;

  CircuitStats stats() const;

private:
  friend class CircuitBuilder;
  Circuit() = default;

  std::string name_;
  std::vector<std::string> net_names_;
  std::map<std::string, std::uint32_t, std::less<>> net_index_;
  std::vector<Gate> gates_;
  std::vector<NetId> primary_inputs_;
  std::vector<NetId> primary_outputs_;
  std::vector<std::int32_t> driver_;
  std::vector<std::int32_t> input_position_;
  std::vector<bool> is_output_;
  std::vector<std::size_t> topo_;
  std::vector<std::size_t> fanout_offsets_;
  std::vector<std::size_t> fanout_gates_;
  std::size_t depth_ = 0;
};

/// Deterministic topological order (same as Circuit::topo_order()).
std::vector<std::size_t> topo_order(const Circuit &circuit);
CircuitStats stats(const Circuit &circuit);

/// Accumulates nets, ports and gates by name and validates on build().
/// Source line numbers are optional and only used in diagnostics.
class CircuitBuilder {
public:
  explicit CircuitBuilder(std::string name);

  NetId net(std::string_view name);
  void add_input(std::string_view name, int line = 0);
  void add_output(std::string_view name, int line = 0);
  void add_gate(GateKind kind, const std::vector<std::string> &inputs, std::string_view output,
                BitVector lut_table = {}, int line = 0);

  bool has_net(std::string_view name) const;

  /// Throws kf::Error (UndrivenNet, MultipleDrivers, CombinationalLoop,
  /// ArityMismatch) naming the offending net or line.
  Circuit build() &&;

private:
  Circuit circuit_;
  std::vector<int> driver_line_;
  std::vector<int> output_line_;
};

/// Same ports, same gates (kind, input names, output name, table), compared
/// by name so that net numbering does not matter.
bool structurally_equal(const Circuit &a, const Circuit &b);

//===----------------------------------------------------------------------===//
// .bench I/O
//===----------------------------------------------------------------------===//

/// Parses ISCAS-85 `.bench` text. Gates outside the native set are rewritten
/// into it (wide MUX into MUX2 trees, single-input AND/OR/XOR into BUF and
/// their inverting forms into NOT); synthesized nets use the `__kf_` prefix.
/// Sequential elements are rejected.
Circuit parse_bench(std::string_view text, std::string name = "circuit");
Circuit read_bench_file(const std::filesystem::path &path);

std::string write_bench(const Circuit &circuit);

/// Prefix reserved for nets created by the toolkit.
inline constexpr std::string_view kSynthPrefix = "__kf_";

//===----------------------------------------------------------------------===//
// Random netlists
//===----------------------------------------------------------------------===//

struct RandomCircuitOptions {
  std::size_t inputs = 8;
  std::size_t gates = 32;
  std::size_t min_outputs = 2;
  std::uint64_t seed = 1;
  /// Fraction of fanins drawn from the most recent nets, which produces
  /// deeper, ISCAS-like cones instead of shallow random graphs.
  double locality = 0.7;
  bool allow_three_input = true;
  std::string name = "rand";
};

/// Random acyclic netlist over {AND, NAND, OR, NOR, XOR, XNOR, NOT, BUF}.
/// Every primary input is used and every sink gate becomes an output.
Circuit random_circuit(const RandomCircuitOptions &options);

} // namespace kf

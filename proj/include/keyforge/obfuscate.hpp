#pragma once

#include "keyforge/bits.hpp"
#include "keyforge/exec.hpp"
#include "keyforge/netlist.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace kf {

enum class Scheme { Rnd, Dac12, Toc13Xor, Toc13Mux, Iolts14 };

inline constexpr std::array<Scheme, 5> kAllSchemes = {Scheme::Rnd, Scheme::Dac12, Scheme::Toc13Xor, Scheme::Toc13Mux,
                                                      Scheme::Iolts14};

std::string_view to_string(Scheme scheme);
std::optional<Scheme> parse_scheme(std::string_view name);

/// A netlist with key inputs. The attacker-visible part is `circuit` and
/// `key_inputs`; `correct_key` is the defender's secret and is absent when
/// the netlist was read from a stripped file.
struct LockedCircuit {
  Circuit circuit;
  std::vector<NetId> key_inputs;
  std::optional<BitVector> correct_key;
  /// nullopt for netlists produced by keyless-cell conversion.
  std::optional<Scheme> scheme;
  std::string base_name;
  std::uint64_t seed = 0;
  unsigned overhead_pct = 0;

  std::size_t num_keys() const { return key_inputs.size(); }
  /// Primary inputs that are not key inputs, in primary-input order.
  std::vector<NetId> data_inputs() const;
};

/// Key gates for an overhead percentage: max(1, round(pct/100 * gates)).
std::size_t key_count(std::size_t gate_count, unsigned overhead_pct);

struct LockOptions {
  std::size_t analysis_patterns = 1024;
  Exec exec = Exec::Default;
};

/// Inserts key gates according to `scheme`. Throws InvalidArgument for an
/// overhead outside 1..100 and TooFewLocations when the circuit has fewer
/// internal nets than key gates.
LockedCircuit lock(const Circuit &circuit, Scheme scheme, unsigned overhead_pct, std::uint64_t seed,
                   const LockOptions &options = {});

//===----------------------------------------------------------------------===//
// Key-programmable gates
//===----------------------------------------------------------------------===//

/// Gate described by net names, for subcircuits not yet part of a Circuit.
struct GateSpec {
  GateKind kind = GateKind::Buf;
  std::vector<std::string> inputs;
  std::string output;
  BitVector lut_table;
};

/// Replacement for one keyless cell: gates driving `output`, fresh key nets,
/// and the key that reproduces the original cell.
struct KpgSubcircuit {
  std::vector<GateSpec> gates;
  std::vector<std::string> key_nets;
  BitVector correct_key;
  std::string output;
};

/// Hands out `keyinput<i>` and `__kf_` names that do not collide with an
/// existing circuit.
class NameAllocator {
public:
  explicit NameAllocator(const Circuit *existing = nullptr, std::size_t first_key = 0);

  std::string key();
  std::string internal(std::string_view hint);
  void reserve(std::string name);

private:
  bool taken(const std::string &name) const;

  const Circuit *existing_;
  std::size_t next_key_;
  std::size_t next_internal_ = 0;
  std::unordered_set<std::string> reserved_;
};

/// S-MUX tree over 2^L key nets selected by the LUT inputs (input 0 drives
/// the first level). Correct key bit t equals table bit t.
KpgSubcircuit lut_to_kpg(std::span<const std::string> inputs, const BitVector &table, const std::string &output,
                         NameAllocator &names);

/// All M candidate gates on the same inputs, selected by ceil(log2 M) key
/// bits (key 0 is the select LSB). Codes >= M select candidate M-1.
KpgSubcircuit camo_to_kpg(std::span<const std::string> inputs, std::span<const GateKind> possibilities,
                          std::size_t true_index, const std::string &output, NameAllocator &names);

/// Replaces every LUT gate of `circuit` by its key-programmable form.
LockedCircuit convert_luts(const Circuit &circuit);

/// A camouflaged cell: the gate driving `net` may be any of `possibilities`;
/// `possibilities[true_index]` must be its actual kind.
struct CamoCell {
  NetId net;
  std::vector<GateKind> possibilities;
  std::size_t true_index = 0;
};

/// Replaces each listed gate by its key-programmable form.
LockedCircuit convert_camouflaged(const Circuit &circuit, std::span<const CamoCell> cells);

//===----------------------------------------------------------------------===//
// Locked netlist files
//===----------------------------------------------------------------------===//

/// `.bench` text with a comment header (scheme, seed, overhead and, unless
/// `strip_key`, the correct key).
std::string write_locked_bench(const LockedCircuit &locked, bool strip_key = false);

/// Key inputs are the primary inputs named `keyinput<i>`, ordered by i. The
/// correct key is taken from a `# key:` header line when present.
LockedCircuit parse_locked_bench(std::string_view text, std::string name = "circuit");
LockedCircuit read_locked_bench_file(const std::filesystem::path &path);

/// Sidecar key file: comment lines plus one bit string.
std::string write_key_file(const LockedCircuit &locked);
BitVector parse_key_file(std::string_view text);

/// Hard-wires `key` into the locked netlist, yielding a keyless circuit with
/// the data inputs only.
Circuit apply_key(const LockedCircuit &locked, const BitVector &key);

} // namespace kf

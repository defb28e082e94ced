#include "keyforge/error.hpp"
#include "keyforge/obfuscate.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace kf {

std::string write_locked_bench(const LockedCircuit &locked, bool strip_key) {
  std::ostringstream out;
  out << "# locked netlist of " << locked.base_name << "\n";
  out << "# scheme: " << (locked.scheme ? to_string(*locked.scheme) : std::string_view("kpg")) << "\n";
  out << "# seed: " << locked.seed << "\n";
  out << "# overhead: " << locked.overhead_pct << "\n";
  out << "# keys: " << locked.num_keys() << "\n";
  if (!strip_key && locked.correct_key)
    out << "# key: " << to_bit_string(*locked.correct_key) << "\n";
  out << write_bench(locked.circuit);
  return out.str();
}

namespace {

std::optional<std::size_t> key_index(std::string_view name) {
  constexpr std::string_view prefix = "keyinput";
  if (!name.starts_with(prefix) || name.size() == prefix.size())
    return std::nullopt;
  std::size_t value = 0;
  auto digits = name.substr(prefix.size());
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size())
    return std::nullopt;
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

template <typename T> T header_number(std::string_view value, std::string_view field) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw Error(ErrorKind::Syntax, "bad " + std::string(field) + " header '" + std::string(value) + "'");
  return out;
}

} // namespace

LockedCircuit parse_locked_bench(std::string_view text, std::string name) {
  LockedCircuit lc{parse_bench(text, name), {}, std::nullopt, std::nullopt, name, 0, 0};

  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    std::string_view l = trim(line);
    if (!l.starts_with('#'))
      continue;
    l = trim(l.substr(1));
    auto colon = l.find(':');
    if (colon == std::string_view::npos)
      continue;
    auto field = trim(l.substr(0, colon));
    auto value = trim(l.substr(colon + 1));
    if (field == "scheme")
      lc.scheme = parse_scheme(value);
    else if (field == "seed")
      lc.seed = header_number<std::uint64_t>(value, field);
    else if (field == "overhead")
      lc.overhead_pct = header_number<unsigned>(value, field);
    else if (field == "key")
      lc.correct_key = parse_bit_string(value);
  }
  std::string_view first_line = trim(std::string_view(text).substr(0, text.find('\n')));
  constexpr std::string_view marker = "# locked netlist of ";
  if (first_line.starts_with(marker))
    lc.base_name = std::string(trim(first_line.substr(marker.size())));

  std::vector<std::pair<std::size_t, NetId>> keys;
  for (NetId pi : lc.circuit.primary_inputs())
    if (auto i = key_index(lc.circuit.net_name(pi)))
      keys.emplace_back(*i, pi);
  std::sort(keys.begin(), keys.end());
  for (auto [i, net] : keys)
    lc.key_inputs.push_back(net);
  if (lc.correct_key && lc.correct_key->size() != lc.key_inputs.size())
    throw Error(ErrorKind::Syntax, "key header has " + std::to_string(lc.correct_key->size()) + " bits but the netlist has " +
                                       std::to_string(lc.key_inputs.size()) + " key inputs");
  return lc;
}

LockedCircuit read_locked_bench_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_locked_bench(ss.str(), path.stem().string());
}

std::string write_key_file(const LockedCircuit &locked) {
  if (!locked.correct_key)
    throw Error(ErrorKind::InvalidArgument, "locked circuit carries no key");
  std::ostringstream out;
  out << "# key for " << locked.base_name << ", keyinput0 first\n";
  out << to_bit_string(*locked.correct_key) << "\n";
  return out.str();
}

BitVector parse_key_file(std::string_view text) {
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    std::string_view l = trim(line);
    if (l.empty() || l.starts_with('#'))
      continue;
    return parse_bit_string(l);
  }
  throw Error(ErrorKind::Syntax, "key file contains no key");
}

Circuit apply_key(const LockedCircuit &locked, const BitVector &key) {
  if (key.size() != locked.num_keys())
    throw Error(ErrorKind::InvalidArgument, "key has " + std::to_string(key.size()) + " bits, expected " +
                                                std::to_string(locked.num_keys()));
  const Circuit &c = locked.circuit;
  std::vector<int> key_pos(c.num_nets(), -1);
  for (std::size_t i = 0; i < locked.key_inputs.size(); ++i)
    key_pos[locked.key_inputs[i].index] = static_cast<int>(i);
  auto data = locked.data_inputs();

  CircuitBuilder b(c.name());
  for (NetId pi : data)
    b.add_input(c.net_name(pi));
  for (NetId po : c.primary_outputs())
    b.add_output(c.net_name(po));
  if (!locked.key_inputs.empty() && data.empty())
    throw Error(ErrorKind::InvalidArgument, "cannot hard-wire a key into a circuit without data inputs");
  // Constants are built from the first data input: x XOR x = 0, x XNOR x = 1.
  for (std::size_t i = 0; i < locked.key_inputs.size(); ++i) {
    const std::string &d0 = c.net_name(data.front());
    b.add_gate(key[i] ? GateKind::Xnor : GateKind::Xor, {d0, d0}, c.net_name(locked.key_inputs[i]));
  }
  std::vector<std::string> inputs;
  for (const Gate &g : c.gates()) {
    inputs.clear();
    for (NetId n : g.inputs)
      inputs.push_back(c.net_name(n));
    b.add_gate(g.kind, inputs, c.net_name(g.output), g.lut_table);
  }
  return std::move(b).build();
}

} // namespace kf

#include "keyforge/error.hpp"
#include "keyforge/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace kf {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::toupper(static_cast<unsigned char>(x)) == std::toupper(static_cast<unsigned char>(y));
         });
}

[[noreturn]] void syntax_error(int line, const std::string &what) {
  throw Error(ErrorKind::Syntax, what + " (line " + std::to_string(line) + ")");
}

bool valid_net_name(std::string_view s) {
  if (s.empty())
    return false;
  return std::none_of(s.begin(), s.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ',' || c == '=' || c == '#';
  });
}

/// Splits "(a, b, c)" into names; `text` must start with '(' and end with ')'.
std::vector<std::string> parse_arguments(std::string_view text, int line) {
  text = trim(text);
  if (text.size() < 2 || text.front() != '(' || text.back() != ')')
    syntax_error(line, "expected parenthesized argument list");
  text = text.substr(1, text.size() - 2);
  std::vector<std::string> args;
  if (trim(text).empty())
    return args;
  std::size_t start = 0;
  while (true) {
    auto comma = text.find(',', start);
    auto piece = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!valid_net_name(piece))
      syntax_error(line, "bad net name '" + std::string(piece) + "'");
    args.emplace_back(piece);
    if (comma == std::string_view::npos)
      break;
    start = comma + 1;
  }
  return args;
}

BitVector parse_hex_table(std::string_view hex, std::size_t arity, std::string_view output, int line) {
  if (hex.size() < 3 || hex[0] != '0' || (hex[1] != 'x' && hex[1] != 'X'))
    syntax_error(line, "LUT table must be written as 0x<hex>");
  hex.remove_prefix(2);
  if (arity == 0 || arity > 16)
    throw Error(ErrorKind::ArityMismatch, "LUT '" + std::string(output) + "' has " + std::to_string(arity) +
                                              " inputs (line " + std::to_string(line) + ")");
  const std::size_t bits = std::size_t{1} << arity;
  BitVector table(bits, false);
  std::size_t bit = 0;
  for (auto it = hex.rbegin(); it != hex.rend(); ++it, bit += 4) {
    int digit;
    char c = static_cast<char>(std::tolower(static_cast<unsigned char>(*it)));
    if (c >= '0' && c <= '9')
      digit = c - '0';
    else if (c >= 'a' && c <= 'f')
      digit = c - 'a' + 10;
    else
      syntax_error(line, "bad hex digit in LUT table");
    for (int k = 0; k < 4; ++k) {
      if (((digit >> k) & 1) == 0)
        continue;
      if (bit + k >= bits)
        throw Error(ErrorKind::ArityMismatch, "LUT '" + std::string(output) + "' table wider than 2^" +
                                                  std::to_string(arity) + " bits (line " + std::to_string(line) + ")");
      table[bit + k] = true;
    }
  }
  return table;
}

std::string table_to_hex(const BitVector &table) {
  const std::size_t digits = std::max<std::size_t>(1, (table.size() + 3) / 4);
  std::string out = "0x";
  for (std::size_t d = digits; d-- > 0;) {
    int v = 0;
    for (int k = 0; k < 4; ++k) {
      std::size_t bit = d * 4 + static_cast<std::size_t>(k);
      if (bit < table.size() && table[bit])
        v |= 1 << k;
    }
    out.push_back("0123456789abcdef"[v]);
  }
  return out;
}

/// Lowers gates outside the native set. `fresh` hands out `__kf_` names.
class Lowering {
public:
  explicit Lowering(CircuitBuilder &builder) : builder_(builder) {}

  void gate(std::string_view kind_name, std::vector<std::string> inputs, const std::string &output, int line) {
    std::string upper(kind_name);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "DFF" || upper == "DFFR" || upper == "LATCH")
      throw Error(ErrorKind::UnknownGateKind, "sequential element " + upper + " driving '" + output +
                                                  "' is not supported; only combinational netlists are accepted (line " +
                                                  std::to_string(line) + ")");
    auto kind = parse_gate_kind(upper);
    if (!kind || *kind == GateKind::Lut)
      throw Error(ErrorKind::UnknownGateKind,
                  "unknown gate '" + std::string(kind_name) + "' (line " + std::to_string(line) + ")");

    if (inputs.size() == 1) {
      switch (*kind) {
      case GateKind::And:
      case GateKind::Or:
      case GateKind::Xor: builder_.add_gate(GateKind::Buf, inputs, output, {}, line); return;
      case GateKind::Nand:
      case GateKind::Nor:
      case GateKind::Xnor: builder_.add_gate(GateKind::Not, inputs, output, {}, line); return;
      default: break;
      }
    }
    if (*kind == GateKind::Mux2 && inputs.size() != 3) {
      wide_mux(inputs, output, line);
      return;
    }
    builder_.add_gate(*kind, inputs, output, {}, line);
  }

private:
  // MUX(s0..s{n-1}, d0..d{2^n-1}) with s0 the least-significant select.
  void wide_mux(const std::vector<std::string> &inputs, const std::string &output, int line) {
    std::size_t selects = 0;
    while (selects < 5 && selects + (std::size_t{1} << selects) < inputs.size())
      ++selects;
    if (selects == 0 || selects + (std::size_t{1} << selects) != inputs.size())
      throw Error(ErrorKind::ArityMismatch,
                  "MUX driving '" + output + "' has " + std::to_string(inputs.size()) +
                      " inputs; expected n selects plus 2^n data inputs (line " + std::to_string(line) + ")");
    std::vector<std::string> layer(inputs.begin() + static_cast<std::ptrdiff_t>(selects), inputs.end());
    for (std::size_t s = 0; s < selects; ++s) {
      std::vector<std::string> next;
      for (std::size_t i = 0; i + 1 < layer.size(); i += 2) {
        bool last = (s + 1 == selects);
        std::string out = last ? output : fresh(output);
        builder_.add_gate(GateKind::Mux2, {inputs[s], layer[i], layer[i + 1]}, out, {}, line);
        next.push_back(out);
      }
      layer = std::move(next);
    }
  }

  std::string fresh(const std::string &base) {
    std::string name;
    do {
      name = std::string(kSynthPrefix) + base + "_m" + std::to_string(counter_++);
    } while (builder_.has_net(name));
    return name;
  }

  CircuitBuilder &builder_;
  std::size_t counter_ = 0;
};

} // namespace

Circuit parse_bench(std::string_view text, std::string name) {
  CircuitBuilder builder(std::move(name));
  Lowering lowering(builder);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    auto raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;

    auto hash = raw.find('#');
    auto line = trim(hash == std::string_view::npos ? raw : raw.substr(0, hash));
    if (line.empty())
      continue;

    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      auto paren = line.find('(');
      if (paren == std::string_view::npos)
        syntax_error(line_no, "expected INPUT(...), OUTPUT(...) or an assignment");
      auto keyword = trim(line.substr(0, paren));
      auto args = parse_arguments(line.substr(paren), line_no);
      if (args.size() != 1)
        syntax_error(line_no, "port declaration takes exactly one net");
      if (iequals(keyword, "INPUT"))
        builder.add_input(args[0], line_no);
      else if (iequals(keyword, "OUTPUT"))
        builder.add_output(args[0], line_no);
      else
        syntax_error(line_no, "unknown declaration '" + std::string(keyword) + "'");
      continue;
    }

    auto lhs = trim(line.substr(0, eq));
    auto rhs = trim(line.substr(eq + 1));
    if (!valid_net_name(lhs))
      syntax_error(line_no, "bad net name '" + std::string(lhs) + "'");
    auto paren = rhs.find('(');
    if (paren == std::string_view::npos)
      syntax_error(line_no, "expected GATE(inputs)");
    auto head = trim(rhs.substr(0, paren));
    auto args = parse_arguments(rhs.substr(paren), line_no);
    std::string output(lhs);

    // Vendor extension: y = LUT 0x<table> (i0, ..., iL-1)
    auto space = head.find_first_of(" \t");
    if (space != std::string_view::npos && iequals(trim(head.substr(0, space)), "LUT")) {
      auto table = parse_hex_table(trim(head.substr(space)), args.size(), output, line_no);
      builder.add_gate(GateKind::Lut, args, output, std::move(table), line_no);
      continue;
    }
    if (iequals(head, "LUT"))
      syntax_error(line_no, "LUT gate needs a table: y = LUT 0x<hex> (inputs)");
    lowering.gate(head, std::move(args), output, line_no);
  }
  return std::move(builder).build();
}

Circuit read_bench_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_bench(ss.str(), path.stem().string());
}

std::string write_bench(const Circuit &circuit) {
  std::ostringstream out;
  auto st = circuit.stats();
  out << "# " << circuit.name() << "\n";
  out << "# " << st.pis << " inputs, " << st.pos << " outputs, " << st.gates << " gates\n\n";
  for (NetId pi : circuit.primary_inputs())
    out << "INPUT(" << circuit.net_name(pi) << ")\n";
  out << "\n";
  for (NetId po : circuit.primary_outputs())
    out << "OUTPUT(" << circuit.net_name(po) << ")\n";
  out << "\n";
  for (const auto &g : circuit.gates()) {
    std::string args;
    for (std::size_t i = 0; i < g.inputs.size(); ++i) {
      if (i)
        args += ", ";
      args += circuit.net_name(g.inputs[i]);
    }
    const auto &output = circuit.net_name(g.output);
    if (g.kind == GateKind::Lut) {
      out << "# LUT " << output << ": " << g.inputs.size() << "-input table " << table_to_hex(g.lut_table)
          << ", bit t = output for input valuation t (first input is the LSB)\n";
      out << output << " = LUT " << table_to_hex(g.lut_table) << " (" << args << ")\n";
    } else {
      out << output << " = " << to_string(g.kind) << "(" << args << ")\n";
    }
  }
  return out.str();
}

} // namespace kf

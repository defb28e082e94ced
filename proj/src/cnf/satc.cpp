#include "keyforge/cnf.hpp"
#include "keyforge/error.hpp"
#include "keyforge/obfuscate.hpp"
#include "tseitin_internal.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_map>

namespace kf {

namespace {

/// Net value during constant folding: a constant or a literal.
struct Folded {
  bool is_const = false;
  bool value = false;
  Lit lit;

  static Folded constant(bool v) { return {true, v, Lit()}; }
  static Folded of(Lit l) { return {false, false, l}; }
  Folded operator~() const { return is_const ? constant(!value) : of(~lit); }
};

/// Adds `d <-> (a XOR b)` for a fresh d and returns d.
Var difference_var(CnfFormula &f, Lit a, Lit b) {
  Var d = f.new_var();
  detail::encode_xor2(f, a, b, Lit::pos(d));
  return d;
}

} // namespace

SatcState SatcState::build_kdc(const LockedCircuit &locked, DivcEncoding encoding) {
  if (locked.key_inputs.empty())
    throw Error(ErrorKind::InvalidArgument, "locked circuit has no key inputs");
  SatcState s;
  s.circuit_ = std::make_shared<const Circuit>(locked.circuit);
  s.encoding_ = encoding;
  const Circuit &c = *s.circuit_;
  for (NetId k : locked.key_inputs) {
    auto pos = c.input_position(k);
    if (!pos)
      throw Error(ErrorKind::InvalidArgument, "key net '" + c.net_name(k) + "' is not a primary input");
    s.key_pi_.push_back(*pos);
  }
  for (NetId x : locked.data_inputs())
    s.data_pi_.push_back(*c.input_position(x));

  CnfFormula &f = s.kdc_;
  for (std::size_t i = 0; i < s.data_pi_.size(); ++i)
    s.x_vars_.push_back(f.new_var());
  for (std::size_t i = 0; i < s.key_pi_.size(); ++i)
    s.k1_vars_.push_back(f.new_var());
  for (std::size_t i = 0; i < s.key_pi_.size(); ++i)
    s.k2_vars_.push_back(f.new_var());

  std::vector<std::optional<Lit>> bind1(c.primary_inputs().size()), bind2(bind1.size());
  for (std::size_t i = 0; i < s.data_pi_.size(); ++i)
    bind1[s.data_pi_[i]] = bind2[s.data_pi_[i]] = Lit::pos(s.x_vars_[i]);
  for (std::size_t i = 0; i < s.key_pi_.size(); ++i) {
    bind1[s.key_pi_[i]] = Lit::pos(s.k1_vars_[i]);
    bind2[s.key_pi_[i]] = Lit::pos(s.k2_vars_[i]);
  }
  EncodedCopy copy1 = tseitin(c, f, bind1);
  EncodedCopy copy2 = tseitin(c, f, bind2);
  s.label_copy("c1", copy1);
  s.label_copy("c2", copy2);

  Clause any_diff;
  for (NetId out : c.primary_outputs()) {
    Var d = difference_var(f, copy1.net[out.index], copy2.net[out.index]);
    any_diff.push_back(Lit::pos(d));
    s.labels_.emplace_back(d, "diff:" + c.net_name(out));
  }
  f.add_clause(std::move(any_diff));
  s.num_vars_ = f.num_vars();
  return s;
}

void SatcState::label_copy(const std::string &label, const EncodedCopy &copy) {
  for (std::size_t n = 0; n < copy.net.size(); ++n) {
    Lit l = copy.net[n];
    if (l.var() != 0 && !l.negated())
      labels_.emplace_back(l.var(), label + ":" + circuit_->net_name(NetId{static_cast<std::uint32_t>(n)}));
  }
}

std::size_t SatcState::add_divc(const BitVector &x_di, const BitVector &y_f) {
  if (x_di.size() != data_pi_.size())
    throw Error(ErrorKind::InvalidArgument, "DI has " + std::to_string(x_di.size()) + " bits, expected " +
                                                std::to_string(data_pi_.size()));
  if (y_f.size() != circuit_->primary_outputs().size())
    throw Error(ErrorKind::InvalidArgument, "oracle response has " + std::to_string(y_f.size()) +
                                                " bits, expected " +
                                                std::to_string(circuit_->primary_outputs().size()));
  std::size_t index = divc_groups_.size();
  divc_groups_.push_back(encoding_ == DivcEncoding::Plain ? encode_divc_plain(x_di, y_f, index)
                                                          : encode_divc_folded(x_di, y_f, index));
  return index;
}

std::vector<Clause> SatcState::encode_divc_plain(const BitVector &x, const BitVector &y, std::size_t index) {
  const Circuit &c = *circuit_;
  CnfFormula f(num_vars_);
  for (int side = 0; side < 2; ++side) {
    const auto &keys = side == 0 ? k1_vars_ : k2_vars_;
    std::vector<std::optional<Lit>> bind(c.primary_inputs().size());
    for (std::size_t i = 0; i < key_pi_.size(); ++i)
      bind[key_pi_[i]] = Lit::pos(keys[i]);
    EncodedCopy copy = tseitin(c, f, bind);
    for (std::size_t i = 0; i < data_pi_.size(); ++i)
      f.add_clause({x[i] ? copy.net[c.primary_inputs()[data_pi_[i]].index]
                         : ~copy.net[c.primary_inputs()[data_pi_[i]].index]});
    auto pos = c.primary_outputs();
    for (std::size_t j = 0; j < pos.size(); ++j)
      f.add_clause({y[j] ? copy.net[pos[j].index] : ~copy.net[pos[j].index]});
    label_copy("d" + std::to_string(index) + (side == 0 ? "a" : "b"), copy);
  }
  num_vars_ = f.num_vars();
  return f.clauses();
}

std::vector<Clause> SatcState::encode_divc_folded(const BitVector &x, const BitVector &y, std::size_t index) {
  const Circuit &c = *circuit_;
  CnfFormula f(num_vars_);
  auto as_lit = [&](const Folded &v) {
    if (!v.is_const)
      return v.lit;
    if (!true_var_) {
      true_var_ = f.new_var();
      f.add_clause({Lit::pos(*true_var_)});
      labels_.emplace_back(*true_var_, "const:1");
    }
    return v.value ? Lit::pos(*true_var_) : Lit::neg(*true_var_);
  };

  for (int side = 0; side < 2; ++side) {
    const auto &keys = side == 0 ? k1_vars_ : k2_vars_;
    std::vector<Folded> val(c.num_nets());
    for (std::size_t i = 0; i < data_pi_.size(); ++i)
      val[c.primary_inputs()[data_pi_[i]].index] = Folded::constant(x[i]);
    for (std::size_t i = 0; i < key_pi_.size(); ++i)
      val[c.primary_inputs()[key_pi_[i]].index] = Folded::of(Lit::pos(keys[i]));

    auto gates = c.gates();
    std::vector<Lit> lits;
    for (std::size_t gi : c.topo_order()) {
      const Gate &g = gates[gi];
      Folded &out = val[g.output.index];
      auto in = [&](std::size_t i) { return val[g.inputs[i].index]; };
      auto fresh = [&]() { return Lit::pos(f.new_var()); };
      lits.clear();
      switch (g.kind) {
      case GateKind::And:
      case GateKind::Nand:
      case GateKind::Or:
      case GateKind::Nor: {
        const bool is_and = g.kind == GateKind::And || g.kind == GateKind::Nand;
        const bool invert = g.kind == GateKind::Nand || g.kind == GateKind::Nor;
        // The controlling value is 0 for AND, 1 for OR.
        bool controlled = false;
        for (std::size_t i = 0; i < g.inputs.size(); ++i) {
          Folded v = in(i);
          if (v.is_const) {
            if (v.value != is_and)
              controlled = true;
          } else if (std::find(lits.begin(), lits.end(), v.lit) == lits.end()) {
            lits.push_back(v.lit);
          }
        }
        Folded r;
        if (controlled)
          r = Folded::constant(!is_and);
        else if (lits.empty())
          r = Folded::constant(is_and);
        else if (lits.size() == 1)
          r = Folded::of(lits[0]);
        else {
          r = Folded::of(fresh());
          detail::encode_gate(f, is_and ? GateKind::And : GateKind::Or, lits, r.lit, {});
        }
        out = invert ? ~r : r;
        break;
      }
      case GateKind::Xor:
      case GateKind::Xnor: {
        bool parity = g.kind == GateKind::Xnor;
        for (std::size_t i = 0; i < g.inputs.size(); ++i) {
          Folded v = in(i);
          if (v.is_const)
            parity ^= v.value;
          else
            lits.push_back(v.lit);
        }
        Folded r;
        if (lits.empty())
          r = Folded::constant(false);
        else if (lits.size() == 1)
          r = Folded::of(lits[0]);
        else {
          r = Folded::of(fresh());
          detail::encode_gate(f, GateKind::Xor, lits, r.lit, {});
        }
        out = parity ? ~r : r;
        break;
      }
      case GateKind::Not: out = ~in(0); break;
      case GateKind::Buf: out = in(0); break;
      case GateKind::Mux2: {
        Folded s = in(0), d0 = in(1), d1 = in(2);
        if (s.is_const)
          out = s.value ? d1 : d0;
        else if (d0.is_const && d1.is_const)
          out = d0.value == d1.value ? d0 : (d1.value ? s : ~s);
        else if (!d0.is_const && !d1.is_const && d0.lit == d1.lit)
          out = d0;
        else {
          out = Folded::of(fresh());
          Lit ins[3] = {s.lit, as_lit(d0), as_lit(d1)};
          detail::encode_gate(f, GateKind::Mux2, ins, out.lit, {});
        }
        break;
      }
      case GateKind::Lut: {
        // Restrict the table to the rows consistent with constant inputs.
        std::vector<std::size_t> free_inputs;
        std::size_t fixed_bits = 0;
        for (std::size_t i = 0; i < g.inputs.size(); ++i) {
          Folded v = in(i);
          if (v.is_const) {
            if (v.value)
              fixed_bits |= std::size_t{1} << i;
          } else {
            free_inputs.push_back(i);
            lits.push_back(v.lit);
          }
        }
        BitVector table(std::size_t{1} << free_inputs.size());
        for (std::size_t r = 0; r < table.size(); ++r) {
          std::size_t row = fixed_bits;
          for (std::size_t b = 0; b < free_inputs.size(); ++b)
            if ((r >> b) & 1U)
              row |= std::size_t{1} << free_inputs[b];
          table[r] = g.lut_table[row];
        }
        bool all0 = std::find(table.begin(), table.end(), true) == table.end();
        bool all1 = std::find(table.begin(), table.end(), false) == table.end();
        if (all0 || all1)
          out = Folded::constant(all1);
        else {
          out = Folded::of(fresh());
          detail::encode_gate(f, GateKind::Lut, lits, out.lit, table);
        }
        break;
      }
      }
    }
    auto pos = c.primary_outputs();
    for (std::size_t j = 0; j < pos.size(); ++j) {
      Lit l = as_lit(val[pos[j].index]);
      f.add_clause({y[j] ? l : ~l});
    }
    EncodedCopy copy;
    copy.net.reserve(val.size());
    for (const auto &v : val)
      copy.net.push_back(v.is_const ? Lit() : v.lit);
    label_copy("d" + std::to_string(index) + (side == 0 ? "a" : "b"), copy);
  }
  num_vars_ = f.num_vars();
  return f.clauses();
}

void SatcState::add_learned(std::span<const Clause> clauses) {
  for (const auto &clause : clauses)
    for (Lit l : clause)
      if (l.var() == 0 || l.var() > num_vars_)
        throw Error(ErrorKind::ForeignVariable, "learned clause mentions variable " + std::to_string(l.var()) +
                                                    " outside 1.." + std::to_string(num_vars_));
  for (const auto &clause : clauses)
    lcac_.push_back(normalize_clause(clause));
}

CnfFormula SatcState::build_keygen() const {
  CnfFormula f(num_vars_);
  for (const auto &group : divc_groups_)
    f.append(group);
  for (std::size_t i = 0; i < k1_vars_.size(); ++i) {
    f.add_clause({Lit::neg(k1_vars_[i]), Lit::pos(k2_vars_[i])});
    f.add_clause({Lit::pos(k1_vars_[i]), Lit::neg(k2_vars_[i])});
  }
  return f;
}

CnfFormula SatcState::satc() const {
  CnfFormula f(num_vars_);
  f.append(kdc_.clauses());
  for (const auto &group : divc_groups_)
    f.append(group);
  f.append(lcac_);
  return f;
}

std::size_t SatcState::num_clauses() const {
  std::size_t n = kdc_.num_clauses() + lcac_.size();
  for (const auto &group : divc_groups_)
    n += group.size();
  return n;
}

void SatcState::write_var_map(std::ostream &out) const {
  for (const auto &[var, label] : labels_)
    out << "var " << var << " = " << label << '\n';
}

MiterFormula build_miter(const Circuit &left, const Circuit &right) {
  auto lpis = left.primary_inputs();
  auto rpis = right.primary_inputs();
  if (lpis.size() != rpis.size() || left.primary_outputs().size() != right.primary_outputs().size())
    throw Error(ErrorKind::InvalidArgument, "miter operands have different interfaces");
  MiterFormula m;
  CnfFormula &f = m.formula;
  std::unordered_map<std::string, Lit> by_name;
  std::vector<std::optional<Lit>> lbind(lpis.size());
  for (std::size_t i = 0; i < lpis.size(); ++i) {
    Var v = f.new_var();
    m.input_vars.push_back(v);
    lbind[i] = Lit::pos(v);
    by_name.emplace(left.net_name(lpis[i]), Lit::pos(v));
  }
  std::vector<std::optional<Lit>> rbind(rpis.size());
  for (std::size_t i = 0; i < rpis.size(); ++i) {
    auto it = by_name.find(right.net_name(rpis[i]));
    if (it == by_name.end())
      throw Error(ErrorKind::InvalidArgument, "input '" + right.net_name(rpis[i]) + "' missing from left circuit");
    rbind[i] = it->second;
  }
  EncodedCopy lc = tseitin(left, f, lbind);
  EncodedCopy rc = tseitin(right, f, rbind);
  Clause any_diff;
  for (NetId out : left.primary_outputs()) {
    auto other = right.find_net(left.net_name(out));
    if (!other || !right.is_primary_output(*other))
      throw Error(ErrorKind::InvalidArgument, "output '" + left.net_name(out) + "' missing from right circuit");
    any_diff.push_back(Lit::pos(difference_var(f, lc.net[out.index], rc.net[other->index])));
  }
  f.add_clause(std::move(any_diff));
  return m;
}

} // namespace kf

#pragma once

#include "keyforge/cnf.hpp"

namespace kf::detail {

/// y <-> a XOR b.
void encode_xor2(CnfFormula &f, Lit a, Lit b, Lit y);

/// Defining clauses of y = kind(in). XOR/XNOR with more than two inputs
/// allocate helper variables from `f`.
void encode_gate(CnfFormula &f, GateKind kind, std::span<const Lit> in, Lit y, const BitVector &table);

} // namespace kf::detail

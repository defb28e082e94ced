#include "keyforge/analysis.hpp"
#include "keyforge/error.hpp"
#include "keyforge/obfuscate.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace kf;

namespace {

/// Exhaustive (or 10 000-pattern) comparison of the locked netlist under
/// `key` against the original, word-parallel.
std::uint64_t mismatches(const Circuit &original, const LockedCircuit &lc, const BitVector &key) {
  const std::size_t n = original.primary_inputs().size();
  const auto data = lc.data_inputs();
  std::vector<std::size_t> pos_in_locked; // locked PI position per original PI
  for (NetId pi : original.primary_inputs())
    pos_in_locked.push_back(*lc.circuit.input_position(*lc.circuit.find_net(original.net_name(pi))));
  std::vector<std::size_t> out_map;
  for (NetId po : original.primary_outputs())
    for (std::size_t j = 0; j < lc.circuit.primary_outputs().size(); ++j)
      if (lc.circuit.net_name(lc.circuit.primary_outputs()[j]) == original.net_name(po))
        out_map.push_back(j);
  const bool exhaustive = n <= 16;
  const std::uint64_t blocks = exhaustive ? ((std::uint64_t{1} << n) + 63) / 64 : 157;
  std::mt19937_64 rng(1);
  std::uint64_t bad = 0;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    std::vector<PatternWord> in(n), lin(lc.circuit.primary_inputs().size());
    for (std::size_t i = 0; i < n; ++i) {
      if (exhaustive) {
        PatternWord w = 0;
        for (unsigned lane = 0; lane < 64; ++lane)
          w |= static_cast<PatternWord>(((b * 64 + lane) >> i) & 1U) << lane;
        in[i] = w;
      } else {
        in[i] = rng();
      }
      lin[pos_in_locked[i]] = in[i];
    }
    for (std::size_t k = 0; k < lc.key_inputs.size(); ++k)
      lin[*lc.circuit.input_position(lc.key_inputs[k])] = key[k] ? ~PatternWord{0} : 0;
    auto want = simulate_block(original, in), got = simulate_block(lc.circuit, lin);
    PatternWord mask = ~PatternWord{0};
    if (exhaustive && n < 6)
      mask = (PatternWord{1} << (std::uint64_t{1} << n)) - 1;
    for (std::size_t j = 0; j < want.size(); ++j)
      bad += static_cast<std::uint64_t>(__builtin_popcountll((want[j] ^ got[out_map[j]]) & mask));
  }
  (void)data;
  return bad;
}

std::vector<Circuit> corpus() {
  std::vector<Circuit> out{kft::c17()};
  for (std::uint64_t seed = 1; seed <= 8; ++seed)
    out.push_back(kft::small_circuit(4 + seed * 2, 20 + seed * 20, seed));
  out.push_back(kft::small_circuit(24, 150, 99));
  return out;
}

Circuit from_kpg(const KpgSubcircuit &kpg, std::span<const std::string> inputs) {
  CircuitBuilder b("kpg");
  for (const auto &in : inputs)
    b.add_input(in);
  for (const auto &k : kpg.key_nets)
    b.add_input(k);
  b.add_output(kpg.output);
  for (const auto &g : kpg.gates)
    b.add_gate(g.kind, g.inputs, g.output, g.lut_table);
  return std::move(b).build();
}

NetId key_gate_location(const LockedCircuit &lc, std::size_t key) {
  auto fo = lc.circuit.fanout(lc.key_inputs[key]);
  return lc.circuit.gates()[fo[0]].output;
}

} // namespace

TEST(KeyCount, Formula) {
  EXPECT_EQ(key_count(10, 10), 1u);
  EXPECT_EQ(key_count(10, 1), 1u);
  EXPECT_EQ(key_count(1000, 1), 10u);
  EXPECT_EQ(key_count(200, 25), 50u);
  EXPECT_EQ(key_count(50, 5), 3u); // 2.5 rounds half away from zero
  for (unsigned pct : {1u, 2u, 3u, 5u, 10u, 25u})
    for (std::size_t gates : {6u, 37u, 160u, 1000u})
      EXPECT_EQ(key_count(gates, pct),
                std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(pct / 100.0 * gates))));
}

TEST(Lock, TenGatesTenPercent) {
  Circuit c = kft::small_circuit(4, 10, 3);
  for (Scheme s : kAllSchemes) {
    LockedCircuit lc = lock(c, s, 10, 1);
    EXPECT_EQ(lc.num_keys(), 1u);
    EXPECT_EQ(lc.circuit.gates().size(), 11u);
    EXPECT_EQ(lc.circuit.primary_inputs().size(), 5u);
  }
}

TEST(Lock, CorrectKeyRestoresFunctionEveryScheme) {
  for (const Circuit &c : corpus())
    for (Scheme s : kAllSchemes)
      for (unsigned pct : {5u, 10u, 25u}) {
        LockedCircuit lc = lock(c, s, pct, 7);
        ASSERT_TRUE(lc.correct_key);
        EXPECT_EQ(lc.num_keys(), key_count(c.gates().size(), pct));
        EXPECT_EQ(lc.correct_key->size(), lc.num_keys());
        EXPECT_EQ(mismatches(c, lc, *lc.correct_key), 0u) << c.name() << " " << to_string(s) << " " << pct;
        EXPECT_EQ(lc.scheme, s);
        EXPECT_EQ(lc.base_name, c.name());
      }
}

TEST(Lock, RndCorrectAgainstReferenceEvaluator) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Circuit c = kft::small_circuit(6, 25, seed);
    LockedCircuit lc = lock(c, Scheme::Rnd, 10, seed);
    std::uint64_t k = bits_to_integer(*lc.correct_key);
    for (std::uint64_t x = 0; x < 64; ++x)
      EXPECT_EQ(kft::ref_locked_outputs(lc, x, k), kft::ref_oracle(lc, c, x));
  }
}

TEST(Lock, Deterministic) {
  Circuit c = kft::small_circuit(12, 80, 5);
  for (Scheme s : kAllSchemes) {
    EXPECT_EQ(write_locked_bench(lock(c, s, 10, 42)), write_locked_bench(lock(c, s, 10, 42))) << to_string(s);
    LockOptions serial{1024, Exec::Serial}, parallel{1024, Exec::Parallel};
    EXPECT_EQ(write_locked_bench(lock(c, s, 10, 42, serial)), write_locked_bench(lock(c, s, 10, 42, parallel)));
  }
  EXPECT_NE(write_locked_bench(lock(c, Scheme::Rnd, 10, 1)), write_locked_bench(lock(c, Scheme::Rnd, 10, 2)));
}

TEST(Lock, KeyBitsAreNotVacuous) {
  for (Scheme s : {Scheme::Rnd, Scheme::Toc13Xor, Scheme::Dac12}) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      Circuit c = seed == 1 ? kft::c17() : kft::small_circuit(5 + seed, 30, seed);
      LockedCircuit lc = lock(c, s, 10, seed);
      for (std::size_t i = 0; i < lc.num_keys(); ++i) {
        BitVector k = *lc.correct_key;
        k[i] = !k[i];
        // A wrong bit inverts the key-gate net; random DAGs may contain
        // nets whose inversion is unobservable.
        auto f = kft::ref_fault(c, lc.circuit.net_name(key_gate_location(lc, i)));
        bool observable = seed == 1 || f.nop0 + f.nop1 > 0;
        EXPECT_EQ(mismatches(c, lc, k) > 0, observable) << to_string(s) << " seed " << seed << " bit " << i;
      }
    }
  }
}

TEST(Lock, XorEncodesKeyBit) {
  LockedCircuit lc = lock(kft::small_circuit(8, 40, 2), Scheme::Rnd, 25, 3);
  for (std::size_t i = 0; i < lc.num_keys(); ++i) {
    const Gate &g = lc.circuit.gates()[lc.circuit.fanout(lc.key_inputs[i])[0]];
    ASSERT_TRUE(g.kind == GateKind::Xor || g.kind == GateKind::Xnor);
    EXPECT_EQ((*lc.correct_key)[i], g.kind == GateKind::Xnor);
    EXPECT_EQ(lc.circuit.net_name(lc.key_inputs[i]), "keyinput" + std::to_string(i));
  }
}

TEST(Lock, Toc13XorFirstGateOnMaxFaultImpactNet) {
  // Fanout-heavy: few inputs, many gates, so the exhaustive ranking is exact.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Circuit c = kft::small_circuit(5, 20, seed);
    LockedCircuit lc = lock(c, Scheme::Toc13Xor, 5, seed);
    std::vector<NetId> nets;
    for (const Gate &g : c.gates())
      nets.push_back(g.output);
    std::sort(nets.begin(), nets.end());
    std::uint64_t best = 0;
    std::string best_net;
    for (NetId n : nets) {
      auto score = kft::ref_fault(c, c.net_name(n)).score();
      if (best_net.empty() || score > best) {
        best = score;
        best_net = c.net_name(n);
      }
    }
    EXPECT_EQ(lc.circuit.net_name(key_gate_location(lc, 0)), best_net) << seed;
  }
}

TEST(Lock, Toc13MuxStructure) {
  Circuit c = kft::small_circuit(10, 60, 4);
  LockedCircuit lc = lock(c, Scheme::Toc13Mux, 10, 9);
  for (std::size_t i = 0; i < lc.num_keys(); ++i) {
    const Gate &g = lc.circuit.gates()[lc.circuit.fanout(lc.key_inputs[i])[0]];
    ASSERT_EQ(g.kind, GateKind::Mux2);
    EXPECT_EQ(g.inputs[0], lc.key_inputs[i]);
    // The correct key bit selects the moved original driver.
    NetId selected = g.inputs[(*lc.correct_key)[i] ? 2 : 1];
    NetId decoy = g.inputs[(*lc.correct_key)[i] ? 1 : 2];
    EXPECT_EQ(lc.circuit.net_name(selected).rfind(kSynthPrefix, 0), 0u);
    EXPECT_NE(selected, decoy);
  }
}

TEST(Lock, Iolts14PicksExtremeProbabilities) {
  Circuit c = kft::small_circuit(12, 80, 6);
  LockedCircuit lc = lock(c, Scheme::Iolts14, 10, 5);
  auto p = signal_probabilities(c, 1024, 5);
  std::set<std::string> chosen;
  double weakest = 1.0;
  for (std::size_t i = 0; i < lc.num_keys(); ++i) {
    const Gate &g = lc.circuit.gates()[lc.circuit.fanout(lc.key_inputs[i])[0]];
    std::string net = lc.circuit.net_name(g.output);
    double pi = p[c.find_net(net)->index];
    chosen.insert(net);
    weakest = std::min(weakest, std::abs(pi - 0.5));
    if (g.kind == GateKind::And) {
      EXPECT_TRUE((*lc.correct_key)[i]);
      EXPECT_LT(pi, 0.5);
    } else {
      ASSERT_EQ(g.kind, GateKind::Or);
      EXPECT_FALSE((*lc.correct_key)[i]);
      EXPECT_GE(pi, 0.5);
    }
  }
  for (const Gate &g : c.gates())
    if (!chosen.count(c.net_name(g.output)))
      EXPECT_LE(std::abs(p[g.output.index] - 0.5), weakest + 1e-12);
}

TEST(Lock, Dac12PrefersInterferingNets) {
  Circuit c = kft::small_circuit(12, 100, 8);
  LockedCircuit lc = lock(c, Scheme::Dac12, 5, 3);
  std::vector<NetId> locs;
  for (std::size_t i = 0; i < lc.num_keys(); ++i)
    locs.push_back(*c.find_net(lc.circuit.net_name(key_gate_location(lc, i))));
  auto g = interference_graph(c, locs);
  EXPECT_GT(g.edges.size(), 0u);
}

TEST(Lock, Errors) {
  Circuit c = kft::c17();
  EXPECT_THROW(lock(c, Scheme::Rnd, 0, 1), Error);
  EXPECT_THROW(lock(c, Scheme::Rnd, 101, 1), Error);
  Circuit empty = parse_bench("INPUT(a)\nOUTPUT(a)\n");
  try {
    lock(empty, Scheme::Rnd, 10, 1);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewLocations);
  }
  Circuit named = parse_bench("INPUT(keyinput0)\nOUTPUT(y)\ny = NOT(keyinput0)\n");
  EXPECT_THROW(lock(named, Scheme::Rnd, 10, 1), Error);
  EXPECT_EQ(parse_scheme("toc13mux"), Scheme::Toc13Mux);
  EXPECT_FALSE(parse_scheme("sarlock"));
}

TEST(Lock, MaximumOverheadUsesEveryGate) {
  Circuit c = kft::c17();
  for (Scheme s : kAllSchemes) {
    LockedCircuit lc = lock(c, s, 100, 3);
    EXPECT_EQ(lc.num_keys(), 6u);
    EXPECT_EQ(mismatches(c, lc, *lc.correct_key), 0u) << to_string(s);
  }
}

TEST(Kpg, LutSizes) {
  NameAllocator names;
  std::vector<std::string> one{"a"}, two{"a", "b"};
  auto k1 = lut_to_kpg(one, BitVector{true, false}, "y", names);
  EXPECT_EQ(k1.key_nets.size(), 2u);
  ASSERT_EQ(k1.gates.size(), 1u);
  EXPECT_EQ(k1.gates[0].kind, GateKind::Mux2);
  auto k2 = lut_to_kpg(two, BitVector{false, true, true, false}, "z", names);
  EXPECT_EQ(k2.key_nets.size(), 4u);
  EXPECT_EQ(k2.correct_key, (BitVector{false, true, true, false}));
}

TEST(Kpg, LutXorExhaustive) {
  NameAllocator names;
  std::vector<std::string> ins{"a", "b"};
  auto kpg = lut_to_kpg(ins, BitVector{false, true, true, false}, "y", names);
  Circuit c = from_kpg(kpg, ins);
  for (std::uint64_t x = 0; x < 4; ++x) {
    std::uint64_t v = x | bits_to_integer(kpg.correct_key) << 2;
    EXPECT_EQ(kft::ref_outputs(c, v)[0], ((x & 1) ^ (x >> 1)) != 0);
  }
}

TEST(Kpg, LutEveryFunctionForSmallL) {
  for (std::size_t L : {1u, 2u}) {
    std::vector<std::string> ins;
    for (std::size_t i = 0; i < L; ++i)
      ins.push_back("i" + std::to_string(i));
    const std::size_t rows = std::size_t{1} << L;
    for (std::uint64_t fn = 0; fn < (std::uint64_t{1} << rows); ++fn) {
      NameAllocator names;
      BitVector table = bits_from_integer(fn, rows);
      auto kpg = lut_to_kpg(ins, table, "y", names);
      Circuit c = from_kpg(kpg, ins);
      for (std::uint64_t x = 0; x < rows; ++x)
        EXPECT_EQ(kft::ref_outputs(c, x | fn << L)[0], table[x]) << "L=" << L << " fn=" << fn;
    }
  }
}

TEST(Kpg, CamoTwoCandidates) {
  NameAllocator names;
  std::vector<std::string> ins{"a", "b"};
  std::vector<GateKind> kinds{GateKind::Nand, GateKind::Nor};
  auto kpg = camo_to_kpg(ins, kinds, 0, "y", names);
  EXPECT_EQ(kpg.key_nets.size(), 1u);
  EXPECT_EQ(kpg.correct_key, BitVector{false});
  Circuit c = from_kpg(kpg, ins);
  for (std::uint64_t x = 0; x < 4; ++x)
    EXPECT_EQ(kft::ref_outputs(c, x)[0], x != 3);
}

TEST(Kpg, CamoThreeCandidatesWithClamp) {
  std::vector<std::string> ins{"a", "b"};
  std::vector<GateKind> kinds{GateKind::And, GateKind::Or, GateKind::Xor};
  auto expect = [](GateKind k, std::uint64_t x) {
    bool a = x & 1, b = (x >> 1) & 1;
    return k == GateKind::And ? (a && b) : k == GateKind::Or ? (a || b) : (a != b);
  };
  for (std::size_t t = 0; t < 3; ++t) {
    NameAllocator names;
    auto kpg = camo_to_kpg(ins, kinds, t, "y", names);
    ASSERT_EQ(kpg.key_nets.size(), 2u);
    EXPECT_EQ(bits_to_integer(kpg.correct_key), t);
    Circuit c = from_kpg(kpg, ins);
    for (std::uint64_t key = 0; key < 4; ++key)
      for (std::uint64_t x = 0; x < 4; ++x)
        EXPECT_EQ(kft::ref_outputs(c, x | key << 2)[0], expect(kinds[std::min<std::uint64_t>(key, 2)], x));
  }
}

TEST(Kpg, ConvertLuts) {
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(y)\nOUTPUT(z)\n"
                          "m = LUT 0x6 (a, b)\ny = LUT 0xe8 (m, b, c)\nz = NAND(m, c)\n");
  LockedCircuit lc = convert_luts(c);
  EXPECT_EQ(lc.num_keys(), 4u + 8u);
  for (const Gate &g : lc.circuit.gates())
    EXPECT_NE(g.kind, GateKind::Lut);
  EXPECT_FALSE(lc.scheme.has_value());
  EXPECT_EQ(mismatches(c, lc, *lc.correct_key), 0u);
}

TEST(Kpg, ConvertCamouflaged) {
  Circuit c = kft::c17();
  std::vector<CamoCell> cells{{*c.find_net("16"), {GateKind::And, GateKind::Nand, GateKind::Nor}, 1},
                              {*c.find_net("22"), {GateKind::Nand, GateKind::Xor}, 0}};
  LockedCircuit lc = convert_camouflaged(c, cells);
  EXPECT_EQ(lc.num_keys(), 3u);
  EXPECT_EQ(mismatches(c, lc, *lc.correct_key), 0u);
  std::vector<CamoCell> wrong{{*c.find_net("16"), {GateKind::And, GateKind::Nor}, 0}};
  EXPECT_THROW(convert_camouflaged(c, wrong), Error);
}

TEST(Names, AllocatorAvoidsCollisions) {
  Circuit c = parse_bench("INPUT(keyinput0)\nINPUT(b)\nOUTPUT(y)\ny = AND(keyinput0, b)\n");
  NameAllocator names(&c);
  EXPECT_EQ(names.key(), "keyinput1");
  EXPECT_EQ(names.key(), "keyinput2");
  std::string a = names.internal("y"), b = names.internal("y");
  EXPECT_NE(a, b);
  EXPECT_EQ(a.rfind(kSynthPrefix, 0), 0u);
}

TEST(LockedIo, RoundTrip) {
  Circuit c = kft::small_circuit(8, 40, 3);
  LockedCircuit lc = lock(c, Scheme::Toc13Mux, 10, 11);
  std::string text = write_locked_bench(lc);
  EXPECT_NE(text.find("# key: " + to_bit_string(*lc.correct_key)), std::string::npos);
  LockedCircuit back = parse_locked_bench(text, lc.circuit.name());
  EXPECT_TRUE(structurally_equal(back.circuit, lc.circuit));
  EXPECT_EQ(back.correct_key, lc.correct_key);
  EXPECT_EQ(back.scheme, lc.scheme);
  EXPECT_EQ(back.seed, lc.seed);
  EXPECT_EQ(back.overhead_pct, lc.overhead_pct);
  EXPECT_EQ(write_locked_bench(back), text);
}

TEST(LockedIo, StripKey) {
  LockedCircuit lc = lock(kft::c17(), Scheme::Rnd, 10, 1);
  std::string text = write_locked_bench(lc, true);
  EXPECT_EQ(text.find("# key:"), std::string::npos);
  LockedCircuit back = parse_locked_bench(text);
  EXPECT_FALSE(back.correct_key);
  EXPECT_EQ(back.num_keys(), 1u);
  EXPECT_EQ(parse_key_file(write_key_file(lc)), *lc.correct_key);
}

TEST(LockedIo, KeysOrderedByIndex) {
  LockedCircuit lc = parse_locked_bench("INPUT(keyinput1)\nINPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\n"
                                        "y = AND(a, keyinput0, keyinput1)\n");
  ASSERT_EQ(lc.num_keys(), 2u);
  EXPECT_EQ(lc.circuit.net_name(lc.key_inputs[0]), "keyinput0");
  EXPECT_EQ(lc.data_inputs().size(), 1u);
  EXPECT_THROW(parse_locked_bench("# key: 101\nINPUT(keyinput0)\nINPUT(a)\nOUTPUT(y)\ny = AND(a, keyinput0)\n"),
               Error);
}

TEST(LockedIo, ApplyKey) {
  Circuit c = kft::small_circuit(6, 30, 2);
  LockedCircuit lc = lock(c, Scheme::Dac12, 10, 2);
  Circuit fixed = apply_key(lc, *lc.correct_key);
  EXPECT_EQ(fixed.primary_inputs().size(), 6u);
  for (std::uint64_t x = 0; x < 64; ++x)
    EXPECT_EQ(kft::ref_outputs(fixed, x), kft::ref_outputs(c, x));
  EXPECT_THROW(apply_key(lc, BitVector{true}), Error);
}

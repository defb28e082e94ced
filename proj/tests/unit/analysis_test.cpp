#include "keyforge/analysis.hpp"
#include "keyforge/error.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace kf;

TEST(Simulate, AndTruthTable) {
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)");
  EXPECT_EQ(simulate(c, BitVector{true, true}), BitVector{true});
  EXPECT_EQ(simulate(c, BitVector{true, false}), BitVector{false});
}

TEST(Simulate, LutTable) {
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = LUT 0x8 (a, b)\n");
  for (unsigned x = 0; x < 4; ++x)
    EXPECT_EQ(simulate(c, bits_from_integer(x, 2))[0], x == 3);
}

TEST(Simulate, C17AgainstReference) {
  Circuit c = kft::c17();
  EXPECT_EQ(simulate(c, BitVector(5, false)), kft::ref_outputs(c, 0));
  for (std::uint64_t x = 0; x < 32; ++x)
    EXPECT_EQ(simulate(c, bits_from_integer(x, 5)), kft::ref_outputs(c, x));
}

TEST(Simulate, MissingInput) {
  Circuit c = kft::c17();
  try {
    simulate(c, BitVector(4, false));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingInput);
  }
  std::map<std::string, bool, std::less<>> named{{"1", true}, {"2", false}};
  EXPECT_THROW(simulate(c, named), Error);
}

TEST(Simulate, NamedInputs) {
  Circuit c = kft::c17();
  std::map<std::string, bool, std::less<>> in{{"1", true}, {"2", false}, {"3", true}, {"6", true}, {"7", false}};
  kft::NameValues ref(in.begin(), in.end());
  auto all = kft::ref_eval(c, ref);
  EXPECT_EQ(simulate(c, in), (BitVector{all.at("22"), all.at("23")}));
}

TEST(Simulate, AllGateKindsMatchReference) {
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(s)\n"
                          "OUTPUT(o1)\nOUTPUT(o2)\nOUTPUT(o3)\nOUTPUT(o4)\nOUTPUT(o5)\nOUTPUT(o6)\n"
                          "OUTPUT(o7)\nOUTPUT(o8)\nOUTPUT(o9)\nOUTPUT(o10)\n"
                          "o1 = AND(a, b, s)\no2 = NAND(a, b)\no3 = OR(a, b)\no4 = NOR(a, b, s)\n"
                          "o5 = XOR(a, b, s)\no6 = XNOR(a, b)\no7 = NOT(a)\no8 = BUF(b)\n"
                          "o9 = MUX2(s, a, b)\no10 = LUT 0x96 (a, b, s)\n");
  for (std::uint64_t x = 0; x < 8; ++x)
    EXPECT_EQ(simulate(c, bits_from_integer(x, 3)), kft::ref_outputs(c, x)) << x;
}

TEST(SimulateBlock, MatchesScalarOnRandomCircuits) {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    Circuit c = kft::small_circuit(7, 30, seed);
    std::vector<PatternWord> in(c.primary_inputs().size());
    for (auto &w : in)
      w = rng();
    auto out = simulate_block(c, in);
    for (unsigned lane = 0; lane < 64; ++lane) {
      BitVector x;
      for (auto w : in)
        x.push_back((w >> lane) & 1U);
      auto y = simulate(c, x);
      for (std::size_t j = 0; j < y.size(); ++j)
        ASSERT_EQ(((out[j] >> lane) & 1U) != 0, y[j]) << "seed " << seed << " lane " << lane;
    }
  }
}

TEST(Patterns, ExhaustiveWhenBudgetCovers) {
  PatternSource src(4, 64, 9);
  EXPECT_TRUE(src.exhaustive());
  EXPECT_EQ(src.num_patterns(), 16u);
  std::vector<PatternWord> in(4);
  src.fill(0, in);
  std::set<unsigned> seen;
  PatternWord mask = src.valid_mask(0);
  for (unsigned lane = 0; lane < 64; ++lane) {
    if (!((mask >> lane) & 1U))
      continue;
    unsigned v = 0;
    for (unsigned i = 0; i < 4; ++i)
      v |= static_cast<unsigned>((in[i] >> lane) & 1U) << i;
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 16u);
}

TEST(SignalProbability, PrimaryInputsAndSimpleGates) {
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nINPUT(e)\nINPUT(f)\nINPUT(g)\nINPUT(h)\n"
                          "INPUT(i)\nINPUT(j)\nINPUT(k)\nINPUT(l)\nINPUT(m)\nINPUT(n)\n"
                          "OUTPUT(x)\nOUTPUT(y)\nx = AND(a, b)\ny = XOR(c, d)\n");
  auto p = signal_probabilities(c, 10048, 5);
  for (NetId pi : c.primary_inputs())
    EXPECT_NEAR(p[pi.index], 0.5, 0.05);
  EXPECT_NEAR(p[c.find_net("x")->index], 0.25, 0.05);
  EXPECT_NEAR(p[c.find_net("y")->index], 0.5, 0.05);
}

TEST(SignalProbability, ExactUnderExhaustivePatterns) {
  Circuit c = kft::c17();
  auto p = signal_probabilities(c, 64, 1);
  auto table = kft::ref_truth_table(c);
  for (std::size_t j = 0; j < 2; ++j) {
    double ones = 0;
    for (const auto &row : table)
      ones += row[j];
    EXPECT_DOUBLE_EQ(p[c.primary_outputs()[j].index], ones / 32.0);
  }
}

TEST(SignalProbability, Deterministic) {
  Circuit c = kft::small_circuit(20, 80, 4);
  EXPECT_EQ(signal_probabilities(c, 1024, 3), signal_probabilities(c, 1024, 3));
}

TEST(SignalProbability, StandardErrorHalvesWhenPatternsQuadruple) {
  // Doubling n shrinks the standard error by sqrt(2); quadrupling halves it.
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nINPUT(e)\nINPUT(f)\nINPUT(g)\nINPUT(h)\n"
                          "INPUT(i)\nINPUT(j)\nINPUT(k)\nINPUT(l)\nINPUT(m)\nINPUT(n)\nINPUT(o)\nINPUT(p)\n"
                          "INPUT(q)\nINPUT(r)\nINPUT(s)\nINPUT(t)\nOUTPUT(x)\nx = AND(a, b)\n");
  const NetId x = *c.find_net("x");
  auto spread = [&](std::size_t n) {
    double sum = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      double d = signal_probabilities(c, n, 1000 + static_cast<std::uint64_t>(t), Exec::Serial)[x.index] - 0.25;
      sum += d * d;
    }
    return std::sqrt(sum / trials);
  };
  double s1 = spread(1024), s2 = spread(4096);
  double expect1 = std::sqrt(0.25 * 0.75 / 1024);
  EXPECT_NEAR(s1, expect1, 2 * expect1 / std::sqrt(2.0 * 200));
  EXPECT_NEAR(s1 / s2, 2.0, 0.4);
}

TEST(FaultImpact, BufferStuckAtZero) {
  Circuit c = parse_bench("INPUT(a)\nOUTPUT(y)\ny = BUF(a)\n");
  auto fi = fault_impact(c, 64, 1);
  const auto &a = fi[c.find_net("a")->index];
  EXPECT_EQ(a.nop0, 1u); // exhaustive: one pattern has a=1
  EXPECT_EQ(a.noo0, a.nop0);
  EXPECT_EQ(a.nop1, 1u);
}

TEST(FaultImpact, NetOutsideEveryConeScoresZero) {
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\nd = NOT(b)\n");
  auto fi = fault_impact(c, 64, 1);
  EXPECT_EQ(fi[c.find_net("d")->index].score(), 0u);
  EXPECT_GT(fi[c.find_net("a")->index].score(), 0u);
}

TEST(FaultImpact, EqualsExhaustiveFaultSimulation) {
  std::vector<Circuit> circuits = {kft::c17(), kft::small_circuit(4, 3, 8), kft::small_circuit(5, 3, 9)};
  for (std::uint64_t seed = 20; seed < 30; ++seed)
    circuits.push_back(kft::small_circuit(3 + seed % 8, 12, seed));
  for (const Circuit &c : circuits) {
    ASSERT_LE(c.primary_inputs().size(), 10u);
    auto fi = fault_impact(c, 1024, 77);
    ASSERT_EQ(fi.size(), c.num_nets());
    for (std::size_t i = 0; i < c.num_nets(); ++i) {
      auto ref = kft::ref_fault(c, c.net_name(NetId{static_cast<std::uint32_t>(i)}));
      EXPECT_EQ(fi[i].nop0, ref.nop0) << c.name() << " net " << i;
      EXPECT_EQ(fi[i].noo0, ref.noo0);
      EXPECT_EQ(fi[i].nop1, ref.nop1);
      EXPECT_EQ(fi[i].noo1, ref.noo1);
      EXPECT_EQ(fi[i].score(), ref.score());
    }
  }
}

TEST(FaultImpact, SerialAndParallelAgree) {
  Circuit c = kft::small_circuit(24, 150, 5);
  EXPECT_EQ(detail::fault_impact_serial(c, 2048, 3), detail::fault_impact_omp(c, 2048, 3));
  EXPECT_EQ(detail::signal_probabilities_serial(c, 2048, 3), detail::signal_probabilities_omp(c, 2048, 3));
}

namespace {

std::vector<NetId> internal_nets(const Circuit &c) {
  std::vector<NetId> out;
  for (const Gate &g : c.gates())
    out.push_back(g.output);
  return out;
}

} // namespace

TEST(Interference, DisjointConesHaveNoEdge) {
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\nOUTPUT(z)\nm = NOT(a)\nn = NOT(b)\ny = BUF(m)\nz = BUF(n)\n");
  std::vector<NetId> locs{*c.find_net("m"), *c.find_net("n")};
  EXPECT_TRUE(interference_graph(c, locs).edges.empty());
}

TEST(Interference, SoleFanoutDominates) {
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\nm = NOT(a)\nn = AND(m, b)\ny = BUF(n)\n");
  std::vector<NetId> locs{*c.find_net("m"), *c.find_net("n")};
  EXPECT_TRUE(interference_graph(c, locs).edges.empty());
}

TEST(Interference, ReconvergentNetsInterfere) {
  Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\nm = NOT(a)\nn = NOT(b)\ny = AND(m, n)\n");
  std::vector<NetId> locs{*c.find_net("m"), *c.find_net("n")};
  auto g = interference_graph(c, locs);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_TRUE(g.adjacent(0, 1));
  EXPECT_TRUE(g.adjacent(1, 0));
}

TEST(Interference, MatchesPathEnumeration) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    Circuit c = kft::small_circuit(4, 10, seed);
    auto locs = internal_nets(c);
    auto g = interference_graph(c, locs);
    for (std::size_t i = 0; i < locs.size(); ++i) {
      EXPECT_FALSE(g.adjacent(i, i));
      for (std::size_t j = i + 1; j < locs.size(); ++j)
        EXPECT_EQ(g.adjacent(i, j), kft::ref_interferes(c, c.net_name(locs[i]), c.net_name(locs[j])))
            << "seed " << seed << " " << c.net_name(locs[i]) << "," << c.net_name(locs[j]);
    }
  }
}

TEST(Interference, SerialAndParallelAgree) {
  Circuit c = kft::small_circuit(16, 120, 6);
  auto locs = internal_nets(c);
  auto a = detail::interference_serial(c, locs), b = detail::interference_omp(c, locs);
  EXPECT_EQ(a.edges, b.edges);
  EXPECT_EQ(a.adjacency, b.adjacency);
}

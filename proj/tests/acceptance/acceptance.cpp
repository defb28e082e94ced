// Acceptance suite: one PASS/FAIL/SKIP line per criterion, followed by the
// measurements behind it. Pass criterion numbers as arguments to run a
// subset. Exit status is nonzero if any selected criterion fails.
#include "keyforge/analysis.hpp"
#include "keyforge/attack.hpp"
#include "keyforge/bench.hpp"
#include "keyforge/cnf.hpp"
#include "keyforge/obfuscate.hpp"
#include "keyforge/solver.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

using namespace kf;
namespace fs = std::filesystem;

namespace {

// Pinned thresholds.
constexpr std::size_t kCorpusGenerated = 20;
constexpr double kSmallKeyTimeout = 60.0;   // criterion 1, K <= 12
constexpr double kLargeKeyTimeout = 120.0;  // criterion 1, K > 12
constexpr double kTrendTimeout = 120.0;     // criteria 6-8, per attack
constexpr unsigned kTrendRepetitions = 3;
constexpr double kMajority = 0.60;
constexpr double kTrendBudget = 30 * 60.0;  // criterion 6 wall time
constexpr std::size_t kSvkInstances = 50;
constexpr std::size_t kCnfInstances = 500;
constexpr std::size_t kTseitinCircuits = 100;

struct Named {
  std::string name;
  Circuit circuit;
};

/// c17 plus generated DAGs of 10..200 gates.
const std::vector<Named> &corpus() {
  static std::vector<Named> c = [] {
    std::vector<Named> out;
    out.push_back({"c17", kft::c17()});
    for (std::size_t i = 0; i < kCorpusGenerated; ++i) {
      RandomCircuitOptions o;
      o.gates = 10 + i * 190 / (kCorpusGenerated - 1);
      o.inputs = std::clamp<std::size_t>(o.gates / 6, 5, 32);
      o.min_outputs = std::max<std::size_t>(2, o.gates / 25);
      o.seed = 1000 + i;
      o.name = "g" + std::to_string(o.gates);
      out.push_back({o.name, random_circuit(o)});
    }
    return out;
  }();
  return c;
}

struct Outcome {
  bool solved = false;
  bool verified = false;
  std::size_t iterations = 0;
  double time = 0.0;        ///< whole attack, timeouts at the limit
  double solver_time = 0.0; ///< sum of SAT calls only
  double mean_len = 0.0;
  std::uint64_t learned = 0;
  AttackTrace trace;
  BitVector key;
};

Outcome attack(const LockedCircuit &lc, const Circuit &oracle, double timeout, std::uint64_t seed = 0,
               const BackendSpec &backend = BackendSpec::embedded()) {
  AttackLimits limits;
  limits.timeout = timeout;
  limits.seed = seed;
  BackendSpec b = backend;
  b.timeout = timeout;
  AttackResult r = sat_attack(lc, oracle, b, limits);
  Outcome o;
  o.solved = r.status == AttackStatus::Solved;
  o.iterations = r.trace.iterations.size();
  o.time = o.solved ? r.trace.total_time : timeout;
  o.solver_time = timeout;
  if (o.solved) {
    o.solver_time = r.trace.final_solve_time + r.trace.keygen_time;
    for (const auto &it : r.trace.iterations)
      o.solver_time += it.solve_time;
  }
  o.mean_len = r.trace.mean_learned_len;
  o.learned = r.trace.learned_clauses;
  if (r.key) {
    o.verified = r.key->verified && verify_key(lc, r.key->bits, oracle);
    o.key = r.key->bits;
  }
  o.trace = std::move(r.trace);
  return o;
}

double median(std::vector<double> v) {
  if (v.empty())
    return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Report {
  enum class Verdict { Pass, Fail, Skip } verdict = Verdict::Fail;
  std::string summary;
  std::vector<std::string> details;
};

Report verdict(bool ok, std::string summary) {
  Report r;
  r.verdict = ok ? Report::Verdict::Pass : Report::Verdict::Fail;
  r.summary = std::move(summary);
  return r;
}

//===----------------------------------------------------------------------===//
// 1. Attack soundness
//===----------------------------------------------------------------------===//

Report criterion1() {
  std::size_t cases = 0, solved = 0, verified = 0, small = 0, small_solved = 0;
  std::vector<std::string> bad;
  double worst_small = 0.0;
  for (const auto &[name, c] : corpus())
    for (Scheme s : kAllSchemes)
      for (unsigned pct : {5u, 10u}) {
        LockedCircuit lc = lock(c, s, pct, lock_seed(name, s, pct, 1));
        const bool is_small = lc.num_keys() <= 12;
        Outcome o = attack(lc, c, is_small ? kSmallKeyTimeout : kLargeKeyTimeout);
        ++cases;
        small += is_small;
        solved += o.solved;
        verified += o.solved && o.verified;
        if (is_small && o.solved) {
          ++small_solved;
          worst_small = std::max(worst_small, o.time);
        }
        if ((o.solved && !o.verified) || (is_small && !o.solved))
          bad.push_back(name + "/" + std::string(to_string(s)) + "/" + std::to_string(pct) + "%");
      }
  Report r = verdict(bad.empty() && verified == solved,
                     fmt("%zu/%zu solved keys verified; K<=12: %zu/%zu solved within %.0f s (slowest %.2f s)",
                         verified, solved, small_solved, small, kSmallKeyTimeout, worst_small));
  r.details.push_back(fmt("%zu locked instances over %zu circuits, all schemes, 5%% and 10%%", cases, corpus().size()));
  for (const auto &b : bad)
    r.details.push_back("failed: " + b);
  return r;
}

//===----------------------------------------------------------------------===//
// 2 and 3. SVK agreement and SCK monotonicity
//===----------------------------------------------------------------------===//

struct SvkInstance {
  std::string label;
  Circuit oracle;
  LockedCircuit locked;
};

/// At least kSvkInstances instances with K <= 10 and N_X <= 12.
const std::vector<SvkInstance> &svk_instances() {
  static std::vector<SvkInstance> out = [] {
    std::vector<SvkInstance> v;
    for (std::uint64_t seed = 0; v.size() < kSvkInstances + 10; ++seed) {
      std::size_t inputs = 5 + seed % 8;
      std::size_t gates = 12 + (seed * 7) % 60;
      Circuit c = kft::small_circuit(inputs, gates, 500 + seed);
      Scheme s = kAllSchemes[seed % kAllSchemes.size()];
      unsigned pct = seed % 3 == 0 ? 5 : (seed % 3 == 1 ? 10 : 15);
      LockedCircuit lc = lock(c, s, pct, seed);
      if (lc.num_keys() > 10 || lc.data_inputs().size() > 12)
        continue;
      std::string label = c.name() + "/" + std::string(to_string(s)) + "/" + std::to_string(pct) + "%";
      v.push_back({label, std::move(c), std::move(lc)});
    }
    return v;
  }();
  return out;
}

/// Keys (K1 projection) of every model of the key-extraction formula, by
/// repeated solving with blocking clauses.
std::set<std::uint64_t> keygen_models(const SatcState &state) {
  CnfFormula f = state.build_keygen();
  auto k1 = state.key1_vars();
  std::set<std::uint64_t> keys;
  for (;;) {
    SolveResult r = solve_embedded(f);
    if (r.status != SolveStatus::Sat)
      break;
    if (!f.satisfied_by(*r.model))
      throw std::runtime_error("keygen model does not satisfy its formula");
    std::uint64_t key = 0;
    Clause block;
    for (std::size_t i = 0; i < k1.size(); ++i) {
      bool b = (*r.model)[k1[i]];
      key |= std::uint64_t{b} << i;
      block.push_back(Lit::of(k1[i], !b));
    }
    keys.insert(key);
    f.add_clause(block);
  }
  return keys;
}

Report criterion2() {
  std::size_t mismatches = 0, n = 0, total_keys = 0;
  Report r;
  for (const auto &inst : svk_instances()) {
    ++n;
    Outcome o = attack(inst.locked, inst.oracle, 600.0);
    auto svk = brute_force_svk(inst.locked, inst.oracle);
    std::set<std::uint64_t> brute(svk.begin(), svk.end());
    bool ok = o.solved && brute == kft::ref_svk(inst.locked, inst.oracle);
    if (ok)
      ok = brute.count(bits_to_integer(o.key)) == 1;
    SatcState state = SatcState::build_kdc(inst.locked);
    for (const auto &it : o.trace.iterations)
      state.add_divc(it.x_di, it.y_f);
    if (ok)
      ok = keygen_models(state) == brute;
    total_keys += brute.size();
    if (!ok) {
      ++mismatches;
      r.details.push_back("mismatch: " + inst.label);
    }
  }
  Report out = verdict(n >= kSvkInstances && mismatches == 0,
                       fmt("%zu instances (K<=10, N_X<=12), %zu mismatches, %zu valid keys in total", n,
                           mismatches, total_keys));
  out.details = std::move(r.details);
  return out;
}

Report criterion3() {
  std::size_t n = 0, violations = 0, iterations = 0;
  Report r;
  for (const auto &inst : svk_instances()) {
    ++n;
    Outcome o = attack(inst.locked, inst.oracle, 600.0);
    SckTracker sck(inst.locked);
    std::size_t before = sck.size();
    bool ok = o.solved;
    for (const auto &it : o.trace.iterations) {
      std::size_t removed = sck.apply(it.x_di, it.y_f);
      ok = ok && removed >= 1 && sck.size() < before;
      before = sck.size();
      ++iterations;
    }
    auto svk = brute_force_svk(inst.locked, inst.oracle);
    ok = ok && std::vector<std::uint64_t>(sck.candidates().begin(), sck.candidates().end()) == svk;
    if (!ok) {
      ++violations;
      r.details.push_back("violation: " + inst.label);
    }
  }
  Report out = verdict(n >= kSvkInstances && violations == 0,
                       fmt("%zu instances, %zu DIs, SCK strictly shrank on every DI in %zu/%zu and ended at the SVK",
                           n, iterations, n - violations, n));
  out.details = std::move(r.details);
  return out;
}

//===----------------------------------------------------------------------===//
// 4. Embedded solver
//===----------------------------------------------------------------------===//

std::vector<CnfFormula> cnf_corpus() {
  std::mt19937_64 rng(2024);
  std::vector<CnfFormula> out;
  for (std::size_t i = 0; i < kCnfInstances; ++i)
    out.push_back(kft::random_kcnf(20, 40 + (i * 37) % 91, 3, rng));
  return out;
}

Report criterion4() {
  std::size_t agree = 0, sat = 0, unsound = 0;
  auto formulas = cnf_corpus();
  for (const auto &f : formulas) {
    SolveResult r = solve_embedded(f);
    bool want = kft::ref_sat(f);
    bool got = r.status == SolveStatus::Sat;
    if (got && !(f.satisfied_by(*r.model) && kft::ref_satisfies(f, [&] {
          std::uint64_t a = 0;
          for (Var v = 1; v <= f.num_vars(); ++v)
            a |= std::uint64_t{(*r.model)[v]} << (v - 1);
          return a;
        }())))
      ++unsound;
    sat += want;
    agree += (r.status == SolveStatus::Sat || r.status == SolveStatus::Unsat) && got == want;
  }
#ifdef KEYFORGE_VERIFY_MODELS_BUILD
  const char *suite = "library built with model verification";
#else
  const char *suite = "library built without model verification";
#endif
  // Guard against a degenerate corpus: both outcomes must be well represented.
  const bool mixed = sat >= 50 && formulas.size() - sat >= 50;
  Report r = verdict(agree == formulas.size() && unsound == 0 && mixed,
                     fmt("%zu/%zu agree with exhaustive search (%zu SAT, %zu UNSAT), %zu unsound models", agree,
                         formulas.size(), sat, formulas.size() - sat, unsound));
  r.details.push_back(suite);
  return r;
}

//===----------------------------------------------------------------------===//
// 5. Tseitin equivalence
//===----------------------------------------------------------------------===//

Report criterion5() {
  std::size_t equal = 0, n = 0;
  std::size_t max_vars = 0;
  for (std::uint64_t seed = 0; n < kTseitinCircuits; ++seed) {
    std::size_t inputs = 2 + seed % 6;
    std::size_t gates = 1 + seed % (20 - inputs);
    Circuit c = kft::small_circuit(inputs, gates, 7000 + seed);
    CnfFormula f;
    EncodedCopy copy = tseitin(c, f);
    if (f.num_vars() > 20)
      continue;
    ++n;
    max_vars = std::max<std::size_t>(max_vars, f.num_vars());
    std::vector<Var> vars;
    for (NetId pi : c.primary_inputs())
      vars.push_back(copy.net[pi.index].var());
    for (NetId po : c.primary_outputs())
      vars.push_back(copy.net[po.index].var());
    auto table = kft::ref_truth_table(c);
    std::set<std::uint64_t> want;
    const std::size_t ni = c.primary_inputs().size();
    for (std::uint64_t x = 0; x < table.size(); ++x) {
      std::uint64_t row = x;
      for (std::size_t j = 0; j < table[x].size(); ++j) {
        bool v = table[x][j] != copy.net[c.primary_outputs()[j].index].negated();
        row |= std::uint64_t{v} << (ni + j);
      }
      want.insert(row);
    }
    bool pis_positive = std::all_of(c.primary_inputs().begin(), c.primary_inputs().end(),
                                    [&](NetId pi) { return !copy.net[pi.index].negated(); });
    equal += pis_positive && kft::ref_projected_models(f, vars) == want &&
             kft::ref_model_count(f) == table.size();
  }
  return verdict(equal == n, fmt("%zu/%zu circuits (at most %zu CNF variables) project exactly to their truth tables",
                                 equal, n, max_vars));
}

//===----------------------------------------------------------------------===//
// 6-8. Trends
//===----------------------------------------------------------------------===//

struct Cell {
  double iterations = 0, time = 0, solver_time = 0, mean_len = 0;
  std::uint64_t learned = 0;
  std::size_t keys = 0;
  std::size_t timeouts = 0;
};

using CellKey = std::tuple<std::string, Scheme, unsigned>;

/// Median over kTrendRepetitions solver seeds for one locked instance.
Cell trend_cell(const Named &n, Scheme s, unsigned pct) {
  static std::map<CellKey, Cell> cache;
  CellKey k{n.name, s, pct};
  if (auto it = cache.find(k); it != cache.end())
    return it->second;
  LockedCircuit lc = lock(n.circuit, s, pct, lock_seed(n.name, s, pct, 1));
  std::vector<double> it, time, solver_time, len;
  Cell cell;
  cell.keys = lc.num_keys();
  for (unsigned rep = 0; rep < kTrendRepetitions; ++rep) {
    Outcome o = attack(lc, n.circuit, kTrendTimeout, cell_seed(n.name, s, pct, "embedded", rep, 1));
    it.push_back(static_cast<double>(o.iterations));
    time.push_back(o.time);
    solver_time.push_back(o.solver_time);
    len.push_back(o.mean_len);
    cell.learned += o.learned;
    cell.timeouts += !o.solved;
  }
  cell.iterations = median(it);
  cell.time = median(time);
  cell.solver_time = median(solver_time);
  cell.mean_len = median(len);
  cache[k] = cell;
  return cell;
}

Report criterion6() {
  auto start = std::chrono::steady_clock::now();
  Report r;
  bool ok = true;
  for (unsigned pct : {10u, 25u}) {
    std::size_t wins = 0, iter_wins = 0, time_wins = 0, n = 0;
    for (const auto &c : corpus()) {
      Cell d = trend_cell(c, Scheme::Dac12, pct);
      bool iter_ok = true, time_ok = true;
      for (Scheme s : {Scheme::Rnd, Scheme::Toc13Xor, Scheme::Toc13Mux, Scheme::Iolts14}) {
        Cell o = trend_cell(c, s, pct);
        iter_ok = iter_ok && d.iterations >= o.iterations;
        time_ok = time_ok && d.time >= o.time;
      }
      ++n;
      iter_wins += iter_ok;
      time_wins += time_ok;
      wins += iter_ok && time_ok;
    }
    double frac = static_cast<double>(wins) / static_cast<double>(n);
    ok = ok && frac >= kMajority;
    std::string medians = fmt("%u%% corpus medians:", pct);
    for (Scheme s : kAllSchemes) {
      std::vector<double> it, time;
      for (const auto &c : corpus()) {
        it.push_back(trend_cell(c, s, pct).iterations);
        time.push_back(trend_cell(c, s, pct).time);
      }
      medians += fmt(" %s %.1f it/%.4fs", std::string(to_string(s)).c_str(), median(it), median(time));
    }
    r.details.push_back(medians);
    r.details.push_back(fmt("%u%%: dac12 >= all others in iterations on %zu/%zu, in time on %zu/%zu, both on %zu/%zu "
                            "(%.0f%%)",
                            pct, iter_wins, n, time_wins, n, wins, n, 100 * frac));
  }
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ok = ok && elapsed <= kTrendBudget;
  Report out = verdict(ok, fmt("dac12 hardest on >= %.0f%% of circuits at 10%% and 25%%; suite took %.0f s (limit %.0f s)",
                               100 * kMajority, elapsed, kTrendBudget));
  out.details = std::move(r.details);
  return out;
}

Report criterion7() {
  const std::vector<unsigned> overheads = {1, 2, 3, 5, 10, 25};
  Report out;
  bool ok = true;
  for (Scheme s : kAllSchemes) {
    std::vector<double> med, wall;
    for (unsigned pct : overheads) {
      std::vector<double> times, walls;
      for (const auto &c : corpus()) {
        times.push_back(trend_cell(c, s, pct).solver_time);
        walls.push_back(trend_cell(c, s, pct).time);
      }
      med.push_back(median(times));
      wall.push_back(median(walls));
    }
    std::size_t inversions = 0;
    for (std::size_t i = 1; i < med.size(); ++i)
      inversions += med[i] < med[i - 1];
    ok = ok && inversions <= 1;
    std::string line = std::string(to_string(s)) + ":";
    for (std::size_t i = 0; i < med.size(); ++i)
      line += fmt(" %u%%=%.4fs", overheads[i], med[i]);
    line += fmt(" (%zu inversions)", inversions);
    out.details.push_back(line);
    std::string wline = "  whole-attack wall time:";
    for (std::size_t i = 0; i < wall.size(); ++i)
      wline += fmt(" %u%%=%.4fs", overheads[i], wall[i]);
    out.details.push_back(wline);
  }
  Report r = verdict(ok, "median embedded-solver time non-decreasing over 1-25% overhead, at most 1 inversion per "
                         "scheme");
  r.details = std::move(out.details);
  return r;
}

Report criterion8() {
  std::size_t wins = 0, n = 0, excluded = 0;
  for (const auto &c : corpus()) {
    Cell d = trend_cell(c, Scheme::Dac12, 10);
    Cell r = trend_cell(c, Scheme::Rnd, 10);
    if (d.learned == 0 && r.learned == 0) {
      ++excluded;
      continue;
    }
    ++n;
    wins += d.mean_len >= r.mean_len;
  }
  double frac = n ? static_cast<double>(wins) / static_cast<double>(n) : 0.0;
  Report out = verdict(n > 0 && frac >= kMajority,
                       fmt("dac12 mean learned-clause length >= rnd at 10%% on %zu/%zu circuits (%.0f%%, bar %.0f%%)",
                           wins, n, 100 * frac, 100 * kMajority));
  out.details.push_back(fmt("%zu circuits excluded: neither attack learned a clause", excluded));
  std::vector<double> dl, rl;
  for (const auto &c : corpus()) {
    dl.push_back(trend_cell(c, Scheme::Dac12, 10).mean_len);
    rl.push_back(trend_cell(c, Scheme::Rnd, 10).mean_len);
  }
  out.details.push_back(fmt("corpus median of mean learned length: dac12 %.2f, rnd %.2f", median(dl), median(rl)));
  return out;
}

//===----------------------------------------------------------------------===//
// 9. KPG conversions
//===----------------------------------------------------------------------===//

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

bool ref_gate(GateKind k, bool a, bool b) {
  switch (k) {
  case GateKind::And: return a && b;
  case GateKind::Nand: return !(a && b);
  case GateKind::Or: return a || b;
  case GateKind::Nor: return !(a || b);
  case GateKind::Xor: return a != b;
  case GateKind::Xnor: return a == b;
  default: throw std::logic_error("not a two-input kind");
  }
}

/// Output of the KPG for data integer x and key integer k, by the reference
/// evaluator.
bool kpg_eval(const Circuit &c, std::size_t n_data, std::uint64_t x, std::uint64_t k) {
  return kft::ref_outputs(c, x | (k << n_data))[0];
}

Report criterion9() {
  std::size_t lut_functions = 0, lut_bad = 0, camo_cases = 0, camo_bad = 0;
  for (std::size_t L : {1u, 2u}) {
    std::vector<std::string> inputs;
    for (std::size_t i = 0; i < L; ++i)
      inputs.push_back("i" + std::to_string(i));
    const std::size_t rows = std::size_t{1} << L;
    const std::uint64_t functions = std::uint64_t{1} << rows;
    std::set<std::uint64_t> reachable;
    for (std::uint64_t t = 0; t < functions; ++t) {
      NameAllocator names;
      for (const auto &in : inputs)
        names.reserve(in);
      KpgSubcircuit kpg = lut_to_kpg(inputs, bits_from_integer(t, rows), "y", names);
      Circuit c = from_kpg(kpg, inputs);
      bool ok = kpg.key_nets.size() == rows && bits_to_integer(kpg.correct_key) == t;
      std::uint64_t k = bits_to_integer(kpg.correct_key);
      for (std::uint64_t x = 0; x < rows; ++x)
        ok = ok && kpg_eval(c, L, x, k) == (((t >> x) & 1U) != 0);
      // Every key programs some function; collect them all.
      for (std::uint64_t key = 0; key < functions; ++key) {
        std::uint64_t f = 0;
        for (std::uint64_t x = 0; x < rows; ++x)
          f |= std::uint64_t{kpg_eval(c, L, x, key)} << x;
        reachable.insert(f);
      }
      ++lut_functions;
      lut_bad += !ok;
    }
    lut_bad += reachable.size() != functions;
  }

  const std::vector<GateKind> kinds = {GateKind::And, GateKind::Nand, GateKind::Or,
                                       GateKind::Nor, GateKind::Xor,  GateKind::Xnor};
  const std::vector<std::string> inputs = {"a", "b"};
  std::function<void(std::vector<GateKind> &, std::size_t)> choose = [&](std::vector<GateKind> &poss, std::size_t m) {
    if (poss.size() == m) {
      for (std::size_t t = 0; t < m; ++t) {
        NameAllocator names;
        names.reserve("a");
        names.reserve("b");
        KpgSubcircuit kpg = camo_to_kpg(inputs, poss, t, "y", names);
        Circuit c = from_kpg(kpg, inputs);
        const std::size_t bits = kpg.key_nets.size();
        bool ok = bits == (m <= 2 ? 1u : 2u);
        std::uint64_t correct = bits_to_integer(kpg.correct_key);
        for (std::uint64_t key = 0; key < (std::uint64_t{1} << bits); ++key) {
          GateKind sel = poss[std::min<std::uint64_t>(key, m - 1)];
          for (std::uint64_t x = 0; x < 4; ++x) {
            bool a = x & 1U, b = (x >> 1) & 1U;
            bool got = kpg_eval(c, 2, x, key);
            ok = ok && got == ref_gate(sel, a, b);
            if (key == correct)
              ok = ok && got == ref_gate(poss[t], a, b);
          }
        }
        ++camo_cases;
        camo_bad += !ok;
      }
      return;
    }
    for (GateKind k : kinds)
      if (std::find(poss.begin(), poss.end(), k) == poss.end()) {
        poss.push_back(k);
        choose(poss, m);
        poss.pop_back();
      }
  };
  for (std::size_t m : {2u, 3u}) {
    std::vector<GateKind> poss;
    choose(poss, m);
  }
  return verdict(lut_bad == 0 && camo_bad == 0,
                 fmt("LUT KPG: %zu tables (L=1,2) reproduced, %zu failures; camouflage KPG: %zu cases (M=2,3), %zu "
                     "failures",
                     lut_functions, lut_bad, camo_cases, camo_bad));
}

//===----------------------------------------------------------------------===//
// 10. Determinism
//===----------------------------------------------------------------------===//

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string &args) {
  std::string cmd = std::string(KEYFORGE_CLI) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Report criterion10() {
  fs::path dir = fs::temp_directory_path() / "keyforge_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir / "corpus");
  for (std::size_t i = 0; i < 4; ++i) {
    const auto &n = corpus()[i * 3];
    std::ofstream(dir / "corpus" / (n.name + ".bench")) << write_bench(n.circuit);
  }
  std::ofstream(dir / "exp.json") << R"({"circuits": ["corpus"], "overheads": [5, 10], "repetitions": 2,
    "timeout": 120, "seed": 7})";

  // Library pipeline.
  ExperimentSpec spec = read_experiment_file(dir / "exp.json");
  CsvOptions redact;
  redact.redact_wall_time = true;
  std::string a = emit_csv(run_matrix(spec), redact);
  std::string b = emit_csv(run_matrix(spec), redact);

  // CLI pipeline: lock, attack and bench, twice, with forked workers.
  std::vector<std::string> outputs;
  bool cli_ok = true;
  for (int round = 0; round < 2; ++round) {
    fs::path out = dir / ("run" + std::to_string(round));
    fs::create_directories(out);
    std::string c17 = (dir / "corpus" / "c17.bench").string();
    cli_ok = cli_ok && run_cli("lock " + c17 + " --scheme dac12 --overhead 25 --seed 5 -o " +
                               (out / "c17_locked.bench").string()) == 0;
    cli_ok = cli_ok && run_cli("attack " + (out / "c17_locked.bench").string() + " --oracle " + c17 + " --trace " +
                               (out / "trace.log").string()) == 0;
    cli_ok = cli_ok && run_cli("bench " + (dir / "exp.json").string() + " -j 2 -q --redact-time -o " +
                               out.string()) == 0;
    std::string trace = slurp(out / "trace.log");
    std::string key_line = trace.substr(0, trace.find("summary"));
    key_line = key_line.substr(key_line.rfind("key "));
    outputs.push_back(slurp(out / "c17_locked.bench") + slurp(out / "c17_locked.bench.key") + key_line +
                      slurp(out / "records.csv"));
  }
  bool cli_same = cli_ok && outputs[0] == outputs[1] && outputs[0].find(a.substr(a.find('\n') + 1)) != std::string::npos;
  Report r = verdict(a == b && cli_same,
                     fmt("library CSV identical: %s (%zu bytes); CLI lock/attack/bench artifacts identical: %s, "
                         "and match the library CSV",
                         a == b ? "yes" : "no", a.size(), cli_same ? "yes" : "no"));
  fs::remove_all(dir);
  return r;
}

//===----------------------------------------------------------------------===//
// 11. External backend
//===----------------------------------------------------------------------===//

Report criterion11() {
  const char *cmd = std::getenv("KEYFORGE_EXTERNAL_SOLVER");
  if (!cmd || !*cmd) {
    Report r;
    r.verdict = Report::Verdict::Skip;
    r.summary = "KEYFORGE_EXTERNAL_SOLVER not set";
    return r;
  }
  BackendSpec ext = BackendSpec::external(cmd, 120.0);
  std::size_t agree = 0, n = 0;
  for (const auto &f : cnf_corpus()) {
    SolveResult e = solve_external(f, ext);
    SolveResult m = solve_embedded(f);
    ++n;
    agree += e.status == m.status;
  }
  std::size_t attacks = 0, attacks_ok = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto &inst = svk_instances()[i];
    Outcome e = attack(inst.locked, inst.oracle, 120.0, 0, ext);
    Outcome m = attack(inst.locked, inst.oracle, 120.0);
    auto svk = brute_force_svk(inst.locked, inst.oracle);
    ++attacks;
    attacks_ok += e.solved == m.solved && e.verified &&
                  std::binary_search(svk.begin(), svk.end(), bits_to_integer(e.key));
  }
  return verdict(agree == n && attacks_ok == attacks,
                 fmt("'%s': %zu/%zu CNF statuses agree, %zu/%zu attacks agree and verify", cmd, agree, n, attacks_ok,
                     attacks));
}

} // namespace

int main(int argc, char **argv) {
  const std::vector<std::pair<std::string, std::function<Report()>>> criteria = {
      {"attack soundness", criterion1},       {"SVK agreement", criterion2},
      {"SCK monotonicity", criterion3},       {"embedded solver correctness", criterion4},
      {"Tseitin equivalence", criterion5},    {"dac12 hardness trend", criterion6},
      {"overhead growth trend", criterion7},  {"learned-clause length", criterion8},
      {"KPG conversions", criterion9},        {"determinism", criterion10},
      {"external backend conformance", criterion11},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i)
    selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    int id = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(id))
      continue;
    auto start = std::chrono::steady_clock::now();
    Report r;
    try {
      r = criteria[i].second();
    } catch (const std::exception &e) {
      r = verdict(false, std::string("threw: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char *v = r.verdict == Report::Verdict::Pass ? "PASS" : r.verdict == Report::Verdict::Skip ? "SKIP" : "FAIL";
    failures += r.verdict == Report::Verdict::Fail;
    std::printf("%s criterion %2d %s: %s [%.1f s]\n", v, id, criteria[i].first.c_str(), r.summary.c_str(), secs);
    for (const auto &d : r.details)
      std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}

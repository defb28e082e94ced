// Command-line front end: lock, attack, verify, convert, stats, bench.

#include "keyforge/analysis.hpp"
#include "keyforge/attack.hpp"
#include "keyforge/bench.hpp"
#include "keyforge/cnf.hpp"
#include "keyforge/error.hpp"
#include "keyforge/netlist.hpp"
#include "keyforge/obfuscate.hpp"
#include "keyforge/solver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitTimeout = 3;

/// Default backend command for `attack` when --backend is not given.
constexpr const char *kBackendEnv = "KEYFORGE_BACKEND";

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw kf::Error(kf::ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text))
    throw kf::Error(kf::ErrorKind::Io, "cannot write " + path);
}

void emit(const std::string &path, const std::string &text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_file(path, text);
}

kf::BackendSpec make_backend(const std::string &choice, double timeout) {
  if (choice.empty() || choice == "embedded")
    return kf::BackendSpec::embedded(timeout);
  return kf::BackendSpec::external(choice, timeout);
}

std::string seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  return buf;
}

/// `bits` is either a bit string or the path of a key file.
kf::BitVector load_key(const std::string &bits) {
  if (!bits.empty() && bits.find_first_not_of("01") == std::string::npos)
    return kf::parse_bit_string(bits);
  return kf::parse_key_file(read_file(bits));
}

struct LockArgs {
  std::string input, output, scheme;
  unsigned overhead = 5;
  std::uint64_t seed = 1;
  bool strip_key = false;
};

int cmd_lock(const LockArgs &a) {
  kf::Circuit c = kf::read_bench_file(a.input);
  kf::LockedCircuit lc = kf::lock(c, *kf::parse_scheme(a.scheme), a.overhead, a.seed);
  write_file(a.output, kf::write_locked_bench(lc, a.strip_key));
  write_file(a.output + ".key", kf::write_key_file(lc));
  std::cout << "locked " << c.name() << " with " << a.scheme << ": " << lc.num_keys() << " key inputs, "
            << lc.circuit.gates().size() << " gates -> " << a.output << "\n";
  return kExitOk;
}

struct AttackArgs {
  std::string locked, oracle, backend, trace, encoding = "plain";
  double timeout = 86400.0;
  std::uint64_t seed = 0;
};

int cmd_attack(const AttackArgs &a) {
  kf::LockedCircuit lc = kf::read_locked_bench_file(a.locked);
  kf::Circuit oracle = kf::read_bench_file(a.oracle);
  std::string choice = a.backend;
  if (choice.empty())
    if (const char *env = std::getenv(kBackendEnv))
      choice = env;
  kf::AttackLimits limits;
  limits.timeout = a.timeout;
  limits.seed = a.seed;
  limits.encoding = a.encoding == "folded" ? kf::DivcEncoding::ConstantPropagated : kf::DivcEncoding::Plain;
  kf::AttackResult r = kf::sat_attack(lc, oracle, make_backend(choice, a.timeout), limits);
  std::string log = kf::format_trace(r.trace, r.key);
  if (!a.trace.empty())
    write_file(a.trace, log);

  std::cout << "circuit:     " << r.trace.circuit << "\n";
  std::cout << "backend:     " << r.trace.backend << "\n";
  std::cout << "iterations:  " << r.trace.iterations.size() << "\n";
  std::cout << "time:        " << seconds(r.trace.total_time) << " s\n";
  std::cout << "peak memory: " << r.trace.peak_memory << " bytes\n";
  if (r.status == kf::AttackStatus::Timeout) {
    std::cout << "status:      timeout\n";
    return kExitTimeout;
  }
  std::cout << "key:         " << kf::to_bit_string(r.key->bits) << "\n";
  std::cout << "verified:    " << (r.key->verified ? "yes" : "no") << "\n";
  return r.key->verified ? kExitOk : kExitFailure;
}

int cmd_verify(const std::string &oracle_path, const std::string &candidate_path, const std::string &key_arg) {
  kf::Circuit oracle = kf::read_bench_file(oracle_path);
  kf::LockedCircuit lc = kf::read_locked_bench_file(candidate_path);
  kf::BitVector key;
  if (!key_arg.empty())
    key = load_key(key_arg);
  else if (lc.correct_key)
    key = *lc.correct_key;
  else if (lc.num_keys() > 0)
    throw kf::Error(kf::ErrorKind::InvalidArgument, "candidate has key inputs; pass --key");
  bool ok = kf::verify_key(lc, key, oracle);
  std::cout << (ok ? "equivalent" : "not equivalent") << "\n";
  return ok ? kExitOk : kExitFailure;
}

int cmd_convert(const std::string &input, const std::string &to, const std::string &output,
                const std::string &map_path) {
  if (to == "kpg") {
    kf::Circuit c = kf::read_bench_file(input);
    kf::LockedCircuit lc = kf::convert_luts(c);
    emit(output, kf::write_locked_bench(lc));
    return kExitOk;
  }
  if (to == "dimacs") {
    kf::Circuit c = kf::read_bench_file(input);
    kf::CnfFormula f;
    kf::EncodedCopy copy = kf::tseitin(c, f);
    emit(output, kf::to_dimacs(f));
    if (!map_path.empty()) {
      std::ostringstream m;
      for (std::size_t n = 0; n < copy.net.size(); ++n)
        m << "var " << copy.net[n].var() << " = c:" << c.net_name(kf::NetId{static_cast<std::uint32_t>(n)}) << "\n";
      write_file(map_path, m.str());
    }
    return kExitOk;
  }
  kf::LockedCircuit lc = kf::read_locked_bench_file(input);
  kf::SatcState state = kf::SatcState::build_kdc(lc);
  emit(output, kf::to_dimacs(state.satc()));
  if (!map_path.empty()) {
    std::ostringstream m;
    state.write_var_map(m);
    write_file(map_path, m.str());
  }
  return kExitOk;
}

int cmd_stats(const std::vector<std::string> &inputs) {
  std::printf("%-24s %8s %6s %6s %6s\n", "circuit", "gates", "pis", "pos", "depth");
  for (const auto &path : inputs) {
    kf::Circuit c = kf::read_bench_file(path);
    auto s = c.stats();
    std::printf("%-24s %8zu %6zu %6zu %6zu\n", c.name().c_str(), s.gates, s.pis, s.pos, s.depth);
  }
  return kExitOk;
}

struct BenchArgs {
  std::string config, out_dir = ".";
  int jobs = -1;
  bool redact_time = false;
  bool quiet = false;
};

int cmd_bench(const BenchArgs &a) {
  kf::ExperimentSpec spec = kf::read_experiment_file(a.config);
  if (a.jobs >= 0)
    spec.jobs = static_cast<unsigned>(a.jobs);
  std::filesystem::create_directories(a.out_dir);
  std::size_t done = 0;
  auto records = kf::run_matrix(spec, [&](const kf::RunRecord &r) {
    ++done;
    if (!a.quiet)
      std::cerr << "[" << done << "] " << r.circuit << " " << r.scheme << " " << r.overhead << "% " << r.backend
                << " #" << r.repetition << ": " << kf::to_string(r.status) << " " << seconds(r.wall_time) << " s, "
                << r.iterations << " iterations\n";
  });
  const std::filesystem::path dir(a.out_dir);
  kf::CsvOptions csv;
  csv.redact_wall_time = a.redact_time;
  write_file((dir / "records.csv").string(), kf::emit_csv(records, csv));
  kf::SummaryTable table = kf::aggregate(records);
  write_file((dir / "summary.csv").string(), kf::emit_csv(table));
  write_file((dir / "time_vs_overhead.svg").string(), kf::emit_plot(table, kf::PlotKind::TimeVsOverhead));
  write_file((dir / "backend_time.svg").string(), kf::emit_plot(table, kf::PlotKind::BackendBars));
  write_file((dir / "memory_vs_overhead.svg").string(), kf::emit_plot(table, kf::PlotKind::MemoryVsOverhead));
  std::size_t solved = 0;
  for (const auto &r : records)
    solved += r.status == kf::RunStatus::Solved;
  std::cout << records.size() << " runs, " << solved << " solved; results in " << dir.string() << "\n";
  return kExitOk;
}

/// SAT-competition style solver over a DIMACS file: exit 10 (SAT) or 20
/// (UNSAT), 0 when undecided.
int cmd_solve(const std::string &path, double timeout) {
  kf::CnfFormula f = kf::parse_dimacs(read_file(path));
  kf::SolveResult r = kf::solve_embedded(f, {}, kf::Budget::seconds(timeout));
  if (r.status == kf::SolveStatus::Sat) {
    std::string line = "v";
    std::ostringstream out;
    out << "s SATISFIABLE\n";
    for (kf::Var v = 1; v <= f.num_vars(); ++v) {
      std::string lit = " " + std::string((*r.model)[v] ? "" : "-") + std::to_string(v);
      if (line.size() + lit.size() > 78) {
        out << line << "\n";
        line = "v";
      }
      line += lit;
    }
    out << line << " 0\n";
    std::cout << out.str();
    return 10;
  }
  if (r.status == kf::SolveStatus::Unsat) {
    std::cout << "s UNSATISFIABLE\n";
    return 20;
  }
  std::cout << "s UNKNOWN\n";
  return 0;
}

struct GenerateArgs {
  std::size_t inputs = 8, gates = 32, outputs = 2;
  std::uint64_t seed = 1;
  std::string name = "rand", output;
};

int cmd_generate(const GenerateArgs &a) {
  kf::RandomCircuitOptions o;
  o.inputs = a.inputs;
  o.gates = a.gates;
  o.min_outputs = a.outputs;
  o.seed = a.seed;
  o.name = a.name;
  emit(a.output, kf::write_bench(kf::random_circuit(o)));
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Logic locking and oracle-guided SAT attack workbench"};
  app.require_subcommand(1);
  std::function<int()> action;

  std::vector<std::string> scheme_names;
  for (auto s : kf::kAllSchemes)
    scheme_names.emplace_back(kf::to_string(s));

  LockArgs lock_args;
  auto *lock = app.add_subcommand("lock", "Insert key gates into a netlist");
  lock->add_option("input", lock_args.input, "Original .bench netlist")->required()->check(CLI::ExistingFile);
  lock->add_option("--scheme", lock_args.scheme, "Locking scheme")->required()->check(CLI::IsMember(scheme_names));
  lock->add_option("--overhead", lock_args.overhead, "Key gates as a percentage of gates")
      ->check(CLI::Range(1U, 100U))
      ->capture_default_str();
  lock->add_option("--seed", lock_args.seed, "Random seed")->capture_default_str();
  lock->add_flag("--strip-key", lock_args.strip_key, "Omit the correct key from the netlist header");
  lock->add_option("-o,--output", lock_args.output, "Locked netlist path (key goes to <output>.key)")->required();
  lock->callback([&] { action = [&] { return cmd_lock(lock_args); }; });

  AttackArgs attack_args;
  auto *attack = app.add_subcommand("attack", "Recover the key of a locked netlist");
  attack->add_option("locked", attack_args.locked, "Locked .bench netlist")->required()->check(CLI::ExistingFile);
  attack->add_option("--oracle", attack_args.oracle, "Original netlist used as the oracle")
      ->required()
      ->check(CLI::ExistingFile);
  attack->add_option("--backend", attack_args.backend,
                     std::string("'embedded' or a solver command line; default from ") + kBackendEnv);
  attack->add_option("--timeout", attack_args.timeout, "Seconds")->check(CLI::PositiveNumber)->capture_default_str();
  attack->add_option("--seed", attack_args.seed, "Embedded solver seed");
  attack->add_option("--encoding", attack_args.encoding, "DI constraint encoding")
      ->check(CLI::IsMember({"plain", "folded"}))
      ->capture_default_str();
  attack->add_option("--trace", attack_args.trace, "Write the per-iteration log here");
  attack->callback([&] { action = [&] { return cmd_attack(attack_args); }; });

  std::string verify_oracle, verify_candidate, verify_key;
  auto *verify = app.add_subcommand("verify", "Check a (keyed) netlist against an oracle");
  verify->add_option("oracle", verify_oracle, "Reference netlist")->required()->check(CLI::ExistingFile);
  verify->add_option("candidate", verify_candidate, "Netlist to check")->required()->check(CLI::ExistingFile);
  verify->add_option("--key", verify_key, "Key bits or key file (default: the netlist header)");
  verify->callback([&] { action = [&] { return cmd_verify(verify_oracle, verify_candidate, verify_key); }; });

  std::string conv_in, conv_to = "dimacs", conv_out, conv_map;
  auto *convert = app.add_subcommand("convert", "Emit CNF or key-programmable netlists");
  convert->add_option("input", conv_in, "Input netlist")->required()->check(CLI::ExistingFile);
  convert->add_option("--to", conv_to, "dimacs: circuit CNF; satc: attack formula of a locked netlist; kpg: LUTs "
                                       "to key-programmable gates")
      ->check(CLI::IsMember({"dimacs", "satc", "kpg"}))
      ->capture_default_str();
  convert->add_option("-o,--output", conv_out, "Output path (default stdout)");
  convert->add_option("--map", conv_map, "Write a variable map sidecar");
  convert->callback([&] { action = [&] { return cmd_convert(conv_in, conv_to, conv_out, conv_map); }; });

  std::vector<std::string> stats_inputs;
  auto *stats = app.add_subcommand("stats", "Print netlist statistics");
  stats->add_option("inputs", stats_inputs, "Netlists")->required()->check(CLI::ExistingFile);
  stats->callback([&] { action = [&] { return cmd_stats(stats_inputs); }; });

  BenchArgs bench_args;
  auto *bench = app.add_subcommand("bench", "Run an experiment matrix");
  bench->add_option("config", bench_args.config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("-o,--out-dir", bench_args.out_dir, "Directory for CSV and SVG output")->capture_default_str();
  bench->add_option("-j,--jobs", bench_args.jobs, "Worker processes (overrides the config)");
  bench->add_flag("--redact-time", bench_args.redact_time, "Write 0 for wall times in records.csv");
  bench->add_flag("-q,--quiet", bench_args.quiet, "No per-run progress");
  bench->callback([&] { action = [&] { return cmd_bench(bench_args); }; });

  std::string solve_path;
  double solve_timeout = 86400.0;
  auto *solve = app.add_subcommand("solve", "Solve a DIMACS file with the embedded solver");
  solve->add_option("cnf", solve_path, "DIMACS CNF")->required()->check(CLI::ExistingFile);
  solve->add_option("--timeout", solve_timeout, "Seconds")->check(CLI::PositiveNumber);
  solve->callback([&] { action = [&] { return cmd_solve(solve_path, solve_timeout); }; });

  GenerateArgs gen_args;
  auto *generate = app.add_subcommand("generate", "Write a random combinational netlist");
  generate->add_option("--inputs", gen_args.inputs)->check(CLI::PositiveNumber)->capture_default_str();
  generate->add_option("--gates", gen_args.gates)->check(CLI::PositiveNumber)->capture_default_str();
  generate->add_option("--outputs", gen_args.outputs)->check(CLI::PositiveNumber)->capture_default_str();
  generate->add_option("--seed", gen_args.seed)->capture_default_str();
  generate->add_option("--name", gen_args.name)->capture_default_str();
  generate->add_option("-o,--output", gen_args.output, "Output path (default stdout)");
  generate->callback([&] { action = [&] { return cmd_generate(gen_args); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    return action();
  } catch (const kf::Error &e) {
    std::cerr << "keyforge: " << kf::to_string(e.kind()) << ": " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception &e) {
    std::cerr << "keyforge: " << e.what() << "\n";
    return kExitFailure;
  }
}

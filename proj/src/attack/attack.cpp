#include "keyforge/analysis.hpp"
#include "keyforge/attack.hpp"
#include "keyforge/error.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

namespace kf {

OracleAdapter::OracleAdapter(const LockedCircuit &locked, const Circuit &oracle) : oracle_(&oracle) {
  const Circuit &c = locked.circuit;
  auto data = locked.data_inputs();
  if (data.size() != oracle.primary_inputs().size())
    throw Error(ErrorKind::InvalidArgument, "oracle has " + std::to_string(oracle.primary_inputs().size()) +
                                                " inputs, locked netlist has " + std::to_string(data.size()) +
                                                " data inputs");
  for (NetId x : data) {
    auto n = oracle.find_net(c.net_name(x));
    auto pos = n ? oracle.input_position(*n) : std::nullopt;
    if (!pos)
      throw Error(ErrorKind::InvalidArgument, "oracle lacks input '" + c.net_name(x) + "'");
    input_map_.push_back(*pos);
  }
  auto opos = oracle.primary_outputs();
  if (opos.size() != c.primary_outputs().size())
    throw Error(ErrorKind::InvalidArgument, "oracle and locked netlist have different output counts");
  for (NetId y : c.primary_outputs()) {
    auto n = oracle.find_net(c.net_name(y));
    std::size_t j = 0;
    while (j < opos.size() && !(n && opos[j] == *n))
      ++j;
    if (j == opos.size())
      throw Error(ErrorKind::InvalidArgument, "oracle lacks output '" + c.net_name(y) + "'");
    output_map_.push_back(j);
  }
}

BitVector OracleAdapter::query(const BitVector &x) {
  ++queries_;
  BitVector in(oracle_->primary_inputs().size());
  for (std::size_t i = 0; i < x.size(); ++i)
    in[input_map_[i]] = x[i];
  BitVector out = simulate(*oracle_, in);
  BitVector y(output_map_.size());
  for (std::size_t j = 0; j < y.size(); ++j)
    y[j] = out[output_map_[j]];
  return y;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

BitVector project(const std::vector<bool> &model, std::span<const Var> vars) {
  BitVector out;
  out.reserve(vars.size());
  for (Var v : vars)
    out.push_back(v < model.size() && model[v]);
  return out;
}

/// Either an incremental embedded session or per-call external processes.
class Backend {
public:
  Backend(const BackendSpec &spec, std::uint64_t seed, Clock::time_point deadline)
      : spec_(spec), deadline_(deadline), session_(SolverOptions{seed}) {}

  bool incremental() const { return spec_.kind == BackendKind::Embedded; }

  SolveResult solve_satc(const SatcState &state, std::span<const Clause> fresh) {
    if (incremental())
      return check(session_.solve_incremental(fresh, {}, budget()));
    return check(solve_external(state.satc(), remaining_spec()));
  }

  SolveResult solve_once(const CnfFormula &f) {
    if (incremental())
      return check(solve_embedded(f, {}, budget(), SolverOptions{0, 8, 4, false}));
    return check(solve_external(f, remaining_spec()));
  }

private:
  Budget budget() const {
    Budget b;
    b.deadline = deadline_;
    return b;
  }
  BackendSpec remaining_spec() const {
    BackendSpec s = spec_;
    s.timeout = std::max(0.0, std::chrono::duration<double>(deadline_ - Clock::now()).count());
    return s;
  }
  static SolveResult check(SolveResult r) {
    if (r.status == SolveStatus::Error)
      throw Error(ErrorKind::SolverError, r.message.empty() ? "solver failed" : r.message);
    return r;
  }

  BackendSpec spec_;
  Clock::time_point deadline_;
  Session session_;
};

} // namespace

AttackResult sat_attack(const LockedCircuit &locked, const Circuit &oracle, const BackendSpec &backend,
                        const AttackLimits &limits) {
  const auto start = Clock::now();
  const auto deadline =
      start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(limits.timeout));
  if (locked.key_inputs.empty())
    throw Error(ErrorKind::InvalidArgument, "locked netlist has no key inputs");
  OracleAdapter oracle_io(locked, oracle);

  AttackResult result;
  AttackTrace &trace = result.trace;
  trace.circuit = locked.circuit.name();
  trace.backend = backend.name;
  trace.incremental = backend.kind == BackendKind::Embedded;
  trace.num_keys = locked.num_keys();
  trace.num_data_inputs = locked.circuit.primary_inputs().size() - locked.num_keys();

  SatcState state = SatcState::build_kdc(locked, limits.encoding);
  Backend solver(backend, limits.seed, deadline);
  double learned_len_sum = 0.0;
  auto account = [&](const SolveResult &r) {
    trace.peak_memory = std::max(trace.peak_memory, r.resources.peak_memory);
    trace.learned_clauses += r.resources.learned_clauses;
    learned_len_sum += r.resources.mean_learned_len * static_cast<double>(r.resources.learned_clauses);
  };
  auto finish = [&]() {
    trace.total_time = seconds_since(start);
    trace.oracle_queries = oracle_io.queries();
    trace.lcac_clauses = state.lcac().size();
    trace.mean_learned_len =
        trace.learned_clauses ? learned_len_sum / static_cast<double>(trace.learned_clauses) : 0.0;
  };

  std::span<const Clause> fresh = state.kdc().clauses();
  for (;;) {
    SolveResult r = solver.solve_satc(state, fresh);
    account(r);
    if (r.status == SolveStatus::Timeout) {
      finish();
      result.status = AttackStatus::Timeout;
      return result;
    }
    if (r.learned)
      state.add_learned(*r.learned);
    if (r.status == SolveStatus::Unsat) {
      trace.final_solve_time = r.resources.wall_time;
      break;
    }
    AttackIteration it;
    it.x_di = project(*r.model, state.data_vars());
    it.y_f = oracle_io.query(it.x_di);
    std::size_t g = state.add_divc(it.x_di, it.y_f);
    fresh = state.divc_group(g);
    it.solve_time = r.resources.wall_time;
    it.clauses = state.num_clauses();
    it.vars = state.num_vars();
    it.learned_exported = r.learned ? r.learned->size() : 0;
    it.learned_clauses = r.resources.learned_clauses;
    it.mean_learned_len = r.resources.mean_learned_len;
    it.conflicts = r.resources.conflicts;
    trace.iterations.push_back(std::move(it));
  }

  SolveResult keygen = solver.solve_once(state.build_keygen());
  trace.keygen_time = keygen.resources.wall_time;
  trace.peak_memory = std::max(trace.peak_memory, keygen.resources.peak_memory);
  if (keygen.status == SolveStatus::Timeout) {
    finish();
    result.status = AttackStatus::Timeout;
    return result;
  }
  if (keygen.status == SolveStatus::Unsat)
    throw Error(ErrorKind::InvalidObfuscation, "no key is consistent with the observed input/output pairs");

  RecoveredKey key{project(*keygen.model, state.key1_vars()), false};
  key.verified = verify_key(locked, key.bits, oracle);
  result.key = std::move(key);
  result.status = AttackStatus::Solved;
  finish();
  return result;
}

std::string format_trace(const AttackTrace &trace, const std::optional<RecoveredKey> &key) {
  std::ostringstream out;
  char buf[64];
  auto sec = [&](double s) {
    std::snprintf(buf, sizeof buf, "%.6f", s);
    return std::string(buf);
  };
  out << "attack " << trace.circuit << " backend=" << trace.backend
      << " mode=" << (trace.incremental ? "incremental" : "re-encode") << " keys=" << trace.num_keys
      << " inputs=" << trace.num_data_inputs << "\n";
  for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
    const auto &it = trace.iterations[i];
    std::snprintf(buf, sizeof buf, "%.3f", it.mean_learned_len);
    std::string mean = buf;
    out << "iter " << (i + 1) << " di=" << to_bit_string(it.x_di) << " y=" << to_bit_string(it.y_f)
        << " time=" << sec(it.solve_time) << " clauses=" << it.clauses << " vars=" << it.vars
        << " conflicts=" << it.conflicts << " learned=" << it.learned_clauses << " exported=" << it.learned_exported
        << " mean_len=" << mean << "\n";
  }
  out << "final time=" << sec(trace.final_solve_time) << "\n";
  out << "keygen time=" << sec(trace.keygen_time) << "\n";
  if (key)
    out << "key " << to_bit_string(key->bits) << " verified=" << (key->verified ? "yes" : "no") << "\n";
  std::snprintf(buf, sizeof buf, "%.3f", trace.mean_learned_len);
  std::string mean = buf;
  out << "summary iterations=" << trace.iterations.size() << " oracle_queries=" << trace.oracle_queries
      << " time=" << sec(trace.total_time) << " peak_memory=" << trace.peak_memory
      << " learned=" << trace.learned_clauses << " mean_learned_len=" << mean << " lcac=" << trace.lcac_clauses
      << "\n";
  return out.str();
}

} // namespace kf

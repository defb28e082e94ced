#include "keyforge/bench.hpp"
#include "keyforge/error.hpp"

#include <array>
#include <charconv>

namespace kf {

std::string_view to_string(RunStatus status) {
  switch (status) {
  case RunStatus::Solved: return "solved";
  case RunStatus::Timeout: return "timeout";
  case RunStatus::Error: return "error";
  }
  return "error";
}

std::optional<RunStatus> parse_run_status(std::string_view text) {
  for (RunStatus s : {RunStatus::Solved, RunStatus::Timeout, RunStatus::Error})
    if (to_string(s) == text)
      return s;
  return std::nullopt;
}

std::string csv_row(std::span<const std::string> fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i)
      out += ',';
    const std::string &f = fields[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out += f;
      continue;
    }
    out += '"';
    for (char ch : f) {
      if (ch == '"')
        out += '"';
      out += ch;
    }
    out += '"';
  }
  out += "\r\n";
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_row = [&]() {
    row.push_back(std::move(field));
    field.clear();
    rows.push_back(std::move(row));
    row.clear();
    field_started = false;
  };
  while (i < text.size()) {
    char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        field += ch;
      }
      ++i;
      continue;
    }
    if (ch == '"' && field.empty() && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_row();
      ++i;
    } else if (ch == '\n') {
      end_row();
    } else {
      field += ch;
      field_started = true;
    }
    ++i;
  }
  if (quoted)
    throw Error(ErrorKind::Syntax, "unterminated quoted CSV field");
  if (field_started || !field.empty() || !row.empty())
    end_row();
  return rows;
}

namespace {

constexpr std::array<std::string_view, 12> kColumns = {
    "circuit", "scheme",    "overhead",   "backend",    "repetition",       "seed",
    "status",  "wall_time", "peak_memory", "iterations", "mean_learned_len", "key_verified"};

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T> T parse_number(const std::string &s, std::string_view column) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorKind::Syntax, "bad " + std::string(column) + " value '" + s + "'");
  return v;
}

} // namespace

std::string emit_csv(std::span<const RunRecord> records, const CsvOptions &options) {
  std::vector<std::string> header(kColumns.begin(), kColumns.end());
  std::string out = csv_row(header);
  for (const auto &r : records) {
    std::vector<std::string> f = {r.circuit,
                                  r.scheme,
                                  std::to_string(r.overhead),
                                  r.backend,
                                  std::to_string(r.repetition),
                                  std::to_string(r.seed),
                                  std::string(to_string(r.status)),
                                  options.redact_wall_time ? "0" : format_double(r.wall_time),
                                  std::to_string(r.peak_memory),
                                  std::to_string(r.iterations),
                                  format_double(r.mean_learned_len),
                                  r.key_verified ? "true" : "false"};
    out += csv_row(f);
  }
  return out;
}

std::vector<RunRecord> parse_records_csv(std::string_view text) {
  auto rows = parse_csv(text);
  if (rows.empty())
    return {};
  const auto &header = rows[0];
  if (header.size() != kColumns.size() || !std::equal(header.begin(), header.end(), kColumns.begin()))
    throw Error(ErrorKind::Syntax, "record CSV header does not match the expected columns");
  std::vector<RunRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto &f = rows[i];
    if (f.size() == 1 && f[0].empty())
      continue;
    if (f.size() != kColumns.size())
      throw Error(ErrorKind::Syntax, "record CSV row " + std::to_string(i + 1) + " has " +
                                         std::to_string(f.size()) + " fields");
    RunRecord r;
    r.circuit = f[0];
    r.scheme = f[1];
    r.overhead = parse_number<unsigned>(f[2], kColumns[2]);
    r.backend = f[3];
    r.repetition = parse_number<unsigned>(f[4], kColumns[4]);
    r.seed = parse_number<std::uint64_t>(f[5], kColumns[5]);
    auto status = parse_run_status(f[6]);
    if (!status)
      throw Error(ErrorKind::Syntax, "bad status '" + f[6] + "'");
    r.status = *status;
    r.wall_time = parse_number<double>(f[7], kColumns[7]);
    r.peak_memory = parse_number<std::uint64_t>(f[8], kColumns[8]);
    r.iterations = parse_number<std::uint64_t>(f[9], kColumns[9]);
    r.mean_learned_len = parse_number<double>(f[10], kColumns[10]);
    if (f[11] != "true" && f[11] != "false")
      throw Error(ErrorKind::Syntax, "bad key_verified '" + f[11] + "'");
    r.key_verified = f[11] == "true";
    out.push_back(std::move(r));
  }
  return out;
}

std::string emit_csv(const SummaryTable &table) {
  std::vector<std::string> header = {"dimension", "key",         "overhead",    "subset",      "records",
                                     "timeouts",  "errors",      "time_sum",    "time_min",    "time_q1",
                                     "time_median", "time_q3",   "time_max",    "memory_median", "memory_max",
                                     "iterations_median", "time_censored"};
  std::string out = csv_row(header);
  for (const auto &g : table.groups) {
    std::vector<std::string> f = {g.dimension,
                                  g.key,
                                  std::to_string(g.overhead),
                                  g.solved_only ? "solved-only" : "all",
                                  std::to_string(g.records),
                                  std::to_string(g.timeouts),
                                  std::to_string(g.errors),
                                  format_double(g.time.sum),
                                  format_double(g.time.min),
                                  format_double(g.time.q1),
                                  format_double(g.time.median),
                                  format_double(g.time.q3),
                                  format_double(g.time.max),
                                  format_double(g.memory.median),
                                  format_double(g.memory.max),
                                  format_double(g.iterations.median),
                                  g.timeouts ? "yes" : "no"};
    out += csv_row(f);
  }
  return out;
}

} // namespace kf

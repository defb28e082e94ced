#include "keyforge/bench.hpp"
#include "keyforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace kf {

SampleStats sample_stats(std::vector<double> values) {
  SampleStats s;
  s.count = values.size();
  if (values.empty())
    return s;
  std::sort(values.begin(), values.end());
  for (double v : values)
    s.sum += v;
  auto quantile = [&](double p) {
    double h = static_cast<double>(values.size() - 1) * p;
    auto lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  return s;
}

SummaryTable aggregate(std::span<const RunRecord> records) {
  if (records.empty())
    throw Error(ErrorKind::EmptyInput, "no records to aggregate");
  using Key = std::tuple<std::string, std::string, unsigned, bool>;
  std::map<Key, std::vector<const RunRecord *>> groups;
  for (const auto &r : records) {
    for (bool solved_only : {false, true}) {
      if (solved_only && r.status != RunStatus::Solved)
        continue;
      groups[{"scheme", r.scheme, r.overhead, solved_only}].push_back(&r);
      groups[{"backend", r.backend, r.overhead, solved_only}].push_back(&r);
    }
  }
  SummaryTable table;
  for (const auto &[key, members] : groups) {
    GroupSummary g;
    std::tie(g.dimension, g.key, g.overhead, g.solved_only) = key;
    g.records = members.size();
    std::vector<double> time, memory, iterations;
    for (const RunRecord *r : members) {
      g.timeouts += r->status == RunStatus::Timeout;
      g.errors += r->status == RunStatus::Error;
      time.push_back(r->wall_time);
      memory.push_back(static_cast<double>(r->peak_memory));
      iterations.push_back(static_cast<double>(r->iterations));
    }
    g.time = sample_stats(std::move(time));
    g.memory = sample_stats(std::move(memory));
    g.iterations = sample_stats(std::move(iterations));
    table.groups.push_back(std::move(g));
  }
  return table;
}

} // namespace kf

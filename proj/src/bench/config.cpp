#include "keyforge/bench.hpp"
#include "keyforge/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace kf {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string &what) { throw Error(ErrorKind::InvalidArgument, "experiment config: " + what); }

BackendSpec parse_backend(const json &j, double timeout) {
  if (j.is_string()) {
    if (j.get<std::string>() == "embedded")
      return BackendSpec::embedded(timeout);
    return BackendSpec::external(j.get<std::string>(), timeout);
  }
  if (!j.is_object())
    bad("backend entries must be strings or objects");
  std::string name = j.value("name", "");
  std::string kind = j.value("kind", j.contains("command") ? "external" : "embedded");
  if (kind == "embedded") {
    auto spec = BackendSpec::embedded(timeout);
    if (!name.empty())
      spec.name = name;
    return spec;
  }
  if (kind != "external")
    bad("unknown backend kind '" + kind + "'");
  if (!j.contains("command"))
    bad("external backend needs a command");
  const json &cmd = j.at("command");
  if (cmd.is_string())
    return BackendSpec::external(cmd.get<std::string>(), timeout, name);
  if (!cmd.is_array() || cmd.empty())
    bad("backend command must be a string or a non-empty array");
  BackendSpec spec = BackendSpec::external(cmd.at(0).get<std::string>(), timeout, name);
  spec.command.clear();
  for (const auto &a : cmd)
    spec.command.push_back(a.get<std::string>());
  return spec;
}

} // namespace

ExperimentSpec parse_experiment(std::string_view json_text, const std::filesystem::path &base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error &e) {
    bad(e.what());
  }
  if (!j.is_object())
    bad("top level must be an object");
  static const std::vector<std::string> known = {"circuits", "schemes", "overheads", "backends", "repetitions",
                                                 "timeout",  "seed",    "jobs",      "journal",  "encoding"};
  for (const auto &[key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      bad("unknown key '" + key + "'");

  ExperimentSpec spec;
  auto resolve = [&](const std::string &p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  try {
    if (j.contains("circuits")) {
      const json &c = j.at("circuits");
      if (c.is_string())
        spec.circuits.push_back(resolve(c.get<std::string>()));
      else
        for (const auto &p : c)
          spec.circuits.push_back(resolve(p.get<std::string>()));
    }
    if (j.contains("schemes")) {
      spec.schemes.clear();
      for (const auto &s : j.at("schemes")) {
        auto scheme = parse_scheme(s.get<std::string>());
        if (!scheme)
          bad("unknown scheme '" + s.get<std::string>() + "'");
        spec.schemes.push_back(*scheme);
      }
    }
    if (j.contains("overheads"))
      spec.overheads = j.at("overheads").get<std::vector<unsigned>>();
    if (j.contains("repetitions"))
      spec.repetitions = j.at("repetitions").get<unsigned>();
    if (j.contains("timeout"))
      spec.timeout = j.at("timeout").get<double>();
    if (j.contains("seed"))
      spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("jobs"))
      spec.jobs = j.at("jobs").get<unsigned>();
    if (j.contains("journal"))
      spec.journal = resolve(j.at("journal").get<std::string>());
    if (j.contains("encoding")) {
      auto e = j.at("encoding").get<std::string>();
      if (e == "plain")
        spec.encoding = DivcEncoding::Plain;
      else if (e == "folded")
        spec.encoding = DivcEncoding::ConstantPropagated;
      else
        bad("encoding must be 'plain' or 'folded'");
    }
    if (j.contains("backends")) {
      spec.backends.clear();
      for (const auto &b : j.at("backends"))
        spec.backends.push_back(parse_backend(b, spec.timeout));
    }
  } catch (const json::exception &e) {
    bad(e.what());
  }
  for (auto &b : spec.backends)
    b.timeout = spec.timeout;
  if (spec.repetitions < 1)
    bad("repetitions must be at least 1");
  if (spec.overheads.empty())
    bad("overheads must not be empty");
  for (unsigned o : spec.overheads)
    if (o < 1 || o > 100)
      bad("overheads must lie in 1..100");
  if (spec.schemes.empty())
    bad("schemes must not be empty");
  if (!(spec.timeout > 0))
    bad("timeout must be positive");
  return spec;
}

ExperimentSpec read_experiment_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str(), path.parent_path());
}

std::vector<CorpusEntry> load_corpus(std::span<const std::filesystem::path> paths) {
  std::vector<std::filesystem::path> files;
  for (const auto &p : paths) {
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> found;
      for (const auto &entry : std::filesystem::directory_iterator(p))
        if (entry.is_regular_file() && entry.path().extension() == ".bench")
          found.push_back(entry.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (std::filesystem::exists(p)) {
      files.push_back(p);
    } else {
      throw Error(ErrorKind::Io, "corpus path " + p.string() + " does not exist");
    }
  }
  if (files.empty())
    throw Error(ErrorKind::CorpusEmpty, "no .bench files in the configured corpus");
  std::vector<CorpusEntry> corpus;
  for (const auto &f : files)
    corpus.push_back({f.stem().string(), read_bench_file(f)});
  return corpus;
}

std::uint64_t lock_seed(std::string_view circuit, Scheme scheme, unsigned overhead, std::uint64_t base_seed) {
  std::string id = std::string(circuit) + "/" + std::string(to_string(scheme)) + "/" + std::to_string(overhead);
  return mix64(stable_hash(id) ^ mix64(base_seed));
}

std::uint64_t cell_seed(std::string_view circuit, Scheme scheme, unsigned overhead, std::string_view backend,
                        unsigned repetition, std::uint64_t base_seed) {
  std::string id = std::string(circuit) + "/" + std::string(to_string(scheme)) + "/" + std::to_string(overhead) +
                   "/" + std::string(backend);
  return mix64(stable_hash(id) ^ mix64(base_seed + repetition + 1));
}

} // namespace kf

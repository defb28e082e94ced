#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kf {

enum class ErrorKind {
  Syntax,
  UnknownGateKind,
  UndrivenNet,
  MultipleDrivers,
  CombinationalLoop,
  ArityMismatch,
  MissingInput,
  InvalidArgument,
  TooFewLocations,
  ForeignVariable,
  MalformedOutput,
  SpawnFailure,
  Timeout,
  SessionClosed,
  SolverError,
  InvalidObfuscation,
  TooLarge,
  CorpusEmpty,
  NoBackend,
  EmptyInput,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI,
/// the benchmark driver) can map it to an exit code or a record status.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &message);

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

} // namespace kf

#include "keyforge/bits.hpp"
#include "keyforge/error.hpp"
#include "keyforge/exec.hpp"

#include <atomic>

namespace kf {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
  case ErrorKind::Syntax: return "Syntax";
  case ErrorKind::UnknownGateKind: return "UnknownGateKind";
  case ErrorKind::UndrivenNet: return "UndrivenNet";
  case ErrorKind::MultipleDrivers: return "MultipleDrivers";
  case ErrorKind::CombinationalLoop: return "CombinationalLoop";
  case ErrorKind::ArityMismatch: return "ArityMismatch";
  case ErrorKind::MissingInput: return "MissingInput";
  case ErrorKind::InvalidArgument: return "InvalidArgument";
  case ErrorKind::TooFewLocations: return "TooFewLocations";
  case ErrorKind::ForeignVariable: return "ForeignVariable";
  case ErrorKind::MalformedOutput: return "MalformedOutput";
  case ErrorKind::SpawnFailure: return "SpawnFailure";
  case ErrorKind::Timeout: return "Timeout";
  case ErrorKind::SessionClosed: return "SessionClosed";
  case ErrorKind::SolverError: return "SolverError";
  case ErrorKind::InvalidObfuscation: return "InvalidObfuscation";
  case ErrorKind::TooLarge: return "TooLarge";
  case ErrorKind::CorpusEmpty: return "CorpusEmpty";
  case ErrorKind::NoBackend: return "NoBackend";
  case ErrorKind::EmptyInput: return "EmptyInput";
  case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string &message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

std::string to_bit_string(const BitVector &bits) {
  std::string out;
  out.reserve(bits.size());
  for (bool b : bits)
    out.push_back(b ? '1' : '0');
  return out;
}

BitVector parse_bit_string(std::string_view text) {
  BitVector bits;
  bits.reserve(text.size());
  for (char c : text) {
    if (c == '0')
      bits.push_back(false);
    else if (c == '1')
      bits.push_back(true);
    else
      throw Error(ErrorKind::InvalidArgument, "bad bit string '" + std::string(text) + "'");
  }
  return bits;
}

BitVector bits_from_integer(std::uint64_t value, std::size_t width) {
  BitVector bits(width);
  for (std::size_t i = 0; i < width && i < 64; ++i)
    bits[i] = (value >> i) & 1U;
  return bits;
}

std::uint64_t bits_to_integer(const BitVector &bits) {
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < bits.size() && i < 64; ++i)
    if (bits[i])
      value |= std::uint64_t{1} << i;
  return value;
}

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {
std::atomic<Exec> g_default_exec{Exec::Parallel};
}

void set_default_exec(Exec exec) {
  g_default_exec.store(exec == Exec::Default ? Exec::Parallel : exec);
}

Exec resolve_exec(Exec exec) { return exec == Exec::Default ? g_default_exec.load() : exec; }

} // namespace kf

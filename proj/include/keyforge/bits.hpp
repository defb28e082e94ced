#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kf {

using BitVector = std::vector<bool>;

/// Bit 0 is printed first: "011" means b[0]=0, b[1]=1, b[2]=1.
std::string to_bit_string(const BitVector &bits);
BitVector parse_bit_string(std::string_view text);

/// Bit i of the result is bit i of `value`.
BitVector bits_from_integer(std::uint64_t value, std::size_t width);
std::uint64_t bits_to_integer(const BitVector &bits);

/// SplitMix64 finalizer; used wherever a seeded, order-independent stream is
/// needed (pattern generation, per-cell seeds).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a over a string; stable across platforms and runs.
std::uint64_t stable_hash(std::string_view text);

} // namespace kf

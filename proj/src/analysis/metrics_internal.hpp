#pragma once

#include "keyforge/analysis.hpp"

namespace kf::detail {

/// True if some output in `shared` is reachable from `from` without passing
/// through `avoid`. `mark`/`stamp` avoid clearing a visited array per query.
bool reaches_shared_avoiding(const Circuit &circuit, NetId from, NetId avoid, const std::vector<std::uint64_t> &shared,
                             std::vector<std::uint32_t> &mark, std::uint32_t stamp, std::vector<NetId> &stack);

void finish_graph(InterferenceGraph &graph);
void check_locations(const Circuit &circuit, std::span<const NetId> locations);

} // namespace kf::detail

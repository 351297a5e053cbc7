#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace relgraph {

using Rng = std::mt19937_64;

/// Derives an independent generator for a named purpose ("init", "shuffle",
/// "restarts", ...) from one run seed, so stages reproduce independently.
Rng make_stream(std::uint64_t seed, std::string_view stream);

/// 64-bit FNV-1a, used for stream names and artifact fingerprints.
std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace relgraph

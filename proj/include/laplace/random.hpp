#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "laplace/matrix.hpp"

namespace laplace {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Counter-style stream derivation: the same key tuple always yields the
/// same seed, independent of the order streams are requested in.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) noexcept;

/// FNV-1a, used to turn case names into stream keys.
std::uint64_t hash_name(std::string_view name) noexcept;

/// rows x cols matrix of independent standard normals, filled row by row.
RowMatrix standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols);

}  // namespace laplace

#pragma once

#include <cstdint>
#include <vector>

#include "nprisk/types.hpp"

namespace nprisk {

/// Euclidean distance matrix; exactly symmetric with zero diagonal.
Mat pairwise_distances(const std::vector<Location>& locs);

/// Regular grid over the spec's rectangle, boundary included, row-major with
/// x1 varying fastest. A side with a single node sits at the lower bound.
std::vector<Location> make_grid(const GridSpec& spec);

/// Partition of a design into observation and estimation locations.
struct DesignSplit {
    std::vector<Location> sample_locations;
    std::vector<Location> estimation_locations;
};

/// How the estimation locations are carved out of a design.
struct SplitRule {
    enum class Kind { DiagonalUpper, Explicit, Random };
    Kind kind = Kind::DiagonalUpper;
    int count = 0;                      // DiagonalUpper / Random; 0 => default_diagonal_count
    std::vector<Location> sites;        // Explicit
    std::uint64_t seed = 0;             // Random

    static SplitRule diagonal_upper(int k) { return {Kind::DiagonalUpper, k, {}, 0}; }
    static SplitRule explicit_sites(std::vector<Location> s) {
        return {Kind::Explicit, 0, std::move(s), 0};
    }
    static SplitRule random_sites(int k, std::uint64_t seed) {
        return {Kind::Random, k, {}, seed};
    }
};

/// Default estimation-site count for a grid: ceil(0.55 * min(nx, ny)).
int default_diagonal_count(const GridSpec& spec);

/// Splits a grid into sample and estimation locations. The diagonal-upper rule
/// takes the k main-diagonal sites nearest the top-right corner and needs the
/// grid's spec; the other rules ignore it. Throws ConfigError when the rule
/// cannot be satisfied.
DesignSplit split_design(const std::vector<Location>& grid, const GridSpec& spec,
                         const SplitRule& rule);

}  // namespace nprisk

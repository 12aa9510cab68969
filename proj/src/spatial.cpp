#include "nprisk/spatial.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <utility>

#include "nprisk/rng.hpp"

namespace nprisk {

void validate_sample(const SpatialSample& sample, int min_points) {
    const int n = sample.n();
    if (sample.values.size() != n)
        throw ParseError("sample has " + std::to_string(n) + " locations but " +
                         std::to_string(sample.values.size()) + " values");
    if (n < min_points)
        throw TooFewPoints("need at least " + std::to_string(min_points) + " points, got " +
                           std::to_string(n));
    std::map<std::pair<double, double>, int> seen;
    for (int i = 0; i < n; ++i) {
        const Location& p = sample.locations[i];
        if (!p.finite() || !std::isfinite(sample.values[i]))
            throw ParseError("non-finite entry at row " + std::to_string(i + 1));
        auto [it, inserted] = seen.emplace(std::make_pair(p.x1, p.x2), i);
        if (!inserted)
            throw DuplicateLocation("rows " + std::to_string(it->second + 1) + " and " +
                                    std::to_string(i + 1) + " share location (" +
                                    std::to_string(p.x1) + ", " + std::to_string(p.x2) + ")");
    }
}

Mat pairwise_distances(const std::vector<Location>& locs) {
    const int n = static_cast<int>(locs.size());
    if (n < 1) throw ConfigError("pairwise_distances: need at least one location");
    Mat d = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = distance(locs[i], locs[j]);
    return d;
}

std::vector<Location> make_grid(const GridSpec& spec) {
    if (spec.nx < 1 || spec.ny < 1) throw ConfigError("make_grid: nx and ny must be positive");
    std::vector<Location> grid;
    grid.reserve(static_cast<std::size_t>(spec.nx) * spec.ny);
    for (int iy = 0; iy < spec.ny; ++iy) {
        double x2 = spec.ny == 1 ? spec.x2_min
                                 : spec.x2_min + iy * (spec.x2_max - spec.x2_min) / (spec.ny - 1);
        for (int ix = 0; ix < spec.nx; ++ix) {
            double x1 = spec.nx == 1
                            ? spec.x1_min
                            : spec.x1_min + ix * (spec.x1_max - spec.x1_min) / (spec.nx - 1);
            grid.push_back({x1, x2});
        }
    }
    return grid;
}

int default_diagonal_count(const GridSpec& spec) {
    int side = std::min(spec.nx, spec.ny);
    return static_cast<int>(std::ceil(0.55 * side));
}

namespace {

DesignSplit split_by_indices(const std::vector<Location>& grid, std::vector<int> estimation) {
    std::sort(estimation.begin(), estimation.end());
    DesignSplit out;
    out.estimation_locations.reserve(estimation.size());
    std::size_t next = 0;
    for (int i = 0; i < static_cast<int>(grid.size()); ++i) {
        if (next < estimation.size() && estimation[next] == i) {
            out.estimation_locations.push_back(grid[i]);
            ++next;
        } else {
            out.sample_locations.push_back(grid[i]);
        }
    }
    return out;
}

}  // namespace

DesignSplit split_design(const std::vector<Location>& grid, const GridSpec& spec,
                         const SplitRule& rule) {
    if (grid.empty()) throw ConfigError("split_design: empty grid");
    switch (rule.kind) {
        case SplitRule::Kind::DiagonalUpper: {
            int k = rule.count > 0 ? rule.count : default_diagonal_count(spec);
            int m = std::min(spec.nx, spec.ny);
            if (static_cast<std::size_t>(spec.nx) * spec.ny != grid.size())
                throw ConfigError("split_design: grid does not match its spec");
            if (k > m)
                throw ConfigError("split_design: " + std::to_string(k) +
                                  " estimation sites requested but the diagonal has " +
                                  std::to_string(m));
            std::vector<int> idx;
            idx.reserve(k);
            for (int i = m - k; i < m; ++i) idx.push_back(i * spec.nx + i);
            return split_by_indices(grid, std::move(idx));
        }
        case SplitRule::Kind::Explicit: {
            std::vector<int> idx;
            for (const Location& site : rule.sites) {
                auto it = std::find(grid.begin(), grid.end(), site);
                if (it == grid.end())
                    throw ConfigError("split_design: explicit site (" + std::to_string(site.x1) +
                                      ", " + std::to_string(site.x2) + ") is not a grid point");
                idx.push_back(static_cast<int>(it - grid.begin()));
            }
            return split_by_indices(grid, std::move(idx));
        }
        case SplitRule::Kind::Random: {
            if (rule.count < 1 || rule.count >= static_cast<int>(grid.size()))
                throw ConfigError("split_design: random site count out of range");
            std::vector<int> all(grid.size());
            std::iota(all.begin(), all.end(), 0);
            std::vector<int> idx;
            std::mt19937_64 rng = substream(rule.seed, 0);
            std::sample(all.begin(), all.end(), std::back_inserter(idx), rule.count, rng);
            return split_by_indices(grid, std::move(idx));
        }
    }
    throw ConfigError("split_design: unknown rule");
}

}  // namespace nprisk

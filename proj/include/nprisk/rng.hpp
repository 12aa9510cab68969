#pragma once

#include <cstdint>
#include <random>

namespace nprisk {

// splitmix64; used only to derive seeds for decorrelated substreams.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Independent, scheduler-order-free substream: stream j of a master seed
/// always yields the same generator, no matter which thread asks for it.
inline std::mt19937_64 substream(std::uint64_t master_seed, std::uint64_t stream) {
    std::uint64_t s = mix64(master_seed ^ mix64(stream + 1));
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(master_seed)};
    return std::mt19937_64(seq);
}

}  // namespace nprisk

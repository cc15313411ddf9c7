#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace hgc {

// Independent stream seed for a job identified by `path` under a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint32_t> path) {
    std::vector<std::uint32_t> material{static_cast<std::uint32_t>(master),
                                        static_cast<std::uint32_t>(master >> 32)};
    material.insert(material.end(), path.begin(), path.end());
    std::seed_seq seq(material.begin(), material.end());
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace hgc

#pragma once

#include <cstdint>
#include <random>

namespace tpmr {

/// Independent, reproducible stream for (seed, index). Used wherever work is
/// split across tasks so the output never depends on the thread count.
inline std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x7470u};
  return std::mt19937_64(seq);
}

}  // namespace tpmr

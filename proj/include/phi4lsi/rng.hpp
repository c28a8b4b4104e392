#pragma once

#include <array>
#include <cstdint>

namespace phi4 {

std::uint64_t splitmix64(std::uint64_t x);

/** Philox4x32-10 block function (Salmon et al. 2011 constants) */
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

/** keyed counter stream: independent streams for distinct (key, stream, step) triples */
class CounterRng {
  public:
    CounterRng(std::uint64_t key, std::uint32_t stream, std::uint64_t step)
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
          base_{0, stream, static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32)} {}

    std::uint32_t next_u32() {
        if (idx_ == 4) refill();
        return block_[static_cast<std::size_t>(idx_++)];
    }
    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32(), hi = next_u32();
        return lo | (hi << 32);
    }
    /** uniform on (0,1] */
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }
    /** standard normal via Box-Muller, two draws per refill */
    double gaussian();

  private:
    void refill() {
        auto c = base_;
        c[0] = block_counter_++;
        block_ = philox4x32(c, key_);
        idx_ = 0;
    }
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> base_;
    std::uint32_t block_counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int idx_ = 4;
    double cached_gaussian_ = 0.0;
    bool has_cached_ = false;
};

/** per-chain key derived from the master seed */
inline std::uint64_t chain_key(std::uint64_t seed, std::uint32_t chain) {
    return splitmix64(splitmix64(seed) ^ (0x9e3779b97f4a7c15ULL * (chain + 1)));
}

}  // namespace phi4

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace tdbs {

/// Philox4x32-10 counter-based generator.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }
};

/// UniformRandomBitGenerator over one Philox substream: the key carries the
/// seed, the upper counter words the stream id, the lower words a block index.
class PhiloxStream {
public:
    using result_type = std::uint32_t;

    PhiloxStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (used_ == 4) {
            buffer_ = Philox4x32::block({static_cast<std::uint32_t>(block_),
                                         static_cast<std::uint32_t>(block_ >> 32),
                                         static_cast<std::uint32_t>(stream_),
                                         static_cast<std::uint32_t>(stream_ >> 32)},
                                        key_);
            ++block_;
            used_ = 0;
        }
        return buffer_[used_++];
    }

private:
    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Philox4x32::Counter buffer_{};
    int used_ = 4;
};

}  // namespace tdbs

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace simstudy {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// splitmix64 finalizer; the published mixer used to turn integers into keys.
std::uint64_t splitmix64(std::uint64_t x);

/// Complete, serializable position of a generator stream.
///
/// The 128-bit counter is split into a 64-bit substream id (high words) and a
/// 64-bit block position (low words); `slot` selects which of the two 64-bit
/// halves of the current block is consumed next.
struct StreamState {
    std::array<std::uint32_t, 2> key{};
    std::array<std::uint32_t, 4> counter{};
    std::uint8_t slot = 0;

    std::uint64_t substream() const;
    std::uint64_t position() const;

    /// Fixed-width (50 character) lowercase hex encoding.
    std::string to_hex() const;
    static StreamState from_hex(std::string_view hex);

    friend bool operator==(const StreamState&, const StreamState&) = default;
};

/// Private generator of one sub-job. Satisfies UniformRandomBitGenerator.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(StreamState s);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform in the open interval (0,1) on a 2^-52 lattice offset by 2^-53.
    double uniform();

    const StreamState& state() const { return state_; }

private:
    void refill();

    StreamState state_;
    std::array<std::uint32_t, 4> block_{};
};

}  // namespace simstudy

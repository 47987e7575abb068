#include "simstudy/rng.hpp"

#include <cstdio>

#include "simstudy/error.hpp"

namespace simstudy {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k)
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, c[0], hi0, lo0);
        mulhilo(kMul1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t StreamState::substream() const
{
    return (static_cast<std::uint64_t>(counter[3]) << 32) | counter[2];
}

std::uint64_t StreamState::position() const
{
    return (static_cast<std::uint64_t>(counter[1]) << 32) | counter[0];
}

std::string StreamState::to_hex() const
{
    char buf[51];
    std::snprintf(buf, sizeof buf, "%08x%08x%08x%08x%08x%08x%02x", key[0], key[1], counter[0],
                  counter[1], counter[2], counter[3], static_cast<unsigned>(slot));
    return std::string(buf, 50);
}

StreamState StreamState::from_hex(std::string_view hex)
{
    if (hex.size() != 50) throw FormatError("stream state must be 50 hex digits, got " + std::to_string(hex.size()));
    auto word = [&](std::size_t pos, std::size_t len) {
        std::uint32_t v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            char ch = hex[i];
            std::uint32_t d;
            if (ch >= '0' && ch <= '9') d = ch - '0';
            else if (ch >= 'a' && ch <= 'f') d = ch - 'a' + 10;
            else throw FormatError("invalid hex digit in stream state");
            v = (v << 4) | d;
        }
        return v;
    };
    StreamState s;
    s.key = {word(0, 8), word(8, 8)};
    s.counter = {word(16, 8), word(24, 8), word(32, 8), word(40, 8)};
    std::uint32_t slot = word(48, 2);
    if (slot > 1) throw FormatError("stream state slot out of range");
    s.slot = static_cast<std::uint8_t>(slot);
    return s;
}

Rng::Rng(StreamState s) : state_(s) { refill(); }

void Rng::refill() { block_ = philox4x32(state_.counter, state_.key); }

Rng::result_type Rng::operator()()
{
    const std::size_t i = state_.slot * 2;
    const result_type out = (static_cast<result_type>(block_[i + 1]) << 32) | block_[i];
    if (state_.slot == 0) {
        state_.slot = 1;
    } else {
        state_.slot = 0;
        // advance the 64-bit block position; wraps within the substream
        if (++state_.counter[0] == 0) ++state_.counter[1];
        refill();
    }
    return out;
}

double Rng::uniform()
{
    constexpr double kStep = 0x1.0p-52;
    constexpr double kHalfStep = 0x1.0p-53;
    return static_cast<double>((*this)() >> 12) * kStep + kHalfStep;
}

}  // namespace simstudy

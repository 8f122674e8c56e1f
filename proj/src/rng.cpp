#include "difpath/rng.hpp"

#include <cmath>

namespace difpath {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
}

inline std::array<std::uint32_t, 4> philox_block(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::uint32_t k0 = static_cast<std::uint32_t>(seed);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
    for (int round = 0; round < 10; ++round) {
        philox_round(ctr, k0, k1);
        k0 += kPhiloxW0;
        k1 += kPhiloxW1;
    }
    return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t join64(std::uint32_t hi, std::uint32_t lo) {
    return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

// 53-bit mantissa, shifted into (0, 1].
inline double to_unit(std::uint64_t x) {
    return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

RngStream RngStream::child(std::uint64_t index) const {
    std::uint64_t h = splitmix64(stream ^ (counter * 0xD6E8FEB86659FD93ull));
    h = splitmix64(h ^ ((index + 1) * 0xA24BAED4963EE407ull));
    return RngStream{seed, h, 0};
}

std::array<std::uint32_t, 4> RngStream::next_block() {
    return philox_block(seed, stream, counter++);
}

std::uint64_t RngStream::next_u64() {
    const auto b = next_block();
    return join64(b[1], b[0]);
}

double RngStream::next_uniform() {
    return to_unit(next_u64());
}

double RngStream::next_gaussian() {
    const auto b = next_block();
    const double u1 = to_unit(join64(b[1], b[0]));
    const double u2 = to_unit(join64(b[3], b[2]));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::uint64_t RngStream::next_below(std::uint64_t bound) {
    require(bound > 0, errc::parameter, "next_below: zero bound");
    // rejection sampling keeps the distribution exactly uniform
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
    std::uint64_t x = next_u64();
    while (x > limit) {
        x = next_u64();
    }
    return x % bound;
}

void RngStream::fill_gaussian(double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; i += 2) {
        const auto b = next_block();
        const double u1 = to_unit(join64(b[1], b[0]));
        const double u2 = to_unit(join64(b[3], b[2]));
        const double r = std::sqrt(-2.0 * std::log(u1));
        out[i] = r * std::cos(kTwoPi * u2);
        if (i + 1 < n) {
            out[i + 1] = r * std::sin(kTwoPi * u2);
        }
    }
}

Tensor gaussian(RngStream& rng, const std::vector<std::size_t>& shape) {
    Tensor t(shape);
    rng.fill_gaussian(t.data.data(), t.size());
    return t;
}

}  // namespace difpath

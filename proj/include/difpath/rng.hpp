#pragma once

#include <array>
#include <cstdint>

#include "difpath/tensor.hpp"

namespace difpath {

// Counter-based random stream (Philox 4x32-10). Output is a pure function of
// (seed, stream, counter), so a stream can be split into independent children
// and replayed on any host. One counter tick yields one 128-bit block.
struct RngStream {
    std::uint64_t seed{0};
    std::uint64_t stream{0};
    std::uint64_t counter{0};

    static RngStream from_seed(std::uint64_t seed, std::uint64_t stream = 0) {
        return RngStream{seed, stream, 0};
    }

    // Independent child stream keyed by (stream, counter, index). Spawning a
    // family and then bumping the parent counter yields a fresh family on the
    // next call; children never share counter blocks with the parent.
    RngStream child(std::uint64_t index) const;

    std::array<std::uint32_t, 4> next_block();

    std::uint64_t next_u64();        // low half of one block
    double next_uniform();           // (0, 1], 53-bit
    double next_gaussian();          // one draw per block (Box-Muller, cos branch)
    std::uint64_t next_below(std::uint64_t bound);  // uniform in [0, bound)

    // Two gaussians per block; counter advances by ceil(n / 2).
    void fill_gaussian(double* out, std::size_t n);
};

Tensor gaussian(RngStream& rng, const std::vector<std::size_t>& shape);

}  // namespace difpath

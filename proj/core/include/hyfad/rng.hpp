#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace hyfad {

// Counter-free deterministic generator (xoshiro256++ core, splitmix64 seeding).
// A stream is fully determined by its seed path, independent of platform and
// of the C++ standard library's distribution implementations, so simulation
// output is reproducible byte for byte across toolchains.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on [0,1) with 53 random mantissa bits.
    double uniform();
    double uniform(double lo, double hi);

    // Unbiased integer on [0, n), n >= 1.
    std::uint64_t below(std::uint64_t n);

    // Standard normal via Box-Muller; second variate of each pair is cached.
    double normal();

    // Circularly symmetric complex normal, unit total variance:
    // real and imaginary parts are independent N(0, 1/2).
    std::complex<double> complex_normal();

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// Hash-combines a seed with a tag path. Distinct paths give statistically
// independent streams; the same path always gives the same stream.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

RngStream make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

// Purpose tags for the simulator's named streams. Fixed values: changing them
// changes every derived stream, which silently breaks recorded baselines.
namespace stream_tag {
inline constexpr std::uint64_t deployment  = 0x01;
inline constexpr std::uint64_t channels    = 0x02;
inline constexpr std::uint64_t signatures  = 0x03;
inline constexpr std::uint64_t activity    = 0x04;
inline constexpr std::uint64_t noise       = 0x05;
inline constexpr std::uint64_t permutation = 0x06;
inline constexpr std::uint64_t bootstrap   = 0x07;
}  // namespace stream_tag

}  // namespace hyfad

#ifndef CFSURV_RNG_HPP
#define CFSURV_RNG_HPP

#include <cstdint>

namespace cfsurv {

// Counter-based pseudo-random generator (SplitMix64 finalizer over a
// key/counter pair). Same (seed, draw index) gives the same value on
// every platform, which is what the splitting and simulation contracts
// require. Not cryptographic.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(seed) {}

    std::uint64_t next_u64();

    /// Uniform draw in [0, 1) with 53-bit resolution.
    double next_uniform();

    /// Uniform draw in (0, 1]; safe to pass through log().
    double next_uniform_pos();

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t next_below(std::uint64_t n);

    /// Standard normal via Box-Muller; consumes two uniforms per call.
    double next_normal();

    /// Exponential with the given rate (> 0).
    double next_exponential(double rate);

    /// Derives an independent stream key from a master seed, so parallel
    /// replications can each own a reproducible substream.
    static std::uint64_t derive(std::uint64_t master, std::uint64_t stream);

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace cfsurv

#endif

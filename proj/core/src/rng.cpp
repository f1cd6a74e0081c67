#include "cfsurv/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cfsurv {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t Rng::next_u64() {
    ++counter_;
    return mix(key_ + kGolden * counter_);
}

double Rng::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::next_below: n must be positive");
    // Multiply-shift map of a full 64-bit draw onto [0, n). The modulo bias
    // is below 2^-64 and irrelevant here; what matters is determinism.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double Rng::next_normal() {
    const double u1 = next_uniform_pos();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::next_exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("Rng::next_exponential: rate must be positive");
    return -std::log(next_uniform_pos()) / rate;
}

std::uint64_t Rng::derive(std::uint64_t master, std::uint64_t stream) {
    return mix(master + kGolden * (stream + 1)) ^ mix(stream + 0x6a09e667f3bcc909ULL);
}

} // namespace cfsurv

#pragma once

#include <cmath>
#include <cstdint>

#include "beamsim/types.hpp"

namespace beamsim {

/// SplitMix64 output finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
 * Keyed counter-based random stream.
 *
 * Every draw is a pure function of (key, counter), so a stream can be read in
 * any order and split into independent children with derive(). Runs of a
 * Monte-Carlo experiment each own a child stream keyed by their run index,
 * which makes results independent of execution order and worker count.
 *
 * The uniform/Gaussian transforms are written out here instead of using
 * <random> distributions, whose output is implementation-defined.
 */
class CounterStream {
public:
    explicit constexpr CounterStream(std::uint64_t key) noexcept : key_(mix64(key ^ 0x6a09e667f3bcc909ULL)) {}

    [[nodiscard]] constexpr CounterStream derive(std::uint64_t tag) const noexcept {
        return CounterStream(mix64(key_ + mix64(tag + 0x9e3779b97f4a7c15ULL)), Raw{});
    }

    [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        return mix64(key_ + (counter + 1) * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform on (0, 1], 53-bit resolution.
    [[nodiscard]] double uniform(std::uint64_t counter) const noexcept {
        return static_cast<double>((bits(counter) >> 11) + 1) * 0x1.0p-53;
    }

    /// +1 or -1 with equal probability.
    [[nodiscard]] double sign(std::uint64_t counter) const noexcept {
        return (bits(counter) >> 63) != 0 ? 1.0 : -1.0;
    }

    /// Circular complex Gaussian with E|z|^2 = 1 (real and imaginary parts each
    /// N(0, 1/2)). Consumes counters 2n and 2n+1.
    [[nodiscard]] cplx complex_normal(std::uint64_t n) const noexcept {
        const double radius = std::sqrt(-std::log(uniform(2 * n)));
        const double phase = 2.0 * kPi * uniform(2 * n + 1);
        return {radius * std::cos(phase), radius * std::sin(phase)};
    }

    [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

private:
    struct Raw {};
    constexpr CounterStream(std::uint64_t key, Raw) noexcept : key_(key) {}

    std::uint64_t key_;
};

}  // namespace beamsim

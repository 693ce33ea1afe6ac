#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace lds {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Folds a list of 64-bit words into one key. Order matters.
inline constexpr std::uint64_t mix_key(std::initializer_list<std::uint64_t> words) noexcept {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto w : words) h = splitmix64(h ^ splitmix64(w));
    return h;
}

/// Stream tags for the counter-based noise scheme.
enum class Stream : std::uint64_t { init = 1, process = 2, observation = 3, similarity = 4, grid = 5 };

/// Counter-based standard normal generator. Every draw is a pure function of
/// (key, counter), so two generators built from the same key produce the same
/// sequence regardless of which thread runs them or in which order.
class CounterNormal {
public:
    explicit CounterNormal(std::uint64_t key) noexcept : key_(key) {}

    double operator()() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // Box-Muller on two 53-bit uniforms in (0, 1].
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    double uniform() noexcept {
        const std::uint64_t bits = splitmix64(key_ ^ splitmix64(++counter_));
        return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace lds

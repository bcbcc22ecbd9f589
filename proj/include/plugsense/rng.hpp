#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace plugsense {

// Seeds are derived by hashing, never by sequencing a shared generator, so
// parallel work produces the same streams as serial work.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) noexcept {
    return splitmix64(base ^ splitmix64(salt + 0x632BE59BD9B4E019ULL));
}

inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                           std::uint64_t index) noexcept {
    return derive_seed(derive_seed(base, fnv1a(tag)), index);
}

/// 64-bit Mersenne twister with portable real-valued draws.
///
/// std::uniform_real_distribution is implementation defined, which would make
/// dataset files differ between standard libraries; these helpers do not.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection keeps the draw unbiased.
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    std::mt19937_64 engine_;
};

/// Fisher-Yates shuffle driven by Rng::below (std::shuffle is not portable).
template <typename It>
void shuffle(It first, It last, Rng& rng) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        const auto j = rng.below(i);
        std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1),
                       first + static_cast<std::ptrdiff_t>(j));
    }
}

}  // namespace plugsense

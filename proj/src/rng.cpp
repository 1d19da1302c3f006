#include "cal/rng.hpp"

#include <cmath>
#include <numbers>

namespace cal {

std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t round,
                          std::string_view purpose) {
    // FNV-1a over the purpose tag, then splitmix-fold with seed and round.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : purpose) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    std::uint64_t s = run_seed;
    std::uint64_t out = splitmix64(s);
    s = out ^ round;
    out = splitmix64(s);
    s = out ^ h;
    return splitmix64(s);
}

std::size_t Rng::uniform_below(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 kept strictly positive so log stays finite.
    double u1;
    do {
        u1 = next_double();
    } while (u1 <= 0.0);
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) k = n;
    // Partial Fisher-Yates on an index vector.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + uniform_below(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

} // namespace cal

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace cal {

// All randomness flows through this generator so that a run is a pure
// function of its seed, independent of platform or standard library.
// Streams are derived as hash(run_seed, round, purpose): adding a new
// consumer never perturbs another component's draws.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::uint64_t round,
                          std::string_view purpose);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    std::size_t uniform_below(std::size_t n);

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller; the spare is cached.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct draws from {0,...,n-1}, in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace cal

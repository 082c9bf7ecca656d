#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace osp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seeded stream; children are derived from (parent seed, label, index) so the
// result never depends on how many draws the parent has made.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) : seed_(seed), eng_(splitmix64(seed)) {}

    static Rng derive(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
        return Rng(splitmix64(splitmix64(seed ^ fnv1a(label)) + index));
    }

    Rng child(std::string_view label, std::uint64_t index = 0) const { return derive(seed_, label, index); }

    std::uint64_t seed() const { return seed_; }

    result_type operator()() { return eng_(); }
    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }

    int bit() { return static_cast<int>(eng_() >> 63); }

    // uniform in [0, n)
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        std::uint64_t limit = max() - max() % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
};

} // namespace osp

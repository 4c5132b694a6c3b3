#pragma once

// Deterministic random source with explicit, platform-independent draw
// algorithms. Every consumer derives its own labeled stream so that results
// never depend on call order across components or on worker count.

#include <cstdint>
#include <string_view>
#include <vector>

#include "tkgaug/core.hpp"

namespace tkgaug {

// splitmix64 stream; passes BigCrush and is trivially seedable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Unbiased draw in [0, n) by rejection on the top of the range.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return double(next_u64() >> 11) * (1.0 / 9007199254740992.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
};

// Derives a child seed from a root seed, a stage label, and up to two indices.
// Labeled derivation keeps independent components on independent streams.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = mix64(root);
    for (char c : stage) h = hash_combine(h, static_cast<unsigned char>(c));
    h = hash_combine(h, a);
    h = hash_combine(h, b);
    return h;
}

}  // namespace tkgaug

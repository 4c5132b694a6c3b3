#pragma once

// Shared value types and small utilities: the quadruple fact record, hashing,
// deterministic floating-point text formatting, and a chunked parallel_for.

#include <algorithm>
#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tkgaug {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using TimeId = std::uint32_t;

// One temporal fact (s, r, o, t). All ids are dense non-negative integers.
struct Quadruple {
    EntityId s = 0;
    RelationId r = 0;
    EntityId o = 0;
    TimeId t = 0;

    friend auto operator<=>(const Quadruple&, const Quadruple&) = default;
};

// splitmix64 finalizer; good avalanche for composing hash keys.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ (v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
}

inline std::uint64_t quad_hash(const Quadruple& q) {
    std::uint64_t h = mix64((std::uint64_t(q.s) << 32) | q.r);
    return hash_combine(h, (std::uint64_t(q.o) << 32) | q.t);
}

struct QuadrupleHash {
    std::size_t operator()(const Quadruple& q) const noexcept {
        return static_cast<std::size_t>(quad_hash(q));
    }
};

// Packed 64-bit key for an ordered (a, b) id pair.
inline std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
    return (std::uint64_t(a) << 32) | b;
}

// Packed key for an unordered pair (order-normalized).
inline std::uint64_t unordered_pair_key(std::uint32_t a, std::uint32_t b) {
    return a <= b ? pair_key(a, b) : pair_key(b, a);
}

struct U64Hash {
    std::size_t operator()(std::uint64_t v) const noexcept {
        return static_cast<std::size_t>(mix64(v));
    }
};

struct IdTripleHash {
    std::size_t operator()(const std::array<std::uint32_t, 3>& k) const noexcept {
        return static_cast<std::size_t>(
            hash_combine(mix64((std::uint64_t(k[0]) << 32) | k[1]), k[2]));
    }
};

// Parse error carrying the 1-based line number of the offending input line.
struct ParseError : std::runtime_error {
    ParseError(const std::string& file, std::size_t line_number, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line_number) + ": " + what),
          line(line_number) {}
    std::size_t line;
};

// Shortest round-trip decimal text for a double; identical across runs and
// platforms with IEEE doubles, which keeps written artifacts byte-stable.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Runs fn(i) for i in [0, n) split into contiguous chunks, one worker per
// chunk. Callers that need deterministic output write into preallocated
// per-index slots; the chunking itself never reorders work within a slot.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    threads = resolve_threads(threads);
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t begin = std::size_t(w) * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace tkgaug

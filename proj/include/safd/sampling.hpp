#pragma once

// Deterministic seeded randomness. Samples are produced in fixed-size chunks
// whose generators are seeded from (seed, chunk index), and chunk results are
// merged by index, so output is byte-identical for any thread count.

#include <atomic>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace safd {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(0x9E3779B97F4A7C15ull * (stream + 0x243F6A8885A308D3ull)));
}

class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    double uniform01() { return (eng_() >> 11) * 0x1.0p-53; }

    // Index into a probability vector via its cumulative sums.
    size_t categorical(const std::vector<double>& cdf) {
        double u = uniform01();
        size_t lo = 0, hi = cdf.size();
        while (lo + 1 < hi) {
            size_t mid = (lo + hi) / 2;
            if (u < cdf[mid - 1])
                hi = mid;
            else
                lo = mid;
        }
        return lo;
    }

    uint64_t next_u64() { return eng_(); }

    // Fisher-Yates; deterministic given the stream position.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_u64() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
};

inline std::vector<double> cumulative(const std::vector<double>& p) {
    std::vector<double> cdf(p.size());
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        cdf[i] = acc;
    }
    if (!cdf.empty()) cdf.back() = 1.0 + 1e-12; // guard against roundoff at the top
    return cdf;
}

// Runs fn(chunk_index) for chunk_index in [0, n_chunks) on up to `threads`
// workers. Callers store per-chunk output into pre-sized slots and merge in
// index order afterwards; scheduling order never leaks into results.
template <class F>
inline void parallel_chunks(size_t n_chunks, int threads, F fn) {
    if (threads <= 1 || n_chunks <= 1) {
        for (size_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            size_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            fn(c);
        }
    };
    size_t n_workers = std::min<size_t>(threads, n_chunks);
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

} // namespace safd

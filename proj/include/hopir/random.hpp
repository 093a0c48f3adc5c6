#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace hopir {

/// Seeded generator with distribution helpers that do not depend on the
/// standard library's distribution implementations, so sequences are
/// reproducible across toolchains.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); n must be > 0.
    std::uint64_t below(std::uint64_t n)
    {
        // Rejection sampling removes modulo bias.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) {
            x = engine_();
        }
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    /// `k` distinct indices from [0, n), in selection order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k)
    {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) {
            idx[i] = i;
        }
        if (k > n) {
            k = n;
        }
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + below(n - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace hopir

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "abac/errors.hpp"

namespace abac {

/// mt19937_64 seeded with the raw 64-bit seed. Integer and real draws are
/// derived here rather than through std distributions, whose algorithms are
/// implementation-defined, so streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, n) by rejection; n > 0.
    std::uint64_t uniform(std::uint64_t n) {
        if (n == 0) throw ContractViolation("Rng::uniform(0)");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        for (;;) {
            const std::uint64_t x = engine_();
            if (x < limit) return x % n;
        }
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return unit() < p; }

    /// Index drawn proportionally to non-negative weights.
    std::size_t weighted(const std::vector<double>& weights) {
        double total = 0;
        for (double w : weights) total += w;
        if (!(total > 0)) throw ContractViolation("Rng::weighted: weights sum to zero");
        double x = unit() * total;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (x < weights[i]) return i;
            x -= weights[i];
        }
        for (std::size_t i = weights.size(); i-- > 0;)
            if (weights[i] > 0) return i;
        return 0;
    }

    template <typename T>
    const T& pick(const std::vector<T>& items) {
        return items[static_cast<std::size_t>(uniform(items.size()))];
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace abac

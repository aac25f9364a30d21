#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "eden/core/tensor.hpp"

namespace eden {

// Seed derivation: every subsystem gets its own stream from the root seed.
//   derive_seed(root, tag, a, b) = splitmix64 chain over (root ^ fnv1a(tag), a, b)
// so data, init, sampling and per-step training draws are independently
// reproducible.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t a = 0,
                                    std::uint64_t b = 0) {
    std::uint64_t s = splitmix64(root ^ fnv1a(tag));
    s = splitmix64(s ^ a);
    return splitmix64(s ^ (b * 0xD6E8FEB86659FD93ull));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
    double normal() { return normal_(engine_); }

    template <typename T>
    Tensor<T> normal_tensor(std::size_t rows, std::size_t cols, double stddev = 1.0) {
        Tensor<T> out(rows, cols);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(normal() * stddev);
        return out;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace eden

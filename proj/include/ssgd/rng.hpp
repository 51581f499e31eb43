#pragma once

// Seeded generator streams. Uniform and normal variates are synthesized from
// raw mt19937_64 output so that draws are bit-identical across platforms;
// derive() splits independent streams (one per worker/trial) from one seed.

#include <cstdint>
#include <random>
#include <span>

#include "ssgd/errors.hpp"

namespace ssgd {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        return Rng(splitmix64(seed ^ splitmix64(stream + 1)));
    }

    std::uint64_t next_u64() { return engine_(); }

    // uniform on (0, 1]
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    // standard normal via Box-Muller (two uniforms per draw, no cached spare)
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // index i with probability weights[i] / sum(weights)
    std::size_t categorical(std::span<const double> weights) {
        if (weights.empty()) throw validation_error("categorical: empty weight vector");
        double total = 0.0;
        for (double w : weights) total += w;
        const double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u <= acc) return i;
        }
        return weights.size() - 1;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace ssgd

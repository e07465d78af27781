#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mvclust {

// SplitMix64 mixing step; used to expand one master seed into independent
// per-view / per-stage / per-restart streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed splitting scheme: child = mix(mix(...mix(master, tag0)..., tagN)).
// Every consumer of randomness derives its stream from the master seed and a
// fixed tag path, so streams stay independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t tag : path) s = splitmix64(s ^ tag);
    return s;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0, 1)
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }

    double normal() { return norm_(gen_); }

    // uniform integer in [0, n)
    std::uint64_t index(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(gen_);
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> norm_{0.0, 1.0};
};

} // namespace mvclust

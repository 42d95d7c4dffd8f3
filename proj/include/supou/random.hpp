#pragma once

#include <cstdint>
#include <random>

namespace supou {

/// One step of the SplitMix64 sequence; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic, well-mixed combination of a parent seed and a child index.
/// Used to derive per-path and per-stream generator seeds from a master seed.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

/// Portable random source: mt19937_64 plus hand-written samplers, so draws are
/// bit-identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform();
    double exponential(double mean);
    double normal();
    /// Gamma(shape, rate): mean shape/rate, variance shape/rate^2.
    double gamma(double shape, double rate);

private:
    std::mt19937_64 engine_;
};

}  // namespace supou

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "supou/common.hpp"
#include "supou/levy.hpp"
#include "supou/moments.hpp"

namespace supou {

struct SimConfig {
    int n = 1000;            // number of observations
    double delta = 1.0;      // grid spacing; samples at t = delta, 2 delta, ..., n delta
    std::size_t pre_history_jumps = 2000;  // negative-time arrivals kept per stream
    std::uint64_t master_seed = 0;
    std::uint64_t path_index = 0;

    void validate() const;
};

struct SupOUPath {
    std::vector<double> times;
    Matrix values;  // n x d, row i is X at times[i]
    SimConfig config;
    std::uint64_t seed = 0;  // derived per-path seed
    std::string params_digest;

    int dimension() const { return static_cast<int>(values.cols()); }
    int size() const { return static_cast<int>(values.rows()); }
};

/// Jumps of one compound Poisson stream together with where they land:
/// coordinate < 0 means the jump vector spans all coordinates (common stream),
/// otherwise the scalar jump is embedded at that coordinate.
struct PlacedStream {
    JumpStream stream;
    int coordinate = -1;
    std::vector<int> atom_indices;  // discrete mixing only: atom drawn per arrival
};

/// Seed of path `path_index` under `master_seed`.
std::uint64_t path_seed(std::uint64_t master_seed, std::uint64_t path_index);

/// Draws every stream (common first, then idiosyncratic 1..d; positive-time part
/// over [0, n delta] and the truncated negative-time part), including the
/// per-arrival reversion draws.
std::vector<PlacedStream> draw_streams(const SupOUParams& params, const SimConfig& cfg);

/// Deterministic path evaluation: X_t = sum over arrivals tau <= t of
/// exp(Q_i (t - tau)) U_i on the grid t = delta, ..., n delta.
Matrix superpose(const MixingSpec& mixing, const std::vector<PlacedStream>& streams, int n,
                 double delta);

SupOUPath simulate_univariate(const SupOUParams& params, const SimConfig& cfg);
SupOUPath simulate_graph(const SupOUParams& params, const SimConfig& cfg);
/// Dispatches on dimension.
SupOUPath simulate(const SupOUParams& params, const SimConfig& cfg);

/// Paths 0..count-1 of cfg.master_seed; bit-identical for every `jobs` value.
std::vector<SupOUPath> simulate_many(const SupOUParams& params, const SimConfig& cfg,
                                     std::size_t count, unsigned jobs);

struct AcfTable {
    Matrix acf;                  // (max_lag + 1) x d
    std::vector<bool> constant;  // per component: ACF undefined beyond lag 0
};

/// Biased sample autocorrelation (1/N normalization) per component. When
/// `known_mean` is given it replaces the sample mean as the centering constant.
AcfTable sample_acf(const SupOUPath& path, int max_lag,
                    const std::optional<Vector>& known_mean = std::nullopt);

}  // namespace supou

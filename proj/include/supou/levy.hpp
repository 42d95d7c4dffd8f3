#pragma once

#include <optional>
#include <vector>

#include "supou/common.hpp"
#include "supou/random.hpp"

namespace supou {

/// Compound Poisson law with exponential inter-arrival times and Gamma(shape, rate)
/// positive jumps.
struct CompoundPoissonSpec {
    double inter_arrival_mean = 0.1;
    double jump_shape = 3.0;
    double jump_rate = 20.0;

    void validate() const;
    /// Expected number of arrivals per unit time.
    double intensity() const { return 1.0 / inter_arrival_mean; }
    double jump_mean() const { return jump_shape / jump_rate; }
    double jump_variance() const { return jump_shape / (jump_rate * jump_rate); }
    double jump_second_moment() const { return jump_variance() + jump_mean() * jump_mean(); }
};

/// Lévy basis driving a d-dimensional process: one optional common stream whose
/// arrivals hit every coordinate simultaneously (independent same-law jump sizes
/// per coordinate) plus one idiosyncratic stream per coordinate.
struct LevyBasisSpec {
    int d = 1;
    std::optional<CompoundPoissonSpec> common;
    std::vector<CompoundPoissonSpec> idiosyncratic;
    Vector drift;     // gamma; zero when empty
    Matrix gaussian;  // Sigma; zero when empty, enters moment formulas only

    void validate() const;
    bool has_drift() const { return drift.size() > 0 && drift.cwiseAbs().maxCoeff() > 0.0; }
    bool has_gaussian() const { return gaussian.size() > 0 && gaussian.cwiseAbs().maxCoeff() > 0.0; }

    /// All processes share `law`; common stream present iff `with_common`.
    static LevyBasisSpec uniform(int d, const CompoundPoissonSpec& law, bool with_common);
};

struct JumpStream {
    std::vector<double> arrival_times;  // strictly increasing
    Matrix jump_vectors;                // one row per arrival, nonnegative entries
    std::vector<double> reversion_draws;  // filled by the simulator

    std::size_t size() const { return arrival_times.size(); }
};

/// Arrivals tau_i = t0 + T_1 + ... + T_i inside [t0, t1] with i.i.d. exponential
/// T_i; each arrival carries `width` i.i.d. Gamma jump sizes. Arrival times and
/// jump sizes come from separate generators so a longer stream extends a shorter
/// one without changing it.
JumpStream sample_stream(const CompoundPoissonSpec& spec, double t0, double t1,
                         Rng& arrivals, Rng& jumps, int width = 1);

/// Exactly `count` arrivals before `origin`: tau_{-i} = origin - (T_{-1} + ... + T_{-i}),
/// returned in increasing time order.
JumpStream sample_prehistory(const CompoundPoissonSpec& spec, double origin, std::size_t count,
                             Rng& arrivals, Rng& jumps, int width = 1);

struct LevyMoments {
    Vector mean;        // mu_L = E(L_1)
    Matrix covariance;  // sigma_L^2 = var(L_1)
};

LevyMoments levy_moments(const LevyBasisSpec& spec);

/// Log-moment and finite-second-moment conditions on the jump measure. Gamma jump
/// laws have moments of all orders, so every valid spec passes.
bool log_moment_check(const LevyBasisSpec& spec);

}  // namespace supou

#include "supou/simulate.hpp"

#include <cmath>
#include <limits>

#include "supou/matfun.hpp"
#include "supou/parallel.hpp"

namespace supou {

void SimConfig::validate() const {
    if (n < 1) throw ConfigError("number of observations must be at least 1");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("grid spacing must be positive");
}

std::uint64_t path_seed(std::uint64_t master_seed, std::uint64_t path_index) {
    return derive_seed(master_seed, path_index);
}

namespace {

enum Role : std::uint64_t { kArrivals = 0, kJumps = 1, kReversion = 2 };

std::uint64_t stream_seed(std::uint64_t path, std::uint64_t stream, bool backward, Role role) {
    return derive_seed(path, (stream * 2 + (backward ? 1 : 0)) * 4 + role);
}

void draw_reversion(const MixingSpec& mixing, PlacedStream& placed, Rng& rng) {
    const std::size_t count = placed.stream.size();
    auto& draws = placed.stream.reversion_draws;
    draws.resize(count);
    if (mixing.kind == MixingSpec::Kind::gamma) {
        for (auto& theta : draws) theta = rng.gamma(mixing.alpha, mixing.beta);
        return;
    }
    placed.atom_indices.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        draws[i] = 1.0;
        const double u = rng.uniform();
        double cumulative = 0.0;
        int atom = static_cast<int>(mixing.atoms.size()) - 1;
        for (std::size_t a = 0; a < mixing.atoms.size(); ++a) {
            cumulative += mixing.atoms[a].probability;
            if (u < cumulative) {
                atom = static_cast<int>(a);
                break;
            }
        }
        placed.atom_indices[i] = atom;
    }
}

// Appends `tail` (earlier in time) in front of `head`.
JumpStream concat(const JumpStream& tail, const JumpStream& head) {
    JumpStream out;
    out.arrival_times = tail.arrival_times;
    out.arrival_times.insert(out.arrival_times.end(), head.arrival_times.begin(), head.arrival_times.end());
    out.jump_vectors.resize(tail.jump_vectors.rows() + head.jump_vectors.rows(),
                            std::max(tail.jump_vectors.cols(), head.jump_vectors.cols()));
    out.jump_vectors << tail.jump_vectors, head.jump_vectors;
    return out;
}

// First grid index k >= 1 (time k delta) with k delta >= tau.
int first_grid_index(double tau, double delta) {
    if (tau <= delta) return 1;
    const double q = std::ceil(tau / delta);
    if (q > static_cast<double>(std::numeric_limits<int>::max())) return std::numeric_limits<int>::max();
    int k = static_cast<int>(q);
    if (k * delta < tau) ++k;
    while (k > 1 && (k - 1) * delta >= tau) --k;
    return k;
}

// A kernel term is dropped once it falls below this fraction of its initial size,
// far under the rounding error of the accumulated path.
constexpr double kNegligible = 1e-20;

// Accumulates eigen-coordinate contributions z_t += exp(theta lambda (t - tau)) O^{-1} u
// for one atom whose eigendecomposition is well conditioned.
template <class Scalar>
struct ModeAccumulator {
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Vec lambda;
    Mat vectors;
    Mat inverse;
    std::vector<Scalar> z;  // row-major n x d
    int n;
    int d;

    void add(double tau, double theta, const Vector& u, double delta) {
        const int k0 = first_grid_index(tau, delta);
        if (k0 > n) return;
        Vec coef = inverse * u.cast<Scalar>();
        const double cutoff = kNegligible * coef.cwiseAbs().maxCoeff();
        Vec ratio(d);
        for (int j = 0; j < d; ++j) {
            coef(j) *= std::exp(theta * lambda(j) * (k0 * delta - tau));
            ratio(j) = std::exp(theta * lambda(j) * delta);
        }
        for (int k = k0; k <= n; ++k) {
            Scalar* row = &z[static_cast<std::size_t>(k - 1) * d];
            double largest = 0.0;
            for (int j = 0; j < d; ++j) {
                row[j] += coef(j);
                coef(j) *= ratio(j);
                largest = std::max(largest, std::abs(coef(j)));
            }
            if (largest < cutoff) break;
        }
    }

    void flush(Matrix& out) const {
        const Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> zm(
            z.data(), n, d);
        const Mat x = zm * vectors.transpose();
        if constexpr (std::is_same_v<Scalar, double>) {
            out += x;
        } else {
            out += checked_real(x);
        }
    }
};

// Fallback for defective atoms: propagate v <- exp(theta A delta) v with matrix exponentials.
struct ExpmAccumulator {
    Matrix a;
    Matrix x;
    int n;

    void add(double tau, double theta, const Vector& u, double delta) {
        const int k0 = first_grid_index(tau, delta);
        if (k0 > n) return;
        const Matrix step = expm(theta * delta * a);
        Vector v = expm(theta * (k0 * delta - tau) * a) * u;
        const double cutoff = kNegligible * u.cwiseAbs().maxCoeff();
        for (int k = k0; k <= n; ++k) {
            x.row(k - 1) += v.transpose();
            v = step * v;
            if (v.cwiseAbs().maxCoeff() < cutoff) break;
        }
    }
};

class AtomKernel {
public:
    AtomKernel(const Matrix& a, int n) {
        const int d = static_cast<int>(a.rows());
        const EigenDecomposition ed = eigen_decompose(a);
        if (!ed.diagonalizable()) {
            kind_ = Kind::expm;
            expm_ = ExpmAccumulator{a, Matrix::Zero(n, d), n};
        } else if (ed.real_spectrum() && ed.vectors.imag().cwiseAbs().maxCoeff() == 0.0) {
            kind_ = Kind::real;
            real_ = ModeAccumulator<double>{ed.values.real(), ed.vectors.real(), ed.inverse.real(),
                                            std::vector<double>(static_cast<std::size_t>(n) * d, 0.0), n, d};
        } else {
            kind_ = Kind::complex;
            complex_ = ModeAccumulator<Complex>{ed.values, ed.vectors, ed.inverse,
                                                std::vector<Complex>(static_cast<std::size_t>(n) * d), n, d};
        }
    }

    void add(double tau, double theta, const Vector& u, double delta) {
        switch (kind_) {
            case Kind::real: real_.add(tau, theta, u, delta); break;
            case Kind::complex: complex_.add(tau, theta, u, delta); break;
            case Kind::expm: expm_.add(tau, theta, u, delta); break;
        }
    }

    void flush(Matrix& out) const {
        switch (kind_) {
            case Kind::real: real_.flush(out); break;
            case Kind::complex: complex_.flush(out); break;
            case Kind::expm: out += expm_.x; break;
        }
    }

private:
    enum class Kind { real, complex, expm };
    Kind kind_;
    ModeAccumulator<double> real_{};
    ModeAccumulator<Complex> complex_{};
    ExpmAccumulator expm_{};
};

void require_simulable(const SupOUParams& params) {
    params.levy.validate();
    if (params.levy.d != params.dimension())
        throw ConfigError("Levy basis dimension does not match the mean reversion");
    if (params.levy.has_drift() || params.levy.has_gaussian())
        throw DomainError("path simulation supports pure-jump Levy bases only (zero drift and gaussian part)");
    const ExistenceReport rep = existence_check(params);
    if (!rep.stable) throw DomainError("mean reversion is not stable; cannot simulate");
    if (!rep.pass) throw DomainError("existence check failed: " + (rep.messages.empty() ? std::string("?") : rep.messages.front()));
}

SupOUPath assemble(const SupOUParams& params, const SimConfig& cfg) {
    SupOUPath path;
    path.config = cfg;
    path.seed = path_seed(cfg.master_seed, cfg.path_index);
    path.times.resize(cfg.n);
    for (int k = 1; k <= cfg.n; ++k) path.times[k - 1] = k * cfg.delta;
    path.values = superpose(params.mixing, draw_streams(params, cfg), cfg.n, cfg.delta);
    return path;
}

}  // namespace

std::vector<PlacedStream> draw_streams(const SupOUParams& params, const SimConfig& cfg) {
    cfg.validate();
    const int d = params.levy.d;
    const double horizon = cfg.n * cfg.delta;
    const std::uint64_t seed = path_seed(cfg.master_seed, cfg.path_index);

    std::vector<PlacedStream> out;
    auto draw = [&](const CompoundPoissonSpec& law, std::uint64_t stream_id, int coordinate) {
        const int width = coordinate < 0 ? d : 1;
        Rng fwd_arrivals(stream_seed(seed, stream_id, false, kArrivals));
        Rng fwd_jumps(stream_seed(seed, stream_id, false, kJumps));
        Rng back_arrivals(stream_seed(seed, stream_id, true, kArrivals));
        Rng back_jumps(stream_seed(seed, stream_id, true, kJumps));
        const JumpStream forward = sample_stream(law, 0.0, horizon, fwd_arrivals, fwd_jumps, width);
        const JumpStream backward =
            sample_prehistory(law, 0.0, cfg.pre_history_jumps, back_arrivals, back_jumps, width);

        // Reversion draws follow the same split so truncation changes leave the
        // positive-time draws untouched.
        PlacedStream fwd{forward, coordinate, {}};
        PlacedStream back{backward, coordinate, {}};
        Rng fwd_rev(stream_seed(seed, stream_id, false, kReversion));
        Rng back_rev(stream_seed(seed, stream_id, true, kReversion));
        draw_reversion(params.mixing, fwd, fwd_rev);
        // Backward draws are generated outward from the origin, then reversed to time order.
        draw_reversion(params.mixing, back, back_rev);
        std::reverse(back.stream.reversion_draws.begin(), back.stream.reversion_draws.end());
        std::reverse(back.atom_indices.begin(), back.atom_indices.end());

        PlacedStream merged{concat(back.stream, fwd.stream), coordinate, back.atom_indices};
        merged.stream.reversion_draws = back.stream.reversion_draws;
        merged.stream.reversion_draws.insert(merged.stream.reversion_draws.end(),
                                             fwd.stream.reversion_draws.begin(),
                                             fwd.stream.reversion_draws.end());
        merged.atom_indices.insert(merged.atom_indices.end(), fwd.atom_indices.begin(), fwd.atom_indices.end());
        out.push_back(std::move(merged));
    };

    if (params.levy.common) draw(*params.levy.common, 0, -1);
    for (int k = 0; k < d; ++k) draw(params.levy.idiosyncratic[k], static_cast<std::uint64_t>(k + 1), k);
    return out;
}

Matrix superpose(const MixingSpec& mixing, const std::vector<PlacedStream>& streams, int n, double delta) {
    mixing.validate();
    const int d = mixing.dimension();
    std::vector<AtomKernel> kernels;
    if (mixing.kind == MixingSpec::Kind::gamma) {
        kernels.emplace_back(mixing.direction, n);
    } else {
        for (const auto& a : mixing.atoms) kernels.emplace_back(a.q, n);
    }

    Vector u(d);
    for (const auto& placed : streams) {
        const auto& s = placed.stream;
        const bool common = placed.coordinate < 0;
        if (common && s.jump_vectors.cols() != d) throw DomainError("common jump vectors must have width d");
        if (!common && placed.coordinate >= d) throw DomainError("stream coordinate out of range");
        if (s.reversion_draws.size() != s.size()) throw DomainError("stream is missing reversion draws");
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (common) {
                u = s.jump_vectors.row(static_cast<Eigen::Index>(i)).transpose();
            } else {
                u.setZero();
                u(placed.coordinate) = s.jump_vectors(static_cast<Eigen::Index>(i), 0);
            }
            const int atom = placed.atom_indices.empty() ? 0 : placed.atom_indices[i];
            kernels[atom].add(s.arrival_times[i], s.reversion_draws[i], u, delta);
        }
    }
    Matrix x = Matrix::Zero(n, d);
    for (const auto& k : kernels) k.flush(x);
    return x;
}

SupOUPath simulate_univariate(const SupOUParams& params, const SimConfig& cfg) {
    if (params.dimension() != 1) throw DomainError("simulate_univariate needs a one-dimensional model");
    if (params.mixing.kind == MixingSpec::Kind::gamma && !(params.mixing.direction(0, 0) < 0.0))
        throw DomainError("univariate reversion scale B must be negative");
    require_simulable(params);
    return assemble(params, cfg);
}

SupOUPath simulate_graph(const SupOUParams& params, const SimConfig& cfg) {
    if (params.dimension() < 2) throw DomainError("simulate_graph needs d >= 2");
    require_simulable(params);
    return assemble(params, cfg);
}

SupOUPath simulate(const SupOUParams& params, const SimConfig& cfg) {
    return params.dimension() == 1 ? simulate_univariate(params, cfg) : simulate_graph(params, cfg);
}

std::vector<SupOUPath> simulate_many(const SupOUParams& params, const SimConfig& cfg, std::size_t count,
                                     unsigned jobs) {
    std::vector<SupOUPath> out(count);
    parallel_for(count, jobs, [&](std::size_t i) {
        SimConfig c = cfg;
        c.path_index = i;
        out[i] = simulate(params, c);
    });
    return out;
}

AcfTable sample_acf(const SupOUPath& path, int max_lag, const std::optional<Vector>& known_mean) {
    const int n = path.size();
    const int d = path.dimension();
    if (max_lag < 0 || max_lag >= n) throw DomainError("max_lag must be in [0, N)");
    if (known_mean && known_mean->size() != d) throw DomainError("known mean has wrong length");
    AcfTable t{Matrix::Zero(max_lag + 1, d), std::vector<bool>(d, false)};
    for (int j = 0; j < d; ++j) {
        const double m = known_mean ? (*known_mean)(j) : path.values.col(j).mean();
        const Vector c = path.values.col(j).array() - m;
        const double g0 = c.squaredNorm() / n;
        t.acf(0, j) = 1.0;
        if (!(g0 > 0.0)) {
            t.constant[j] = true;
            for (int h = 1; h <= max_lag; ++h) t.acf(h, j) = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        for (int h = 1; h <= max_lag; ++h) {
            const double gh = c.head(n - h).dot(c.tail(n - h)) / n;
            t.acf(h, j) = gh / g0;
        }
    }
    return t;
}

}  // namespace supou

#include <catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "supou/simulate.hpp"

using namespace supou;

namespace {

SupOUParams bivariate() {
    const auto ng = row_normalize(GraphSpec::from_edges(2, {{0, 1}}, true));
    return SupOUParams::graph_gamma(ng, 0.5, 1.95, 1.0, LevyBasisSpec::uniform(2, CompoundPoissonSpec{}, true));
}

PlacedStream one_jump(double tau, double theta, const Vector& u, int coordinate = -1) {
    PlacedStream p;
    p.coordinate = coordinate;
    p.stream.arrival_times = {tau};
    p.stream.jump_vectors = u.transpose();
    p.stream.reversion_draws = {theta};
    return p;
}

SimConfig small_cfg(int n = 200) {
    SimConfig c;
    c.n = n;
    c.pre_history_jumps = 300;
    c.master_seed = 77;
    return c;
}

}  // namespace

TEST_CASE("a single jump follows the matrix exponential kernel") {
    const auto p = bivariate();
    Vector u(2);
    u << 0.2, 0.5;
    const double tau = 3.3, theta = 1.7;
    const Matrix x = superpose(p.mixing, {one_jump(tau, theta, u)}, 20, 0.5);
    for (int k = 1; k <= 20; ++k) {
        const double t = 0.5 * k;
        if (t < tau) {
            CHECK(x.row(k - 1).isZero());
        } else {
            const Vector ref = oracle::expm_taylor(theta * p.mixing.direction * (t - tau)) * u;
            CHECK((x.row(k - 1).transpose() - ref).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("a jump exactly on a grid point is included there") {
    const auto p = bivariate();
    const Matrix x = superpose(p.mixing, {one_jump(2.0, 1.0, Vector::Ones(2))}, 4, 1.0);
    CHECK(x.row(0).isZero());
    CHECK((x.row(1).transpose() - Vector::Ones(2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("single jump kernels for complex and defective reversion") {
    Matrix rot(2, 2), defective(2, 2);
    rot << -0.5, -1.0, 1.0, -0.5;
    defective << -1.0, 1.0, 0.0, -1.0;
    Vector u(2);
    u << 1.0, 0.25;
    for (const Matrix& q : {rot, defective}) {
        const auto mix = MixingSpec::fixed(q);
        const Matrix x = superpose(mix, {one_jump(-2.5, 1.0, u)}, 10, 1.0);
        for (int k = 1; k <= 10; ++k) {
            const Vector ref = oracle::expm_taylor(q * (k + 2.5)) * u;
            CHECK((x.row(k - 1).transpose() - ref).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("idiosyncratic jumps land on their coordinate") {
    const auto mix = MixingSpec::fixed(Matrix::Identity(2, 2) * -1.0);
    const Matrix x = superpose(mix, {one_jump(0.5, 1.0, Vector::Constant(1, 2.0), 1)}, 3, 1.0);
    CHECK(x.col(0).isZero());
    CHECK(std::abs(x(0, 1) - 2.0 * std::exp(-0.5)) < 1e-14);
}

TEST_CASE("discrete mixing uses the drawn atom") {
    Matrix q1 = Matrix::Identity(1, 1) * -1.0, q2 = Matrix::Identity(1, 1) * -3.0;
    const auto mix = MixingSpec::discrete({{q1, 0.5}, {q2, 0.5}});
    PlacedStream s = one_jump(0.0, 1.0, Vector::Ones(1), 0);
    s.atom_indices = {1};
    const Matrix x = superpose(mix, {s}, 2, 1.0);
    CHECK(std::abs(x(1, 0) - std::exp(-6.0)) < 1e-15);
}

TEST_CASE("superposition is linear in the jump streams") {
    const auto p = bivariate();
    const auto streams = draw_streams(p, small_cfg());
    REQUIRE(streams.size() == 3);
    const Matrix all = superpose(p.mixing, streams, 200, 1.0);
    Matrix parts = Matrix::Zero(200, 2);
    for (const auto& s : streams) parts += superpose(p.mixing, {s}, 200, 1.0);
    CHECK((all - parts).norm() <= 1e-12 * all.norm());
    // Scaling every jump scales the path.
    auto scaled = streams;
    for (auto& s : scaled) s.stream.jump_vectors *= 2.0;
    CHECK(superpose(p.mixing, scaled, 200, 1.0) == 2.0 * all);
}

TEST_CASE("simulation is deterministic and independent of the worker count") {
    const auto p = bivariate();
    const auto cfg = small_cfg();
    const auto a = simulate(p, cfg);
    const auto b = simulate(p, cfg);
    CHECK(a.values == b.values);
    const auto serial = simulate_many(p, cfg, 6, 1);
    const auto threaded = simulate_many(p, cfg, 6, 4);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(serial[i].values == threaded[i].values);
        CHECK(serial[i].seed == path_seed(cfg.master_seed, i));
    }
    CHECK(serial[0].values != serial[1].values);
}

TEST_CASE("a longer truncation keeps the positive-time draws and extends the history") {
    const auto p = bivariate();
    auto cfg = small_cfg();
    const auto short_h = draw_streams(p, cfg);
    cfg.pre_history_jumps *= 2;
    const auto long_h = draw_streams(p, cfg);
    for (std::size_t s = 0; s < short_h.size(); ++s) {
        const auto& a = short_h[s].stream;
        const auto& b = long_h[s].stream;
        const std::size_t extra = b.size() - a.size();
        REQUIRE(extra == 300);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a.arrival_times[i] == b.arrival_times[i + extra]);
            CHECK(a.reversion_draws[i] == b.reversion_draws[i + extra]);
            CHECK(a.jump_vectors.row(i) == b.jump_vectors.row(i + extra));
        }
    }
}

TEST_CASE("path grid and shape") {
    const auto path = simulate(bivariate(), small_cfg(50));
    CHECK(path.size() == 50);
    CHECK(path.dimension() == 2);
    CHECK(path.times.front() == 1.0);
    CHECK(path.times.back() == 50.0);
    CHECK(path.values.minCoeff() > 0.0);
}

TEST_CASE("simulation preconditions") {
    auto p = bivariate();
    p.levy.drift = Vector::Constant(2, 0.1);
    CHECK_THROWS_AS(simulate(p, small_cfg()), DomainError);

    const auto ng = row_normalize(GraphSpec::from_edges(2, {{0, 1}}, true));
    SupOUParams unstable;
    unstable.mixing = MixingSpec::fixed(build_q(ThetaParams{1.5, 1.0}, ng));
    unstable.levy = LevyBasisSpec::uniform(2, {}, false);
    CHECK_THROWS_AS(simulate(unstable, small_cfg()), DomainError);

    auto uni = SupOUParams::univariate(-0.1, 1.95, LevyBasisSpec::uniform(1, {}, false));
    uni.mixing.direction(0, 0) = 0.2;
    CHECK_THROWS_AS(simulate(uni, small_cfg()), DomainError);

    SimConfig bad = small_cfg();
    bad.delta = 0.0;
    CHECK_THROWS_AS(simulate(bivariate(), bad), ConfigError);
}

TEST_CASE("sample autocorrelation") {
    const auto path = simulate(bivariate(), small_cfg(500));
    const auto acf = sample_acf(path, 10);
    CHECK(acf.acf(0, 0) == 1.0);
    CHECK(acf.acf(0, 1) == 1.0);
    CHECK(acf.acf.cwiseAbs().maxCoeff() <= 1.0);

    SupOUPath flat;
    flat.values = Matrix::Constant(20, 1, 3.0);
    const auto f = sample_acf(flat, 3);
    CHECK(f.constant[0]);
    CHECK(std::isnan(f.acf(1, 0)));

    SupOUPath alt;
    alt.values.resize(4, 1);
    alt.values << 1, -1, 1, -1;
    CHECK(sample_acf(alt, 1).acf(1, 0) == -0.75);
    CHECK_THROWS_AS(sample_acf(alt, 4), DomainError);
}

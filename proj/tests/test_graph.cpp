#include <catch_amalgamated.hpp>

#include <random>

#include "supou/graph.hpp"

using namespace supou;
using Catch::Approx;

TEST_CASE("edges build a symmetric adjacency for undirected graphs") {
    const auto g = GraphSpec::from_edges(3, {{0, 1}, {1, 2}}, true);
    Matrix expected(3, 3);
    expected << 0, 1, 0, 1, 0, 1, 0, 1, 0;
    CHECK(g.adjacency() == expected);
    CHECK(g.undirected());
}

TEST_CASE("invalid graphs are rejected") {
    CHECK_THROWS_AS(GraphSpec::from_edges(2, {{0, 0}}, true), ConfigError);
    CHECK_THROWS_AS(GraphSpec::from_edges(2, {{0, 2}}, true), ConfigError);
    CHECK_THROWS_AS(GraphSpec::from_edges(2, {{0, 1}, {1, 0}}, true), ConfigError);
    CHECK_NOTHROW(GraphSpec::from_edges(2, {{0, 1}, {1, 0}}, false));
    Matrix asym(2, 2);
    asym << 0, 1, 0, 0;
    CHECK_THROWS_AS(GraphSpec(asym, true), ConfigError);
    Matrix weighted(2, 2);
    weighted << 0, 2, 2, 0;
    CHECK_THROWS_AS(GraphSpec(weighted, true), ConfigError);
    CHECK_THROWS_AS(GraphSpec::from_json_text("{\"edges\": []}"), ConfigError);
}

TEST_CASE("row normalization divides by max(1, degree)") {
    const auto g = GraphSpec::from_edges(4, {{0, 1}, {0, 2}, {1, 2}}, true);
    const auto ng = row_normalize(g, true);
    CHECK(ng.divisors(0) == 2.0);
    CHECK(ng.divisors(3) == 1.0);  // isolated node
    CHECK(ng.row_normalized(0, 1) == 0.5);
    CHECK(ng.row_normalized.row(3).isZero());
    for (int i = 0; i < 3; ++i) CHECK(ng.row_normalized.row(i).sum() == Approx(1.0));
    REQUIRE(ng.symmetric_normalized);
    CHECK(ng.symmetric_normalized->isApprox(ng.symmetric_normalized->transpose()));
    // D_00 = 2 + 2, D_11 = 2 + 2
    CHECK((*ng.symmetric_normalized)(0, 1) == Approx(1.0 / 4.0));
}

TEST_CASE("two-node direction matrix") {
    const auto ng = row_normalize(GraphSpec::from_edges(2, {{0, 1}}, true));
    Matrix k(2, 2);
    k << -1, -0.5, -0.5, -1;
    CHECK(direction_matrix(0.5, ng).isApprox(k));
    CHECK(build_q(ThetaParams::from_ratio(0.5, 2.0), ng).isApprox(2.0 * k));
    CHECK(spectral_abscissa(k) == Approx(-0.5));
    CHECK(is_stable(k));
}

TEST_CASE("Gershgorin-violating parameters give an unstable Q") {
    const auto ng = row_normalize(GraphSpec::from_edges(2, {{0, 1}}, true));
    const ThetaParams t{1.5, 1.0};
    CHECK_FALSE(t.admissible());
    CHECK_FALSE(is_stable(build_q(t, ng)));
    CHECK(spectral_abscissa(build_q(t, ng)) == Approx(0.5));
}

TEST_CASE("admissible parameters are stable on random graphs") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 2 + trial % 6;
        Matrix a = Matrix::Zero(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                if (u(rng) < 0.5) a(i, j) = a(j, i) = 1.0;
        const auto ng = row_normalize(GraphSpec(a, true));
        const double theta2 = 0.1 + 3.0 * u(rng);
        const ThetaParams t{(2.0 * u(rng) - 1.0) * theta2 * 0.999, theta2};
        REQUIRE(t.admissible());
        CHECK(is_stable(build_q(t, ng)));
    }
}

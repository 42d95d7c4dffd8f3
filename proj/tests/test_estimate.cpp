#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "supou/estimate.hpp"
#include "supou/matfun.hpp"

using namespace supou;
using Catch::Approx;

namespace {

Matrix two_node_k() {
    Matrix k(2, 2);
    k << -1, -0.5, -0.5, -1;
    return k;
}

Vector uni_truth() {
    Vector xi(4);
    xi << 1.5, 0.3, 1.95, -0.1;
    return xi;
}

SupOUParams uni_model() {
    return SupOUParams::univariate(-0.1, 1.95, LevyBasisSpec::uniform(1, CompoundPoissonSpec{}, false));
}

EstimationConfig uni_cfg() {
    EstimationConfig c;
    c.map = ParamMap::univariate();
    c.xi0 = uni_truth();
    return c;
}

}  // namespace

TEST_CASE("moment vector length") {
    CHECK(moment_count(2, 5) == 20);
    CHECK(moment_count(1, 5) == 7);
    CHECK(moment_count(3, 0) == 3 + 6);
    CHECK(theoretical_moments(ParamMap::univariate(), uni_truth(), 5, 1.0).size() == 7);
    Vector xi(4);
    xi << 3.0, 0.6, 0.225, 1.95;
    CHECK(theoretical_moments(ParamMap::pooled(two_node_k()), xi, 5, 1.0).size() == 20);
    CHECK(theoretical_moments(ParamMap::pooled(two_node_k()), xi, 0, 1.0).size() == 5);
}

TEST_CASE("theoretical moments are raw moments at the model") {
    const Vector th = theoretical_moments(ParamMap::univariate(), uni_truth(), 2, 1.0);
    const auto p = uni_model();
    const double e = mean_supou(p)(0);
    CHECK(th(0) == Approx(e));
    CHECK(th(1) == Approx(var_supou(p)(0, 0) + e * e));
    CHECK(th(3) == Approx(acov_supou(p, 2.0)(0, 0) + e * e));
}

TEST_CASE("moment function residual structure") {
    // Window (x, x, ..., x): every product is x^2.
    Matrix w = Matrix::Constant(6, 1, 4.0);
    const Vector th = theoretical_moments(ParamMap::univariate(), uni_truth(), 5, 1.0);
    const Vector f = moment_function(w, ParamMap::univariate(), uni_truth(), 1.0);
    CHECK(f(0) == 4.0 - th(0));
    for (int k = 1; k < 7; ++k) CHECK(f(k) == 16.0 - th(k));

    // A window at the model mean zeroes the mean block exactly.
    const Vector t0 = theoretical_moments(ParamMap::univariate(), uni_truth(), 0, 1.0);
    const Vector r = moment_function(Matrix::Constant(1, 1, t0(0)), ParamMap::univariate(), uni_truth(), 1.0);
    CHECK(std::abs(r(0)) < 1e-12);
    CHECK(r(1) == Approx(t0(0) * t0(0) - t0(1)));
}

TEST_CASE("cross products are symmetrized") {
    Matrix w(2, 2);
    w << 1.0, 2.0, 3.0, 5.0;
    const Matrix e = empirical_terms(w, 1);
    // lag-1 block: vech((x_t x_{t+1}^T + x_{t+1} x_t^T) / 2) with x_t = (1, 2), x_{t+1} = (3, 5)
    CHECK(e(0, 5) == 3.0);
    CHECK(e(0, 6) == 0.5 * (1.0 * 5.0 + 3.0 * 2.0));
    CHECK(e(0, 7) == 10.0);
}

TEST_CASE("sample moments of identical windows equal the moment function") {
    Matrix x = Matrix::Constant(50, 1, 7.0);
    const Vector g = sample_moments(x, 5, ParamMap::univariate(), uni_truth(), 1.0);
    const Vector f = moment_function(Matrix::Constant(6, 1, 7.0), ParamMap::univariate(), uni_truth(), 1.0);
    CHECK(g == f);
    CHECK_THROWS_AS(sample_moments(Matrix::Constant(5, 1, 1.0), 5, ParamMap::univariate(), uni_truth(), 1.0),
                    DomainError);
}

TEST_CASE("alpha <= 1 is outside the parameter space") {
    Vector xi = uni_truth();
    xi(2) = 1.0;
    CHECK_THROWS_AS(theoretical_moments(ParamMap::univariate(), xi, 5, 1.0), DomainError);
}

TEST_CASE("GMM objective") {
    Vector g(2);
    g << 1, 2;
    Matrix v(2, 2);
    v << 2, 0, 0, 1;
    CHECK(gmm_objective(g, v) == 6.0);
    CHECK(gmm_objective(Vector::Zero(2), v) == 0.0);
    CHECK(gmm_objective(g, Matrix::Identity(2, 2)) == 5.0);
    CHECK_THROWS_AS(gmm_objective(g, Matrix::Identity(3, 3)), DomainError);
}

TEST_CASE("GMM objective is invariant under joint permutation") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    const int k = 7;
    Vector g(k);
    Matrix a(k, k);
    for (int i = 0; i < k; ++i) {
        g(i) = n(rng);
        for (int j = 0; j < k; ++j) a(i, j) = n(rng);
    }
    const Matrix v = a * a.transpose();
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    Eigen::PermutationMatrix<Eigen::Dynamic> p(k);
    for (int i = 0; i < k; ++i) p.indices()(i) = perm[i];
    const Vector gp = p * g;
    const Matrix vp = p * v * p.transpose();
    CHECK(std::abs(gmm_objective(gp, vp) - gmm_objective(g, v)) <= 1e-13 * gmm_objective(g, v));
}

TEST_CASE("parameter transforms round-trip") {
    Vector pooled(4);
    pooled << 3.0, 0.6, 0.225, 1.95;
    Vector full(6);
    full << 3.0, 2.0, 0.6, 0.225, 0.5, 1.95;
    const std::vector<std::pair<ParamMap, Vector>> cases{
        {ParamMap::univariate(), uni_truth()},
        {ParamMap::pooled(two_node_k()), pooled},
        {ParamMap::full(two_node_k()), full},
    };
    for (const auto& [map, xi] : cases) {
        const Vector back = map.from_unconstrained(map.to_unconstrained(xi));
        CHECK((back - xi).cwiseAbs().maxCoeff() < 1e-12);
    }
    ParamMap with_beta = ParamMap::full(two_node_k(), 1.0, true);
    Vector xb(7);
    xb << full, 2.5;
    CHECK((with_beta.from_unconstrained(with_beta.to_unconstrained(xb)) - xb).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(with_beta.names().back() == "beta");
    // Unconstrained points map into the parameter space (until 1 + e^z rounds to 1).
    Vector z(4);
    z << -30, 20, 5, -30;
    CHECK_NOTHROW(ParamMap::pooled(two_node_k()).validate(ParamMap::pooled(two_node_k()).from_unconstrained(z)));
}

TEST_CASE("pooled and full maps agree on equal-entry parameters") {
    Vector pooled(4);
    pooled << 3.0, 0.6, 0.225, 1.95;
    Vector full(6);
    full << 3.0, 3.0, 0.6, 0.225, 0.6, 1.95;
    const Vector a = theoretical_moments(ParamMap::pooled(two_node_k()), pooled, 5, 1.0);
    const Vector b = theoretical_moments(ParamMap::full(two_node_k()), full, 5, 1.0);
    CHECK(a == b);
}

TEST_CASE("trimming") {
    CHECK(retained_count(200, 98.5) == 197);
    CHECK(retained_count(200, 93.0) == 186);
    CHECK(retained_count(200, 97.5) == 195);
    CHECK(retained_count(1, 98.5) == 1);
    CHECK(retained_count(10, 100.0) == 10);

    std::vector<Vector> est;
    for (int i = 0; i < 200; ++i) est.push_back(Vector::Constant(1, static_cast<double>(200 - i)));
    const auto all = trim_report(est, {"x"}, {100.0});
    CHECK(all[0].retained == 200);
    CHECK(all[0].median == Approx(100.5));
    CHECK(all[0].max == 200.0);
    const auto cut = trim_report(est, {"x"}, {98.5});
    CHECK(cut[0].retained == 197);
    CHECK(cut[0].max == 197.0);
    CHECK(cut[0].iqr == Approx(cut[0].q75 - cut[0].q25));
    CHECK_THROWS_AS(trim_report({}, {"x"}, {100.0}), DomainError);
}

TEST_CASE("single estimate summary") {
    const auto s = trim_report({uni_truth()}, ParamMap::univariate().names(), ParamMap::univariate().default_percentiles());
    for (int j = 0; j < 4; ++j) {
        CHECK(s[j].retained == 1);
        CHECK(s[j].median == uni_truth()(j));
        CHECK(s[j].mean == uni_truth()(j));
    }
}

TEST_CASE("histogram and QQ data") {
    std::vector<double> v;
    for (int i = 0; i < 100; ++i) v.push_back(i * 0.01);
    const auto h = histogram(v, 10);
    int total = 0;
    for (const auto& b : h) total += b.count;
    CHECK(total == 100);
    CHECK(h.front().lower == 0.0);
    CHECK(h.back().upper == 0.99);

    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> z(500);
    for (auto& x : z) x = n(rng);
    const auto qq = qq_normal(z);
    CHECK(qq.r_squared > 0.99);
    CHECK(std::is_sorted(qq.standardized.begin(), qq.standardized.end()));
    CHECK(qq.theoretical.front() == Approx(-qq.theoretical.back()));
}

TEST_CASE("finite-difference Jacobian is self-consistent") {
    const ParamMap map = ParamMap::univariate();
    const Matrix j1 = moment_jacobian(map, uni_truth(), 5, 1.0, 1e-5);
    const Matrix j2 = moment_jacobian(map, uni_truth(), 5, 1.0, 5e-6);
    CHECK((j1 - j2).norm() <= 1e-4 * j2.norm());
}

TEST_CASE("two-step GMM on a simulated univariate path") {
    SimConfig sc;
    sc.n = 1000;
    sc.master_seed = 5;
    const auto path = simulate(uni_model(), sc);
    auto cfg = uni_cfg();
    cfg.sandwich = true;
    const GmmResult r = two_step_gmm(path, cfg);
    CHECK(r.objective >= 0.0);
    CHECK(r.objective <= r.objective_step2_at_step1 + 1e-12);
    CHECK(r.weight.isApprox(r.weight.transpose()));
    CHECK(Eigen::LLT<Matrix>(r.weight).info() == Eigen::Success);
    REQUIRE(r.sandwich_cov);
    CHECK(r.sandwich_cov->rows() == 4);
    CHECK(r.n_obs == 1000);
    CHECK(r.xi_hat(0) > 0.0);
    CHECK(r.xi_hat(3) < 0.0);

    const GmmResult again = two_step_gmm(path, cfg);
    CHECK(again.xi_hat == r.xi_hat);
    CHECK(again.objective == r.objective);

    cfg.bartlett = true;
    const GmmResult hac = two_step_gmm(path, cfg);
    CHECK(hac.xi_hat == r.xi_hat);
    REQUIRE(hac.standard_errors);
}

TEST_CASE("box bounds are respected") {
    SimConfig sc;
    sc.n = 500;
    sc.master_seed = 6;
    const auto path = simulate(uni_model(), sc);
    auto cfg = uni_cfg();
    cfg.lower = Vector(4);
    cfg.upper = Vector(4);
    cfg.lower << 1.0, 0.1, 1.5, -0.5;
    cfg.upper << 2.0, 0.5, 2.5, -0.05;
    const GmmResult r = two_step_gmm(path, cfg);
    for (int i = 0; i < 4; ++i) {
        CHECK(r.xi_hat(i) >= cfg.lower(i));
        CHECK(r.xi_hat(i) <= cfg.upper(i));
    }
}

TEST_CASE("GMM preconditions") {
    auto cfg = uni_cfg();
    CHECK_THROWS_AS(two_step_gmm(Matrix::Constant(5, 1, 1.0), 1.0, cfg), DomainError);
    CHECK_THROWS_AS(two_step_gmm(Matrix::Constant(50, 2, 1.0), 1.0, cfg), DomainError);
    cfg.xi0(2) = 0.5;
    CHECK_THROWS_AS(two_step_gmm(Matrix::Constant(50, 1, 1.0), 1.0, cfg), ConfigError);
}

TEST_CASE("degenerate fixed-reversion model recovers the Levy moments") {
    SupOUParams p;
    p.mixing = MixingSpec::fixed(Matrix::Constant(1, 1, -0.5));
    p.levy = LevyBasisSpec::uniform(1, CompoundPoissonSpec{}, false);
    SimConfig sc;
    sc.n = 50000;
    sc.pre_history_jumps = 500;
    sc.master_seed = 17;
    const auto path = simulate(p, sc);
    EstimationConfig cfg;
    cfg.map = ParamMap::full_fixed(Matrix::Constant(1, 1, -0.5));
    cfg.xi0 = Vector(2);
    cfg.xi0 << 1.0, 0.5;
    const GmmResult r = two_step_gmm(path, cfg);
    CHECK(r.converged);
    // OU with rate 0.5: var(mean) ~ 2 var / (0.5 N), so mu_hat has sd about 0.2%.
    CHECK(r.xi_hat(0) == Approx(1.5).epsilon(0.02));
    CHECK(r.xi_hat(1) == Approx(0.3).epsilon(0.05));
}

TEST_CASE("sample moments vanish on long paths at the truth") {
    const int paths = 8;
    SimConfig sc;
    sc.n = 100000;
    sc.master_seed = 23;
    std::vector<Vector> gs;
    for (int i = 0; i < paths; ++i) {
        sc.path_index = i;
        gs.push_back(sample_moments(simulate(uni_model(), sc), 5, ParamMap::univariate(), uni_truth()));
    }
    for (int j = 0; j < 7; ++j) {
        double mean = 0.0, ss = 0.0;
        for (const auto& g : gs) mean += g(j) / paths;
        for (const auto& g : gs) ss += (g(j) - mean) * (g(j) - mean);
        const double se = std::sqrt(ss / (paths - 1) / paths);
        CHECK(std::abs(mean) < 5.0 * se);
    }
}

TEST_CASE("objective at the truth shrinks with the sample size") {
    auto median_objective = [](int n) {
        std::vector<double> obj;
        SimConfig sc;
        sc.n = n;
        sc.master_seed = 31;
        for (int i = 0; i < 15; ++i) {
            sc.path_index = i;
            const Vector g = sample_moments(simulate(uni_model(), sc), 5, ParamMap::univariate(), uni_truth());
            obj.push_back(g.squaredNorm());
        }
        std::sort(obj.begin(), obj.end());
        return obj[obj.size() / 2];
    };
    const double a = median_objective(250), b = median_objective(1000), c = median_objective(4000);
    CHECK(a > b);
    CHECK(b > c);
}

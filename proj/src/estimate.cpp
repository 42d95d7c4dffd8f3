#include "supou/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "supou/matfun.hpp"

namespace supou {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) throw DomainError(std::string(what) + " contains non-finite entries");
}

// Lower-triangular entries of a d x d matrix, column by column.
template <class Fn>
void for_lower(int d, Fn&& fn) {
    for (int j = 0; j < d; ++j)
        for (int i = j; i < d; ++i) fn(i, j);
}

Matrix pooled_covariance(int d, double sigma2, double cov) {
    Matrix s = Matrix::Constant(d, d, cov);
    s.diagonal().setConstant(sigma2);
    return s;
}

Matrix unvech_symmetric(const Vector& v, int offset, int d) {
    Matrix s(d, d);
    int idx = offset;
    for_lower(d, [&](int i, int j) {
        s(i, j) = v(idx);
        s(j, i) = v(idx);
        ++idx;
    });
    return s;
}

}  // namespace

const char* to_string(ParamMap::Kind kind) {
    switch (kind) {
        case ParamMap::Kind::univariate: return "univariate";
        case ParamMap::Kind::pooled: return "pooled";
        case ParamMap::Kind::full: return "full";
    }
    return "?";
}

ParamMap ParamMap::univariate() { return ParamMap{}; }

ParamMap ParamMap::pooled(Matrix k, double beta) {
    if (k.rows() < 2 || k.rows() != k.cols()) throw ConfigError("pooled map needs a square direction matrix with d >= 2");
    if (!(beta > 0.0)) throw ConfigError("gamma rate beta must be positive");
    ParamMap p;
    p.kind_ = Kind::pooled;
    p.d_ = static_cast<int>(k.rows());
    p.k_ = std::move(k);
    p.beta_ = beta;
    return p;
}

ParamMap ParamMap::full(Matrix k, double beta, bool free_beta) {
    if (k.rows() < 1 || k.rows() != k.cols()) throw ConfigError("full map needs a square direction matrix");
    if (!(beta > 0.0)) throw ConfigError("gamma rate beta must be positive");
    ParamMap p;
    p.kind_ = Kind::full;
    p.d_ = static_cast<int>(k.rows());
    p.k_ = std::move(k);
    p.beta_ = beta;
    p.free_beta_ = free_beta;
    return p;
}

ParamMap ParamMap::full_fixed(Matrix q) {
    if (q.rows() < 1 || q.rows() != q.cols()) throw ConfigError("fixed reversion matrix must be square");
    ParamMap p;
    p.kind_ = Kind::full;
    p.d_ = static_cast<int>(q.rows());
    p.fixed_q_ = std::move(q);
    return p;
}

int ParamMap::size() const {
    switch (kind_) {
        case Kind::univariate: return 4;
        case Kind::pooled: return 4;
        case Kind::full: return d_ + vech_size(d_) + (fixed_q_ ? 0 : 1) + (free_beta_ ? 1 : 0);
    }
    return 0;
}

std::vector<std::string> ParamMap::names() const {
    switch (kind_) {
        case Kind::univariate: return {"mu", "sigma2", "alpha", "B"};
        case Kind::pooled: return {"mu", "sigma2", "cov", "alpha"};
        case Kind::full: break;
    }
    std::vector<std::string> out;
    for (int i = 0; i < d_; ++i) out.push_back("mu_" + std::to_string(i + 1));
    for_lower(d_, [&](int i, int j) {
        out.push_back("sigma2_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
    });
    if (!fixed_q_) out.push_back("alpha");
    if (free_beta_) out.push_back("beta");
    return out;
}

std::vector<ParamMap::Role> ParamMap::roles() const {
    switch (kind_) {
        case Kind::univariate: return {Role::mean, Role::variance, Role::shape, Role::scale};
        case Kind::pooled: return {Role::mean, Role::variance, Role::variance, Role::shape};
        case Kind::full: break;
    }
    std::vector<Role> out(d_, Role::mean);
    out.insert(out.end(), vech_size(d_), Role::variance);
    if (!fixed_q_) out.push_back(Role::shape);
    if (free_beta_) out.push_back(Role::rate);
    return out;
}

std::vector<double> ParamMap::default_percentiles() const {
    std::vector<double> out;
    for (Role r : roles()) {
        switch (r) {
            case Role::mean: out.push_back(98.5); break;
            case Role::variance: out.push_back(93.0); break;
            case Role::shape: out.push_back(97.5); break;
            case Role::scale:
            case Role::rate: out.push_back(100.0); break;
        }
    }
    return out;
}

void ParamMap::validate(const Vector& xi) const {
    if (xi.size() != size())
        throw DomainError("parameter vector has " + std::to_string(xi.size()) + " entries, expected " +
                          std::to_string(size()));
    require_finite(xi, "parameter vector");
    auto need = [](bool ok, const char* msg) {
        if (!ok) throw DomainError(msg);
    };
    switch (kind_) {
        case Kind::univariate:
            need(xi(0) > 0.0, "mu must be positive");
            need(xi(1) > 0.0, "sigma2 must be positive");
            need(xi(2) > 1.0, "alpha must exceed 1");
            need(xi(3) < 0.0, "B must be negative");
            return;
        case Kind::pooled:
            need(xi(0) > 0.0, "mu must be positive");
            need(xi(1) - xi(2) > 0.0 && xi(1) + (d_ - 1) * xi(2) > 0.0,
                 "pooled covariance must be positive definite");
            need(xi(3) > 1.0, "alpha must exceed 1");
            return;
        case Kind::full: {
            need(xi.head(d_).minCoeff() > 0.0, "means must be positive");
            const Eigen::LLT<Matrix> llt(unvech_symmetric(xi, d_, d_));
            need(llt.info() == Eigen::Success, "Levy covariance must be positive definite");
            int idx = d_ + vech_size(d_);
            if (!fixed_q_) need(xi(idx++) > 1.0, "alpha must exceed 1");
            if (free_beta_) need(xi(idx) > 0.0, "beta must be positive");
            return;
        }
    }
}

MomentModel ParamMap::model(const Vector& xi) const {
    validate(xi);
    MomentModel mm;
    switch (kind_) {
        case Kind::univariate:
            mm.mixing = MixingSpec::gamma(Matrix::Constant(1, 1, xi(3)), xi(2), 1.0);
            mm.levy_mean = Vector::Constant(1, xi(0));
            mm.levy_cov = Matrix::Constant(1, 1, xi(1));
            break;
        case Kind::pooled:
            mm.mixing = MixingSpec::gamma(k_, xi(3), beta_);
            mm.levy_mean = Vector::Constant(d_, xi(0));
            mm.levy_cov = pooled_covariance(d_, xi(1), xi(2));
            break;
        case Kind::full: {
            mm.levy_mean = xi.head(d_);
            mm.levy_cov = unvech_symmetric(xi, d_, d_);
            int idx = d_ + vech_size(d_);
            if (fixed_q_) {
                mm.mixing = MixingSpec::fixed(*fixed_q_);
            } else {
                const double alpha = xi(idx++);
                mm.mixing = MixingSpec::gamma(k_, alpha, free_beta_ ? xi(idx) : beta_);
            }
            break;
        }
    }
    return mm;
}

Vector ParamMap::to_unconstrained(const Vector& xi) const {
    validate(xi);
    Vector z(size());
    switch (kind_) {
        case Kind::univariate:
            z << std::log(xi(0)), std::log(xi(1)), std::log(xi(2) - 1.0), std::log(-xi(3));
            return z;
        case Kind::pooled:
            z << std::log(xi(0)), std::log(xi(1) - xi(2)), std::log(xi(1) + (d_ - 1) * xi(2)),
                std::log(xi(3) - 1.0);
            return z;
        case Kind::full: {
            z.head(d_) = xi.head(d_).array().log();
            const Matrix l = Eigen::LLT<Matrix>(unvech_symmetric(xi, d_, d_)).matrixL();
            int idx = d_;
            for_lower(d_, [&](int i, int j) { z(idx++) = i == j ? std::log(l(i, j)) : l(i, j); });
            if (!fixed_q_) {
                z(idx) = std::log(xi(idx) - 1.0);
                ++idx;
            }
            if (free_beta_) z(idx) = std::log(xi(idx));
            return z;
        }
    }
    return z;
}

Vector ParamMap::from_unconstrained(const Vector& z) const {
    if (z.size() != size()) throw DomainError("unconstrained vector has the wrong length");
    Vector xi(size());
    switch (kind_) {
        case Kind::univariate:
            xi << std::exp(z(0)), std::exp(z(1)), 1.0 + std::exp(z(2)), -std::exp(z(3));
            return xi;
        case Kind::pooled: {
            const double e1 = std::exp(z(1));
            const double e2 = std::exp(z(2));
            xi << std::exp(z(0)), (e1 * (d_ - 1) + e2) / d_, (e2 - e1) / d_, 1.0 + std::exp(z(3));
            return xi;
        }
        case Kind::full: {
            xi.head(d_) = z.head(d_).array().exp();
            Matrix l = Matrix::Zero(d_, d_);
            int idx = d_;
            for_lower(d_, [&](int i, int j) {
                l(i, j) = i == j ? std::exp(z(idx)) : z(idx);
                ++idx;
            });
            const Matrix s = l * l.transpose();
            idx = d_;
            for_lower(d_, [&](int i, int j) { xi(idx++) = s(i, j); });
            if (!fixed_q_) {
                xi(idx) = 1.0 + std::exp(z(idx));
                ++idx;
            }
            if (free_beta_) xi(idx) = std::exp(z(idx));
            return xi;
        }
    }
    return xi;
}

Vector theoretical_moments(const ParamMap& map, const Vector& xi, int m, double delta) {
    if (m < 0) throw DomainError("number of lags m must be nonnegative");
    const MomentModel mm = map.model(xi);
    const int d = map.dimension();
    const int q = vech_size(d);
    Vector out(moment_count(d, m));
    const Vector mean = mean_supou(mm.mixing, mm.levy_mean);
    const Matrix mmT = mean * mean.transpose();
    out.head(d) = mean;
    out.segment(d, q) = vech(symmetrize(var_supou(mm.mixing, mm.levy_cov)) + mmT);
    for (int k = 1; k <= m; ++k)
        out.segment(d + k * q, q) = vech(symmetrize(acov_supou(mm.mixing, mm.levy_cov, k * delta)) + mmT);
    return out;
}

Matrix empirical_terms(const Matrix& x, int m) {
    const int n_total = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());
    if (m < 0) throw DomainError("number of lags m must be nonnegative");
    if (n_total <= m) throw DomainError("need more observations than lags (N > m)");
    const int q = vech_size(d);
    const int n = n_total - m;
    Matrix e(n, moment_count(d, m));
    for (int t = 0; t < n; ++t) {
        e.row(t).head(d) = x.row(t);
        for (int k = 0; k <= m; ++k) {
            int col = d + k * q;
            for_lower(d, [&](int i, int j) {
                e(t, col++) = 0.5 * (x(t, i) * x(t + k, j) + x(t + k, i) * x(t, j));
            });
        }
    }
    return e;
}

Vector moment_function(const Matrix& window, const ParamMap& map, const Vector& xi, double delta) {
    if (window.cols() != map.dimension()) throw DomainError("window width does not match the model dimension");
    const int m = static_cast<int>(window.rows()) - 1;
    if (m < 0) throw DomainError("empty window");
    return empirical_terms(window, m).row(0).transpose() - theoretical_moments(map, xi, m, delta);
}

Vector sample_moments(const Matrix& x, int m, const ParamMap& map, const Vector& xi, double delta) {
    if (x.cols() != map.dimension()) throw DomainError("path width does not match the model dimension");
    const Matrix e = empirical_terms(x, m);
    return e.colwise().mean().transpose() - theoretical_moments(map, xi, m, delta);
}

Vector sample_moments(const SupOUPath& path, int m, const ParamMap& map, const Vector& xi) {
    return sample_moments(path.values, m, map, xi, path.config.delta);
}

double gmm_objective(const Vector& g, const Matrix& v) {
    if (v.rows() != g.size() || v.cols() != g.size())
        throw DomainError("weight matrix is not conformable with the moment vector");
    return g.dot(v * g);
}

void EstimationConfig::validate() const {
    if (m < 0) throw ConfigError("estimate.m must be nonnegative");
    if (xi0.size() != map.size())
        throw ConfigError("estimate.xi0 has " + std::to_string(xi0.size()) + " entries, expected " +
                          std::to_string(map.size()));
    try {
        map.validate(xi0);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("estimate.xi0: ") + e.what());
    }
    if (lower.size() != 0 && lower.size() != map.size()) throw ConfigError("estimate.bounds.lower has the wrong length");
    if (upper.size() != 0 && upper.size() != map.size()) throw ConfigError("estimate.bounds.upper has the wrong length");
    for (Eigen::Index i = 0; i < xi0.size(); ++i) {
        if (lower.size() && !(xi0(i) >= lower(i))) throw ConfigError("estimate.xi0 lies below the lower bound");
        if (upper.size() && !(xi0(i) <= upper(i))) throw ConfigError("estimate.xi0 lies above the upper bound");
    }
    if (optimizer.max_evals < 1) throw ConfigError("estimate.max_evals must be positive");
    if (!(ridge >= 0.0)) throw ConfigError("estimate.ridge must be nonnegative");
}

Matrix moment_jacobian(const ParamMap& map, const Vector& xi, int m, double delta, double step) {
    const int k = moment_count(map.dimension(), m);
    Matrix j(k, map.size());
    for (int i = 0; i < map.size(); ++i) {
        // Near the edge of the parameter space the step shrinks until both sides are valid.
        double h = step * std::max(1.0, std::abs(xi(i)));
        for (int attempt = 0;; ++attempt) {
            Vector up = xi, down = xi;
            up(i) += h;
            down(i) -= h;
            try {
                j.col(i) = (theoretical_moments(map, up, m, delta) - theoretical_moments(map, down, m, delta)) /
                           (2.0 * h);
                break;
            } catch (const DomainError&) {
                if (attempt == 40) throw;
                h *= 0.5;
            }
        }
    }
    return j;
}

GmmResult two_step_gmm(const Matrix& x, double delta, const EstimationConfig& cfg) {
    cfg.validate();
    if (x.cols() != cfg.map.dimension())
        throw DomainError("path has " + std::to_string(x.cols()) + " columns, model dimension is " +
                          std::to_string(cfg.map.dimension()));
    if (x.rows() <= cfg.m) throw DomainError("need more observations than lags (N > m)");
    require_finite(Eigen::Map<const Vector>(x.data(), x.size()), "path");

    const Matrix e = empirical_terms(x, cfg.m);
    const Vector ebar = e.colwise().mean().transpose();
    const int k = static_cast<int>(e.cols());
    const int n = static_cast<int>(e.rows());

    auto in_box = [&](const Vector& xi) {
        for (Eigen::Index i = 0; i < xi.size(); ++i) {
            if (cfg.lower.size() && xi(i) < cfg.lower(i)) return false;
            if (cfg.upper.size() && xi(i) > cfg.upper(i)) return false;
        }
        return true;
    };
    auto criterion = [&](const Vector& xi, const Matrix& w) {
        if (!in_box(xi)) return kInf;
        try {
            const Vector g = ebar - theoretical_moments(cfg.map, xi, cfg.m, delta);
            return gmm_objective(g, w);
        } catch (const DomainError&) {
            return kInf;
        }
    };
    auto minimize = [&](const Vector& start, const Matrix& w) {
        return nelder_mead([&](const Vector& z) { return criterion(cfg.map.from_unconstrained(z), w); },
                           cfg.map.to_unconstrained(start), cfg.optimizer);
    };
    auto residual_cov = [&](const Vector& xi, int bandwidth) {
        const Matrix dev = e.rowwise() - theoretical_moments(cfg.map, xi, cfg.m, delta).transpose();
        Matrix f = dev.transpose() * dev / n;
        for (int l = 1; l <= bandwidth && l < n; ++l) {
            const Matrix gl = dev.topRows(n - l).transpose() * dev.bottomRows(n - l) / n;
            f += (1.0 - l / (bandwidth + 1.0)) * (gl + gl.transpose());
        }
        return f;
    };

    GmmResult r;
    r.names = cfg.map.names();
    r.n_obs = static_cast<int>(x.rows());
    r.m = cfg.m;

    const NelderMeadResult s1 = minimize(cfg.xi0, Matrix::Identity(k, k));
    r.xi_step1 = cfg.map.from_unconstrained(s1.x);
    r.objective_step1 = s1.value;

    r.vhat = residual_cov(r.xi_step1, 0);
    const Eigen::JacobiSVD<Matrix> svd(r.vhat);
    const auto& sv = svd.singularValues();
    r.vhat_near_singular = !(sv(k - 1) > 1e-12 * sv(0));
    const Matrix reg = r.vhat + cfg.ridge * r.vhat.trace() / k * Matrix::Identity(k, k);
    const Eigen::LDLT<Matrix> ldlt(reg);
    r.weight = symmetrize(ldlt.solve(Matrix::Identity(k, k)));
    if (!r.weight.allFinite()) throw DomainError("moment covariance could not be inverted");

    r.objective_step2_at_step1 = criterion(r.xi_step1, r.weight);
    const NelderMeadResult s2 = minimize(r.xi_step1, r.weight);
    r.xi_hat = cfg.map.from_unconstrained(s2.x);
    r.objective = s2.value;
    r.iterations = s1.iterations + s2.iterations;
    r.evaluations = s1.evaluations + s2.evaluations;
    r.converged = s1.converged && s2.converged && std::isfinite(r.objective);

    if (cfg.sandwich) {
        const int bandwidth = cfg.bartlett ? static_cast<int>(std::floor(std::cbrt(static_cast<double>(n)))) : 0;
        const Matrix f = residual_cov(r.xi_hat, bandwidth);
        const Matrix g = -moment_jacobian(cfg.map, r.xi_hat, cfg.m, delta);
        const Matrix gta = g.transpose() * r.weight;
        const Matrix mm = (gta * g).ldlt().solve(gta);
        r.sandwich_cov = symmetrize(mm * f * mm.transpose());
        r.standard_errors = (r.sandwich_cov->diagonal().array().max(0.0) / n).sqrt().matrix();
    }
    return r;
}

GmmResult two_step_gmm(const SupOUPath& path, const EstimationConfig& cfg) {
    return two_step_gmm(path.values, path.config.delta, cfg);
}

int retained_count(int n, double percentile) {
    if (n <= 0) return 0;
    const int kept = static_cast<int>(std::floor(n * percentile / 100.0 + 1e-9));
    return std::clamp(kept, 1, n);
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<ParamSummary> trim_report(const std::vector<Vector>& estimates, const std::vector<std::string>& names,
                                      const std::vector<double>& percentiles) {
    if (estimates.empty()) throw DomainError("no estimates to summarize");
    const std::size_t p = names.size();
    if (percentiles.size() != p) throw DomainError("one trimming percentile per parameter is required");
    std::vector<ParamSummary> out;
    for (std::size_t j = 0; j < p; ++j) {
        ParamSummary s;
        s.name = names[j];
        s.percentile = percentiles[j];
        std::vector<double> v;
        for (const auto& est : estimates) {
            if (static_cast<std::size_t>(est.size()) != p) throw DomainError("estimate has the wrong length");
            if (std::isfinite(est(j))) v.push_back(est(j));
        }
        std::sort(v.begin(), v.end());
        s.total = static_cast<int>(v.size());
        v.resize(retained_count(s.total, s.percentile));
        s.retained = static_cast<int>(v.size());
        if (!v.empty()) {
            double sum = 0.0;
            for (double y : v) sum += y;
            s.mean = sum / v.size();
            double ss = 0.0;
            for (double y : v) ss += (y - s.mean) * (y - s.mean);
            s.sd = v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
            s.median = quantile_sorted(v, 0.5);
            s.q25 = quantile_sorted(v, 0.25);
            s.q75 = quantile_sorted(v, 0.75);
            s.iqr = s.q75 - s.q25;
            s.min = v.front();
            s.max = v.back();
        }
        s.values = std::move(v);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins) {
    if (bins < 1) throw DomainError("histogram needs at least one bin");
    if (values.empty()) return {};
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) return {{lo, hi, static_cast<int>(values.size())}};
    const double width = (hi - lo) / bins;
    std::vector<HistogramBin> out(bins);
    for (int b = 0; b < bins; ++b) out[b] = {lo + b * width, b + 1 == bins ? hi : lo + (b + 1) * width, 0};
    for (double v : values) {
        const int b = std::min(bins - 1, static_cast<int>((v - lo) / width));
        ++out[b].count;
    }
    return out;
}

QqData qq_normal(const std::vector<double>& values) {
    QqData q;
    std::vector<double> v(values);
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return q;
    double mean = 0.0;
    for (double y : v) mean += y;
    mean /= n;
    double ss = 0.0;
    for (double y : v) ss += (y - mean) * (y - mean);
    const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    const boost::math::normal_distribution<> normal;
    for (std::size_t i = 0; i < n; ++i) {
        q.theoretical.push_back(boost::math::quantile(normal, (i + 0.5) / n));
        q.standardized.push_back(sd > 0.0 ? (v[i] - mean) / sd : 0.0);
    }
    if (n < 3 || !(sd > 0.0)) {
        q.r_squared = std::numeric_limits<double>::quiet_NaN();
        return q;
    }
    const Eigen::Map<const Vector> a(q.theoretical.data(), n), b(q.standardized.data(), n);
    const Vector ac = a.array() - a.mean(), bc = b.array() - b.mean();
    const double corr = ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
    q.r_squared = corr * corr;
    return q;
}

}  // namespace supou

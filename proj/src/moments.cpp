#include "supou/moments.hpp"

#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "supou/matfun.hpp"

namespace supou {

MixingSpec MixingSpec::gamma(Matrix k, double alpha, double beta) {
    MixingSpec m;
    m.kind = Kind::gamma;
    m.direction = std::move(k);
    m.alpha = alpha;
    m.beta = beta;
    m.validate();
    return m;
}

MixingSpec MixingSpec::fixed(Matrix q) {
    MixingSpec m;
    m.kind = Kind::fixed;
    m.atoms.push_back({std::move(q), 1.0});
    m.validate();
    return m;
}

MixingSpec MixingSpec::discrete(std::vector<DiscreteAtom> atoms) {
    MixingSpec m;
    m.kind = Kind::discrete;
    m.atoms = std::move(atoms);
    m.validate();
    return m;
}

int MixingSpec::dimension() const {
    if (kind == Kind::gamma) return static_cast<int>(direction.rows());
    return atoms.empty() ? 0 : static_cast<int>(atoms.front().q.rows());
}

void MixingSpec::validate() const {
    if (kind == Kind::gamma) {
        if (direction.rows() == 0 || direction.rows() != direction.cols())
            throw ConfigError("gamma mixing needs a square direction matrix");
        if (!(beta > 0.0)) throw ConfigError("gamma mixing rate beta must be positive");
        if (!std::isfinite(alpha)) throw ConfigError("gamma mixing shape alpha must be finite");
        return;
    }
    if (atoms.empty()) throw ConfigError("mixing law has no atoms");
    double total = 0.0;
    const auto d = atoms.front().q.rows();
    for (const auto& a : atoms) {
        if (a.q.rows() != d || a.q.cols() != d) throw ConfigError("mixing atoms have inconsistent shapes");
        if (!(a.probability >= 0.0)) throw ConfigError("mixing probabilities must be nonnegative");
        total += a.probability;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("mixing probabilities must sum to 1");
}

const char* to_string(MixingSpec::Kind kind) {
    switch (kind) {
        case MixingSpec::Kind::fixed: return "fixed";
        case MixingSpec::Kind::gamma: return "gamma";
        case MixingSpec::Kind::discrete: return "discrete";
    }
    return "?";
}

SupOUParams SupOUParams::graph_gamma(const NormalizedGraph& ng, double c, double alpha, double beta,
                                     LevyBasisSpec levy) {
    if (!(std::abs(c) < 1.0)) throw ConfigError("reversion ratio c must satisfy |c| < 1");
    SupOUParams p;
    p.mixing = MixingSpec::gamma(direction_matrix(c, ng), alpha, beta);
    p.levy = std::move(levy);
    p.graph = ng;
    p.c = c;
    if (p.levy.d != ng.dimension()) throw ConfigError("Levy basis dimension does not match the graph");
    return p;
}

SupOUParams SupOUParams::univariate(double b, double alpha_n, LevyBasisSpec levy) {
    if (!(b < 0.0)) throw DomainError("univariate reversion scale B must be negative");
    if (levy.d != 1) throw ConfigError("univariate model needs a one-dimensional Levy basis");
    SupOUParams p;
    p.mixing = MixingSpec::gamma(Matrix::Constant(1, 1, b), alpha_n, 1.0);
    p.levy = std::move(levy);
    return p;
}

namespace {

void require_moments(const MixingSpec& m) {
    m.validate();
    if (m.kind == MixingSpec::Kind::gamma && !(m.alpha > 1.0)) {
        throw DomainError("moments undefined: gamma mixing needs alpha > 1 (alpha = " +
                          std::to_string(m.alpha) + ")");
    }
    if (m.kind == MixingSpec::Kind::gamma) {
        if (!is_stable(m.direction)) throw DomainError("moments undefined: direction matrix K is not stable");
    } else {
        for (const auto& a : m.atoms)
            if (!is_stable(a.q)) throw DomainError("moments undefined: reversion matrix is not stable");
    }
}

}  // namespace

Vector mean_supou(const MixingSpec& mixing, const Vector& levy_mean) {
    require_moments(mixing);
    if (mixing.kind == MixingSpec::Kind::gamma) {
        const Vector kinv_mu = mixing.direction.partialPivLu().solve(levy_mean);
        return -(mixing.beta / (mixing.alpha - 1.0)) * kinv_mu;
    }
    Vector out = Vector::Zero(levy_mean.size());
    for (const auto& a : mixing.atoms) out -= a.probability * a.q.partialPivLu().solve(levy_mean);
    return out;
}

Matrix var_supou(const MixingSpec& mixing, const Matrix& levy_cov) {
    require_moments(mixing);
    if (mixing.kind == MixingSpec::Kind::gamma) {
        return -(mixing.beta / (mixing.alpha - 1.0)) * lyapunov_solve(mixing.direction, levy_cov);
    }
    Matrix out = Matrix::Zero(levy_cov.rows(), levy_cov.cols());
    for (const auto& a : mixing.atoms) out -= a.probability * lyapunov_solve(a.q, levy_cov);
    return out;
}

Matrix acov_supou(const MixingSpec& mixing, const Matrix& levy_cov, double h) {
    if (!(h >= 0.0)) throw DomainError("autocovariance lag must be nonnegative");
    require_moments(mixing);
    if (mixing.kind == MixingSpec::Kind::gamma) {
        const auto d = mixing.direction.rows();
        const double a = mixing.alpha;
        const double b = mixing.beta;
        // beta^alpha (beta I - K h)^{1 - alpha} = beta (I - K h / beta)^{1 - alpha}
        const Matrix base = Matrix::Identity(d, d) - (h / b) * mixing.direction;
        return -(b / (a - 1.0)) * fractional_power(base, 1.0 - a) *
               lyapunov_solve(mixing.direction, levy_cov);
    }
    Matrix out = Matrix::Zero(levy_cov.rows(), levy_cov.cols());
    for (const auto& at : mixing.atoms)
        out -= at.probability * expm(at.q * h) * lyapunov_solve(at.q, levy_cov);
    return out;
}

Vector mean_supou(const SupOUParams& p) { return mean_supou(p.mixing, levy_moments(p.levy).mean); }
Matrix var_supou(const SupOUParams& p) { return var_supou(p.mixing, levy_moments(p.levy).covariance); }
Matrix acov_supou(const SupOUParams& p, double h) {
    return acov_supou(p.mixing, levy_moments(p.levy).covariance, h);
}

ExistenceReport existence_check(const SupOUParams& p) {
    ExistenceReport r;
    p.mixing.validate();
    if (p.mixing.kind == MixingSpec::Kind::gamma) {
        r.spectral_abscissa = spectral_abscissa(p.mixing.direction);
        r.stable = r.spectral_abscissa < 0.0;
        r.moments_defined = p.mixing.alpha > 1.0;
        if (r.stable) {
            r.reversion_integral = -p.mixing.beta / (p.mixing.alpha * r.spectral_abscissa);
            r.reversion_integral_exact =
                r.moments_defined ? -p.mixing.beta / ((p.mixing.alpha - 1.0) * r.spectral_abscissa)
                                  : std::numeric_limits<double>::infinity();
        }
        if (!r.moments_defined) r.messages.push_back("moments undefined: alpha must exceed 1");
    } else {
        r.stable = true;
        r.moments_defined = true;
        r.spectral_abscissa = -std::numeric_limits<double>::infinity();
        for (const auto& a : p.mixing.atoms) {
            const double s = spectral_abscissa(a.q);
            r.spectral_abscissa = std::max(r.spectral_abscissa, s);
            if (s < 0.0) {
                r.reversion_integral -= a.probability / s;
            } else {
                r.stable = false;
            }
        }
        r.reversion_integral_exact = r.reversion_integral;
    }
    if (!r.stable) {
        r.messages.push_back("mean reversion is not stable: max Re(sigma) = " +
                             std::to_string(r.spectral_abscissa));
        r.reversion_integral = r.reversion_integral_exact = std::numeric_limits<double>::infinity();
    }
    r.log_moment = log_moment_check(p.levy);
    if (!r.log_moment) r.messages.push_back("log-moment condition fails");
    r.pass = r.stable && r.moments_defined && r.log_moment && std::isfinite(r.reversion_integral) &&
             r.reversion_integral > 0.0;
    return r;
}

ZetaParams make_zeta_params(const Matrix& k, const LevyMoments& levy, double delta) {
    const EigenDecomposition ed = eigen_decompose(k);
    if (!ed.diagonalizable()) throw DomainError("zeta bound needs a diagonalizable direction matrix");
    ZetaParams z;
    z.kappa = ed.condition;
    z.rho = -ed.values.real().maxCoeff();
    if (!(z.rho > 0.0)) throw DomainError("zeta bound needs a stable direction matrix");
    Eigen::JacobiSVD<Matrix> svd(levy.covariance);
    svd.setThreshold(1e-12);
    z.rank = static_cast<int>(svd.rank());
    z.levy_cov_norm = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    z.levy_mean_norm = levy.mean.norm();
    z.delta = delta;
    z.d = static_cast<int>(k.rows());
    return z;
}

std::pair<double, double> zeta_bound_terms(const ZetaParams& z, double alpha, double beta, double r) {
    if (!(r >= 0.0)) throw DomainError("zeta bound needs r >= 0");
    const double ba = std::pow(beta, alpha);
    const double first_sq = std::sqrt(static_cast<double>(z.rank * z.d)) * z.levy_cov_norm *
                            ((alpha + 1.0) * ba / std::pow(2.0 * z.rho * r + beta, alpha + 1.0)) *
                            (z.kappa * z.kappa / (2.0 * z.rho));
    const double second = z.levy_mean_norm * (ba / std::pow(z.rho * r + beta, alpha)) * (z.kappa / z.rho);
    return {std::sqrt(first_sq), second};
}

double zeta_bound(const ZetaParams& z, double alpha, double beta, double r) {
    const auto [a, b] = zeta_bound_terms(z, alpha, beta, r);
    return a + b;
}

double zeta_coefficient(const MixingSpec& mixing, const LevyMoments& levy, double r) {
    if (mixing.kind != MixingSpec::Kind::gamma) throw DomainError("zeta coefficient needs gamma mixing");
    require_moments(mixing);
    const Matrix& k = mixing.direction;
    const auto d = k.rows();
    const EigenDecomposition ed = eigen_decompose(k);
    if (!ed.diagonalizable()) throw DomainError("zeta coefficient needs a diagonalizable direction matrix");
    const Matrix y = lyapunov_solve(k, levy.covariance);
    const Vector kinv_mu = k.partialPivLu().solve(levy.mean);

    const double a = mixing.alpha, b = mixing.beta;
    const double log_norm = a * std::log(b) - std::lgamma(a);
    auto density_over_theta = [&](double theta) {
        return std::exp(log_norm + (a - 2.0) * std::log(theta) - b * theta);
    };
    auto exp_k = [&](double s) -> Matrix {
        const CVector e = (ed.values * s).array().exp();
        return checked_real(ed.vectors * e.asDiagonal() * ed.inverse);
    };

    boost::math::quadrature::exp_sinh<double> integrator;
    const double tol = 1e-13;
    // int_r^inf e^{theta K s} Sigma e^{theta K^T s} ds = -(1/theta) e^{theta K r} Y e^{theta K^T r}
    const double variance_part = integrator.integrate(
        [&](double theta) {
            if (theta <= 0.0) return 0.0;
            const Matrix e = exp_k(theta * r);
            return -(e * y * e.transpose()).trace() * density_over_theta(theta);
        },
        tol);
    // int_r^inf e^{theta K s} mu ds = -(theta K)^{-1} e^{theta K r} mu
    Vector mean_part(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        mean_part(i) = integrator.integrate(
            [&](double theta) {
                if (theta <= 0.0) return 0.0;
                return -(exp_k(theta * r) * kinv_mu)(i) * density_over_theta(theta);
            },
            tol);
    }
    return std::sqrt(variance_part + mean_part.squaredNorm());
}

double zeta_coefficient_univariate(double levy_mean, double levy_var, double cov_r, double cov_2r) {
    return std::sqrt(cov_2r + 4.0 * levy_mean * levy_mean / (levy_var * levy_var) * cov_r * cov_r);
}

double clt_threshold(double delta) {
    if (!(delta > 0.0)) throw DomainError("CLT condition needs delta > 0");
    return (1.0 + 1.0 / delta) * ((6.0 + 2.0 * delta) / (2.0 + delta));
}

bool clt_condition(double alpha, double delta) {
    return alpha - 1.0 > clt_threshold(delta);
}

}  // namespace supou

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "supou/common.hpp"
#include "supou/moments.hpp"
#include "supou/optimize.hpp"
#include "supou/simulate.hpp"

namespace supou {

/// Model pieces the theoretical moments depend on.
struct MomentModel {
    MixingSpec mixing;
    Vector levy_mean;
    Matrix levy_cov;
};

/// Parametrization of the estimated vector xi.
///   univariate: (mu, sigma2, alpha, B), Q = B Gamma(alpha, 1)
///   pooled:     (mu, sigma2, cov, alpha) with mu_L = mu 1, sigma_L^2 = (sigma2 - cov) I + cov 1 1^T,
///               K and beta fixed
///   full:       (mu_1..mu_d, vech(sigma_L^2), alpha [, beta]) with K fixed
/// A full map built with a fixed reversion matrix drops alpha and uses Q directly.
class ParamMap {
public:
    enum class Kind { univariate, pooled, full };
    enum class Role { mean, variance, shape, scale, rate };

    ParamMap() = default;
    static ParamMap univariate();
    static ParamMap pooled(Matrix k, double beta = 1.0);
    static ParamMap full(Matrix k, double beta = 1.0, bool free_beta = false);
    static ParamMap full_fixed(Matrix q);

    Kind kind() const { return kind_; }
    int dimension() const { return d_; }
    int size() const;
    std::vector<std::string> names() const;
    std::vector<Role> roles() const;
    bool fixed_reversion() const { return fixed_q_.has_value(); }
    bool free_beta() const { return free_beta_; }
    const Matrix& direction() const { return k_; }
    double beta() const { return beta_; }

    /// Throws DomainError when xi leaves the parameter space.
    void validate(const Vector& xi) const;
    MomentModel model(const Vector& xi) const;

    /// Bijection between the parameter space and R^size().
    Vector to_unconstrained(const Vector& xi) const;
    Vector from_unconstrained(const Vector& z) const;

    /// Upper trimming percentiles: 98.5 for means, 93 for (co)variances, 97.5 for alpha, 100 otherwise.
    std::vector<double> default_percentiles() const;

private:
    Kind kind_ = Kind::univariate;
    int d_ = 1;
    Matrix k_;
    double beta_ = 1.0;
    bool free_beta_ = false;
    std::optional<Matrix> fixed_q_;
};

const char* to_string(ParamMap::Kind kind);

constexpr int moment_count(int d, int m) { return d + (m + 1) * d * (d + 1) / 2; }

/// (E X, vech(E X X^T), vech(sym E X_0 X_k^T) for k = 1..m) at xi, lags spaced by delta.
Vector theoretical_moments(const ParamMap& map, const Vector& xi, int m, double delta);

/// Per-window empirical terms (X_t, vech(X_t X_t^T), vech(sym X_t X_{t+k}^T)); row t uses X_t..X_{t+m}.
Matrix empirical_terms(const Matrix& x, int m);

/// f(window, xi) with window = (m+1) x d consecutive observations.
Vector moment_function(const Matrix& window, const ParamMap& map, const Vector& xi, double delta);

/// g_{N,m}(xi): average of f over the N - m windows.
Vector sample_moments(const Matrix& x, int m, const ParamMap& map, const Vector& xi, double delta);
Vector sample_moments(const SupOUPath& path, int m, const ParamMap& map, const Vector& xi);

double gmm_objective(const Vector& g, const Matrix& v);

struct EstimationConfig {
    ParamMap map;
    int m = 5;
    Vector xi0;
    Vector lower;  // optional box in natural coordinates; empty or +-inf entries mean unbounded
    Vector upper;
    NelderMeadOptions optimizer;
    double ridge = 1e-8;
    bool sandwich = false;
    bool bartlett = false;  // long-run covariance by a Bartlett window instead of lag 0

    void validate() const;
};

struct GmmResult {
    std::vector<std::string> names;
    Vector xi_hat;
    Vector xi_step1;
    double objective = 0.0;
    double objective_step1 = 0.0;
    double objective_step2_at_step1 = 0.0;  // step-2 criterion evaluated at xi_step1
    Matrix weight;
    Matrix vhat;
    std::optional<Matrix> sandwich_cov;  // M F M^T, covariance of sqrt(n)(xi_hat - xi)
    std::optional<Vector> standard_errors;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    bool vhat_near_singular = false;
    int n_obs = 0;
    int m = 0;
};

/// Jacobian of the theoretical moments at xi by central differences with relative step `step`.
Matrix moment_jacobian(const ParamMap& map, const Vector& xi, int m, double delta, double step = 1e-5);

GmmResult two_step_gmm(const Matrix& x, double delta, const EstimationConfig& cfg);
GmmResult two_step_gmm(const SupOUPath& path, const EstimationConfig& cfg);

struct ParamSummary {
    std::string name;
    double percentile = 100.0;
    int total = 0;
    int retained = 0;
    double mean = 0.0, median = 0.0, sd = 0.0;
    double q25 = 0.0, q75 = 0.0, iqr = 0.0;
    double min = 0.0, max = 0.0;
    std::vector<double> values;  // retained estimates, ascending
};

/// Number of the smallest values kept under an upper percentile cutoff.
int retained_count(int n, double percentile);

/// Per-parameter trimming (keep the lowest `percentiles[j]` percent of column j), then summaries.
std::vector<ParamSummary> trim_report(const std::vector<Vector>& estimates,
                                      const std::vector<std::string>& names,
                                      const std::vector<double>& percentiles);

/// Linear-interpolation sample quantile of ascending data.
double quantile_sorted(const std::vector<double>& sorted, double p);

struct HistogramBin {
    double lower, upper;
    int count;
};
std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins);

struct QqData {
    std::vector<double> theoretical;   // standard normal quantiles at (i - 0.5) / n
    std::vector<double> standardized;  // sorted (x - mean) / sd
    double r_squared = 0.0;
};
QqData qq_normal(const std::vector<double>& values);

}  // namespace supou

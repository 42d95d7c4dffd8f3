#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "supou/common.hpp"
#include "supou/graph.hpp"
#include "supou/levy.hpp"

namespace supou {

struct DiscreteAtom {
    Matrix q;
    double probability = 1.0;
};

/// Law of the random mean-reversion matrix.
///   gamma:    Q = theta2 * K with theta2 ~ Gamma(alpha, beta) (rate beta)
///   discrete: Q = q_k with probability p_k
///   fixed:    a single atom with probability one
struct MixingSpec {
    enum class Kind { fixed, gamma, discrete };

    Kind kind = Kind::gamma;
    double alpha = 0.0;
    double beta = 1.0;
    Matrix direction;  // K, gamma kind only
    std::vector<DiscreteAtom> atoms;

    static MixingSpec gamma(Matrix k, double alpha, double beta);
    static MixingSpec fixed(Matrix q);
    static MixingSpec discrete(std::vector<DiscreteAtom> atoms);

    int dimension() const;
    /// Structural checks (shapes, probabilities, beta > 0). Stability and
    /// alpha > 1 are reported by existence_check and enforced by the moment functions.
    void validate() const;
};

const char* to_string(MixingSpec::Kind kind);

struct SupOUParams {
    MixingSpec mixing;
    LevyBasisSpec levy;
    std::optional<NormalizedGraph> graph;
    double c = 0.0;

    /// Graph model with K = -I - c Abar and theta2 ~ Gamma(alpha, beta).
    static SupOUParams graph_gamma(const NormalizedGraph& ng, double c, double alpha, double beta,
                                   LevyBasisSpec levy);
    /// Scalar model Q_i = B * Gamma(alpha_n, 1) with B < 0.
    static SupOUParams univariate(double b, double alpha_n, LevyBasisSpec levy);

    int dimension() const { return mixing.dimension(); }
};

Vector mean_supou(const MixingSpec& mixing, const Vector& levy_mean);
Matrix var_supou(const MixingSpec& mixing, const Matrix& levy_cov);
/// cov(X_h, X_0) for lag h >= 0.
Matrix acov_supou(const MixingSpec& mixing, const Matrix& levy_cov, double h);

Vector mean_supou(const SupOUParams& p);
Matrix var_supou(const SupOUParams& p);
Matrix acov_supou(const SupOUParams& p, double h);

struct ExistenceReport {
    bool stable = false;
    double spectral_abscissa = 0.0;  // max Re sigma(K), or the worst atom
    bool moments_defined = false;    // alpha > 1 for gamma mixing
    // -beta / (alpha * max Re sigma(K)) as printed for the finiteness display, and
    // the exact value E[-1 / max Re sigma(Q)] = beta / ((alpha - 1) * rho(K)).
    double reversion_integral = 0.0;
    double reversion_integral_exact = 0.0;
    bool log_moment = false;
    bool pass = false;
    std::vector<std::string> messages;
};

ExistenceReport existence_check(const SupOUParams& p);

struct ZetaParams {
    double kappa = 1.0;       // ||U|| ||U^{-1}|| of the diagonalizing matrix of K
    double rho = 0.0;         // -max Re sigma(K)
    int rank = 0;             // g = rank of sigma_L^2
    double delta = 1.0;
    int d = 1;
    double levy_cov_norm = 0.0;   // ||sigma_L^2||_2
    double levy_mean_norm = 0.0;  // ||mu_L||_2
};

ZetaParams make_zeta_params(const Matrix& k, const LevyMoments& levy, double delta);

/// The two summands of the closed-form zeta-coefficient bound under Gamma(alpha, beta) mixing.
std::pair<double, double> zeta_bound_terms(const ZetaParams& z, double alpha, double beta, double r);
double zeta_bound(const ZetaParams& z, double alpha, double beta, double r);

/// The zeta coefficient itself (before bounding), by quadrature over theta2 for
/// Gamma mixing on direction K.
double zeta_coefficient(const MixingSpec& gamma_mixing, const LevyMoments& levy, double r);

/// Scalar zeta coefficient expressed through autocovariances:
/// sqrt(cov(X_0, X_2r) + 4 mu^2 / sigma^4 * cov(X_0, X_r)^2).
double zeta_coefficient_univariate(double levy_mean, double levy_var, double cov_r, double cov_2r);

/// Parameter condition for the GMM central limit theorem:
/// alpha - 1 > (1 + 1/delta) (6 + 2 delta) / (2 + delta).
bool clt_condition(double alpha, double delta);
double clt_threshold(double delta);

}  // namespace supou

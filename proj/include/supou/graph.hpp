#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "supou/common.hpp"

namespace supou {

/// Fixed network topology: a d×d 0/1 adjacency matrix with zero diagonal.
class GraphSpec {
public:
    GraphSpec(Matrix adjacency, bool undirected);

    /// Builds the adjacency matrix from 0-indexed edge pairs. Duplicate edges
    /// (including a reversed duplicate on an undirected graph) are rejected.
    static GraphSpec from_edges(int d, const std::vector<std::pair<int, int>>& edges,
                                bool undirected);

    /// Parses {"d": int, "edges": [[i,j],...], "undirected": bool}.
    static GraphSpec from_json_text(const std::string& text);
    static GraphSpec from_json_file(const std::string& path);

    int dimension() const { return static_cast<int>(adjacency_.rows()); }
    const Matrix& adjacency() const { return adjacency_; }
    bool undirected() const { return undirected_; }

private:
    Matrix adjacency_;
    bool undirected_;
};

struct NormalizedGraph {
    Matrix row_normalized;                     // diag(1/n_i) A
    Vector divisors;                           // n_i = max(1, sum_{j != i} a_ij)
    std::optional<Matrix> symmetric_normalized;  // D^{-1/2} A^T D^{-1/2}

    int dimension() const { return static_cast<int>(row_normalized.rows()); }
};

NormalizedGraph row_normalize(const GraphSpec& g, bool with_symmetric = false);

/// Network effect theta1 and momentum effect theta2 of Q(theta) = -(theta2 I + theta1 Abar).
struct ThetaParams {
    double theta1 = 0.0;
    double theta2 = 1.0;

    /// theta1 = c * theta2.
    static ThetaParams from_ratio(double c, double theta2);

    /// Sufficient stability condition theta2 > 0, theta2 > |theta1|.
    bool admissible() const;
};

Matrix build_q(const ThetaParams& theta, const NormalizedGraph& ng);

/// K = -I - c Abar, the direction matrix of the Gamma-mixed parametrization Q = theta2 K.
Matrix direction_matrix(double c, const NormalizedGraph& ng);

/// True iff every eigenvalue of q has strictly negative real part.
bool is_stable(const Matrix& q);

/// Largest real part of the spectrum of q.
double spectral_abscissa(const Matrix& q);

}  // namespace supou

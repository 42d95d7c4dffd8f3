#pragma once

#include "supou/common.hpp"

namespace supou {

/// Eigenvector matrices with condition number above this are treated as
/// numerically defective.
inline constexpr double kDiagonalizableCondition = 1e8;

struct EigenDecomposition {
    CMatrix vectors;   // columns are eigenvectors
    CVector values;
    CMatrix inverse;   // inverse of `vectors`; empty when condition is infinite
    double condition;  // 2-norm condition number of `vectors`

    bool diagonalizable() const { return condition <= kDiagonalizableCondition; }
    bool real_spectrum() const { return values.imag().cwiseAbs().maxCoeff() == 0.0; }
};

EigenDecomposition eigen_decompose(const Matrix& m);

/// Real part of `m`, after checking the imaginary part is below 1e-10 relative.
Matrix checked_real(const CMatrix& m);

/// Matrix exponential. Uses the eigendecomposition when the eigenvector matrix is
/// well conditioned, otherwise scaling and squaring of a Taylor polynomial.
Matrix expm(const Matrix& m);
Matrix expm_scaling_squaring(const Matrix& m);

/// Principal fractional power O diag(lambda^p) O^{-1}. Requires a diagonalizable
/// matrix whose eigenvalues all have strictly positive real part.
Matrix fractional_power(const Matrix& m, double p);

/// Solves Q X + X Q^T = W through the d^2 x d^2 Kronecker system
/// (I (x) Q + Q (x) I) vec(X) = vec(W).
Matrix lyapunov_solve(const Matrix& q, const Matrix& w);

Matrix kron(const Matrix& a, const Matrix& b);

/// Half-vectorization: lower triangle, column by column, diagonal included.
Vector vech(const Matrix& m);
Matrix unvech(const Vector& v, int d);

constexpr int vech_size(int d) { return d * (d + 1) / 2; }

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace supou

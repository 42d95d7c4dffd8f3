#include "supou/matfun.hpp"

#include <cmath>
#include <limits>

namespace supou {

EigenDecomposition eigen_decompose(const Matrix& m) {
    if (m.rows() != m.cols()) throw DomainError("eigendecomposition of a non-square matrix");
    Eigen::EigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success) throw DomainError("eigenvalue iteration did not converge");

    EigenDecomposition out;
    out.vectors = es.eigenvectors();
    out.values = es.eigenvalues();

    Eigen::JacobiSVD<CMatrix> svd(out.vectors);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    out.condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    if (std::isfinite(out.condition)) out.inverse = out.vectors.inverse();
    return out;
}

Matrix checked_real(const CMatrix& m) {
    const double scale = std::max(1.0, m.real().norm());
    const double imag = m.size() ? m.imag().cwiseAbs().maxCoeff() : 0.0;
    if (imag > 1e-10 * scale) {
        throw DomainError("matrix function has a non-negligible imaginary part (" +
                          std::to_string(imag) + ")");
    }
    return m.real();
}

Matrix expm_scaling_squaring(const Matrix& m) {
    const auto n = m.rows();
    const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Matrix a = m / std::ldexp(1.0, squarings);

    Matrix result = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k <= 30; ++k) {
        term = term * a / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18 * result.cwiseAbs().maxCoeff()) break;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

Matrix expm(const Matrix& m) {
    if (m.rows() != m.cols()) throw DomainError("expm of a non-square matrix");
    if (!m.allFinite()) throw DomainError("expm of a non-finite matrix");
    const EigenDecomposition ed = eigen_decompose(m);
    if (!ed.diagonalizable()) return expm_scaling_squaring(m);
    const CVector e = ed.values.array().exp();
    return checked_real(ed.vectors * e.asDiagonal() * ed.inverse);
}

Matrix fractional_power(const Matrix& m, double p) {
    const EigenDecomposition ed = eigen_decompose(m);
    if (!ed.diagonalizable()) {
        throw DomainError("fractional power of a non-diagonalizable matrix (condition " +
                          std::to_string(ed.condition) + ")");
    }
    if (ed.values.real().minCoeff() <= 0.0) {
        throw DomainError("fractional power needs eigenvalues with positive real part");
    }
    CVector powered(ed.values.size());
    for (Eigen::Index i = 0; i < powered.size(); ++i) powered(i) = std::pow(ed.values(i), p);
    return checked_real(ed.vectors * powered.asDiagonal() * ed.inverse);
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix lyapunov_solve(const Matrix& q, const Matrix& w) {
    if (q.rows() != q.cols() || w.rows() != q.rows() || w.cols() != q.cols())
        throw DomainError("lyapunov_solve: dimension mismatch");
    const auto d = q.rows();
    // The operator X -> QX + XQ^T has eigenvalues lambda_i + lambda_j.
    const CVector ev = Eigen::EigenSolver<Matrix>(q, false).eigenvalues();
    const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j)
            if (std::abs(ev(i) + ev(j)) <= 1e-12 * scale)
                throw DomainError("Lyapunov operator is singular; mean reversion matrix is not stable");
    const Matrix id = Matrix::Identity(d, d);
    const Matrix system = kron(id, q) + kron(q, id);

    Eigen::PartialPivLU<Matrix> lu(system);
    if (!(lu.rcond() > 1e-13)) {
        throw DomainError("Lyapunov operator is singular; mean reversion matrix is not stable");
    }
    const Vector rhs = Eigen::Map<const Vector>(w.data(), w.size());
    const Vector x = lu.solve(rhs);
    return Eigen::Map<const Matrix>(x.data(), d, d);
}

Vector vech(const Matrix& m) {
    if (m.rows() != m.cols()) throw DomainError("vech of a non-square matrix");
    const int d = static_cast<int>(m.rows());
    const double tol = 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
    Vector out(vech_size(d));
    int k = 0;
    for (int j = 0; j < d; ++j) {
        for (int i = j; i < d; ++i) {
            if (std::abs(m(i, j) - m(j, i)) > tol) throw DomainError("vech of an asymmetric matrix");
            out(k++) = m(i, j);
        }
    }
    return out;
}

Matrix unvech(const Vector& v, int d) {
    if (v.size() != vech_size(d)) throw DomainError("unvech: length does not match dimension");
    Matrix out(d, d);
    int k = 0;
    for (int j = 0; j < d; ++j) {
        for (int i = j; i < d; ++i) {
            out(i, j) = v(k);
            out(j, i) = v(k);
            ++k;
        }
    }
    return out;
}

}  // namespace supou

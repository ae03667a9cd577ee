#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <vector>

namespace sida {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

/// Maximum absolute row sum, the matrix infinity norm.
template <class Derived>
double max_abs_row_sum(const Eigen::MatrixBase<Derived>& m)
{
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

inline Matrix symmetrized(const Matrix& m)
{
    return 0.5 * (m + m.transpose());
}

/// Flips each column so that its largest-magnitude entry is positive. Ties
/// resolve to the first such entry so the result is deterministic.
inline void canonicalize_signs(Matrix& m)
{
    for (Index j = 0; j < m.cols(); ++j) {
        Index best = 0;
        double best_abs = -1.0;
        for (Index i = 0; i < m.rows(); ++i) {
            const double a = std::abs(m(i, j));
            if (a > best_abs) {
                best_abs = a;
                best = i;
            }
        }
        if (m.rows() > 0 && m(best, j) < 0.0) m.col(j) = -m.col(j);
    }
}

/// Frobenius distance between `next` and `prev` after flipping columns of
/// `next` that point away from the matching column of `prev`.
inline double sign_aligned_distance(const Matrix& next, const Matrix& prev)
{
    double sq = 0.0;
    for (Index j = 0; j < next.cols(); ++j) {
        const double s = next.col(j).dot(prev.col(j)) < 0.0 ? -1.0 : 1.0;
        sq += (s * next.col(j) - prev.col(j)).squaredNorm();
    }
    return std::sqrt(sq);
}

struct EigenPairs {
    Vector values;   // descending
    Matrix vectors;  // orthonormal columns, canonical signs
};

/// Leading r eigenpairs of a symmetric matrix.
inline EigenPairs top_eigenpairs(const Matrix& sym, Index r)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    const Index p = sym.rows();
    r = std::min(r, p);
    EigenPairs out;
    out.values.resize(r);
    out.vectors.resize(p, r);
    for (Index k = 0; k < r; ++k) {
        out.values(k) = es.eigenvalues()(p - 1 - k);
        out.vectors.col(k) = es.eigenvectors().col(p - 1 - k);
    }
    canonicalize_signs(out.vectors);
    return out;
}

/**
 * Leading r eigenpairs of L * L^T without forming the p x p product.
 *
 * With the thin QR factorization L = Q R, L L^T = Q (R R^T) Q^T, so the
 * eigenvectors are Q times those of the small m x m matrix R R^T. Requires
 * r <= L.cols(). The returned vectors are orthonormal to machine precision
 * even when L is rank deficient.
 */
inline EigenPairs top_eigenpairs_factored(const Matrix& factor, Index r)
{
    const Index p = factor.rows();
    const Index m = factor.cols();
    Eigen::HouseholderQR<Matrix> qr(factor);
    const Index k = std::min(p, m);
    Matrix q = qr.householderQ() * Matrix::Identity(p, k);
    Matrix rr = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    Matrix small = rr * rr.transpose();
    EigenPairs inner = top_eigenpairs(symmetrized(small), std::min(r, k));
    EigenPairs out;
    out.values = inner.values;
    out.vectors = q * inner.vectors;
    canonicalize_signs(out.vectors);
    return out;
}

/// Orthonormal basis of the orthogonal complement of the columns of `basis`
/// (which must be orthonormal), `count` columns, built deterministically
/// from the standard basis.
inline Matrix orthonormal_complement(const Matrix& basis, Index p, Index count)
{
    Matrix out(p, count);
    Index filled = 0;
    for (Index e = 0; e < p && filled < count; ++e) {
        Vector v = Vector::Unit(p, e);
        for (int pass = 0; pass < 2; ++pass) {
            if (basis.cols() > 0) v -= basis * (basis.transpose() * v);
            if (filled > 0) v -= out.leftCols(filled) * (out.leftCols(filled).transpose() * v);
        }
        const double nv = v.norm();
        if (nv > 1e-8) out.col(filled++) = v / nv;
    }
    return out.leftCols(filled);
}

/// Cosines of the principal angles between the column spaces of two matrices
/// with orthonormal columns, in descending order.
inline Vector principal_angle_cosines(const Matrix& a, const Matrix& b)
{
    Eigen::JacobiSVD<Matrix> svd(a.transpose() * b);
    return svd.singularValues().cwiseMin(1.0);
}

} // namespace sida

#pragma once

#include "error.hpp"
#include "linalg.hpp"
#include "log.hpp"
#include "scatter.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace sida {

/// Relative eigenvalue level below which a direction counts as degenerate.
inline constexpr double kDegenerateEigenvalue = 1e-10;

/// Modified Gram-Schmidt with column pivoting. Columns whose residual norm
/// falls below 1e-12 are left zero; nonzero output columns are orthonormal.
/// Output column j corresponds to input column j.
inline Matrix gram_schmidt(const Matrix& g)
{
    const Index r = g.cols();
    Matrix q = g;
    Matrix out = Matrix::Zero(g.rows(), r);
    std::vector<bool> done(static_cast<std::size_t>(r), false);
    for (Index step = 0; step < r; ++step) {
        // Pivot: the remaining column with the largest residual norm.
        Index best = -1;
        double best_norm = -1.0;
        for (Index j = 0; j < r; ++j) {
            if (done[static_cast<std::size_t>(j)]) continue;
            const double nj = q.col(j).norm();
            if (nj > best_norm) {
                best_norm = nj;
                best = j;
            }
        }
        done[static_cast<std::size_t>(best)] = true;
        if (best_norm < 1e-12) continue;
        Vector v = q.col(best) / best_norm;
        // Reorthogonalize once against accepted columns to stay at machine precision.
        for (Index j = 0; j < r; ++j) {
            if (j == best || out.col(j).squaredNorm() == 0.0) continue;
            v -= out.col(j).dot(v) * out.col(j);
        }
        const double nv = v.norm();
        if (nv < 1e-12) continue;
        v /= nv;
        out.col(best) = v;
        for (Index j = 0; j < r; ++j)
            if (!done[static_cast<std::size_t>(j)]) q.col(j) -= v.dot(q.col(j)) * v;
    }
    return out;
}

struct LdaDirections {
    Matrix directions;   // p x r, orthonormal columns
    Vector eigenvalues;  // descending, generalized eigenvalues of (S_b, S_w)
    bool degenerate = false;
};

namespace detail {

inline LdaDirections lda_from_whitened(const Matrix& w, const EigenPairs& whitened, Index r)
{
    const Index p = w.rows();
    LdaDirections out;
    out.eigenvalues = whitened.values;
    const double top = out.eigenvalues.size() ? out.eigenvalues(0) : 0.0;
    Index usable = 0;
    while (usable < out.eigenvalues.size() && top > 0.0 &&
           out.eigenvalues(usable) > kDegenerateEigenvalue * top)
        ++usable;
    out.degenerate = usable < r;

    Matrix dirs = Matrix::Zero(p, r);
    if (usable > 0) {
        Matrix mapped = w * whitened.vectors.leftCols(usable);
        dirs.leftCols(usable) = gram_schmidt(mapped);
    }
    // Fill degenerate or lost columns with an orthonormal complement.
    Index good = 0;
    Matrix kept(p, r);
    for (Index j = 0; j < r; ++j)
        if (dirs.col(j).squaredNorm() > 0.5) kept.col(good++) = dirs.col(j);
    if (good < r) {
        Matrix comp = orthonormal_complement(kept.leftCols(good), p, r - good);
        dirs.leftCols(good) = kept.leftCols(good);
        dirs.rightCols(r - good) = comp;
    }
    canonicalize_signs(dirs);
    out.directions = dirs;
    return out;
}

} // namespace detail

/**
 * Classical LDA directions: the top r eigenvectors of
 * S_w^{-1/2} S_b S_w^{-1/2} mapped back through S_w^{-1/2} and
 * orthonormalized. `sw` must already be regularized (positive definite).
 * When fewer than r directions carry separation the remainder is an
 * arbitrary orthonormal complement and `degenerate` is set.
 */
inline LdaDirections lda_directions(const Matrix& sw, const Matrix& sb, Index r)
{
    require(sw.rows() == sb.rows() && sw.rows() == sw.cols(), "S_w and S_b must be square and conformable");
    require(r >= 1 && r <= sw.rows(), "LDA rank must be in 1..p");
    const InverseSqrt inv = regularized_inv_sqrt(sw, Ridge::fixed(0.0));
    const Matrix m = symmetrized(inv.w * sb * inv.w);
    return detail::lda_from_whitened(inv.w, top_eigenpairs(m, r), r);
}

/// Same as lda_directions(), reusing the whitening already held by `scat`.
inline LdaDirections lda_directions(const ScatterSet& scat, Index d, Index r)
{
    const auto& w = scat.w[static_cast<std::size_t>(d)];
    require(r >= 1 && r <= w.rows(), "LDA rank must be in 1..p");
    const auto& g = scat.m_factor[static_cast<std::size_t>(d)];
    EigenPairs e = g.cols() >= r ? top_eigenpairs_factored(g, r) : top_eigenpairs(scat.m[static_cast<std::size_t>(d)], r);
    return detail::lda_from_whitened(w, e, r);
}

/// Weights c1 = rho and c2 = 2 (1 - rho) / (D (D - 1)) of the separation and
/// association terms.
struct TermWeights {
    double separation;
    double association;
};

inline TermWeights term_weights(double rho, Index num_views)
{
    require(rho >= 0.0 && rho <= 1.0, "rho must lie in [0, 1]");
    const double dd = static_cast<double>(num_views);
    return {rho, num_views > 1 ? 2.0 * (1.0 - rho) / (dd * (dd - 1.0)) : 0.0};
}

/**
 * Dense coefficient matrix of view d's eigensystem:
 *   C_d = c1 (M_d + M_d^T) + c2 sum_{j != d} (N_dj G_j G_j^T N_jd + its transpose)
 */
inline Matrix assemble_coefficient(Index d, const ScatterSet& scat, const std::vector<Matrix>& gammas, double rho)
{
    const TermWeights c = term_weights(rho, scat.num_views());
    const auto& m = scat.m[static_cast<std::size_t>(d)];
    Matrix out = c.separation * (m + m.transpose());
    if (c.association != 0.0) {
        for (Index j = 0; j < scat.num_views(); ++j) {
            if (j == d) continue;
            const Matrix ng = scat.n_times(d, j, gammas[static_cast<std::size_t>(j)]);
            const Matrix term = ng * ng.transpose();
            out += c.association * (term + term.transpose());
        }
    }
    return symmetrized(out);
}

/**
 * Factor L with L L^T = C_d. Columns are sqrt(2 c1) G_d followed by
 * sqrt(2 c2) N_dj Gamma_j for each j != d. C_d has rank at most
 * K + (D - 1) r, so its leading eigenpairs come from L at O(p m^2) cost.
 */
inline Matrix coefficient_factor(Index d, const ScatterSet& scat, const std::vector<Matrix>& gammas, double rho)
{
    const TermWeights c = term_weights(rho, scat.num_views());
    const auto& g = scat.m_factor[static_cast<std::size_t>(d)];
    Index cols = g.cols();
    if (c.association != 0.0)
        for (Index j = 0; j < scat.num_views(); ++j)
            if (j != d) cols += gammas[static_cast<std::size_t>(j)].cols();
    Matrix l(g.rows(), cols);
    l.leftCols(g.cols()) = std::sqrt(2.0 * c.separation) * g;
    Index at = g.cols();
    if (c.association != 0.0) {
        const double s = std::sqrt(2.0 * c.association);
        for (Index j = 0; j < scat.num_views(); ++j) {
            if (j == d) continue;
            const auto& gj = gammas[static_cast<std::size_t>(j)];
            l.middleCols(at, gj.cols()) = s * scat.n_times(d, j, gj);
            at += gj.cols();
        }
    }
    return l;
}

/**
 * Integrative objective
 *   rho sum_d tr(G_d^T M_d G_d) + c2 sum_{d < j} tr(G_d^T N_dj G_j G_j^T N_jd G_d).
 * The association sum runs over unordered pairs, matching the 2 / (D (D - 1))
 * normalization. With it tr(G_d^T C_d G_d) / 2 is exactly the part of the
 * objective that depends on G_d, so each block update maximizes it.
 */
inline double integrative_objective(const ScatterSet& scat, const std::vector<Matrix>& gammas, double rho)
{
    const TermWeights c = term_weights(rho, scat.num_views());
    double f = 0.0;
    for (Index d = 0; d < scat.num_views(); ++d) {
        const Matrix gm = scat.m_factor[static_cast<std::size_t>(d)].transpose() * gammas[static_cast<std::size_t>(d)];
        f += c.separation * gm.squaredNorm();
        if (c.association == 0.0) continue;
        for (Index j = d + 1; j < scat.num_views(); ++j) {
            const Matrix t = gammas[static_cast<std::size_t>(d)].transpose() *
                             scat.n_times(d, j, gammas[static_cast<std::size_t>(j)]);
            f += c.association * t.squaredNorm();
        }
    }
    return f;
}

enum class GevInit { lda, random };

struct GevOptions {
    double eps = 1e-6;
    int max_iter = 200;
    GevInit init = GevInit::lda;
    unsigned long long seed = 0;
};

struct GevSolution {
    std::vector<Matrix> gamma;             // p_d x r, orthonormal columns
    std::vector<Vector> lambda;            // r eigenvalues, descending
    std::vector<std::vector<bool>> degenerate;
    std::vector<double> residuals;         // ||C G - G L||_F / ||C||_F per view
    std::vector<double> objective_trace;   // objective after each sweep
    int iterations = 0;
    bool converged = false;
};

/// Seeded random matrix with orthonormal columns.
inline Matrix random_orthonormal(Index p, Index r, unsigned long long seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix a(p, r);
    for (Index j = 0; j < r; ++j)
        for (Index i = 0; i < p; ++i) a(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ() * Matrix::Identity(p, r);
    canonicalize_signs(q);
    return q;
}

/// Leading eigenpairs of C_d given the other views' current matrices.
inline EigenPairs view_eigensystem(Index d, const ScatterSet& scat, const std::vector<Matrix>& gammas, double rho,
                                   Index r)
{
    const Matrix l = coefficient_factor(d, scat, gammas, rho);
    if (l.cols() >= r) return top_eigenpairs_factored(l, r);
    return top_eigenpairs(assemble_coefficient(d, scat, gammas, rho), r);
}

/// ||C_d G - G L||_F / ||C_d||_F using the factored form of C_d.
inline double stationarity_residual(const Matrix& factor, const Matrix& g, const Vector& lambda)
{
    const Matrix cg = factor * (factor.transpose() * g);
    const double c_norm = (factor.transpose() * factor).norm();
    if (c_norm == 0.0) return 0.0;
    return (cg - g * lambda.asDiagonal()).norm() / c_norm;
}

inline std::vector<Matrix> initial_gammas(const ScatterSet& scat, Index r, const GevOptions& opts)
{
    std::vector<Matrix> g;
    for (Index d = 0; d < scat.num_views(); ++d) {
        if (opts.init == GevInit::lda)
            g.push_back(lda_directions(scat, d, r).directions);
        else
            g.push_back(random_orthonormal(scat.dim(d), r, opts.seed + static_cast<unsigned long long>(d)));
    }
    return g;
}

/**
 * Nonsparse integrative directions by block-coordinate ascent: each sweep
 * replaces Gamma_d (d = 1..D in order) with the top-r eigenvectors of C_d
 * built from the other views' current matrices. Stops when the largest
 * sign-aligned Frobenius change is below eps. Every block update maximizes
 * the objective over that block, so the objective never decreases.
 */
inline GevSolution solve_gev(const ScatterSet& scat, double rho, Index r, const GevOptions& opts = {},
                             std::vector<Matrix> start = {})
{
    const Index views = scat.num_views();
    require(views >= 1, "solve_gev needs at least one view");
    require(r >= 1, "rank must be positive");
    for (Index d = 0; d < views; ++d) require(r <= scat.dim(d), "rank exceeds a view dimension");

    GevSolution sol;
    sol.gamma = start.empty() ? initial_gammas(scat, r, opts) : std::move(start);
    sol.lambda.assign(static_cast<std::size_t>(views), Vector::Zero(r));

    for (int it = 1; it <= opts.max_iter; ++it) {
        double change = 0.0;
        for (Index d = 0; d < views; ++d) {
            EigenPairs e = view_eigensystem(d, scat, sol.gamma, rho, r);
            change = std::max(change, sign_aligned_distance(e.vectors, sol.gamma[static_cast<std::size_t>(d)]));
            sol.gamma[static_cast<std::size_t>(d)] = std::move(e.vectors);
            sol.lambda[static_cast<std::size_t>(d)] = e.values;
        }
        sol.iterations = it;
        sol.objective_trace.push_back(integrative_objective(scat, sol.gamma, rho));
        if (change < opts.eps) {
            sol.converged = true;
            break;
        }
    }
    if (!sol.converged)
        warn("solve_gev did not converge in " + std::to_string(opts.max_iter) + " sweeps; returning last iterate");

    for (Index d = 0; d < views; ++d) {
        const Matrix l = coefficient_factor(d, scat, sol.gamma, rho);
        const Vector& lam = sol.lambda[static_cast<std::size_t>(d)];
        sol.residuals.push_back(stationarity_residual(l, sol.gamma[static_cast<std::size_t>(d)], lam));
        std::vector<bool> flags(static_cast<std::size_t>(r));
        const double top = lam.size() ? lam(0) : 0.0;
        for (Index k = 0; k < r; ++k) flags[static_cast<std::size_t>(k)] = !(top > 0.0 && lam(k) > kDegenerateEigenvalue * top);
        sol.degenerate.push_back(std::move(flags));
    }
    return sol;
}

} // namespace sida

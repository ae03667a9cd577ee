#pragma once

#include "error.hpp"
#include "graph.hpp"
#include "linalg.hpp"
#include "log.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace sida {

/**
 * Smallest-norm row gamma with sum_k |d_k - lambda_k gamma_k| <= tau.
 *
 * The minimizer has gamma_k = t_k d_k / lambda_k with t in [0, 1]^r, which
 * turns the problem into min sum_k t_k^2 d_k^2 / lambda_k^2 subject to
 * sum_k |d_k| t_k >= sum_k |d_k| - tau. Its KKT conditions give
 * t_k = min(1, mu lambda_k^2 / (2 |d_k|)); the multiplier mu is found exactly
 * by walking the sorted saturation breakpoints.
 */
inline Vector solve_row_sida(const Vector& d, const Vector& lambdas, double tau)
{
    require(d.size() == lambdas.size(), "row and eigenvalue lengths differ");
    require(tau >= 0.0, "tau must be non-negative");
    const Index r = d.size();
    for (Index k = 0; k < r; ++k) require(lambdas(k) > 0.0, "eigenvalues must be positive");

    if (tau == 0.0) return d.cwiseQuotient(lambdas);
    const double total = d.cwiseAbs().sum();
    if (total <= tau) return Vector::Zero(r);
    const double need = total - tau;

    std::vector<Index> active;
    for (Index k = 0; k < r; ++k)
        if (d(k) != 0.0) active.push_back(k);
    std::vector<double> brk(static_cast<std::size_t>(r), 0.0);
    double slope = 0.0;  // sum over unsaturated coordinates of lambda_k^2 / 2
    for (Index k : active) {
        brk[static_cast<std::size_t>(k)] = 2.0 * std::abs(d(k)) / (lambdas(k) * lambdas(k));
        slope += 0.5 * lambdas(k) * lambdas(k);
    }
    std::sort(active.begin(), active.end(), [&](Index a, Index b) {
        return brk[static_cast<std::size_t>(a)] < brk[static_cast<std::size_t>(b)];
    });

    double saturated = 0.0;  // sum of |d_k| over saturated coordinates
    double mu = std::numeric_limits<double>::infinity();
    for (Index k : active) {
        const double at = brk[static_cast<std::size_t>(k)];
        if (at * slope + saturated >= need) {
            mu = (need - saturated) / slope;
            break;
        }
        saturated += std::abs(d(k));
        slope -= 0.5 * lambdas(k) * lambdas(k);
    }

    Vector gamma = Vector::Zero(r);
    for (Index k : active) {
        const double t = std::isinf(mu) ? 1.0 : std::min(1.0, mu * lambdas(k) * lambdas(k) / (2.0 * std::abs(d(k))));
        gamma(k) = t * d(k) / lambdas(k);
    }
    return gamma;
}

/**
 * Euclidean projection of v onto {x : sum_k w_k |x_k - c_k| <= radius}.
 * Soft-thresholds v - c by theta w with theta chosen exactly from the sorted
 * breakpoints |v_k - c_k| / w_k.
 */
inline Vector project_weighted_l1(const Vector& v, const Vector& weights, const Vector& center, double radius)
{
    require(v.size() == weights.size() && v.size() == center.size(), "projection arguments differ in length");
    require(radius >= 0.0, "radius must be non-negative");
    const Index r = v.size();
    for (Index k = 0; k < r; ++k) require(weights(k) > 0.0, "projection weights must be positive");

    const Vector u = v - center;
    if (weights.cwiseProduct(u.cwiseAbs()).sum() <= radius) return v;
    if (radius == 0.0) return center;

    std::vector<Index> order(static_cast<std::size_t>(r));
    std::iota(order.begin(), order.end(), Index{0});
    auto ratio = [&](Index k) { return std::abs(u(k)) / weights(k); };
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return ratio(a) > ratio(b); });

    double sum_wu = 0.0;
    double sum_w2 = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Index k = order[i];
        sum_wu += weights(k) * std::abs(u(k));
        sum_w2 += weights(k) * weights(k);
        theta = (sum_wu - radius) / sum_w2;
        const double next = i + 1 < order.size() ? ratio(order[i + 1]) : 0.0;
        if (theta >= next) break;
    }
    theta = std::max(theta, 0.0);

    Vector x(r);
    for (Index k = 0; k < r; ++k) {
        const double mag = std::max(std::abs(u(k)) - theta * weights(k), 0.0);
        x(k) = center(k) + std::copysign(mag, u(k));
    }
    return x;
}

/// Options for the network-penalized splitting solver.
struct SidanetOptions {
    double penalty = 1.0;       // initial splitting parameter
    double rel_tol = 1e-7;
    double abs_tol = 1e-10;
    int max_iter = 5000;
    int balance_every = 10;     // residual balancing cadence
    int balance_until = 1000;   // last iteration that may rebalance; a fixed penalty afterwards keeps ADMM convergent
    double relaxation = 1.6;    // over-relaxation factor in [1, 2)
    double support_tol = 1e-5;  // relative row norm below which zero-feasible rows are cleared
};

/**
 * One view's sparse subproblem:
 *   min P(Gamma)  s.t.  ||D - Gamma diag(lambdas)||_inf <= tau
 * where D = C_d Gamma_tilde_d, ||.||_inf is the maximum absolute row sum and
 * P is the block l1/l2 penalty or, when a Laplacian is attached, the
 * network penalty eta sum ||row_i(L Gamma)|| + (1 - eta) sum ||row_i(Gamma)||.
 */
struct SparseSubproblem {
    Matrix target;    // D, p x r
    Vector lambdas;   // r
    double tau = 0.0;
    double eta = 0.5;
    std::optional<LaplacianMatrix> laplacian;
};

/// Nonzero rows: ||row_i|| > 1e-8 max_i ||row_i||.
inline std::vector<Index> selected_rows(const Matrix& g)
{
    std::vector<Index> out;
    if (g.rows() == 0) return out;
    const Vector norms = g.rowwise().norm();
    const double top = norms.maxCoeff();
    if (top <= 0.0) return out;
    for (Index i = 0; i < g.rows(); ++i)
        if (norms(i) > 1e-8 * top) out.push_back(i);
    return out;
}

/// Constraint value ||D - Gamma diag(lambdas)||_inf.
inline double constraint_violation(const Matrix& target, const Matrix& gamma, const Vector& lambdas)
{
    return max_abs_row_sum(target - gamma * lambdas.asDiagonal());
}

inline double block_penalty(const Matrix& g)
{
    return g.rowwise().norm().sum();
}

inline double network_penalty(const Matrix& g, const LaplacianMatrix& lap, double eta)
{
    const Matrix lg = lap.matrix * g;
    return eta * lg.rowwise().norm().sum() + (1.0 - eta) * g.rowwise().norm().sum();
}

namespace detail {

/// Columns whose eigenvalue is usable; the rest are solved as zero.
inline std::vector<Index> usable_columns(const Vector& lambdas)
{
    std::vector<Index> cols;
    const double top = lambdas.size() ? lambdas.maxCoeff() : 0.0;
    for (Index k = 0; k < lambdas.size(); ++k)
        if (top > 0.0 && lambdas(k) > 1e-10 * top) cols.push_back(k);
    return cols;
}

inline Matrix take_columns(const Matrix& m, const std::vector<Index>& cols)
{
    Matrix out(m.rows(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = m.col(cols[j]);
    return out;
}

inline Vector take_entries(const Vector& v, const std::vector<Index>& cols)
{
    Vector out(static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out(static_cast<Index>(j)) = v(cols[j]);
    return out;
}

inline Matrix scatter_columns(const Matrix& m, const std::vector<Index>& cols, Index total)
{
    Matrix out = Matrix::Zero(m.rows(), total);
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(cols[j]) = m.col(static_cast<Index>(j));
    return out;
}

inline void shrink_rows(Matrix& m, double threshold)
{
    for (Index i = 0; i < m.rows(); ++i) {
        const double nrm = m.row(i).norm();
        if (nrm <= threshold)
            m.row(i).setZero();
        else
            m.row(i) *= 1.0 - threshold / nrm;
    }
}

/// Projects every row onto its feasible set {g : sum_k lambda_k |g_k - D_ik / lambda_k| <= tau}.
inline void project_rows(Matrix& m, const Matrix& centers, const Vector& lambdas, double tau)
{
    for (Index i = 0; i < m.rows(); ++i)
        m.row(i) = project_weighted_l1(m.row(i).transpose(), lambdas, centers.row(i).transpose(), tau).transpose();
}

} // namespace detail

/// Block l1/l2 subproblem, solved exactly row by row.
inline Matrix solve_view_sida(const SparseSubproblem& sub)
{
    require(!sub.laplacian, "solve_view_sida does not take a Laplacian");
    require(sub.target.cols() == sub.lambdas.size(), "target columns must match eigenvalue count");
    require(sub.tau >= 0.0, "tau must be non-negative");
    const auto cols = detail::usable_columns(sub.lambdas);
    const Matrix d = detail::take_columns(sub.target, cols);
    const Vector lam = detail::take_entries(sub.lambdas, cols);
    Matrix g(d.rows(), d.cols());
    for (Index i = 0; i < d.rows(); ++i) g.row(i) = solve_row_sida(d.row(i).transpose(), lam, sub.tau).transpose();
    return detail::scatter_columns(g, cols, sub.target.cols());
}

struct SidanetResult {
    Matrix gamma;
    int iterations = 0;
    bool converged = false;
};

/**
 * Network-penalized subproblem by ADMM on the splitting
 *   Z1 = L Gamma (row shrinkage, weight eta),
 *   Z2 = Gamma   (row shrinkage, weight 1 - eta),
 *   Z3 = Gamma   (row-wise projection onto the constraint set).
 * The Gamma update solves (L^T L + 2 I) Gamma = rhs with a single sparse
 * factorization. The returned matrix is Z2 projected onto the feasible set,
 * so it keeps Z2's zero rows whenever zero is feasible.
 */
inline SidanetResult solve_view_sidanet_detailed(const SparseSubproblem& sub, const SidanetOptions& opts = {})
{
    require(sub.laplacian.has_value(), "solve_view_sidanet needs a Laplacian");
    require(sub.eta >= 0.0 && sub.eta <= 1.0, "eta must lie in [0, 1]");
    require(sub.tau >= 0.0, "tau must be non-negative");
    require(sub.target.cols() == sub.lambdas.size(), "target columns must match eigenvalue count");
    const SparseMatrix& lap = sub.laplacian->matrix;
    const Index p = sub.target.rows();
    require(lap.rows() == p && lap.cols() == p, "Laplacian size does not match the view dimension");

    const auto cols = detail::usable_columns(sub.lambdas);
    const Vector lam = detail::take_entries(sub.lambdas, cols);
    const Index r = lam.size();
    const Matrix d = detail::take_columns(sub.target, cols);
    const Matrix centers = d * lam.cwiseInverse().asDiagonal();

    SidanetResult res;
    if (r == 0) {
        res.gamma = Matrix::Zero(p, sub.target.cols());
        res.converged = true;
        return res;
    }
    if (sub.tau == 0.0) {
        res.gamma = detail::scatter_columns(centers, cols, sub.target.cols());
        res.converged = true;
        return res;
    }

    SparseMatrix system = SparseMatrix(lap.transpose()) * lap;
    SparseMatrix eye(p, p);
    eye.setIdentity();
    system += 2.0 * eye;
    Eigen::SimplicialLDLT<SparseMatrix> chol(system);
    if (chol.info() != Eigen::Success) fail(ErrorCode::singular, "SIDANet system factorization failed");

    // The problem is solved for Gamma / s with s the largest center row norm;
    // the penalty is 1-homogeneous, so only tau rescales.
    const double s = std::max(centers.rowwise().norm().maxCoeff(), std::numeric_limits<double>::min());
    const Matrix c = centers / s;
    const double tau = sub.tau / s;
    const SparseMatrix lap_t = lap.transpose();
    const double alpha = opts.relaxation;

    Matrix gamma = Matrix::Zero(p, r);
    detail::project_rows(gamma, c, lam, tau);
    Matrix z1 = lap * gamma, z2 = gamma, z3 = gamma;
    Matrix u1 = Matrix::Zero(p, r), u2 = Matrix::Zero(p, r), u3 = Matrix::Zero(p, r);
    Matrix lg(p, r), h1(p, r), h2(p, r), h3(p, r), z1_old(p, r), z2_old(p, r), z3_old(p, r);
    double rho = opts.penalty;

    for (int it = 1; it <= opts.max_iter; ++it) {
        gamma = chol.solve(lap_t * (z1 - u1) + (z2 - u2) + (z3 - u3));
        lg = lap * gamma;
        h1 = alpha * lg + (1.0 - alpha) * z1;
        h2 = alpha * gamma + (1.0 - alpha) * z2;
        h3 = alpha * gamma + (1.0 - alpha) * z3;

        z1_old = z1;
        z2_old = z2;
        z3_old = z3;
        z1 = h1 + u1;
        detail::shrink_rows(z1, sub.eta / rho);
        z2 = h2 + u2;
        detail::shrink_rows(z2, (1.0 - sub.eta) / rho);
        z3 = h3 + u3;
        detail::project_rows(z3, c, lam, tau);

        u1 += h1 - z1;
        u2 += h2 - z2;
        u3 += h3 - z3;

        const double primal = std::sqrt((lg - z1).squaredNorm() + (gamma - z2).squaredNorm() + (gamma - z3).squaredNorm());
        const double dual = rho * (lap_t * (z1 - z1_old) + (z2 - z2_old) + (z3 - z3_old)).norm();
        const double x_norm = std::sqrt(lg.squaredNorm() + 2.0 * gamma.squaredNorm());
        const double z_norm = std::sqrt(z1.squaredNorm() + z2.squaredNorm() + z3.squaredNorm());
        // Each block's dual is scaled separately: their sum vanishes at the
        // optimum because Gamma carries no smooth term.
        const double u_norm = rho * std::sqrt((lap_t * u1).squaredNorm() + u2.squaredNorm() + u3.squaredNorm());
        const double eps_primal = opts.abs_tol + opts.rel_tol * std::max(x_norm, z_norm);
        const double eps_dual = opts.abs_tol + opts.rel_tol * u_norm;
        res.iterations = it;
        if (primal < eps_primal && dual < eps_dual) {
            res.converged = true;
            break;
        }

        if (opts.balance_every > 0 && it <= opts.balance_until && it % opts.balance_every == 0) {
            if (primal > 10.0 * dual) {
                rho *= 2.0;
                u1 /= 2.0, u2 /= 2.0, u3 /= 2.0;
            } else if (dual > 10.0 * primal) {
                rho /= 2.0;
                u1 *= 2.0, u2 *= 2.0, u3 *= 2.0;
            }
        }
    }
    if (!res.converged)
        warn("SIDANet subproblem stopped after " + std::to_string(opts.max_iter) + " iterations without converging");

    // Rows whose exact value is zero approach it only linearly, so at the
    // stopping tolerance some linger as tiny nonzero rows. Those below
    // support_tol relative to the largest row are cleared when zero is
    // feasible for them in the original units.
    Matrix out = z2;
    detail::project_rows(out, c, lam, tau);
    const Vector norms = out.rowwise().norm();
    const double cutoff = opts.support_tol * norms.maxCoeff();
    for (Index i = 0; i < p; ++i)
        if ((z2.row(i).isZero(0.0) || norms(i) <= cutoff) && d.row(i).cwiseAbs().sum() <= sub.tau) out.row(i).setZero();
    res.gamma = detail::scatter_columns(out * s, cols, sub.target.cols());
    return res;
}

inline Matrix solve_view_sidanet(const SparseSubproblem& sub, const SidanetOptions& opts = {})
{
    return solve_view_sidanet_detailed(sub, opts).gamma;
}

} // namespace sida

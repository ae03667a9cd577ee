#pragma once

// Slow reference solvers used only by tests. They share no code with the
// library solvers beyond the weighted-l1 projection, which is itself checked
// against projection_oracle().

#include "test_support.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace sida::testing {

/// Top-r generalized eigenpairs of (sb, sw) from Eigen's dense solver.
inline std::pair<Vector, Matrix> dense_gev(const Matrix& sb, const Matrix& sw, Index r)
{
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(sb, sw);
    const Index p = sb.rows();
    Vector values(r);
    Matrix vectors(p, r);
    for (Index k = 0; k < r; ++k) {
        values(k) = es.eigenvalues()(p - 1 - k);
        vectors.col(k) = es.eigenvectors().col(p - 1 - k);
    }
    return {values, vectors};
}

/// Row problem min ||g|| s.t. sum_k |d_k - lambda_k g_k| <= tau by repeated
/// grid search over the box around d / lambda that contains the feasible set.
inline Vector row_grid_oracle(const Vector& d, const Vector& lambdas, double tau, int points = 21, int levels = 60)
{
    const Index r = d.size();
    const Vector center = d.cwiseQuotient(lambdas);
    auto feasible = [&](const Vector& g) { return (d - lambdas.cwiseProduct(g)).cwiseAbs().sum() <= tau * (1.0 + 1e-12); };
    if (feasible(Vector::Zero(r))) return Vector::Zero(r);

    Vector best = center;
    Vector half = (Vector::Constant(r, tau)).cwiseQuotient(lambdas);
    Vector mid = center;
    std::vector<int> idx(static_cast<std::size_t>(r), 0);
    for (int level = 0; level < levels; ++level) {
        double best_norm = feasible(best) ? best.norm() : std::numeric_limits<double>::infinity();
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            Vector g(r);
            for (Index k = 0; k < r; ++k)
                g(k) = mid(k) - half(k) + 2.0 * half(k) * idx[static_cast<std::size_t>(k)] / (points - 1);
            if (feasible(g)) {
                const double nrm = g.norm();
                if (nrm < best_norm) {
                    best_norm = nrm;
                    best = g;
                }
            }
            Index k = 0;
            while (k < r && ++idx[static_cast<std::size_t>(k)] == points) idx[static_cast<std::size_t>(k++)] = 0;
            if (k == r) break;
        }
        mid = best;
        half *= 0.5;
    }
    return best;
}

/// Projection onto {x : sum_k w_k |x_k - c_k| <= radius} by bisection on the
/// multiplier of the dual problem.
inline Vector projection_oracle(const Vector& v, const Vector& w, const Vector& c, double radius)
{
    const Vector u = v - c;
    auto shrink = [&](double theta) {
        Vector x(u.size());
        for (Index k = 0; k < u.size(); ++k)
            x(k) = std::copysign(std::max(std::abs(u(k)) - theta * w(k), 0.0), u(k));
        return x;
    };
    auto weighted = [&](const Vector& x) { return w.cwiseProduct(x.cwiseAbs()).sum(); };
    if (weighted(u) <= radius) return v;
    double lo = 0.0, hi = u.cwiseAbs().cwiseQuotient(w).maxCoeff();
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (weighted(shrink(mid)) > radius ? lo : hi) = mid;
    }
    return c + shrink(hi);
}

/// eta sum ||row_i(L G)|| + (1 - eta) sum ||row_i(G)||.
inline double sidanet_objective(const Matrix& g, const Matrix& lap, double eta)
{
    return eta * (lap * g).rowwise().norm().sum() + (1.0 - eta) * g.rowwise().norm().sum();
}

/**
 * Network-penalized problem by accelerated projected gradient on the
 * Huber-smoothed objective (smoothing width mu), with function-value
 * restarts. Every iterate is projected row by row onto the constraint set,
 * so the result is feasible; its true objective is within about
 * mu * 2p / 2 of the optimum once the iteration has converged.
 */
inline Matrix sidanet_oracle(const Matrix& target, const Vector& lambdas, double tau, const Matrix& lap, double eta,
                             long iterations = 1000000, double mu = 1e-7)
{
    const Index p = target.rows(), r = target.cols();
    const Matrix centers = target * lambdas.cwiseInverse().asDiagonal();
    auto project = [&](Matrix& g) {
        for (Index i = 0; i < p; ++i)
            g.row(i) = project_weighted_l1(g.row(i).transpose(), lambdas, centers.row(i).transpose(), tau).transpose();
    };
    auto huber = [&](const Matrix& z, Matrix& grad) {
        double f = 0.0;
        for (Index i = 0; i < z.rows(); ++i) {
            const double n = z.row(i).norm();
            if (n <= mu) {
                f += n * n / (2.0 * mu);
                grad.row(i) = z.row(i) / mu;
            } else {
                f += n - 0.5 * mu;
                grad.row(i) = z.row(i) / n;
            }
        }
        return f;
    };
    const double lap_norm = lap.size() ? Eigen::JacobiSVD<Matrix>(lap).singularValues()(0) : 0.0;
    const double lipschitz = (eta * lap_norm * lap_norm + (1.0 - eta)) / mu;
    const double step = 1.0 / std::max(lipschitz, 1e-300);

    Matrix x = Matrix::Zero(p, r);
    project(x);
    Matrix y = x, x_prev = x, g1(p, r), g2(p, r);
    double t = 1.0, f_prev = std::numeric_limits<double>::infinity();
    for (long it = 0; it < iterations; ++it) {
        const Matrix ly = lap * y;
        huber(ly, g1);
        huber(y, g2);
        Matrix grad = eta * lap.transpose() * g1 + (1.0 - eta) * g2;
        x_prev = x;
        x = y - step * grad;
        project(x);
        Matrix dummy(p, r);
        const double f = eta * huber(lap * x, dummy) + (1.0 - eta) * huber(x, dummy);
        if (f > f_prev) {
            // Restart the momentum when the smoothed objective goes up.
            t = 1.0;
            y = x;
        } else {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = x + ((t - 1.0) / t_next) * (x - x_prev);
            t = t_next;
        }
        f_prev = f;
    }
    return x;
}

/// Random row instance: r-vector target, eigenvalues in [0.2, 3], tau a random
/// fraction of the zero threshold.
struct RowInstance {
    Vector d;
    Vector lambdas;
    double tau;
};

inline RowInstance random_row_instance(Index r, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    RowInstance inst{random_vector(r, rng, 1.5), Vector(r), 0.0};
    for (Index k = 0; k < r; ++k) inst.lambdas(k) = 0.2 + 2.8 * unit(rng);
    inst.tau = unit(rng) * 1.2 * inst.d.cwiseAbs().sum();
    return inst;
}

/// Random connected-ish graph on p vertices plus the normalized Laplacian.
inline LaplacianMatrix random_laplacian(Index p, std::mt19937_64& rng, double density = 0.3)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ViewGraph g(p);
    for (Index u = 1; u <= p; ++u)
        for (Index v = u + 1; v <= p; ++v)
            if (unit(rng) < density) g.add_edge(u, v, 0.5 + unit(rng));
    return build_normalized_laplacian(g);
}

inline LaplacianMatrix star_laplacian(Index p)
{
    ViewGraph g(p);
    for (Index v = 2; v <= p; ++v) g.add_edge(1, v, 1.0);
    return build_normalized_laplacian(g);
}

/// Random subproblem whose rows share a smooth signal so the graph matters.
inline SparseSubproblem random_subproblem(Index p, Index r, std::mt19937_64& rng, double tau_fraction)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SparseSubproblem sub;
    sub.target = random_matrix(p, r, rng);
    sub.lambdas.resize(r);
    for (Index k = 0; k < r; ++k) sub.lambdas(k) = 0.5 + 1.5 * unit(rng);
    sub.tau = tau_fraction * max_abs_row_sum(sub.target);
    return sub;
}

} // namespace sida::testing

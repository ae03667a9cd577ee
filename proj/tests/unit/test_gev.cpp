#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace sida;
using sida::testing::random_matrix;
using sida::testing::synthetic_scatter_set;
using sida::testing::dense_gev;

namespace {

bool orthonormal(const Matrix& g, double tol)
{
    return (g.transpose() * g - Matrix::Identity(g.cols(), g.cols())).cwiseAbs().maxCoeff() < tol;
}

} // namespace

TEST(GramSchmidt, OrthonormalWithSameSpan)
{
    std::mt19937_64 rng(1);
    const Matrix a = random_matrix(8, 3, rng);
    const Matrix q = gram_schmidt(a);
    EXPECT_TRUE(orthonormal(q, 1e-14));
    // Every input column lies in the output span.
    EXPECT_LT((a - q * (q.transpose() * a)).norm(), 1e-12);
}

TEST(GramSchmidt, DependentColumnIsLeftZero)
{
    std::mt19937_64 rng(2);
    Matrix a = random_matrix(6, 3, rng);
    a.col(2) = 2.0 * a.col(0) - a.col(1);
    const Matrix q = gram_schmidt(a);
    int zero_cols = 0;
    for (Index j = 0; j < 3; ++j) zero_cols += q.col(j).isZero(0.0) ? 1 : 0;
    EXPECT_EQ(zero_cols, 1);
}

TEST(LdaDirections, SphericalClassesGiveMeanDifference)
{
    Vector delta(2);
    delta << 3.0, -1.0;
    const LdaDirections lda = lda_directions(Matrix::Identity(2, 2), delta * delta.transpose(), 1);
    const double cosine = std::abs(lda.directions.col(0).dot(delta.normalized()));
    EXPECT_GT(cosine, std::cos(1e-6));
    EXPECT_FALSE(lda.degenerate);
}

TEST(LdaDirections, AnisotropicClassesGiveFisherDirection)
{
    std::mt19937_64 rng(3);
    const Matrix sw = sida::testing::random_spd(4, rng);
    const Vector delta = sida::testing::random_vector(4, rng);
    const LdaDirections lda = lda_directions(sw, delta * delta.transpose(), 1);
    const Vector fisher = sw.ldlt().solve(delta).normalized();
    EXPECT_NEAR(std::abs(lda.directions.col(0).dot(fisher)), 1.0, 1e-10);
}

TEST(LdaDirections, ZeroBetweenScatterIsDegenerate)
{
    const LdaDirections lda = lda_directions(Matrix::Identity(4, 4), Matrix::Zero(4, 4), 2);
    EXPECT_TRUE(lda.degenerate);
    EXPECT_TRUE(orthonormal(lda.directions, 1e-12));
}

TEST(LdaDirections, MatchesDenseGeneralizedEigensolver)
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix sw = sida::testing::random_spd(5, rng);
        const Matrix b = random_matrix(5, 2, rng);
        const Matrix sb = b * b.transpose();
        const LdaDirections lda = lda_directions(sw, sb, 2);
        const auto [values, vectors] = dense_gev(sb, sw, 2);
        EXPECT_LT((lda.eigenvalues.head(2) - values).cwiseAbs().maxCoeff(), 1e-8 * values(0));
        EXPECT_TRUE(orthonormal(lda.directions, 1e-12));
        const Vector cosines = principal_angle_cosines(lda.directions, gram_schmidt(vectors));
        EXPECT_GT(cosines.minCoeff(), 1.0 - 1e-10);
        // Projected class-mean spread follows the eigenvalue order.
        const Vector v0 = vectors.col(0), v1 = vectors.col(1);
        EXPECT_GE(v0.dot(sb * v0) / v0.dot(sw * v0), v1.dot(sb * v1) / v1.dot(sw * v1) - 1e-10);
    }
}

TEST(LdaDirections, ScatterSetOverloadAgrees)
{
    std::mt19937_64 rng(5);
    const ScatterSet s = synthetic_scatter_set({6}, 3, rng, false);
    const LdaDirections a = lda_directions(s, 0, 2);
    const LdaDirections b = lda_directions(s.sw[0], s.sb[0], 2);
    EXPECT_GT(principal_angle_cosines(a.directions, b.directions).minCoeff(), 1.0 - 1e-10);
    EXPECT_LT((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff(), 1e-9 * b.eigenvalues(0));
}

TEST(AssembleCoefficient, RhoOneIsTwiceM)
{
    std::mt19937_64 rng(6);
    const ScatterSet s = synthetic_scatter_set({5, 4}, 3, rng, true);
    const std::vector<Matrix> g = {random_matrix(5, 2, rng), random_matrix(4, 2, rng)};
    EXPECT_LT((assemble_coefficient(0, s, g, 1.0) - 2.0 * s.m[0]).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AssembleCoefficient, ZeroCrossIsTwoRhoM)
{
    std::mt19937_64 rng(7);
    const ScatterSet s = synthetic_scatter_set({5, 4}, 3, rng, false);
    const std::vector<Matrix> g = {random_matrix(5, 2, rng), random_matrix(4, 2, rng)};
    for (double rho : {0.0, 0.3, 0.5, 0.9})
        EXPECT_LT((assemble_coefficient(1, s, g, rho) - 2.0 * rho * s.m[1]).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AssembleCoefficient, MatchesTermByTermSum)
{
    std::mt19937_64 rng(8);
    const ScatterSet s = synthetic_scatter_set({4, 3, 5}, 3, rng, true);
    const std::vector<Matrix> g = {random_matrix(4, 2, rng), random_matrix(3, 2, rng), random_matrix(5, 2, rng)};
    const double rho = 0.4;
    const double c1 = rho, c2 = 2.0 * (1.0 - rho) / 6.0;
    for (Index d = 0; d < 3; ++d) {
        const Index p = s.dim(d);
        Matrix oracle = Matrix::Zero(p, p);
        for (Index a = 0; a < p; ++a)
            for (Index b = 0; b < p; ++b) {
                double v = c1 * (s.m[static_cast<std::size_t>(d)](a, b) + s.m[static_cast<std::size_t>(d)](b, a));
                for (Index j = 0; j < 3; ++j) {
                    if (j == d) continue;
                    const Matrix ndj = s.n(d, j), njd = s.n(j, d);
                    const Matrix& gj = g[static_cast<std::size_t>(j)];
                    // (N_dj G_j G_j^T N_jd)(a, b) and its transpose entry.
                    for (Index u = 0; u < gj.rows(); ++u)
                        for (Index w = 0; w < gj.rows(); ++w) {
                            const double ggt = gj.row(u).dot(gj.row(w));
                            v += c2 * (ndj(a, u) * ggt * njd(w, b) + ndj(b, u) * ggt * njd(w, a));
                        }
                }
                oracle(a, b) = v;
            }
        const Matrix c = assemble_coefficient(d, s, g, rho);
        EXPECT_LT((c - oracle).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_TRUE(c.isApprox(c.transpose(), 0.0));
        const Matrix l = coefficient_factor(d, s, g, rho);
        EXPECT_LT((l * l.transpose() - c).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(IntegrativeObjective, BlockPartIsHalfTraceOfCoefficient)
{
    std::mt19937_64 rng(9);
    const ScatterSet s = synthetic_scatter_set({4, 3, 5}, 3, rng, true);
    std::vector<Matrix> g = {random_matrix(4, 2, rng), random_matrix(3, 2, rng), random_matrix(5, 2, rng)};
    const double rho = 0.3;
    for (Index d = 0; d < 3; ++d) {
        const Matrix c = assemble_coefficient(d, s, g, rho);
        std::vector<double> rest;
        for (int trial = 0; trial < 4; ++trial) {
            g[static_cast<std::size_t>(d)] = random_matrix(s.dim(d), 2, rng);
            const Matrix& x = g[static_cast<std::size_t>(d)];
            rest.push_back(integrative_objective(s, g, rho) - 0.5 * (x.transpose() * c * x).trace());
        }
        for (double v : rest) EXPECT_NEAR(v, rest.front(), 1e-10);
    }
}

TEST(SolveGev, DecoupledEigenvaluesAreScaledLda)
{
    std::mt19937_64 rng(10);
    for (double rho : {0.2, 0.5, 0.8}) {
        const ScatterSet s = synthetic_scatter_set({6, 5}, 3, rng, false);
        const GevSolution sol = solve_gev(s, rho, 2);
        EXPECT_TRUE(sol.converged);
        for (Index d = 0; d < 2; ++d) {
            const auto du = static_cast<std::size_t>(d);
            const Vector lda = dense_gev(s.sb[du], s.sw[du], 2).first;
            EXPECT_LT((sol.lambda[du] - 2.0 * rho * lda).cwiseAbs().maxCoeff(), 1e-8 * lda(0));
        }
    }
}

TEST(SolveGev, RhoOneIsUncoupled)
{
    std::mt19937_64 rng(11);
    const ScatterSet s = synthetic_scatter_set({6, 5}, 3, rng, true);
    const GevSolution sol = solve_gev(s, 1.0, 2);
    EXPECT_TRUE(sol.converged);
    EXPECT_LE(sol.iterations, 2);
    for (Index d = 0; d < 2; ++d) {
        const auto du = static_cast<std::size_t>(d);
        const EigenPairs e = top_eigenpairs(s.m[du] + s.m[du].transpose(), 2);
        EXPECT_GT(principal_angle_cosines(sol.gamma[du], e.vectors).minCoeff(), 1.0 - 1e-10);
        EXPECT_LT((sol.lambda[du] - e.values).cwiseAbs().maxCoeff(), 1e-10 * e.values(0));
    }
}

TEST(SolveGev, StationaryAndMonotone)
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const ScatterSet s = synthetic_scatter_set({6, 6}, 2, rng, true);
        const GevSolution sol = solve_gev(s, 0.5, 1);
        ASSERT_TRUE(sol.converged);
        for (double res : sol.residuals) EXPECT_LT(res, 1e-6);
        for (std::size_t i = 1; i < sol.objective_trace.size(); ++i)
            EXPECT_GE(sol.objective_trace[i], sol.objective_trace[i - 1] - 1e-8);
        for (const Matrix& g : sol.gamma) EXPECT_TRUE(orthonormal(g, 1e-12));
    }
}

TEST(SolveGev, MonotoneFromRandomStartOnThreeViews)
{
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const ScatterSet s = synthetic_scatter_set({7, 5, 6}, 3, rng, true, 0.6);
        GevOptions opts;
        opts.init = GevInit::random;
        opts.seed = static_cast<unsigned long long>(trial);
        const std::vector<Matrix> start = {random_orthonormal(7, 2, 1), random_orthonormal(5, 2, 2),
                                           random_orthonormal(6, 2, 3)};
        const double before = integrative_objective(s, start, 0.3);
        const GevSolution sol = solve_gev(s, 0.3, 2, opts, start);
        EXPECT_GE(sol.objective_trace.front(), before - 1e-8);
        for (std::size_t i = 1; i < sol.objective_trace.size(); ++i)
            EXPECT_GE(sol.objective_trace[i], sol.objective_trace[i - 1] - 1e-8);
    }
}

TEST(SolveGev, ReturnsExactlyRColumnsWhenCouplingRaisesRank)
{
    std::mt19937_64 rng(14);
    const ScatterSet s = synthetic_scatter_set({8, 8}, 2, rng, true);
    const GevSolution sol = solve_gev(s, 0.2, 1);
    const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(assemble_coefficient(0, s, sol.gamma, 0.2)).eigenvalues();
    EXPECT_GT((ev.array() > 1e-6 * ev.maxCoeff()).count(), 1);
    for (const Matrix& g : sol.gamma) EXPECT_EQ(g.cols(), 1);
}

TEST(SolveGev, BitReproducible)
{
    std::mt19937_64 rng(15);
    const ScatterSet s = synthetic_scatter_set({6, 5, 4}, 3, rng, true);
    GevOptions opts;
    opts.init = GevInit::random;
    opts.seed = 42;
    const GevSolution a = solve_gev(s, 0.5, 2, opts);
    const GevSolution b = solve_gev(s, 0.5, 2, opts);
    for (std::size_t d = 0; d < 3; ++d) {
        EXPECT_EQ(a.gamma[d], b.gamma[d]);
        EXPECT_EQ(a.lambda[d], b.lambda[d]);
        // Largest-magnitude entry of each column is positive.
        for (Index k = 0; k < 2; ++k) {
            Index at = 0;
            a.gamma[d].col(k).cwiseAbs().maxCoeff(&at);
            EXPECT_GT(a.gamma[d](at, k), 0.0);
        }
    }
}

TEST(SolveGev, NonConvergenceWarnsAndReturnsIterate)
{
    std::mt19937_64 rng(16);
    const ScatterSet s = synthetic_scatter_set({6, 6}, 3, rng, true, 1.0);
    GevOptions opts;
    opts.max_iter = 1;
    opts.eps = 1e-300;
    const sida::testing::CaptureWarnings capture;
    const GevSolution sol = solve_gev(s, 0.1, 2, opts);
    EXPECT_FALSE(sol.converged);
    EXPECT_EQ(sol.iterations, 1);
    EXPECT_TRUE(capture.contains("did not converge"));
}

TEST(SolveGev, RankAboveViewDimensionIsRejected)
{
    std::mt19937_64 rng(17);
    const ScatterSet s = synthetic_scatter_set({3, 2}, 4, rng, true);
    EXPECT_THROW(solve_gev(s, 0.5, 3), Error);
}

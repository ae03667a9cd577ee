#pragma once

#include "data.hpp"
#include "error.hpp"
#include "linalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sida {

struct ScatterMatrices {
    Matrix within;          // S_w, unscaled sum
    Matrix between;         // S_b, unscaled sum
    Matrix class_means;     // K x p, row k = mean of class k + 1
    Vector overall_mean;    // (1/n) sum_k n_k mu_k
    Matrix between_factor;  // p x K with S_b = F F^T, column k = sqrt(n_k) (mu_k - mu)
};

/**
 * Within- and between-class scatter of X for labels in 1..K, as unscaled
 * sums:
 *   S_w = sum_k sum_{i in k} (x_i - mu_k)(x_i - mu_k)^T
 *   S_b = sum_k n_k (mu_k - mu)(mu_k - mu)^T
 */
inline ScatterMatrices scatter_matrices(const Matrix& x, const std::vector<int>& labels, int num_classes = 0)
{
    require(static_cast<Index>(labels.size()) == x.rows(), "label count does not match row count");
    if (num_classes == 0 && !labels.empty()) num_classes = *std::max_element(labels.begin(), labels.end());
    require(num_classes >= 1, "at least one class is required");
    const Index p = x.cols();
    const Index n = x.rows();

    ScatterMatrices s;
    s.class_means = Matrix::Zero(num_classes, p);
    std::vector<Index> counts(static_cast<std::size_t>(num_classes), 0);
    for (Index i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        require(y >= 1 && y <= num_classes, "label " + std::to_string(y) + " outside 1..K");
        s.class_means.row(y - 1) += x.row(i);
        ++counts[static_cast<std::size_t>(y - 1)];
    }
    for (int k = 0; k < num_classes; ++k) {
        if (counts[static_cast<std::size_t>(k)] < 1)
            fail(ErrorCode::validation, "class " + std::to_string(k + 1) + " has no samples");
        s.class_means.row(k) /= static_cast<double>(counts[static_cast<std::size_t>(k)]);
    }

    s.overall_mean = Vector::Zero(p);
    for (int k = 0; k < num_classes; ++k)
        s.overall_mean += static_cast<double>(counts[static_cast<std::size_t>(k)]) * s.class_means.row(k).transpose();
    s.overall_mean /= static_cast<double>(n);

    Matrix centered(n, p);
    for (Index i = 0; i < n; ++i) centered.row(i) = x.row(i) - s.class_means.row(labels[static_cast<std::size_t>(i)] - 1);
    s.within = Matrix::Zero(p, p);
    s.within.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
    s.within = s.within.selfadjointView<Eigen::Lower>();

    s.between_factor.resize(p, num_classes);
    for (int k = 0; k < num_classes; ++k)
        s.between_factor.col(k) = std::sqrt(static_cast<double>(counts[static_cast<std::size_t>(k)])) *
                                  (s.class_means.row(k).transpose() - s.overall_mean);
    s.between = s.between_factor * s.between_factor.transpose();
    return s;
}

/// Sample cross-covariance (1/(n-1)) Xd_c^T Xj_c of column-centered views.
inline Matrix cross_covariance(const Matrix& xd, const Matrix& xj)
{
    require(xd.rows() == xj.rows(), "cross_covariance: row counts differ (" + std::to_string(xd.rows()) + " vs " +
                                        std::to_string(xj.rows()) + ")");
    require(xd.rows() >= 2, "cross_covariance needs at least two samples");
    const Matrix a = xd.rowwise() - xd.colwise().mean();
    const Matrix b = xj.rowwise() - xj.colwise().mean();
    return a.transpose() * b / static_cast<double>(xd.rows() - 1);
}

/// Ridge added to S_w before inversion: a fixed value or the automatic rule
/// gamma = scale trace(S_w) / p, floored at 1e-8. The default scale of 1
/// adds the mean eigenvalue of the unscaled S_w to its diagonal; much smaller
/// scales let the noise directions of a p > n scatter dominate the whitening
/// and the sparse fits lose most signal variables.
inline constexpr double kAutoRidgeScale = 1.0;

struct Ridge {
    std::optional<double> value;  // empty means automatic
    double scale = kAutoRidgeScale;

    static Ridge automatic(double scale = kAutoRidgeScale) { return Ridge{std::nullopt, scale}; }
    static Ridge fixed(double g) { return Ridge{g}; }
};

inline constexpr double kRidgeFloor = 1e-8;

inline double resolve_ridge(const Matrix& sw, const Ridge& ridge)
{
    if (ridge.value) {
        require(*ridge.value >= 0.0, "ridge must be non-negative");
        return *ridge.value;
    }
    const double p = static_cast<double>(std::max<Index>(1, sw.rows()));
    require(ridge.scale >= 0.0, "ridge scale must be non-negative");
    return std::max(ridge.scale * sw.trace() / p, kRidgeFloor);
}

struct InverseSqrt {
    Matrix w;      // (S_w + gamma I)^{-1/2}
    double gamma;
};

/**
 * Symmetric inverse square root of S_w + gamma I through its eigen
 * decomposition. Fails with ErrorCode::singular if the smallest eigenvalue is
 * not above 1e-12 times the largest.
 */
inline InverseSqrt regularized_inv_sqrt(const Matrix& sw, const Ridge& ridge = Ridge::automatic())
{
    require(sw.rows() == sw.cols(), "S_w must be square");
    InverseSqrt out;
    out.gamma = resolve_ridge(sw, ridge);
    Matrix a = symmetrized(sw);
    a.diagonal().array() += out.gamma;
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    const Vector& ev = es.eigenvalues();
    const double max_ev = ev.size() ? ev.maxCoeff() : 0.0;
    if (ev.size() && (ev.minCoeff() <= 1e-12 * max_ev || max_ev <= 0.0))
        fail(ErrorCode::singular, "within-class scatter is singular (smallest eigenvalue " + format_double(ev.minCoeff()) +
                                      "); use a larger ridge");
    const Vector inv_sqrt = ev.cwiseSqrt().cwiseInverse();
    out.w = es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
    out.w = symmetrized(out.w);
    return out;
}

/**
 * Whitened quantities for the integrative eigensystems.
 *
 * For each view d: the regularized S_w, S_b, W_d = S_w^{-1/2} and
 * M_d = W_d S_b W_d; for each pair N_dj = W_d S_dj W_j with N_jd = N_dj^T.
 * M_d is also kept in factored form M_d = G_d G_d^T, G_d = W_d F_d.
 */
struct ScatterSet {
    std::vector<Matrix> sw;
    std::vector<Matrix> sb;
    std::vector<Matrix> w;
    std::vector<Matrix> m;
    std::vector<Matrix> m_factor;
    std::vector<double> gamma;
    int num_classes = 0;
    Index num_samples = 0;

    Index num_views() const { return static_cast<Index>(w.size()); }
    Index dim(Index d) const { return w[static_cast<std::size_t>(d)].rows(); }

    /// N_dj for d != j (0-based).
    Matrix n(Index d, Index j) const
    {
        require(d != j, "N_dd is not defined");
        if (d < j) return cross_[pair_index(d, j)];
        return cross_[pair_index(j, d)].transpose();
    }

    /// N_dj * G without materializing a transpose.
    Matrix n_times(Index d, Index j, const Matrix& g) const
    {
        require(d != j, "N_dd is not defined");
        if (d < j) return cross_[pair_index(d, j)] * g;
        return cross_[pair_index(j, d)].transpose() * g;
    }

    void set_cross(std::vector<Matrix> upper) { cross_ = std::move(upper); }

private:
    std::size_t pair_index(Index d, Index j) const
    {
        // Row-major upper triangle without the diagonal.
        const Index views = num_views();
        return static_cast<std::size_t>(d * views - d * (d + 1) / 2 + (j - d - 1));
    }

    std::vector<Matrix> cross_;
};

/// Builds every whitened matrix from a standardized dataset. `ridges` may be
/// empty (automatic for every view) or hold one entry per view.
inline ScatterSet build_scatter_set(const MultiViewDataset& ds, const std::vector<Ridge>& ridges = {})
{
    require(ds.standardized, "build_scatter_set requires standardized data");
    ds.validate();
    require(ridges.empty() || ridges.size() == ds.views.size(), "one ridge per view is required");
    const Index views = ds.num_views();
    const Index n = ds.num_samples();
    require(n >= 2, "at least two samples are required");

    ScatterSet s;
    s.num_classes = ds.num_classes();
    s.num_samples = n;
    std::vector<Matrix> whitened_data;
    for (Index d = 0; d < views; ++d) {
        const Matrix& x = ds.views[static_cast<std::size_t>(d)];
        ScatterMatrices sc = scatter_matrices(x, ds.labels, s.num_classes);
        const Ridge ridge = ridges.empty() ? Ridge::automatic() : ridges[static_cast<std::size_t>(d)];
        InverseSqrt inv = regularized_inv_sqrt(sc.within, ridge);
        Matrix sw = sc.within;
        sw.diagonal().array() += inv.gamma;
        Matrix g = inv.w * sc.between_factor;
        Matrix m = g * g.transpose();

        const Matrix xc = x.rowwise() - x.colwise().mean();
        whitened_data.push_back(xc * inv.w);

        s.sw.push_back(std::move(sw));
        s.sb.push_back(std::move(sc.between));
        s.w.push_back(std::move(inv.w));
        s.m.push_back(std::move(m));
        s.m_factor.push_back(std::move(g));
        s.gamma.push_back(inv.gamma);
    }

    std::vector<Matrix> cross;
    for (Index d = 0; d < views; ++d)
        for (Index j = d + 1; j < views; ++j)
            cross.push_back(whitened_data[static_cast<std::size_t>(d)].transpose() *
                            whitened_data[static_cast<std::size_t>(j)] / static_cast<double>(n - 1));
    s.set_cross(std::move(cross));
    return s;
}

} // namespace sida

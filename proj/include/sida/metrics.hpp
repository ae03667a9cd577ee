#pragma once

#include "data.hpp"
#include "error.hpp"
#include "fit.hpp"
#include "linalg.hpp"
#include "log.hpp"

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sida {

/// Discriminant scores U = X Gamma_d for data standardized with the model's
/// training statistics.
inline Matrix scores(const Matrix& x, const DiscriminantModel& model, Index d)
{
    require(d >= 0 && d < model.num_views(), "view index out of range");
    const Matrix& g = model.gamma[static_cast<std::size_t>(d)];
    require(x.cols() == g.rows(), "view " + std::to_string(d + 1) + " has " + std::to_string(x.cols()) +
                                      " columns but the model expects " + std::to_string(g.rows()));
    return x * g;
}

/// Index (1-based) of the nearest centroid row; ties go to the smaller class.
inline int nearest_centroid(const Eigen::Ref<const Vector>& v, const Matrix& centroids)
{
    int best = 1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < centroids.rows(); ++k) {
        const double dist = (centroids.row(k).transpose() - v).squaredNorm();
        if (dist < best_dist) {
            best_dist = dist;
            best = static_cast<int>(k) + 1;
        }
    }
    return best;
}

/**
 * Pooled nearest-centroid rule: concatenate the projections z_d^T Gamma_d of
 * all D views and pick the closest pooled class centroid.
 */
inline int classify_pooled(const std::vector<std::optional<Vector>>& z, const DiscriminantModel& model)
{
    require(static_cast<Index>(z.size()) == model.num_views(),
            "pooled classification needs one vector per view; use classify_separate for partial data");
    const Index r = model.rank();
    Vector v(model.num_views() * r);
    for (Index d = 0; d < model.num_views(); ++d) {
        const auto& zd = z[static_cast<std::size_t>(d)];
        if (!zd) fail(ErrorCode::validation, "view " + std::to_string(d + 1) +
                                                 " is missing; use classify_separate for partial data");
        const Matrix& g = model.gamma[static_cast<std::size_t>(d)];
        require(zd->size() == g.rows(), "view " + std::to_string(d + 1) + " vector has the wrong length");
        v.segment(d * r, r) = g.transpose() * *zd;
    }
    return nearest_centroid(v, model.pooled_centroids);
}

inline int classify_pooled(const std::vector<Vector>& z, const DiscriminantModel& model)
{
    std::vector<std::optional<Vector>> opt(z.begin(), z.end());
    return classify_pooled(opt, model);
}

/// Nearest centroid using view d alone.
inline int classify_separate(const Vector& z, const DiscriminantModel& model, Index d)
{
    require(d >= 0 && d < model.num_views(), "view index out of range");
    const Matrix& g = model.gamma[static_cast<std::size_t>(d)];
    require(z.size() == g.rows(), "view " + std::to_string(d + 1) + " vector has the wrong length");
    const Vector v = g.transpose() * z;
    return nearest_centroid(v, model.view_centroids[static_cast<std::size_t>(d)]);
}

/// Pooled labels for every sample of a standardized dataset.
inline std::vector<int> predict_pooled(const MultiViewDataset& ds, const DiscriminantModel& model)
{
    require(ds.num_views() == model.num_views(), "dataset and model have different view counts");
    const Index r = model.rank();
    Matrix pooled(ds.num_samples(), model.num_views() * r);
    for (Index d = 0; d < model.num_views(); ++d)
        pooled.middleCols(d * r, r) = scores(ds.views[static_cast<std::size_t>(d)], model, d);
    std::vector<int> out(static_cast<std::size_t>(ds.num_samples()));
    for (Index i = 0; i < pooled.rows(); ++i)
        out[static_cast<std::size_t>(i)] = nearest_centroid(pooled.row(i).transpose(), model.pooled_centroids);
    return out;
}

inline std::vector<int> predict_separate(const MultiViewDataset& ds, const DiscriminantModel& model, Index d)
{
    const Matrix u = scores(ds.views[static_cast<std::size_t>(d)], model, d);
    std::vector<int> out(static_cast<std::size_t>(u.rows()));
    for (Index i = 0; i < u.rows(); ++i)
        out[static_cast<std::size_t>(i)] = nearest_centroid(u.row(i).transpose(), model.view_centroids[static_cast<std::size_t>(d)]);
    return out;
}

inline double error_rate(const std::vector<int>& predicted, const std::vector<int>& truth)
{
    require(predicted.size() == truth.size(), "prediction and truth lengths differ");
    if (truth.empty()) return 0.0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) wrong += predicted[i] != truth[i];
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

struct SelectionMetrics {
    double tpr = 0.0;
    double fpr = 0.0;
    double f1 = 0.0;
    Index tp = 0, fp = 0, tn = 0, fn = 0;
};

/// TPR = TP/(TP+FN), FPR = FP/(FP+TN), F1 = 2TP/(2TP+FP+FN); empty
/// denominators give 0. Indices are 1-based.
inline SelectionMetrics selection_metrics(const std::vector<Index>& selected, const std::vector<Index>& truth, Index p)
{
    const std::set<Index> sel(selected.begin(), selected.end());
    const std::set<Index> tru(truth.begin(), truth.end());
    for (Index t : tru) require(t >= 1 && t <= p, "truth index " + std::to_string(t) + " outside 1..p");
    for (Index s : sel) require(s >= 1 && s <= p, "selected index " + std::to_string(s) + " outside 1..p");
    SelectionMetrics m;
    for (Index s : sel) (tru.count(s) ? m.tp : m.fp) += 1;
    m.fn = static_cast<Index>(tru.size()) - m.tp;
    m.tn = p - m.tp - m.fp - m.fn;
    auto ratio = [](Index a, Index b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
    m.tpr = ratio(m.tp, m.tp + m.fn);
    m.fpr = ratio(m.fp, m.fp + m.tn);
    m.f1 = ratio(2 * m.tp, 2 * m.tp + m.fp + m.fn);
    return m;
}

/**
 * RV coefficient tr(S_xy S_yx) / sqrt(tr(S_xx^2) tr(S_yy^2)) of two centered
 * matrices with the same row count. 0/0 is defined as 0.
 */
inline double rv_coefficient(const Matrix& xc, const Matrix& yc)
{
    require(xc.rows() == yc.rows(), "RV coefficient needs equal row counts");
    const Matrix sxy = xc.transpose() * yc;
    const Matrix sxx = xc.transpose() * xc;
    const Matrix syy = yc.transpose() * yc;
    const double num = sxy.squaredNorm();
    const double den = std::sqrt(sxx.squaredNorm() * syy.squaredNorm());
    if (den == 0.0) return 0.0;
    return std::clamp(num / den, 0.0, 1.0);
}

/// Mean pairwise RV coefficient of the centered projections X^d Gamma_d of a
/// standardized dataset.
inline double estimated_correlation(const DiscriminantModel& model, const MultiViewDataset& test)
{
    const Index views = model.num_views();
    require(views >= 2, "estimated correlation needs at least two views");
    require(test.num_views() == views, "dataset and model have different view counts");
    std::vector<Matrix> proj;
    for (Index d = 0; d < views; ++d) {
        Matrix u = scores(test.views[static_cast<std::size_t>(d)], model, d);
        u = u.rowwise() - u.colwise().mean();
        proj.push_back(std::move(u));
    }
    double sum = 0.0;
    bool any_nonzero = false;
    for (Index d = 0; d < views; ++d)
        for (Index j = d + 1; j < views; ++j) {
            if (proj[static_cast<std::size_t>(d)].norm() > 0 && proj[static_cast<std::size_t>(j)].norm() > 0)
                any_nonzero = true;
            sum += rv_coefficient(proj[static_cast<std::size_t>(d)], proj[static_cast<std::size_t>(j)]);
        }
    if (!any_nonzero) warn("all pairwise projections are zero; estimated correlation set to 0");
    const double pairs = static_cast<double>(views * (views - 1)) / 2.0;
    return sum / pairs;
}

struct ViewEval {
    Index selected = 0;
    std::optional<SelectionMetrics> selection;
    double separate_error = 0.0;
};

struct EvalReport {
    double error_rate = 0.0;
    double rho_hat = 0.0;
    std::vector<ViewEval> views;
};

/// Pooled error, per-view separate error, estimated correlation and (when
/// `truth` is non-empty) selection metrics. `truth` holds 1-based indices.
inline EvalReport evaluate(const DiscriminantModel& model, const MultiViewDataset& test,
                           const std::vector<std::vector<Index>>& truth = {})
{
    require(test.standardized, "evaluate requires data standardized with the training statistics");
    require(truth.empty() || static_cast<Index>(truth.size()) == model.num_views(), "one truth set per view is required");
    EvalReport rep;
    rep.error_rate = error_rate(predict_pooled(test, model), test.labels);
    rep.rho_hat = model.num_views() >= 2 ? estimated_correlation(model, test) : 0.0;
    for (Index d = 0; d < model.num_views(); ++d) {
        const auto du = static_cast<std::size_t>(d);
        ViewEval v;
        v.selected = static_cast<Index>(model.selected[du].size());
        v.separate_error = error_rate(predict_separate(test, model, d), test.labels);
        if (!truth.empty()) {
            std::vector<Index> sel;
            for (Index i : model.selected[du]) sel.push_back(i + 1);
            v.selection = selection_metrics(sel, truth[du], model.gamma[du].rows());
        }
        rep.views.push_back(v);
    }
    return rep;
}

} // namespace sida

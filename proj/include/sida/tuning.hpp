#pragma once

#include "data.hpp"
#include "error.hpp"
#include "fit.hpp"
#include "gev.hpp"
#include "log.hpp"
#include "metrics.hpp"
#include "parallel.hpp"
#include "scatter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace sida {

enum class SearchMode { random, grid };
enum class GridSpacing { linear, log };

/// Seed offsets of the internal random streams.
inline constexpr unsigned long long kFoldSeedOffset = 101;
inline constexpr unsigned long long kSearchSeedOffset = 202;

/**
 * Cross-validation settings. points_per_view and random_fraction of 0 mean
 * "automatic": 8 points and 20% with two penalized views, 5 points and 15%
 * with more. rho, eta, methods and solver options come from `base`.
 */
struct TuningSpec {
    SearchMode mode = SearchMode::random;
    int points_per_view = 0;
    double random_fraction = 0.0;
    int folds = 5;
    unsigned long long seed = 0;
    GridSpacing spacing = GridSpacing::linear;
    int workers = 1;
    FitConfig base;
};

struct TauBounds {
    double min = 0.0;
    double max = 0.0;
};

/// tau_max = max absolute row sum of C; tau_min = sqrt(ln(p) / n) tau_max,
/// clamped to 0.1 tau_max when that would not lie below tau_max.
inline TauBounds tau_bounds(const Matrix& c, Index p, Index n)
{
    require(p >= 1 && n >= 1, "tau_bounds needs positive p and n");
    TauBounds b;
    b.max = max_abs_row_sum(c);
    b.min = std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n)) * b.max;
    if (b.max > 0.0 && b.min >= b.max) {
        warn("tau_min >= tau_max (ln p > n); clamping tau_min to 0.1 tau_max");
        b.min = 0.1 * b.max;
    }
    return b;
}

/// Per-view bounds from C_d Gamma_tilde_d at the nonsparse solution, whose
/// max absolute row sum is the smallest tau giving an all-zero view.
/// Covariate views get (0, 0).
inline std::vector<TauBounds> view_tau_bounds(const MultiViewDataset& ds, const ScatterSet& scat, const FitConfig& cfg)
{
    const auto methods = detail::resolve_methods(ds, cfg);
    GevOptions opts;
    opts.init = cfg.init;
    opts.seed = cfg.seed;
    const GevSolution sol = solve_gev(scat, cfg.rho, ds.num_classes() - 1, opts);
    std::vector<TauBounds> out;
    for (Index d = 0; d < ds.num_views(); ++d) {
        if (methods[static_cast<std::size_t>(d)] == ViewMethod::covariate) {
            out.push_back({});
            continue;
        }
        const Matrix l = coefficient_factor(d, scat, sol.gamma, cfg.rho);
        const Matrix target = l * (l.transpose() * sol.gamma[static_cast<std::size_t>(d)]);
        out.push_back(tau_bounds(target, scat.dim(d), ds.num_samples()));
    }
    return out;
}

inline int penalized_view_count(const std::vector<ViewMethod>& methods)
{
    return static_cast<int>(std::count_if(methods.begin(), methods.end(),
                                          [](ViewMethod m) { return m != ViewMethod::covariate; }));
}

inline int default_points(int penalized) { return penalized > 2 ? 5 : 8; }
inline double default_fraction(int penalized) { return penalized > 2 ? 0.15 : 0.20; }

/// points values on [lo, hi]; a single value when the interval is empty.
inline std::vector<double> tau_grid(const TauBounds& b, int points, GridSpacing spacing)
{
    require(points >= 2, "points per view must be at least 2");
    if (!(b.max > b.min)) return {b.max};
    std::vector<double> g(static_cast<std::size_t>(points));
    const double step = 1.0 / static_cast<double>(points - 1);
    if (spacing == GridSpacing::log && b.min > 0.0) {
        const double lo = std::log(b.min), hi = std::log(b.max);
        for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i * step);
    } else {
        if (spacing == GridSpacing::log) warn("log spacing needs tau_min > 0; using linear spacing");
        for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = b.min + (b.max - b.min) * i * step;
    }
    g.front() = b.min;
    g.back() = b.max;
    return g;
}

/**
 * Candidate tau tuples: the Cartesian product of the per-view grids in
 * lexicographic order (first view slowest), or a seeded uniform subset of
 * ceil(fraction * total) tuples kept in that order. Covariate views are
 * pinned at 0.
 */
inline std::vector<std::vector<double>> make_candidates(const TuningSpec& spec, const std::vector<TauBounds>& bounds,
                                                        const std::vector<ViewMethod>& methods)
{
    require(bounds.size() == methods.size(), "one bound per view is required");
    const int penalized = penalized_view_count(methods);
    const int points = spec.points_per_view > 0 ? spec.points_per_view : default_points(penalized);
    const double fraction = spec.random_fraction > 0.0 ? spec.random_fraction : default_fraction(penalized);
    require(fraction > 0.0 && fraction <= 1.0, "random fraction must lie in (0, 1]");

    std::vector<std::vector<double>> grids;
    for (std::size_t d = 0; d < bounds.size(); ++d)
        grids.push_back(methods[d] == ViewMethod::covariate ? std::vector<double>{0.0}
                                                            : tau_grid(bounds[d], points, spec.spacing));

    std::size_t total = 1;
    for (const auto& g : grids) total *= g.size();
    auto tuple_at = [&](std::size_t idx) {
        std::vector<double> t(grids.size());
        for (std::size_t d = grids.size(); d-- > 0;) {
            t[d] = grids[d][idx % grids[d].size()];
            idx /= grids[d].size();
        }
        return t;
    };

    std::vector<std::size_t> chosen(total);
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
    if (spec.mode == SearchMode::random) {
        const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total) - 1e-9));
        std::mt19937_64 rng(spec.seed + kSearchSeedOffset);
        std::shuffle(chosen.begin(), chosen.end(), rng);
        chosen.resize(std::max<std::size_t>(1, std::min(keep, total)));
        std::sort(chosen.begin(), chosen.end());
    }
    std::vector<std::vector<double>> out;
    for (std::size_t idx : chosen) out.push_back(tuple_at(idx));
    return out;
}

/**
 * Fold id (0-based) per sample. Each class is shuffled with the seed and dealt
 * round-robin, continuing the rotation across classes so that per-class and
 * overall fold sizes differ by at most one.
 */
inline std::vector<int> stratified_folds(const std::vector<int>& labels, int folds, unsigned long long seed)
{
    require(folds >= 2, "at least two folds are required");
    int num_classes = 0;
    for (int y : labels) num_classes = std::max(num_classes, y);
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) members[static_cast<std::size_t>(labels[i] - 1)].push_back(i);
    for (const auto& m : members)
        require(static_cast<int>(m.size()) >= folds,
                "folds (" + std::to_string(folds) + ") exceed the smallest class count (" + std::to_string(m.size()) + ")");

    std::mt19937_64 rng(seed);
    std::vector<int> fold(labels.size(), 0);
    int next = 0;
    for (auto& m : members) {
        std::shuffle(m.begin(), m.end(), rng);
        for (std::size_t i : m) {
            fold[i] = next;
            next = (next + 1) % folds;
        }
    }
    return fold;
}

struct CvPoint {
    std::vector<double> taus;
    double mean_error = 0.0;
    std::vector<double> mean_nonzeros;
    std::vector<double> fold_errors;
    std::vector<std::vector<Index>> fold_nonzeros;
    int degenerate_folds = 0;     // folds where some penalized view was all zero
    bool degenerate_full = false; // same on the full data

    bool degenerate() const { return degenerate_folds > 0 || degenerate_full; }
};

struct CvResult {
    std::vector<CvPoint> points;
    std::size_t best = 0;
    std::vector<TauBounds> bounds;

    const std::vector<double>& best_taus() const { return points.at(best).taus; }
};

/**
 * Index of the minimum mean error among candidates that kept every penalized
 * view nonzero on every fold and on the full data (all candidates if none
 * did). Ties go to the largest tau sum, then the lexicographically smallest
 * tuple.
 */
inline std::size_t select_best(const std::vector<CvPoint>& pts)
{
    require(!pts.empty(), "no candidates were evaluated");
    constexpr double tie = 1e-12;
    const bool any_full = std::any_of(pts.begin(), pts.end(), [](const CvPoint& p) { return !p.degenerate(); });
    auto eligible = [&](const CvPoint& p) { return !any_full || !p.degenerate(); };
    std::size_t best = 0;
    while (!eligible(pts[best])) ++best;
    auto sum = [](const std::vector<double>& t) { return std::accumulate(t.begin(), t.end(), 0.0); };
    for (std::size_t i = best + 1; i < pts.size(); ++i) {
        const CvPoint& a = pts[i];
        const CvPoint& b = pts[best];
        if (!eligible(a)) continue;
        if (a.mean_error < b.mean_error - tie) {
            best = i;
        } else if (std::abs(a.mean_error - b.mean_error) <= tie) {
            const double sa = sum(a.taus), sb = sum(b.taus);
            if (sa > sb || (sa == sb && a.taus < b.taus)) best = i;
        }
    }
    return best;
}

namespace detail {

/// Re-standardizes a train/validation split with the training statistics.
inline std::pair<MultiViewDataset, MultiViewDataset> split_standardized(const MultiViewDataset& ds,
                                                                        const std::vector<Index>& train_idx,
                                                                        const std::vector<Index>& test_idx)
{
    MultiViewDataset train = ds.subset(train_idx);
    MultiViewDataset test = ds.subset(test_idx);
    train.standardized = false;
    train.stats.clear();
    train = standardize(train);
    test = standardize_like(test, train.stats);
    return {std::move(train), std::move(test)};
}

} // namespace detail

/**
 * K-fold cross-validation of the candidate tau tuples with the pooled
 * nearest-centroid rule. Folds are processed one at a time (one whitening
 * per fold); candidates within a fold run on `spec.workers` threads and
 * results are stored by candidate index, so the outcome does not depend on
 * the worker count. A candidate whose fit is all-zero on a fold scores as the
 * constant class-1 classifier on that fold, and candidates that zero out a
 * penalized view are only chosen when nothing else is available.
 */
inline CvResult cross_validate(const MultiViewDataset& ds, const ViewGraphs& graphs, const TuningSpec& spec,
                               std::vector<std::vector<double>> candidates = {})
{
    require(ds.standardized, "cross_validate requires standardized data");
    ds.validate();
    const auto methods = detail::resolve_methods(ds, spec.base);
    CvResult res;
    const std::size_t workers = static_cast<std::size_t>(std::max(1, spec.workers));
    std::vector<char> full_degenerate;
    {
        const ScatterSet full = build_scatter_set(ds, spec.base.ridges);
        if (candidates.empty()) {
            res.bounds = view_tau_bounds(ds, full, spec.base);
            candidates = make_candidates(spec, res.bounds, methods);
        }
        full_degenerate.assign(candidates.size(), 0);
        parallel_for(candidates.size(), workers, [&](std::size_t c) {
            FitConfig cfg = spec.base;
            cfg.taus = candidates[c];
            const MuteWarnings mute;
            try {
                const DiscriminantModel model = fit(ds, full, graphs, cfg);
                for (std::size_t d = 0; d < methods.size(); ++d)
                    if (methods[d] != ViewMethod::covariate && model.zero_view[d]) full_degenerate[c] = 1;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::tau_too_large) throw;
                full_degenerate[c] = 1;
            }
        });
    }
    const std::vector<int> fold_of = stratified_folds(ds.labels, spec.folds, spec.seed + kFoldSeedOffset);
    const std::size_t views = ds.views.size();

    res.points.resize(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        require(candidates[c].size() == views, "candidate tuple length differs from the view count");
        res.points[c].taus = candidates[c];
        res.points[c].fold_errors.assign(static_cast<std::size_t>(spec.folds), 0.0);
        res.points[c].fold_nonzeros.assign(static_cast<std::size_t>(spec.folds), std::vector<Index>(views, 0));
    }

    std::vector<std::vector<char>> fold_degenerate(candidates.size(), std::vector<char>(static_cast<std::size_t>(spec.folds), 0));
    for (int f = 0; f < spec.folds; ++f) {
        std::vector<Index> train_idx, test_idx;
        for (std::size_t i = 0; i < fold_of.size(); ++i)
            (fold_of[i] == f ? test_idx : train_idx).push_back(static_cast<Index>(i));
        const auto [train, test] = detail::split_standardized(ds, train_idx, test_idx);
        if (train.num_classes() != ds.num_classes())
            fail(ErrorCode::validation, "stratification error: fold " + std::to_string(f + 1) + " is missing a class");
        const ScatterSet scat = build_scatter_set(train, spec.base.ridges);

        parallel_for(candidates.size(), workers, [&](std::size_t c) {
            FitConfig cfg = spec.base;
            cfg.taus = candidates[c];
            CvPoint& pt = res.points[c];
            const auto fu = static_cast<std::size_t>(f);
            const MuteWarnings mute;
            try {
                const DiscriminantModel model = fit(train, scat, graphs, cfg);
                pt.fold_errors[fu] = error_rate(predict_pooled(test, model), test.labels);
                bool degenerate = false;
                for (std::size_t d = 0; d < views; ++d) {
                    pt.fold_nonzeros[fu][d] = static_cast<Index>(model.selected[d].size());
                    degenerate = degenerate || (methods[d] != ViewMethod::covariate && model.zero_view[d]);
                }
                fold_degenerate[c][fu] = degenerate;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::tau_too_large) throw;
                pt.fold_errors[fu] = error_rate(std::vector<int>(test.labels.size(), 1), test.labels);
                fold_degenerate[c][fu] = true;
            }
        });
    }

    for (std::size_t c = 0; c < res.points.size(); ++c) {
        CvPoint& pt = res.points[c];
        pt.degenerate_folds = static_cast<int>(std::count(fold_degenerate[c].begin(), fold_degenerate[c].end(), 1));
        pt.degenerate_full = full_degenerate[c] != 0;
        pt.mean_error = std::accumulate(pt.fold_errors.begin(), pt.fold_errors.end(), 0.0) / spec.folds;
        pt.mean_nonzeros.assign(views, 0.0);
        for (const auto& nz : pt.fold_nonzeros)
            for (std::size_t d = 0; d < views; ++d) pt.mean_nonzeros[d] += static_cast<double>(nz[d]) / spec.folds;
    }
    res.best = select_best(res.points);
    const auto degenerate = std::count_if(res.points.begin(), res.points.end(), [](const CvPoint& p) { return p.degenerate(); });
    if (degenerate > 0)
        warn(std::to_string(degenerate) + " of " + std::to_string(res.points.size()) +
             " tau candidates zero out a penalized view and were set aside");
    return res;
}

/// CSV with columns tau_1..tau_D, fold, error, nonzeros_1..nonzeros_D.
inline void write_cv_report(std::ostream& os, const CvResult& res)
{
    if (res.points.empty()) return;
    const std::size_t views = res.points.front().taus.size();
    for (std::size_t d = 0; d < views; ++d) os << "tau_" << d + 1 << ',';
    os << "fold,error";
    for (std::size_t d = 0; d < views; ++d) os << ",nonzeros_" << d + 1;
    os << '\n';
    for (const CvPoint& pt : res.points)
        for (std::size_t f = 0; f < pt.fold_errors.size(); ++f) {
            for (double t : pt.taus) os << format_double(t) << ',';
            os << f + 1 << ',' << format_double(pt.fold_errors[f]);
            for (Index nz : pt.fold_nonzeros[f]) os << ',' << nz;
            os << '\n';
        }
}

} // namespace sida

#pragma once

#include "data.hpp"
#include "error.hpp"
#include "fit.hpp"
#include "parallel.hpp"
#include "tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

namespace sida {

inline constexpr unsigned long long kStabilitySeedStride = 1000;

struct StabilityOptions {
    int reps = 20;
    double freq_threshold = 0.6;
    double effect_percentile = 0.01;
};

/// One resampling run: selected rows (0-based) and per-row effect
/// ||row_i|| / r for every variable, per view.
struct StabilityRun {
    std::vector<std::vector<Index>> selected;
    std::vector<Vector> effect;
};

struct StableVariable {
    Index view = 0;   // 1-based
    Index index = 0;  // 1-based
    std::string name;
    double frequency = 0.0;
    double mean_effect = 0.0;
};

struct StabilityResult {
    std::vector<std::vector<StableVariable>> stable;  // per view
    std::vector<Vector> frequency;                    // per view, per variable
    std::vector<Vector> mean_effect;                  // mean over runs where selected
};

/**
 * Keeps variables selected in at least freq_threshold * reps runs whose mean
 * effect (averaged over the runs that selected them) ranks within the top
 * ceil(effect_percentile * p_d) of their view. Ties in effect go to the lower
 * index.
 */
inline StabilityResult aggregate_stability(const std::vector<StabilityRun>& runs, const std::vector<Index>& dims,
                                           const StabilityOptions& opts,
                                           const std::vector<std::vector<std::string>>& names = {})
{
    require(!runs.empty(), "no stability runs");
    require(opts.freq_threshold > 0.0 && opts.freq_threshold <= 1.0, "frequency threshold must lie in (0, 1]");
    require(opts.effect_percentile > 0.0 && opts.effect_percentile <= 1.0, "effect percentile must lie in (0, 1]");
    const double reps = static_cast<double>(runs.size());
    StabilityResult out;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        const Index p = dims[d];
        Vector count = Vector::Zero(p);
        Vector effect_sum = Vector::Zero(p);
        for (const StabilityRun& run : runs) {
            require(run.selected.size() == dims.size() && run.effect.size() == dims.size(), "run view count mismatch");
            for (Index i : run.selected[d]) {
                count(i) += 1.0;
                effect_sum(i) += run.effect[d](i);
            }
        }
        Vector mean_effect = Vector::Zero(p);
        for (Index i = 0; i < p; ++i)
            if (count(i) > 0) mean_effect(i) = effect_sum(i) / count(i);

        std::vector<Index> order(static_cast<std::size_t>(p));
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return mean_effect(a) > mean_effect(b); });
        const auto top = static_cast<std::size_t>(std::ceil(opts.effect_percentile * static_cast<double>(p) - 1e-9));
        std::vector<bool> in_top(static_cast<std::size_t>(p), false);
        for (std::size_t k = 0; k < std::min(top, order.size()); ++k) in_top[static_cast<std::size_t>(order[k])] = true;

        std::vector<StableVariable> stable;
        for (Index i = 0; i < p; ++i) {
            const double freq = count(i) / reps;
            if (freq + 1e-12 >= opts.freq_threshold && in_top[static_cast<std::size_t>(i)] && count(i) > 0) {
                StableVariable v;
                v.view = static_cast<Index>(d) + 1;
                v.index = i + 1;
                if (d < names.size() && static_cast<std::size_t>(i) < names[d].size()) v.name = names[d][static_cast<std::size_t>(i)];
                v.frequency = freq;
                v.mean_effect = mean_effect(i);
                stable.push_back(std::move(v));
            }
        }
        out.stable.push_back(std::move(stable));
        out.frequency.push_back(count / reps);
        out.mean_effect.push_back(std::move(mean_effect));
    }
    return out;
}

/**
 * Resampling stability selection. Run k draws a stratified half split with
 * seed + 1000 (k + 1), tunes tau by cross-validation on that half (same
 * seed), refits there and records the selected rows. Runs execute on
 * spec.workers threads; each run's inner cross-validation is sequential.
 */
inline StabilityResult stability_selection(const MultiViewDataset& ds, const ViewGraphs& graphs, const TuningSpec& spec,
                                           const StabilityOptions& opts = {})
{
    require(ds.standardized, "stability_selection requires standardized data");
    require(opts.reps >= 2, "at least two repetitions are required");
    ds.validate();
    std::vector<StabilityRun> runs(static_cast<std::size_t>(opts.reps));
    parallel_for(runs.size(), static_cast<std::size_t>(std::max(1, spec.workers)), [&](std::size_t k) {
        const unsigned long long seed = spec.seed + kStabilitySeedStride * (k + 1);
        const MuteWarnings mute;
        const std::vector<int> half = stratified_folds(ds.labels, 2, seed);
        std::vector<Index> train_idx, rest_idx;
        for (std::size_t i = 0; i < half.size(); ++i) (half[i] == 0 ? train_idx : rest_idx).push_back(static_cast<Index>(i));
        MultiViewDataset train = detail::split_standardized(ds, train_idx, rest_idx).first;

        TuningSpec inner = spec;
        inner.seed = seed;
        inner.workers = 1;
        const CvResult cv = cross_validate(train, graphs, inner);
        FitConfig cfg = spec.base;
        cfg.taus = cv.best_taus();
        cfg.seed = seed;
        StabilityRun run;
        try {
            const DiscriminantModel model = fit(train, graphs, cfg);
            for (Index d = 0; d < model.num_views(); ++d) {
                const auto du = static_cast<std::size_t>(d);
                run.selected.push_back(model.selected[du]);
                run.effect.push_back(model.gamma[du].rowwise().norm() / static_cast<double>(model.rank()));
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::tau_too_large) throw;
            for (const Matrix& x : ds.views) {
                run.selected.emplace_back();
                run.effect.push_back(Vector::Zero(x.cols()));
            }
        }
        runs[k] = std::move(run);
    });
    std::vector<Index> dims;
    for (const Matrix& x : ds.views) dims.push_back(x.cols());
    return aggregate_stability(runs, dims, opts, ds.names);
}

/// CSV with columns view, index, name, frequency, mean_effect.
inline void write_stability_csv(std::ostream& os, const StabilityResult& res)
{
    os << "view,index,name,frequency,mean_effect\n";
    for (const auto& view : res.stable)
        for (const StableVariable& v : view)
            os << v.view << ',' << v.index << ',' << v.name << ',' << format_double(v.frequency) << ','
               << format_double(v.mean_effect) << '\n';
}

} // namespace sida

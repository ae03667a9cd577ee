#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace sida;
using namespace sida::testing;

namespace {

MultiViewDataset toy(std::vector<Index> dims, unsigned long long seed, Index per_class = 20)
{
    return standardize(toy_dataset(std::move(dims), 3, per_class, 1.5, 4, seed));
}

FitConfig config_with(std::vector<double> taus)
{
    FitConfig cfg;
    cfg.taus = std::move(taus);
    return cfg;
}

std::vector<double> half_max_taus(const MultiViewDataset& ds, const FitConfig& cfg)
{
    const auto bounds = view_tau_bounds(ds, build_scatter_set(ds, cfg.ridges), cfg);
    std::vector<double> taus;
    for (const auto& b : bounds) taus.push_back(0.5 * b.max);
    return taus;
}

} // namespace

TEST(Fit, TauZeroRecoversGevSolution)
{
    for (unsigned long long seed = 1; seed <= 5; ++seed) {
        const MultiViewDataset ds = toy({12, 9, 10}, seed);
        const ScatterSet scat = build_scatter_set(ds);
        const DiscriminantModel model = fit(ds, scat, {}, config_with({0.0, 0.0, 0.0}));
        const GevSolution gev = solve_gev(scat, 0.5, 2);
        for (std::size_t d = 0; d < 3; ++d) {
            EXPECT_LT(max_principal_angle(model.gamma[d], gev.gamma[d]), 1e-6);
            EXPECT_EQ(model.selected[d].size(), static_cast<std::size_t>(ds.views[d].cols()));
        }
    }
}

TEST(Fit, ModelInvariants)
{
    const MultiViewDataset ds = toy({15, 12}, 6);
    FitConfig cfg;
    cfg.taus = half_max_taus(ds, cfg);
    const DiscriminantModel model = fit(ds, {}, cfg);
    EXPECT_EQ(model.rank(), 2);
    for (std::size_t d = 0; d < 2; ++d) {
        const Matrix& g = model.gamma[d];
        ASSERT_EQ(g.cols(), 2);
        EXPECT_FALSE(model.zero_view[d]);
        EXPECT_LT((g.transpose() * g - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_EQ(selected_rows(g), model.selected[d]);
        EXPECT_LT(model.selected[d].size(), static_cast<std::size_t>(g.rows()));
        // Rows outside the support are exactly zero.
        std::vector<bool> in(static_cast<std::size_t>(g.rows()), false);
        for (Index i : model.selected[d]) in[static_cast<std::size_t>(i)] = true;
        for (Index i = 0; i < g.rows(); ++i)
            if (!in[static_cast<std::size_t>(i)]) EXPECT_TRUE(g.row(i).isZero(0.0));
    }
    // Pooled centroids are class means of the concatenated training scores.
    Matrix pooled(ds.num_samples(), 4);
    pooled << ds.views[0] * model.gamma[0], ds.views[1] * model.gamma[1];
    for (int k = 1; k <= 3; ++k) {
        Vector mean = Vector::Zero(4);
        double count = 0;
        for (Index i = 0; i < ds.num_samples(); ++i)
            if (ds.labels[static_cast<std::size_t>(i)] == k) {
                mean += pooled.row(i).transpose();
                count += 1;
            }
        EXPECT_LT((model.pooled_centroids.row(k - 1).transpose() - mean / count).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Fit, TauAboveBoundsIsTooLarge)
{
    const MultiViewDataset ds = toy({10, 10}, 7);
    FitConfig cfg;
    const auto bounds = view_tau_bounds(ds, build_scatter_set(ds), cfg);
    for (double scale : {1.0, 10.0}) {
        cfg.taus = {scale * bounds[0].max, scale * bounds[1].max};
        const CaptureWarnings quiet;
        try {
            fit(ds, {}, cfg);
            FAIL() << "scale " << scale;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::tau_too_large);
            EXPECT_NE(std::string(e.what()).find("tau too large"), std::string::npos);
        }
    }
}

TEST(Fit, OneZeroViewWarnsButSucceeds)
{
    const MultiViewDataset ds = toy({10, 10}, 8);
    FitConfig cfg;
    const auto bounds = view_tau_bounds(ds, build_scatter_set(ds), cfg);
    cfg.taus = {0.3 * bounds[0].max, 100.0 * bounds[1].max};
    const CaptureWarnings capture;
    const DiscriminantModel model = fit(ds, {}, cfg);
    EXPECT_FALSE(model.zero_view[0]);
    EXPECT_TRUE(model.zero_view[1]);
    EXPECT_TRUE(model.gamma[1].isZero(0.0));
    EXPECT_TRUE(capture.contains("view 2 has an all-zero"));
}

TEST(Fit, CovariateViewPassesThrough)
{
    MultiViewDataset raw = toy_dataset({12, 10, 4}, 3, 20, 1.5, 4, 9);
    raw.roles[2] = ViewRole::covariate;
    const MultiViewDataset ds = standardize(raw);
    FitConfig cfg;
    cfg.taus = half_max_taus(ds, cfg);
    EXPECT_EQ(cfg.taus[2], 0.0);
    cfg.taus[2] = 5.0;  // ignored for the covariate view
    const DiscriminantModel model = fit(ds, {}, cfg);
    EXPECT_EQ(model.config.methods[2], ViewMethod::covariate);
    EXPECT_EQ(model.config.taus[2], 0.0);
    EXPECT_EQ(model.selected[2].size(), 4u);
    EXPECT_LT(model.selected[0].size(), 12u);
    // The covariate block is the leading eigenvectors of its final eigensystem.
    const ScatterSet scat = build_scatter_set(ds);
    const EigenPairs e = top_eigenpairs(assemble_coefficient(2, scat, model.gamma, 0.5), 2);
    EXPECT_LT(max_principal_angle(model.gamma[2], e.vectors), 1e-5);
}

TEST(Fit, CovariateViewMustBeLast)
{
    MultiViewDataset raw = toy_dataset({6, 6}, 3, 10, 1.5, 3, 10);
    raw.roles[0] = ViewRole::covariate;
    EXPECT_THROW(fit(standardize(raw), {}, config_with({0.0, 0.0})), Error);
}

TEST(Fit, SidanetViewNeedsMatchingGraph)
{
    const MultiViewDataset ds = toy({8, 8}, 11);
    FitConfig cfg = config_with({0.1, 0.1});
    cfg.methods = {ViewMethod::sidanet, ViewMethod::sida};
    EXPECT_THROW(fit(ds, {}, cfg), Error);
    ViewGraphs wrong = {ViewGraph(7), std::nullopt};
    EXPECT_THROW(fit(ds, wrong, cfg), Error);
    ViewGraphs right = {ViewGraph(8, {{1, 2, 1.0}, {2, 3, 1.0}}), std::nullopt};
    EXPECT_NO_THROW(fit(ds, right, cfg));
}

TEST(Fit, RequiresOneTauPerViewAndStandardizedData)
{
    const MultiViewDataset ds = toy({8, 8}, 12);
    EXPECT_THROW(fit(ds, {}, config_with({0.1})), Error);
    EXPECT_THROW(fit(toy_dataset({8, 8}, 3, 10, 1.5, 3, 12), {}, config_with({0.1, 0.1})), Error);
}

TEST(Fit, BitIdenticalRepeats)
{
    const MultiViewDataset ds = toy({14, 11}, 13);
    ViewGraph g(14);
    for (Index v = 2; v <= 5; ++v) g.add_edge(1, v, 1.0);
    FitConfig cfg;
    cfg.taus = half_max_taus(ds, cfg);
    cfg.methods = {ViewMethod::sidanet, ViewMethod::sida};
    const ViewGraphs graphs = {g, std::nullopt};
    const DiscriminantModel a = fit(ds, graphs, cfg);
    const DiscriminantModel b = fit(ds, graphs, cfg);
    for (std::size_t d = 0; d < 2; ++d) {
        EXPECT_EQ(a.gamma[d], b.gamma[d]);
        EXPECT_EQ(a.selected[d], b.selected[d]);
    }
    EXPECT_EQ(a.pooled_centroids, b.pooled_centroids);
}

TEST(Fit, NoiseSecondViewDoesNotMoveFirstViewSupport)
{
    double total = 0.0;
    for (unsigned long long seed = 1; seed <= 5; ++seed) {
        MultiViewDataset raw = toy_dataset({30}, 3, 25, 1.0, 5, 100 + seed);
        std::mt19937_64 rng(seed);
        raw.views.push_back(random_matrix(raw.num_samples(), 25, rng));
        raw.roles.push_back(ViewRole::penalized);
        const MultiViewDataset ds = standardize(raw);

        std::vector<std::vector<Index>> supports;
        for (double rho : {0.5, 1.0}) {
            TuningSpec spec;
            spec.seed = seed;
            spec.base.rho = rho;
            const CaptureWarnings quiet;
            const CvResult cv = cross_validate(ds, {}, spec);
            FitConfig cfg = spec.base;
            cfg.taus = cv.best_taus();
            supports.push_back(fit(ds, {}, cfg).selected[0]);
        }
        total += jaccard(supports[0], supports[1]);
    }
    EXPECT_GE(total / 5.0, 0.8);
}

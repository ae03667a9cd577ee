#pragma once

#include "data.hpp"
#include "error.hpp"
#include "gev.hpp"
#include "graph.hpp"
#include "linalg.hpp"
#include "log.hpp"
#include "scatter.hpp"
#include "sparse.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sida {

enum class ViewMethod { sida, sidanet, covariate };

inline std::string to_string(ViewMethod m)
{
    switch (m) {
        case ViewMethod::sida: return "sida";
        case ViewMethod::sidanet: return "sidanet";
        case ViewMethod::covariate: return "covariate";
    }
    return "sida";
}

inline ViewMethod parse_view_method(const std::string& s)
{
    if (s == "sida") return ViewMethod::sida;
    if (s == "sidanet") return ViewMethod::sidanet;
    if (s == "covariate") return ViewMethod::covariate;
    fail(ErrorCode::validation, "unknown method '" + s + "' (expected sida, sidanet or covariate)");
}

struct FitConfig {
    std::vector<ViewMethod> methods;  // one per view; empty means sida everywhere
    std::vector<double> taus;         // one per view
    double rho = 0.5;
    double eta = 0.5;
    std::vector<Ridge> ridges;        // empty means automatic for every view
    unsigned long long seed = 0;
    double eps = 1e-6;
    int max_outer = 50;
    GevInit init = GevInit::lda;
    bool normalized_laplacian = true;
    SidanetOptions sidanet;
};

/**
 * Fitted sparse integrative discriminant model.
 *
 * gamma[d] is p_d x (K - 1) with orthonormal nonzero columns. Scores are
 * X^d gamma[d] on data standardized with `stats`; pooled centroids are the
 * class means of the concatenated scores (K x D (K - 1)).
 */
struct DiscriminantModel {
    FitConfig config;
    int num_classes = 0;
    std::vector<Matrix> gamma;
    std::vector<Vector> lambda;
    std::vector<std::vector<Index>> selected;  // 0-based row indices
    std::vector<bool> zero_view;
    Matrix pooled_centroids;
    std::vector<Matrix> view_centroids;        // K x r each
    std::vector<ColumnStats> stats;
    std::vector<std::vector<std::string>> names;
    int iterations = 0;
    bool converged = false;

    Index num_views() const { return static_cast<Index>(gamma.size()); }
    Index rank() const { return num_classes - 1; }
};

namespace detail {

inline std::vector<ViewMethod> resolve_methods(const MultiViewDataset& ds, const FitConfig& cfg)
{
    std::vector<ViewMethod> methods = cfg.methods;
    if (methods.empty()) methods.assign(ds.views.size(), ViewMethod::sida);
    require(methods.size() == ds.views.size(), "one method per view is required");
    for (std::size_t d = 0; d < methods.size(); ++d) {
        if (ds.roles[d] == ViewRole::covariate) methods[d] = ViewMethod::covariate;
        if (methods[d] == ViewMethod::covariate)
            require(d + 1 == methods.size(), "the covariate view must be the last view");
    }
    return methods;
}

/// Orthonormalized copy of a sparse iterate with its support preserved.
inline Matrix orthonormalize_keep_support(const Matrix& g)
{
    const auto support = selected_rows(g);
    Matrix q = gram_schmidt(g);
    std::vector<bool> keep(static_cast<std::size_t>(g.rows()), false);
    for (Index i : support) keep[static_cast<std::size_t>(i)] = true;
    for (Index i = 0; i < g.rows(); ++i)
        if (!keep[static_cast<std::size_t>(i)]) q.row(i).setZero();
    return q;
}

} // namespace detail

/// Class means of `scores` (n x m) as a K x m matrix.
inline Matrix class_centroids(const Matrix& scores, const std::vector<int>& labels, int num_classes)
{
    Matrix c = Matrix::Zero(num_classes, scores.cols());
    std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
    for (Index i = 0; i < scores.rows(); ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        c.row(y - 1) += scores.row(i);
        counts[static_cast<std::size_t>(y - 1)] += 1.0;
    }
    for (int k = 0; k < num_classes; ++k)
        if (counts[static_cast<std::size_t>(k)] > 0) c.row(k) /= counts[static_cast<std::size_t>(k)];
    return c;
}

/**
 * Alternating sparse fit on a prebuilt ScatterSet (lets cross-validation
 * reuse one whitening per fold across many tau candidates).
 *
 * Each outer sweep visits d = 1..D: the eigensystem of C_d is refreshed with
 * the other views' current (orthonormalized) sparse matrices, D = C_d
 * Gamma_tilde_d is formed and the view's penalized subproblem is solved.
 * Sweeps stop when the largest sign-aligned change of any sparse iterate is
 * below eps or after max_outer sweeps.
 */
inline DiscriminantModel fit(const MultiViewDataset& ds, const ScatterSet& scat, const ViewGraphs& graphs,
                             const FitConfig& cfg)
{
    require(ds.standardized, "fit requires standardized data");
    ds.validate();
    const Index views = ds.num_views();
    require(scat.num_views() == views, "scatter set does not match the dataset");
    require(static_cast<Index>(cfg.taus.size()) == views, "one tau per view is required");
    require(cfg.max_outer >= 1, "max_outer must be positive");
    require(graphs.empty() || static_cast<Index>(graphs.size()) == views, "graphs must be empty or one per view");

    const auto methods = detail::resolve_methods(ds, cfg);
    std::vector<double> taus = cfg.taus;
    std::vector<std::optional<LaplacianMatrix>> laplacians(static_cast<std::size_t>(views));
    for (Index d = 0; d < views; ++d) {
        const auto du = static_cast<std::size_t>(d);
        require(taus[du] >= 0.0 && std::isfinite(taus[du]), "tau must be finite and non-negative");
        if (methods[du] == ViewMethod::covariate) taus[du] = 0.0;
        if (methods[du] == ViewMethod::sidanet) {
            require(!graphs.empty() && graphs[du].has_value(),
                    "view " + std::to_string(d + 1) + " uses sidanet but has no graph");
            require(graphs[du]->num_vertices() == ds.views[du].cols(),
                    "graph for view " + std::to_string(d + 1) + " has the wrong vertex count");
            laplacians[du] = build_laplacian(*graphs[du], cfg.normalized_laplacian);
        }
    }

    const int num_classes = ds.num_classes();
    const Index r = num_classes - 1;
    GevOptions gev_opts;
    gev_opts.init = cfg.init;
    gev_opts.seed = cfg.seed;
    std::vector<Matrix> coupling = initial_gammas(scat, r, gev_opts);
    std::vector<Matrix> sparse(static_cast<std::size_t>(views));
    std::vector<Vector> lambdas(static_cast<std::size_t>(views));

    DiscriminantModel model;
    for (int outer = 1; outer <= cfg.max_outer; ++outer) {
        double change = 0.0;
        for (Index d = 0; d < views; ++d) {
            const auto du = static_cast<std::size_t>(d);
            const Matrix l = coefficient_factor(d, scat, coupling, cfg.rho);
            EigenPairs e = l.cols() >= r ? top_eigenpairs_factored(l, r)
                                         : top_eigenpairs(assemble_coefficient(d, scat, coupling, cfg.rho), r);
            Matrix next;
            if (methods[du] == ViewMethod::covariate) {
                next = e.vectors;
            } else {
                SparseSubproblem sub;
                sub.target = l * (l.transpose() * e.vectors);
                sub.lambdas = e.values;
                sub.tau = taus[du];
                sub.eta = cfg.eta;
                if (methods[du] == ViewMethod::sidanet) {
                    sub.laplacian = laplacians[du];
                    next = solve_view_sidanet(sub, cfg.sidanet);
                } else {
                    next = solve_view_sida(sub);
                }
            }
            if (outer > 1) change = std::max(change, sign_aligned_distance(next, sparse[du]));
            sparse[du] = std::move(next);
            lambdas[du] = e.values;
            coupling[du] = detail::orthonormalize_keep_support(sparse[du]);
        }
        model.iterations = outer;
        if (outer > 1 && change < cfg.eps) {
            model.converged = true;
            break;
        }
    }
    if (!model.converged)
        warn("fit did not converge in " + std::to_string(cfg.max_outer) + " outer sweeps; returning last iterate");

    model.config = cfg;
    model.config.methods = methods;
    model.config.taus = taus;
    model.num_classes = num_classes;
    model.stats = ds.stats;
    model.names = ds.names;
    bool all_zero = true;
    for (Index d = 0; d < views; ++d) {
        const auto du = static_cast<std::size_t>(d);
        Matrix g = detail::orthonormalize_keep_support(sparse[du]);
        auto support = selected_rows(g);
        const bool zero = support.empty();
        all_zero = all_zero && zero;
        if (zero) warn("view " + std::to_string(d + 1) + " has an all-zero discriminant matrix");
        model.gamma.push_back(std::move(g));
        model.lambda.push_back(lambdas[du]);
        model.selected.push_back(std::move(support));
        model.zero_view.push_back(zero);
    }
    if (all_zero) fail(ErrorCode::tau_too_large, "tau too large: every view's discriminant matrix is zero");

    Matrix pooled(ds.num_samples(), views * r);
    for (Index d = 0; d < views; ++d) {
        const Matrix u = ds.views[static_cast<std::size_t>(d)] * model.gamma[static_cast<std::size_t>(d)];
        pooled.middleCols(d * r, r) = u;
        model.view_centroids.push_back(class_centroids(u, ds.labels, num_classes));
    }
    model.pooled_centroids = class_centroids(pooled, ds.labels, num_classes);
    return model;
}

inline DiscriminantModel fit(const MultiViewDataset& ds, const ViewGraphs& graphs, const FitConfig& cfg)
{
    require(ds.standardized, "fit requires standardized data");
    return fit(ds, build_scatter_set(ds, cfg.ridges), graphs, cfg);
}

} // namespace sida

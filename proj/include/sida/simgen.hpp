#pragma once

#include "data.hpp"
#include "error.hpp"
#include "graph.hpp"
#include "linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sida {

inline Matrix compound_symmetric(Index size, double corr)
{
    require(size >= 1, "size must be positive");
    require(std::abs(corr) < 1.0, "correlation must lie in (-1, 1)");
    Matrix m = Matrix::Constant(size, size, corr);
    m.diagonal().setOnes();
    return m;
}

inline Matrix ar1(Index size, double base)
{
    require(size >= 1, "size must be positive");
    require(std::abs(base) < 1.0, "AR(1) base must lie in (-1, 1)");
    Matrix m(size, size);
    for (Index i = 0; i < size; ++i)
        for (Index j = 0; j < size; ++j) m(i, j) = std::pow(base, static_cast<double>(std::abs(i - j)));
    return m;
}

enum class Scenario { s1, s2, s3, net1, net2 };

inline std::string to_string(Scenario s)
{
    switch (s) {
        case Scenario::s1: return "S1";
        case Scenario::s2: return "S2";
        case Scenario::s3: return "S3";
        case Scenario::net1: return "NET1";
        case Scenario::net2: return "NET2";
    }
    return "S1";
}

inline Scenario parse_scenario(const std::string& s)
{
    if (s == "S1") return Scenario::s1;
    if (s == "S2") return Scenario::s2;
    if (s == "S3") return Scenario::s3;
    if (s == "NET1") return Scenario::net1;
    if (s == "NET2") return Scenario::net2;
    fail(ErrorCode::validation, "unknown scenario '" + s + "' (expected S1, S2, S3, NET1 or NET2)");
}

inline bool is_network(Scenario s) { return s == Scenario::net1 || s == Scenario::net2; }

struct ScenarioSpec {
    Scenario scenario = Scenario::s1;
    int setting = 1;
    std::vector<Index> dims;  // one per view
    Index n_per_class = 80;
    double rho1 = 0.9;
    double rho2 = 0.7;
    double c = 0.5;
    unsigned long long seed = 0;

    int num_views() const { return static_cast<int>(dims.size()); }
    int num_classes() const { return scenario == Scenario::s3 ? 2 : 3; }
    Index signal_count() const { return scenario == Scenario::net1 ? 40 : 20; }

    void validate() const
    {
        const bool net = is_network(scenario);
        require(dims.size() == (net ? 3u : 2u), net ? "network scenarios have three views" : "scenarios S1-S3 have two views");
        for (Index p : dims) require(p >= 40, "every view needs at least 40 variables");
        require(n_per_class >= 2, "n_per_class must be at least 2");
        require(rho1 > 0.0 && rho1 < 1.0 && rho2 > 0.0 && rho2 < 1.0, "rho1 and rho2 must lie in (0, 1)");
        require(c > 0.0, "c must be positive");
        require(net || (setting >= 1 && setting <= 3), "setting must be 1, 2 or 3");
    }
};

/// Standard defaults for a scenario and setting; dims may be overridden afterwards.
inline ScenarioSpec scenario_defaults(Scenario s, int setting = 1)
{
    ScenarioSpec spec;
    spec.scenario = s;
    spec.setting = setting;
    if (is_network(s)) {
        spec.dims = {500, 500, 500};
        spec.n_per_class = 40;
        spec.rho1 = 0.9;
        spec.rho2 = 0.7;
        spec.c = 0.2;
        return spec;
    }
    require(setting >= 1 && setting <= 3, "setting must be 1, 2 or 3");
    spec.dims = {2000, 2000};
    spec.n_per_class = 80;
    static constexpr double rho1[] = {0.9, 0.4, 0.15};
    static constexpr double rho2[] = {0.7, 0.2, 0.05};
    static constexpr double c_s12[] = {0.5, 0.2, 0.12};
    static constexpr double c_s3[] = {0.25, 0.2, 0.12};
    spec.rho1 = rho1[setting - 1];
    spec.rho2 = rho2[setting - 1];
    spec.c = (s == Scenario::s3 ? c_s3 : c_s12)[setting - 1];
    return spec;
}

/// Population quantities of a scenario.
struct Population {
    std::vector<Matrix> sigma;   // joint covariance per class (all equal except S2)
    Matrix means;                // (sum p_d) x K
    std::vector<Matrix> v;       // per view, p_d x 2 with V^T Sigma^d V = I
    std::vector<Index> offsets;  // first joint index of each view
};

struct GeneratedData {
    ScenarioSpec spec;
    MultiViewDataset train;
    MultiViewDataset test;
    std::vector<std::vector<Index>> truth;  // 1-based per view
    ViewGraphs graphs;
    Population population;
};

namespace detail {

/// Within-view covariance of the S or NET scenarios (signal blocks then identity).
inline Matrix view_covariance(Scenario s, Index p)
{
    Matrix m = Matrix::Identity(p, p);
    if (is_network(s)) {
        Matrix block = compound_symmetric(10, 0.7);
        block.bottomRightCorner(9, 9) = compound_symmetric(9, 0.49);
        for (Index b = 0; b < 4; ++b) m.block(10 * b, 10 * b, 10, 10) = block;
    } else {
        for (Index b = 0; b < 2; ++b) m.block(10 * b, 10 * b, 10, 10) = compound_symmetric(10, 0.7);
    }
    return m;
}

inline Matrix inverse_sqrt_spd(const Matrix& a)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(a));
    const Vector vals = es.eigenvalues();
    if (vals.minCoeff() <= 1e-12 * std::max(1.0, vals.maxCoeff()))
        fail(ErrorCode::singular, "Gram matrix is not positive definite");
    return es.eigenvectors() * vals.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

/// Signal loadings with entries U(0.5, 1), hub rows scaled by 10 in network
/// scenarios.
inline Matrix draw_raw_loadings(const ScenarioSpec& spec, Index p, std::mt19937_64& rng)
{
    const Index s = spec.signal_count();
    std::uniform_real_distribution<double> unif(0.5, 1.0);
    Matrix v = Matrix::Zero(p, 2);
    for (Index i = 0; i < s; ++i)
        for (Index k = 0; k < 2; ++k) v(i, k) = unif(rng);
    if (is_network(spec.scenario))
        for (Index i = 0; i < s; i += 10) v.row(i) *= 10.0;
    return v;
}

/// Rescales loadings so that V^T Sigma V = I.
inline Matrix normalize_loadings(const Matrix& v, const Matrix& sigma)
{
    return v * inverse_sqrt_spd(v.transpose() * sigma * v);
}

/// Joint covariance with within-view blocks `within` and cross blocks
/// Sigma^d V^d diag(rho1, rho2) V^j^T Sigma^j.
inline Matrix joint_covariance(const ScenarioSpec& spec, const std::vector<Index>& offsets,
                               const std::vector<Matrix>& within, const std::vector<Matrix>& v)
{
    const Index total = offsets.back() + spec.dims.back();
    const Vector dvec = (Vector(2) << spec.rho1, spec.rho2).finished();
    Matrix out = Matrix::Zero(total, total);
    for (std::size_t d = 0; d < within.size(); ++d) {
        out.block(offsets[d], offsets[d], spec.dims[d], spec.dims[d]) = within[d];
        for (std::size_t j = d + 1; j < within.size(); ++j) {
            const Matrix cross = within[d] * v[d] * dvec.asDiagonal() * v[j].transpose() * within[j];
            out.block(offsets[d], offsets[j], spec.dims[d], spec.dims[j]) = cross;
            out.block(offsets[j], offsets[d], spec.dims[j], spec.dims[d]) = cross.transpose();
        }
    }
    return out;
}

/// Mean-defining matrix A^d (p_d x (K - 1)).
inline Matrix mean_loadings(const ScenarioSpec& spec, Index p)
{
    const double c = spec.c;
    switch (spec.scenario) {
        case Scenario::s3: {
            Matrix a = Matrix::Zero(p, 1);
            a.col(0).head(20).setConstant(c);
            return a;
        }
        case Scenario::net1: {
            Matrix a = Matrix::Zero(p, 2);
            a.col(0).segment(0, 20).setConstant(c);
            a.col(1).segment(20, 20).setConstant(-c);
            return a;
        }
        default: {
            Matrix a = Matrix::Zero(p, 2);
            a.col(0).segment(0, 10).setConstant(c);
            a.col(1).segment(10, 10).setConstant(-c);
            return a;
        }
    }
}

inline void check_spd(const Matrix& sigma, const std::string& what)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 1e-10)
        fail(ErrorCode::singular, what + " is not positive definite (smallest eigenvalue " +
                                      format_double(es.eigenvalues().minCoeff()) + ")");
}

inline Matrix draw_class_rows(const Matrix& chol_lower, const Vector& mean, Index rows, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix z(rows, mean.size());
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < mean.size(); ++j) z(i, j) = normal(rng);
    Matrix x = z * chol_lower.transpose();
    x.rowwise() += mean.transpose();
    return x;
}

inline MultiViewDataset draw_dataset(const ScenarioSpec& spec, const Population& pop,
                                     const std::vector<Matrix>& chol, std::mt19937_64& rng)
{
    const int k_count = spec.num_classes();
    const Index n = spec.n_per_class * k_count;
    const Index total = pop.means.rows();
    Matrix joint(n, total);
    std::vector<int> labels;
    for (int k = 0; k < k_count; ++k) {
        joint.middleRows(k * spec.n_per_class, spec.n_per_class) =
            draw_class_rows(chol[static_cast<std::size_t>(k)], pop.means.col(k), spec.n_per_class, rng);
        labels.insert(labels.end(), static_cast<std::size_t>(spec.n_per_class), k + 1);
    }
    MultiViewDataset ds;
    ds.labels = std::move(labels);
    for (int d = 0; d < spec.num_views(); ++d) {
        const auto du = static_cast<std::size_t>(d);
        ds.views.push_back(joint.middleCols(pop.offsets[du], spec.dims[du]));
        ds.roles.push_back(ViewRole::penalized);
        std::vector<std::string> names;
        for (Index j = 0; j < spec.dims[du]; ++j)
            names.push_back("v" + std::to_string(d + 1) + "_" + std::to_string(j + 1));
        ds.names.push_back(std::move(names));
    }
    ds.validate();
    return ds;
}

} // namespace detail

/**
 * Population covariance(s), means and loadings. Cross blocks are
 * Sigma^d V^d diag(rho1, rho2) V^j^T Sigma^j. Scenario Two swaps the
 * within-view blocks of classes 2 and 3 for AR(1)(0.6) and the identity and
 * rebuilds their cross blocks the same way, with the raw loadings
 * renormalized against the class's own within-view blocks; keeping the
 * class 1 cross block instead makes those covariances indefinite.
 */
inline Population build_population(const ScenarioSpec& spec)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const int views = spec.num_views();
    Population pop;
    Index total = 0;
    for (Index p : spec.dims) {
        pop.offsets.push_back(total);
        total += p;
    }
    std::vector<Matrix> within;
    std::vector<Matrix> raw;
    for (int d = 0; d < views; ++d) {
        within.push_back(detail::view_covariance(spec.scenario, spec.dims[static_cast<std::size_t>(d)]));
        raw.push_back(detail::draw_raw_loadings(spec, spec.dims[static_cast<std::size_t>(d)], rng));
        pop.v.push_back(detail::normalize_loadings(raw.back(), within.back()));
    }
    const Matrix base = detail::joint_covariance(spec, pop.offsets, within, pop.v);

    const int k_count = spec.num_classes();
    Matrix a(total, k_count - 1);
    for (int d = 0; d < views; ++d) {
        const auto du = static_cast<std::size_t>(d);
        a.middleRows(pop.offsets[du], spec.dims[du]) = detail::mean_loadings(spec, spec.dims[du]);
    }
    pop.means = Matrix::Zero(total, k_count);
    pop.means.leftCols(k_count - 1) = base * a;

    pop.sigma.assign(static_cast<std::size_t>(k_count), base);
    if (spec.scenario == Scenario::s2) {
        for (int k = 1; k < 3; ++k) {
            std::vector<Matrix> w, v;
            for (int d = 0; d < views; ++d) {
                const Index p = spec.dims[static_cast<std::size_t>(d)];
                w.push_back(k == 1 ? ar1(p, 0.6) : Matrix::Identity(p, p));
                v.push_back(detail::normalize_loadings(raw[static_cast<std::size_t>(d)], w.back()));
            }
            pop.sigma[static_cast<std::size_t>(k)] = detail::joint_covariance(spec, pop.offsets, w, v);
        }
    }
    for (int k = 0; k < k_count; ++k)
        detail::check_spd(pop.sigma[static_cast<std::size_t>(k)], "class " + std::to_string(k + 1) + " covariance");
    return pop;
}

inline std::vector<std::vector<Index>> scenario_truth(const ScenarioSpec& spec)
{
    std::vector<Index> idx;
    for (Index i = 1; i <= spec.signal_count(); ++i) idx.push_back(i);
    return std::vector<std::vector<Index>>(static_cast<std::size_t>(spec.num_views()), idx);
}

/// Unit-weight star per network block: hub is the block's first variable.
inline ViewGraphs scenario_graphs(const ScenarioSpec& spec)
{
    ViewGraphs graphs;
    if (!is_network(spec.scenario)) return graphs;
    for (Index p : spec.dims) {
        ViewGraph g(p);
        for (Index b = 0; b < 4; ++b)
            for (Index s = 1; s < 10; ++s) g.add_edge(10 * b + 1, 10 * b + 1 + s, 1.0);
        graphs.emplace_back(std::move(g));
    }
    return graphs;
}

/// Training draw from stream `seed` (after the loadings) and an independent
/// test draw of the same size from stream `seed + 1`.
inline GeneratedData generate(const ScenarioSpec& spec)
{
    GeneratedData out;
    out.spec = spec;
    out.population = build_population(spec);
    std::vector<Matrix> chol;
    for (const Matrix& s : out.population.sigma) {
        Eigen::LLT<Matrix> llt(s);
        if (llt.info() != Eigen::Success) fail(ErrorCode::singular, "covariance Cholesky failed");
        chol.push_back(llt.matrixL());
    }
    std::mt19937_64 train_rng(spec.seed);
    train_rng.discard(1000003);
    std::mt19937_64 test_rng(spec.seed + 1);
    out.train = detail::draw_dataset(spec, out.population, chol, train_rng);
    out.test = detail::draw_dataset(spec, out.population, chol, test_rng);
    out.truth = scenario_truth(spec);
    out.graphs = scenario_graphs(spec);
    return out;
}

} // namespace sida

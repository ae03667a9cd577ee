#pragma once

#include "data.hpp"
#include "error.hpp"
#include "linalg.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sida {

struct Edge {
    Index u;  // 1-based
    Index v;  // 1-based
    double w;
};

/**
 * Undirected weighted variable network for one view. Each edge is stored
 * once; (u, v) and (v, u) describe the same edge. Self-loops are rejected.
 */
class ViewGraph
{
public:
    ViewGraph() = default;

    explicit ViewGraph(Index p) : p_(p) { require(p >= 0, "vertex count must be non-negative"); }

    ViewGraph(Index p, const std::vector<Edge>& edges) : ViewGraph(p)
    {
        for (const auto& e : edges) add_edge(e.u, e.v, e.w);
    }

    /// Adds or accumulates into the weight of edge {u, v}.
    void add_edge(Index u, Index v, double w)
    {
        require(u >= 1 && u <= p_ && v >= 1 && v <= p_,
                "edge (" + std::to_string(u) + ", " + std::to_string(v) + ") outside vertex range 1.." +
                    std::to_string(p_));
        require(u != v, "self-loop at vertex " + std::to_string(u) + " is not allowed");
        require(std::isfinite(w) && w >= 0.0, "edge weights must be finite and non-negative");
        if (u > v) std::swap(u, v);
        weights_[{u, v}] += w;
    }

    Index num_vertices() const { return p_; }

    std::vector<Edge> edges() const
    {
        std::vector<Edge> out;
        out.reserve(weights_.size());
        for (const auto& [key, w] : weights_) out.push_back({key.first, key.second, w});
        return out;
    }

    /// Weighted degree r_v = sum of incident edge weights, 0-based index.
    Vector degrees() const
    {
        Vector r = Vector::Zero(p_);
        for (const auto& [key, w] : weights_) {
            r(key.first - 1) += w;
            r(key.second - 1) += w;
        }
        return r;
    }

private:
    Index p_ = 0;
    std::map<std::pair<Index, Index>, double> weights_;
};

/// Sparse symmetric p x p graph operator.
struct LaplacianMatrix {
    SparseMatrix matrix;

    Index size() const { return matrix.rows(); }
    Matrix dense() const { return Matrix(matrix); }
};

/**
 * Normalized Laplacian: 1 on the diagonal of vertices with nonzero degree,
 * -w(u,v) / sqrt(r_u r_v) between adjacent vertices, 0 elsewhere (isolated
 * vertices keep a zero diagonal).
 */
inline LaplacianMatrix build_normalized_laplacian(const ViewGraph& g)
{
    const Index p = g.num_vertices();
    const Vector r = g.degrees();
    std::vector<Eigen::Triplet<double>> trip;
    for (Index v = 0; v < p; ++v)
        if (r(v) != 0.0) trip.emplace_back(v, v, 1.0);
    for (const auto& e : g.edges()) {
        if (e.w == 0.0) continue;
        const double val = -e.w / std::sqrt(r(e.u - 1) * r(e.v - 1));
        trip.emplace_back(e.u - 1, e.v - 1, val);
        trip.emplace_back(e.v - 1, e.u - 1, val);
    }
    LaplacianMatrix out;
    out.matrix.resize(p, p);
    out.matrix.setFromTriplets(trip.begin(), trip.end());
    return out;
}

/// Unnormalized Laplacian: r_v on the diagonal, -w(u,v) off it.
inline LaplacianMatrix build_unnormalized_laplacian(const ViewGraph& g)
{
    const Index p = g.num_vertices();
    const Vector r = g.degrees();
    std::vector<Eigen::Triplet<double>> trip;
    for (Index v = 0; v < p; ++v)
        if (r(v) != 0.0) trip.emplace_back(v, v, r(v));
    for (const auto& e : g.edges()) {
        if (e.w == 0.0) continue;
        trip.emplace_back(e.u - 1, e.v - 1, -e.w);
        trip.emplace_back(e.v - 1, e.u - 1, -e.w);
    }
    LaplacianMatrix out;
    out.matrix.resize(p, p);
    out.matrix.setFromTriplets(trip.begin(), trip.end());
    return out;
}

inline LaplacianMatrix build_laplacian(const ViewGraph& g, bool normalized = true)
{
    return normalized ? build_normalized_laplacian(g) : build_unnormalized_laplacian(g);
}

/**
 * Reads a tab-separated edge list with columns u, v, w (1-based vertices).
 * Lines starting with '#' are comments.
 */
inline ViewGraph load_edge_list(const std::string& path, Index p)
{
    auto in = detail::open_input(path);
    ViewGraph g(p);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto cells = detail::split(t, '\t');
        if (cells.size() != 3)
            fail(ErrorCode::parse, path + ": line " + std::to_string(line_no) + " needs 3 tab-separated fields");
        double u = 0, v = 0, w = 0;
        if (!detail::parse_double(cells[0], u) || !detail::parse_double(cells[1], v) ||
            !detail::parse_double(cells[2], w) || u != std::floor(u) || v != std::floor(v))
            fail(ErrorCode::parse, path + ": malformed edge at line " + std::to_string(line_no));
        try {
            g.add_edge(static_cast<Index>(u), static_cast<Index>(v), w);
        } catch (const Error& e) {
            fail(ErrorCode::parse, path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return g;
}

inline void save_edge_list(const std::string& path, const ViewGraph& g)
{
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
    out << "# u\tv\tw\n";
    for (const auto& e : g.edges()) out << e.u << '\t' << e.v << '\t' << format_double(e.w) << '\n';
}

/// Optional network per view; entries may be empty.
using ViewGraphs = std::vector<std::optional<ViewGraph>>;

} // namespace sida

#pragma once

#include "error.hpp"
#include "linalg.hpp"
#include "log.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sida {

enum class ViewRole { penalized, covariate };

/// Per-column location and scale captured at standardization time. A scale of
/// zero marks a constant column that was only centered.
struct ColumnStats {
    Vector mean;
    Vector sd;
};

/**
 * D sample-aligned views with class labels in 1..K.
 *
 * At most one view may be a covariate view and, if present, it is the last
 * one. After standardize() every non-constant column has mean 0 and sample
 * standard deviation 1 (denominator n - 1).
 */
struct MultiViewDataset {
    std::vector<Matrix> views;
    std::vector<int> labels;
    std::vector<ViewRole> roles;
    std::vector<std::vector<std::string>> names;
    std::vector<ColumnStats> stats;
    bool standardized = false;

    Index num_views() const { return static_cast<Index>(views.size()); }
    Index num_samples() const { return views.empty() ? 0 : views.front().rows(); }
    int num_classes() const
    {
        return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
    }

    /// Class sizes n_1..n_K.
    std::vector<Index> class_counts() const
    {
        std::vector<Index> counts(static_cast<std::size_t>(num_classes()), 0);
        for (int y : labels) ++counts[static_cast<std::size_t>(y - 1)];
        return counts;
    }

    /// Throws ErrorCode::validation when an invariant is broken.
    void validate() const
    {
        require(!views.empty(), "dataset has no views");
        const Index n = views.front().rows();
        for (std::size_t d = 0; d < views.size(); ++d) {
            require(views[d].rows() == n, "view " + std::to_string(d + 1) + " has " +
                                              std::to_string(views[d].rows()) + " rows, expected " +
                                              std::to_string(n));
            require(views[d].allFinite(), "view " + std::to_string(d + 1) + " contains non-finite values");
        }
        require(static_cast<Index>(labels.size()) == n,
                "label count " + std::to_string(labels.size()) + " does not match sample count " +
                    std::to_string(n));
        require(roles.size() == views.size(), "one role per view is required");
        const int k = num_classes();
        require(k >= 2, "at least two classes are required");
        std::vector<int> seen(static_cast<std::size_t>(k), 0);
        for (int y : labels) {
            require(y >= 1 && y <= k, "label " + std::to_string(y) + " outside 1..K");
            seen[static_cast<std::size_t>(y - 1)] = 1;
        }
        for (int c = 0; c < k; ++c)
            require(seen[static_cast<std::size_t>(c)] != 0, "class " + std::to_string(c + 1) + " has no samples");
        const auto ncov = std::count(roles.begin(), roles.end(), ViewRole::covariate);
        require(ncov <= 1, "at most one covariate view is allowed");
        if (ncov == 1) require(roles.back() == ViewRole::covariate, "the covariate view must be the last view");
        if (!names.empty()) {
            require(names.size() == views.size(), "variable names must be given for every view");
            for (std::size_t d = 0; d < views.size(); ++d)
                require(static_cast<Index>(names[d].size()) == views[d].cols(),
                        "view " + std::to_string(d + 1) + " name count does not match column count");
        }
    }

    /// Rows `idx` of every view with their labels, roles and names. The
    /// subset carries no statistics and is marked unstandardized.
    MultiViewDataset subset(const std::vector<Index>& idx) const
    {
        MultiViewDataset out;
        out.roles = roles;
        out.names = names;
        out.views.reserve(views.size());
        for (const auto& x : views) {
            Matrix s(static_cast<Index>(idx.size()), x.cols());
            for (std::size_t i = 0; i < idx.size(); ++i) s.row(static_cast<Index>(i)) = x.row(idx[i]);
            out.views.push_back(std::move(s));
        }
        out.labels.reserve(idx.size());
        for (Index i : idx) out.labels.push_back(labels[static_cast<std::size_t>(i)]);
        return out;
    }
};

inline ColumnStats column_stats(const Matrix& x)
{
    ColumnStats s;
    const Index n = x.rows();
    s.mean = x.colwise().mean().transpose();
    s.sd = Vector::Zero(x.cols());
    if (n > 1) {
        for (Index j = 0; j < x.cols(); ++j) {
            const double ss = (x.col(j).array() - s.mean(j)).square().sum();
            s.sd(j) = std::sqrt(ss / static_cast<double>(n - 1));
        }
    }
    return s;
}

/// Columns whose relative spread is below this are treated as constant.
inline constexpr double kConstantColumnTolerance = 1e-12;

inline bool is_constant_column(double mean, double sd)
{
    return sd <= kConstantColumnTolerance * std::max(1.0, std::abs(mean));
}

/// Applies previously captured statistics; constant columns are centered only.
inline Matrix apply_stats(const Matrix& x, const ColumnStats& s)
{
    require(x.cols() == s.mean.size(), "column count " + std::to_string(x.cols()) +
                                           " does not match the " + std::to_string(s.mean.size()) +
                                           " columns seen in training");
    Matrix out = x.rowwise() - s.mean.transpose();
    for (Index j = 0; j < x.cols(); ++j)
        if (s.sd(j) > 0.0) out.col(j) /= s.sd(j);
    return out;
}

/**
 * Centers and scales each column of each view, recording the statistics so
 * held-out data can be transformed identically. Constant columns are centered,
 * recorded with sd = 0, and reported through warn().
 */
inline MultiViewDataset standardize(const MultiViewDataset& ds)
{
    require(!ds.standardized, "dataset is already standardized");
    MultiViewDataset out = ds;
    out.stats.clear();
    for (std::size_t d = 0; d < ds.views.size(); ++d) {
        ColumnStats s = column_stats(ds.views[d]);
        Index constant = 0;
        for (Index j = 0; j < s.sd.size(); ++j) {
            if (is_constant_column(s.mean(j), s.sd(j))) {
                s.sd(j) = 0.0;
                ++constant;
            }
        }
        if (constant > 0)
            warn("view " + std::to_string(d + 1) + ": " + std::to_string(constant) +
                 " constant column(s) centered but not scaled");
        out.views[d] = apply_stats(ds.views[d], s);
        out.stats.push_back(std::move(s));
    }
    out.standardized = true;
    return out;
}

/// Transforms held-out data with the training statistics of `train`.
inline MultiViewDataset standardize_like(const MultiViewDataset& ds, const std::vector<ColumnStats>& stats)
{
    require(stats.size() == ds.views.size(), "statistics do not match the number of views");
    MultiViewDataset out = ds;
    for (std::size_t d = 0; d < ds.views.size(); ++d) out.views[d] = apply_stats(ds.views[d], stats[d]);
    out.stats = stats;
    out.standardized = true;
    return out;
}

// ---------------------------------------------------------------------------
// Categorical covariates

/**
 * Reference coding: one 0/1 column per level except the first. A binary
 * variable therefore becomes a single indicator column.
 */
inline Matrix encode_categorical(const std::vector<std::string>& values, const std::vector<std::string>& levels)
{
    require(levels.size() >= 2, "a categorical variable needs at least two levels");
    std::map<std::string, Index> position;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        require(position.emplace(levels[i], static_cast<Index>(i)).second, "duplicate level '" + levels[i] + "'");
    }
    Matrix out = Matrix::Zero(static_cast<Index>(values.size()), static_cast<Index>(levels.size()) - 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto it = position.find(values[i]);
        if (it == position.end()) fail(ErrorCode::validation, "unseen categorical level '" + values[i] + "'");
        if (it->second > 0) out(static_cast<Index>(i), it->second - 1) = 1.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV I/O

/// Decimal form that round-trips a double exactly.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string_view trim(std::string_view s)
{
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view s, double& out)
{
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

inline std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open '" + path + "' for reading");
    return in;
}

} // namespace detail

struct LabeledMatrix {
    Matrix values;
    std::vector<std::string> names;
};

/**
 * Reads a comma-separated view: a header row of variable names followed by
 * numeric rows. Row numbers in error messages are 1-based file lines.
 */
inline LabeledMatrix load_view_csv(const std::string& path)
{
    auto in = detail::open_input(path);
    std::string line;
    LabeledMatrix out;
    if (!std::getline(in, line)) fail(ErrorCode::parse, path + ": empty file, expected a header row");
    for (auto name : detail::split(line, ',')) out.names.emplace_back(detail::trim(name));
    const std::size_t width = out.names.size();

    std::vector<double> data;
    std::size_t rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split(line, ',');
        if (cells.size() != width)
            fail(ErrorCode::parse, path + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                       " fields, expected " + std::to_string(width));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            double v = 0.0;
            if (!detail::parse_double(cells[j], v))
                fail(ErrorCode::parse, path + ": non-numeric value '" + std::string(detail::trim(cells[j])) +
                                           "' at row " + std::to_string(line_no) + ", column " +
                                           std::to_string(j + 1));
            data.push_back(v);
        }
        ++rows;
    }
    out.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data.data(), static_cast<Index>(rows), static_cast<Index>(width));
    return out;
}

inline void write_view_csv(std::ostream& os, const Matrix& x, const std::vector<std::string>& names)
{
    require(names.empty() || static_cast<Index>(names.size()) == x.cols(), "name count does not match columns");
    for (Index j = 0; j < x.cols(); ++j) {
        if (j) os << ',';
        os << (names.empty() ? "V" + std::to_string(j + 1) : names[static_cast<std::size_t>(j)]);
    }
    os << '\n';
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index j = 0; j < x.cols(); ++j) {
            if (j) os << ',';
            os << format_double(x(i, j));
        }
        os << '\n';
    }
}

inline void save_view_csv(const std::string& path, const Matrix& x, const std::vector<std::string>& names = {})
{
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
    write_view_csv(out, x, names);
    if (!out) fail(ErrorCode::io, "write to '" + path + "' failed");
}

/// Reads a single integer column of 1-based class labels. A non-numeric first
/// line is taken as a header.
inline std::vector<int> load_labels_csv(const std::string& path)
{
    auto in = detail::open_input(path);
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto cell = detail::trim(line);
        if (cell.empty()) continue;
        int v = 0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
            if (line_no == 1) continue;
            fail(ErrorCode::parse, path + ": invalid label '" + std::string(cell) + "' at row " +
                                       std::to_string(line_no));
        }
        if (v < 1) fail(ErrorCode::parse, path + ": labels must be >= 1, got " + std::to_string(v) + " at row " +
                                              std::to_string(line_no));
        labels.push_back(v);
    }
    return labels;
}

inline void save_labels_csv(const std::string& path, const std::vector<int>& labels)
{
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
    out << "label\n";
    for (int y : labels) out << y << '\n';
}

/// Reads a list of 1-based indices, one per line, optional header.
inline std::vector<Index> load_index_csv(const std::string& path)
{
    auto in = detail::open_input(path);
    std::vector<Index> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto cell = detail::trim(line);
        if (cell.empty()) continue;
        long long v = 0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
            if (line_no == 1) continue;
            fail(ErrorCode::parse, path + ": invalid index '" + std::string(cell) + "'");
        }
        out.push_back(static_cast<Index>(v));
    }
    return out;
}

inline void save_index_csv(const std::string& path, const std::vector<Index>& idx)
{
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
    out << "index\n";
    for (Index i : idx) out << i << '\n';
}

} // namespace sida

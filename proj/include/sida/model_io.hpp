#pragma once

#include "error.hpp"
#include "fit.hpp"
#include "linalg.hpp"

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace sida {

using Json = nlohmann::ordered_json;

inline Json matrix_to_json(const Matrix& m)
{
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json vector_to_json(const Vector& v)
{
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Matrix matrix_from_json(const Json& j, Index cols_if_empty = 0)
{
    if (!j.is_array()) fail(ErrorCode::parse, "expected a matrix (array of rows)");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = rows ? static_cast<Index>(j[0].size()) : cols_if_empty;
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) fail(ErrorCode::parse, "ragged matrix in JSON");
        for (Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

inline Vector vector_from_json(const Json& j)
{
    if (!j.is_array()) fail(ErrorCode::parse, "expected an array of numbers");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
    return v;
}

inline Json config_to_json(const FitConfig& cfg)
{
    Json j;
    Json methods = Json::array();
    for (ViewMethod m : cfg.methods) methods.push_back(to_string(m));
    j["methods"] = methods;
    j["taus"] = cfg.taus;
    j["rho"] = cfg.rho;
    j["eta"] = cfg.eta;
    Json ridges = Json::array();
    for (const Ridge& r : cfg.ridges) {
        if (r.value)
            ridges.push_back(Json{{"value", *r.value}});
        else
            ridges.push_back(Json{{"auto_scale", r.scale}});
    }
    j["ridges"] = ridges;
    j["seed"] = cfg.seed;
    j["eps"] = cfg.eps;
    j["max_outer"] = cfg.max_outer;
    j["init"] = cfg.init == GevInit::lda ? "lda" : "random";
    j["normalized_laplacian"] = cfg.normalized_laplacian;
    j["sidanet"] = Json{{"penalty", cfg.sidanet.penalty},       {"rel_tol", cfg.sidanet.rel_tol},
                        {"abs_tol", cfg.sidanet.abs_tol},       {"max_iter", cfg.sidanet.max_iter},
                        {"balance_every", cfg.sidanet.balance_every}, {"balance_until", cfg.sidanet.balance_until}, {"relaxation", cfg.sidanet.relaxation},
                        {"support_tol", cfg.sidanet.support_tol}};
    return j;
}

inline FitConfig config_from_json(const Json& j)
{
    FitConfig cfg;
    for (const auto& m : j.at("methods")) cfg.methods.push_back(parse_view_method(m.get<std::string>()));
    cfg.taus = j.at("taus").get<std::vector<double>>();
    cfg.rho = j.at("rho").get<double>();
    cfg.eta = j.at("eta").get<double>();
    for (const auto& r : j.at("ridges")) {
        if (r.contains("value"))
            cfg.ridges.push_back(Ridge::fixed(r.at("value").get<double>()));
        else
            cfg.ridges.push_back(Ridge::automatic(r.at("auto_scale").get<double>()));
    }
    cfg.seed = j.at("seed").get<unsigned long long>();
    cfg.eps = j.at("eps").get<double>();
    cfg.max_outer = j.at("max_outer").get<int>();
    cfg.init = j.at("init").get<std::string>() == "random" ? GevInit::random : GevInit::lda;
    cfg.normalized_laplacian = j.at("normalized_laplacian").get<bool>();
    const Json& s = j.at("sidanet");
    cfg.sidanet.penalty = s.at("penalty").get<double>();
    cfg.sidanet.rel_tol = s.at("rel_tol").get<double>();
    cfg.sidanet.abs_tol = s.at("abs_tol").get<double>();
    cfg.sidanet.max_iter = s.at("max_iter").get<int>();
    cfg.sidanet.balance_every = s.at("balance_every").get<int>();
    cfg.sidanet.balance_until = s.at("balance_until").get<int>();
    cfg.sidanet.relaxation = s.at("relaxation").get<double>();
    cfg.sidanet.support_tol = s.at("support_tol").get<double>();
    return cfg;
}

inline Json model_to_json(const DiscriminantModel& m)
{
    Json j;
    j["format"] = "sida-model";
    j["version"] = 1;
    j["num_classes"] = m.num_classes;
    j["config"] = config_to_json(m.config);
    j["iterations"] = m.iterations;
    j["converged"] = m.converged;
    Json views = Json::array();
    for (Index d = 0; d < m.num_views(); ++d) {
        const auto du = static_cast<std::size_t>(d);
        Json v;
        v["gamma"] = matrix_to_json(m.gamma[du]);
        v["lambda"] = vector_to_json(m.lambda[du]);
        std::vector<Index> sel;
        for (Index i : m.selected[du]) sel.push_back(i + 1);
        v["selected"] = sel;
        v["zero"] = static_cast<bool>(m.zero_view[du]);
        v["centroids"] = matrix_to_json(m.view_centroids[du]);
        v["mean"] = vector_to_json(m.stats[du].mean);
        v["sd"] = vector_to_json(m.stats[du].sd);
        v["variables"] = du < m.names.size() ? Json(m.names[du]) : Json::array();
        views.push_back(std::move(v));
    }
    j["views"] = views;
    j["pooled_centroids"] = matrix_to_json(m.pooled_centroids);
    return j;
}

inline DiscriminantModel model_from_json(const Json& j)
{
    try {
        if (j.value("format", std::string()) != "sida-model") fail(ErrorCode::parse, "not a sida model file");
        DiscriminantModel m;
        m.num_classes = j.at("num_classes").get<int>();
        m.config = config_from_json(j.at("config"));
        m.iterations = j.at("iterations").get<int>();
        m.converged = j.at("converged").get<bool>();
        const Index r = m.num_classes - 1;
        for (const Json& v : j.at("views")) {
            m.gamma.push_back(matrix_from_json(v.at("gamma"), r));
            m.lambda.push_back(vector_from_json(v.at("lambda")));
            std::vector<Index> sel;
            for (Index i : v.at("selected").get<std::vector<Index>>()) sel.push_back(i - 1);
            m.selected.push_back(std::move(sel));
            m.zero_view.push_back(v.at("zero").get<bool>());
            m.view_centroids.push_back(matrix_from_json(v.at("centroids"), r));
            ColumnStats s;
            s.mean = vector_from_json(v.at("mean"));
            s.sd = vector_from_json(v.at("sd"));
            m.stats.push_back(std::move(s));
            m.names.push_back(v.at("variables").get<std::vector<std::string>>());
        }
        m.pooled_centroids = matrix_from_json(j.at("pooled_centroids"), m.num_views() * r);
        return m;
    } catch (const Json::exception& e) {
        fail(ErrorCode::parse, std::string("malformed model JSON: ") + e.what());
    }
}

inline void save_json(const std::string& path, const Json& j)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::io, "cannot write " + path);
    os << j.dump(2) << '\n';
    if (!os) fail(ErrorCode::io, "write failed for " + path);
}

inline Json load_json(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::io, "cannot open " + path);
    try {
        return Json::parse(is);
    } catch (const Json::exception& e) {
        fail(ErrorCode::parse, path + ": " + e.what());
    }
}

} // namespace sida

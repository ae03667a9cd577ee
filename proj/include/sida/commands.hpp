#pragma once

#include "data.hpp"
#include "error.hpp"
#include "fit.hpp"
#include "graph.hpp"
#include "metrics.hpp"
#include "model_io.hpp"
#include "run_config.hpp"
#include "simgen.hpp"
#include "stability.hpp"
#include "tuning.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace sida {

/// Process exit code for an error category.
inline int exit_code(ErrorCode code)
{
    switch (code) {
        case ErrorCode::parse:
        case ErrorCode::validation: return 2;
        case ErrorCode::singular:
        case ErrorCode::tau_too_large:
        case ErrorCode::not_converged: return 3;
        case ErrorCode::io: return 4;
    }
    return 2;
}

/**
 * Output files of one command. Each file is written to "<path>.partial" and
 * renamed into place by commit(); if the command fails before that, the
 * destructor deletes everything it wrote.
 */
class ArtifactSet {
public:
    explicit ArtifactSet(std::filesystem::path dir) : dir_(std::move(dir))
    {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) fail(ErrorCode::io, "cannot create output directory " + dir_.string() + ": " + ec.message());
    }
    ArtifactSet(const ArtifactSet&) = delete;
    ArtifactSet& operator=(const ArtifactSet&) = delete;

    ~ArtifactSet()
    {
        if (committed_) return;
        std::error_code ec;
        for (const auto& name : names_) std::filesystem::remove(partial(name), ec);
    }

    /// Opens `name` for writing; the stream stays valid until the next call.
    std::ofstream& open(const std::string& name)
    {
        names_.push_back(name);
        stream_ = std::ofstream(partial(name), std::ios::binary);
        if (!stream_) fail(ErrorCode::io, "cannot write " + (dir_ / name).string());
        return stream_;
    }

    void write(const std::string& name, const std::string& content)
    {
        std::ofstream& os = open(name);
        os << content;
        close();
    }

    void close()
    {
        stream_.close();
        if (stream_.fail()) fail(ErrorCode::io, "write failed for " + (dir_ / names_.back()).string());
    }

    void commit()
    {
        for (const auto& name : names_) {
            std::error_code ec;
            std::filesystem::rename(partial(name), dir_ / name, ec);
            if (ec) fail(ErrorCode::io, "cannot finalize " + (dir_ / name).string() + ": " + ec.message());
        }
        committed_ = true;
    }

    const std::vector<std::string>& names() const { return names_; }

private:
    std::filesystem::path partial(const std::string& name) const { return dir_ / (name + ".partial"); }

    std::filesystem::path dir_;
    std::vector<std::string> names_;
    std::ofstream stream_;
    bool committed_ = false;
};

namespace detail {

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline void require_file(const std::string& path, const std::string& what)
{
    if (path.empty()) fail(ErrorCode::validation, "missing " + what);
    if (!std::filesystem::is_regular_file(path)) fail(ErrorCode::validation, what + " '" + path + "' does not exist");
}

inline std::vector<std::string> view_paths(const RunConfig& cfg)
{
    const auto paths = cfg.list("views");
    if (paths.empty()) fail(ErrorCode::validation, "missing --views");
    for (const auto& p : paths) require_file(p, "view file");
    return paths;
}

/// Per-view list from a flag that may hold one value for every view.
inline std::vector<std::string> per_view(const RunConfig& cfg, const std::string& key, std::size_t views,
                                         const std::string& fallback)
{
    auto vals = cfg.list(key);
    if (vals.empty()) return std::vector<std::string>(views, fallback);
    if (vals.size() == 1) return std::vector<std::string>(views, vals.front());
    if (vals.size() != views)
        fail(ErrorCode::validation, "--" + key + " lists " + std::to_string(vals.size()) + " entries but --views lists " +
                                        std::to_string(views));
    return vals;
}

inline Ridge parse_ridge(const std::string& s)
{
    if (s.empty() || s == "auto") return Ridge::automatic();
    if (s.rfind("auto:", 0) == 0) {
        double scale = 0.0;
        if (!parse_double(s.substr(5), scale) || scale < 0.0) fail(ErrorCode::validation, "bad ridge '" + s + "'");
        return Ridge::automatic(scale);
    }
    double v = 0.0;
    if (!parse_double(s, v) || v < 0.0) fail(ErrorCode::validation, "bad ridge '" + s + "' (expected auto, auto:<scale> or a number >= 0)");
    return Ridge::fixed(v);
}

inline FitConfig base_fit_config(const RunConfig& cfg, std::size_t views)
{
    FitConfig fc;
    for (const auto& m : per_view(cfg, "method", views, "sida")) fc.methods.push_back(parse_view_method(m));
    fc.rho = cfg.number("rho");
    fc.eta = cfg.number("eta");
    require(fc.rho >= 0.0 && fc.rho <= 1.0, "--rho must lie in [0, 1]");
    require(fc.eta >= 0.0 && fc.eta <= 1.0, "--eta must lie in [0, 1]");
    for (const auto& r : per_view(cfg, "ridge", views, "auto")) fc.ridges.push_back(parse_ridge(r));
    fc.seed = static_cast<unsigned long long>(cfg.integer("seed"));
    fc.eps = cfg.number("eps");
    require(fc.eps > 0.0, "--eps must be positive");
    fc.max_outer = static_cast<int>(cfg.integer("max-outer"));
    const std::string lap = cfg.get("laplacian");
    require(lap == "normalized" || lap == "unnormalized", "--laplacian must be normalized or unnormalized");
    fc.normalized_laplacian = lap == "normalized";
    return fc;
}

/// Raw dataset from --views/--labels with roles taken from --method.
inline MultiViewDataset load_dataset(const RunConfig& cfg, bool need_labels = true)
{
    const auto paths = view_paths(cfg);
    MultiViewDataset ds;
    const auto methods = per_view(cfg, "method", paths.size(), "sida");
    for (std::size_t d = 0; d < paths.size(); ++d) {
        LabeledMatrix lm = load_view_csv(paths[d]);
        ds.views.push_back(std::move(lm.values));
        ds.names.push_back(std::move(lm.names));
        ds.roles.push_back(parse_view_method(methods[d]) == ViewMethod::covariate ? ViewRole::covariate
                                                                                  : ViewRole::penalized);
    }
    if (need_labels) {
        require_file(cfg.get("labels"), "labels file (--labels)");
        ds.labels = load_labels_csv(cfg.get("labels"));
        ds.validate();
    }
    return ds;
}

inline ViewGraphs load_graphs(const RunConfig& cfg, const MultiViewDataset& ds)
{
    const auto paths = cfg.list("graphs");
    ViewGraphs graphs;
    if (paths.empty()) return graphs;
    if (paths.size() != ds.views.size())
        fail(ErrorCode::validation, "--graphs lists " + std::to_string(paths.size()) + " entries but --views lists " +
                                        std::to_string(ds.views.size()));
    for (std::size_t d = 0; d < paths.size(); ++d) {
        if (paths[d].empty()) {
            graphs.emplace_back();
            continue;
        }
        require_file(paths[d], "graph file");
        graphs.emplace_back(load_edge_list(paths[d], ds.views[d].cols()));
    }
    return graphs;
}

inline TuningSpec tuning_spec(const RunConfig& cfg, std::size_t views)
{
    TuningSpec ts;
    const std::string search = cfg.get("search");
    require(search == "random" || search == "grid", "--search must be random or grid");
    ts.mode = search == "grid" ? SearchMode::grid : SearchMode::random;
    const std::string spacing = cfg.get("spacing");
    require(spacing == "linear" || spacing == "log", "--spacing must be linear or log");
    ts.spacing = spacing == "log" ? GridSpacing::log : GridSpacing::linear;
    ts.points_per_view = static_cast<int>(cfg.integer("grid-points"));
    require(ts.points_per_view == 0 || ts.points_per_view >= 2, "--grid-points must be at least 2");
    ts.random_fraction = cfg.number("random-frac");
    require(ts.random_fraction >= 0.0 && ts.random_fraction <= 1.0, "--random-frac must lie in (0, 1]");
    ts.folds = static_cast<int>(cfg.integer("folds"));
    ts.seed = static_cast<unsigned long long>(cfg.integer("seed"));
    ts.workers = static_cast<int>(cfg.integer("workers"));
    require(ts.workers >= 1, "--workers must be at least 1");
    ts.base = base_fit_config(cfg, views);
    return ts;
}

inline std::vector<double> resolve_taus(const RunConfig& cfg, std::size_t views)
{
    if (cfg.has("tau") && cfg.has("tau-file")) fail(ErrorCode::validation, "give either --tau or --tau-file, not both");
    std::vector<double> taus;
    if (cfg.has("tau-file")) {
        require_file(cfg.get("tau-file"), "tau file");
        const Json j = load_json(cfg.get("tau-file"));
        if (!j.contains("taus")) fail(ErrorCode::parse, cfg.get("tau-file") + ": missing \"taus\"");
        taus = j["taus"].get<std::vector<double>>();
    } else if (cfg.has("tau")) {
        taus = cfg.numbers("tau");
    } else {
        fail(ErrorCode::validation, "missing --tau or --tau-file");
    }
    if (taus.size() == 1) taus.assign(views, taus.front());
    if (taus.size() != views)
        fail(ErrorCode::validation, "got " + std::to_string(taus.size()) + " tau values for " + std::to_string(views) + " views");
    return taus;
}

inline Json manifest(const RunConfig& cfg, const ArtifactSet& out)
{
    Json j = cfg.to_json();
    j["seed"] = cfg.integer("seed");
    j["artifacts"] = out.names();
    return j;
}

inline std::string view_file(const std::string& prefix, std::size_t d) { return prefix + "_view" + std::to_string(d + 1); }

// ---------------------------------------------------------------------------
// Commands

inline void cmd_simulate(const RunConfig& cfg, std::ostream& log)
{
    const Scenario scenario = parse_scenario(cfg.get("scenario"));
    ScenarioSpec spec = scenario_defaults(scenario, static_cast<int>(cfg.integer("setting")));
    if (cfg.has("dims")) {
        spec.dims.clear();
        for (double v : cfg.numbers("dims")) spec.dims.push_back(static_cast<Index>(v));
        if (spec.dims.size() == 1) spec.dims.assign(is_network(scenario) ? 3 : 2, spec.dims.front());
    }
    if (cfg.has("nk")) spec.n_per_class = static_cast<Index>(cfg.integer("nk"));
    spec.seed = static_cast<unsigned long long>(cfg.integer("seed"));
    const GeneratedData g = generate(spec);

    ArtifactSet out(cfg.get("out"));
    for (std::size_t d = 0; d < g.train.views.size(); ++d) {
        write_view_csv(out.open(view_file("train", d) + ".csv"), g.train.views[d], g.train.names[d]);
        out.close();
        write_view_csv(out.open(view_file("test", d) + ".csv"), g.test.views[d], g.test.names[d]);
        out.close();
        std::ofstream& t = out.open(view_file("truth", d) + ".csv");
        t << "index\n";
        for (Index i : g.truth[d]) t << i << '\n';
        out.close();
        if (!g.graphs.empty() && g.graphs[d]) {
            std::ofstream& e = out.open(view_file("graph", d) + ".tsv");
            for (const Edge& edge : g.graphs[d]->edges()) e << edge.u << '\t' << edge.v << '\t' << format_double(edge.w) << '\n';
            out.close();
        }
    }
    for (const char* split : {"train", "test"}) {
        const auto& labels = std::string(split) == "train" ? g.train.labels : g.test.labels;
        std::ofstream& l = out.open(std::string(split) + "_labels.csv");
        l << "label\n";
        for (int y : labels) l << y << '\n';
        out.close();
    }
    Json m = manifest(cfg, out);
    m["scenario"] = Json{{"scenario", to_string(spec.scenario)}, {"setting", spec.setting}, {"dims", spec.dims},
                         {"n_per_class", spec.n_per_class}, {"rho1", spec.rho1}, {"rho2", spec.rho2}, {"c", spec.c}};
    m["artifacts"].push_back("manifest.json");
    out.write("manifest.json", dump(m));
    out.commit();
    log << "simulated " << to_string(spec.scenario) << " setting " << spec.setting << " into " << cfg.get("out") << '\n';
}

inline void cmd_cv(const RunConfig& cfg, std::ostream& log)
{
    const MultiViewDataset ds = standardize(load_dataset(cfg));
    const ViewGraphs graphs = load_graphs(cfg, ds);
    const TuningSpec ts = tuning_spec(cfg, ds.views.size());
    const CvResult res = cross_validate(ds, graphs, ts);

    ArtifactSet out(cfg.get("out"));
    write_cv_report(out.open("cv_report.csv"), res);
    out.close();
    Json tau;
    tau["taus"] = res.best_taus();
    tau["mean_error"] = res.points[res.best].mean_error;
    tau["mean_nonzeros"] = res.points[res.best].mean_nonzeros;
    Json bounds = Json::array();
    for (const TauBounds& b : res.bounds) bounds.push_back(Json{{"min", b.min}, {"max", b.max}});
    tau["bounds"] = bounds;
    tau["candidates"] = res.points.size();
    tau["manifest"] = manifest(cfg, out);
    tau["manifest"]["artifacts"].push_back("tau.json");
    out.write("tau.json", dump(tau));
    out.commit();
    log << "best tau";
    for (double t : res.best_taus()) log << ' ' << format_double(t);
    log << " (cv error " << format_double(res.points[res.best].mean_error) << ")\n";
}

inline void cmd_fit(const RunConfig& cfg, std::ostream& log)
{
    const MultiViewDataset ds = standardize(load_dataset(cfg));
    const ViewGraphs graphs = load_graphs(cfg, ds);
    FitConfig fc = base_fit_config(cfg, ds.views.size());
    fc.taus = resolve_taus(cfg, ds.views.size());
    const DiscriminantModel model = fit(ds, graphs, fc);

    ArtifactSet out(cfg.get("out"));
    Json j = model_to_json(model);
    j["manifest"] = manifest(cfg, out);
    j["manifest"]["artifacts"].push_back("model.json");
    out.write("model.json", dump(j));
    out.commit();
    log << "fitted model:";
    for (std::size_t d = 0; d < model.selected.size(); ++d) log << " view " << d + 1 << " selects " << model.selected[d].size();
    log << '\n';
}

inline DiscriminantModel load_model(const RunConfig& cfg)
{
    require_file(cfg.get("model"), "model file (--model)");
    return model_from_json(load_json(cfg.get("model")));
}

/// Test views standardized with the model's training statistics.
inline MultiViewDataset load_for_model(const RunConfig& cfg, const DiscriminantModel& model, bool need_labels)
{
    MultiViewDataset ds = load_dataset(cfg, need_labels);
    if (ds.num_views() != model.num_views())
        fail(ErrorCode::validation, "--views lists " + std::to_string(ds.num_views()) + " files but the model has " +
                                        std::to_string(model.num_views()) + " views");
    for (Index d = 0; d < ds.num_views(); ++d)
        if (ds.views[static_cast<std::size_t>(d)].cols() != model.gamma[static_cast<std::size_t>(d)].rows())
            fail(ErrorCode::validation, "view " + std::to_string(d + 1) + " has " +
                                            std::to_string(ds.views[static_cast<std::size_t>(d)].cols()) +
                                            " columns but the model expects " +
                                            std::to_string(model.gamma[static_cast<std::size_t>(d)].rows()));
    return standardize_like(ds, model.stats);
}

inline void cmd_predict(const RunConfig& cfg, std::ostream& log)
{
    const DiscriminantModel model = load_model(cfg);
    const MultiViewDataset ds = load_for_model(cfg, model, false);
    const bool separate = cfg.flag("separate");
    const std::vector<int> pooled = predict_pooled(ds, model);
    std::vector<std::vector<int>> per_view;
    if (separate)
        for (Index d = 0; d < model.num_views(); ++d) per_view.push_back(predict_separate(ds, model, d));

    ArtifactSet out(cfg.get("out"));
    std::ofstream& os = out.open("predictions.csv");
    os << "sample,pooled";
    for (std::size_t d = 0; d < per_view.size(); ++d) os << ",view_" << d + 1;
    os << '\n';
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        os << i + 1 << ',' << pooled[i];
        for (const auto& v : per_view) os << ',' << v[i];
        os << '\n';
    }
    out.close();
    Json m = manifest(cfg, out);
    m["artifacts"].push_back("manifest.json");
    out.write("manifest.json", dump(m));
    out.commit();
    log << "predicted " << pooled.size() << " samples\n";
}

inline std::string eval_table(const EvalReport& rep)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "error_rate  " << rep.error_rate << '\n';
    os << "rho_hat     " << rep.rho_hat << '\n';
    os << "view  selected  sep_error     tpr     fpr      f1\n";
    for (std::size_t d = 0; d < rep.views.size(); ++d) {
        const ViewEval& v = rep.views[d];
        os << std::setw(4) << d + 1 << std::setw(10) << v.selected << std::setw(11) << v.separate_error;
        if (v.selection)
            os << std::setw(8) << v.selection->tpr << std::setw(8) << v.selection->fpr << std::setw(8) << v.selection->f1;
        else
            os << "       -       -       -";
        os << '\n';
    }
    return os.str();
}

inline Json eval_to_json(const EvalReport& rep)
{
    Json j;
    j["error_rate"] = rep.error_rate;
    j["rho_hat"] = rep.rho_hat;
    Json views = Json::array();
    for (const ViewEval& v : rep.views) {
        Json e;
        e["selected"] = v.selected;
        e["separate_error"] = v.separate_error;
        if (v.selection) {
            e["tpr"] = v.selection->tpr;
            e["fpr"] = v.selection->fpr;
            e["f1"] = v.selection->f1;
            e["tp"] = v.selection->tp;
            e["fp"] = v.selection->fp;
            e["tn"] = v.selection->tn;
            e["fn"] = v.selection->fn;
        }
        views.push_back(std::move(e));
    }
    j["views"] = views;
    return j;
}

inline void cmd_evaluate(const RunConfig& cfg, std::ostream& log)
{
    const DiscriminantModel model = load_model(cfg);
    const MultiViewDataset ds = load_for_model(cfg, model, true);
    std::vector<std::vector<Index>> truth;
    const auto truth_paths = cfg.list("truth");
    if (!truth_paths.empty()) {
        if (static_cast<Index>(truth_paths.size()) != model.num_views())
            fail(ErrorCode::validation, "--truth needs one file per view");
        for (const auto& p : truth_paths) {
            require_file(p, "truth file");
            truth.push_back(load_index_csv(p));
        }
    }
    const EvalReport rep = evaluate(model, ds, truth);

    ArtifactSet out(cfg.get("out"));
    Json j = eval_to_json(rep);
    j["manifest"] = manifest(cfg, out);
    j["manifest"]["artifacts"].push_back("evaluation.json");
    j["manifest"]["artifacts"].push_back("evaluation.txt");
    out.write("evaluation.json", dump(j));
    const std::string table = eval_table(rep);
    out.write("evaluation.txt", table);
    out.commit();
    log << table;
}

inline void cmd_stability(const RunConfig& cfg, std::ostream& log)
{
    const MultiViewDataset ds = standardize(load_dataset(cfg));
    const ViewGraphs graphs = load_graphs(cfg, ds);
    const TuningSpec ts = tuning_spec(cfg, ds.views.size());
    StabilityOptions opts;
    opts.reps = static_cast<int>(cfg.integer("reps"));
    opts.freq_threshold = cfg.number("freq");
    opts.effect_percentile = cfg.number("percentile");
    const StabilityResult res = stability_selection(ds, graphs, ts, opts);

    ArtifactSet out(cfg.get("out"));
    write_stability_csv(out.open("stable_variables.csv"), res);
    out.close();
    Json m = manifest(cfg, out);
    m["artifacts"].push_back("manifest.json");
    out.write("manifest.json", dump(m));
    out.commit();
    for (std::size_t d = 0; d < res.stable.size(); ++d)
        log << "view " << d + 1 << ": " << res.stable[d].size() << " stable variables\n";
}

} // namespace detail

inline const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names = {"simulate", "cv", "fit", "predict", "evaluate", "stability"};
    return names;
}

/// Runs one resolved command; errors propagate as sida::Error.
inline void run(const RunConfig& cfg, std::ostream& log = std::cout)
{
    if (cfg.command == "simulate") return detail::cmd_simulate(cfg, log);
    if (cfg.command == "cv") return detail::cmd_cv(cfg, log);
    if (cfg.command == "fit") return detail::cmd_fit(cfg, log);
    if (cfg.command == "predict") return detail::cmd_predict(cfg, log);
    if (cfg.command == "evaluate") return detail::cmd_evaluate(cfg, log);
    if (cfg.command == "stability") return detail::cmd_stability(cfg, log);
    fail(ErrorCode::validation, "unknown command '" + cfg.command + "'");
}

/// One-line machine-parseable error record.
inline std::string error_line(const Error& e)
{
    return "error code=" + std::string(to_string(e.code())) + " exit=" + std::to_string(exit_code(e.code())) + " message=" +
           Json(std::string(e.what())).dump();
}

} // namespace sida

// Command-line front end: one subcommand per pipeline stage.

#include <sida/commands.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

namespace {

struct Help {
    const char* key;
    const char* text;
};

// Options shown per subcommand; every key is still accepted through --config.
const std::map<std::string, std::vector<Help>>& options()
{
    static const std::vector<Help> data = {
        {"views", "comma-separated view CSV files"},
        {"labels", "labels CSV (classes 1..K)"},
        {"method", "per-view method: sida, sidanet or covariate (one value applies to all views)"},
        {"graphs", "comma-separated edge-list TSVs, empty slot for views without a graph"},
        {"rho", "association/separation balance in [0, 1]"},
        {"eta", "network penalty balance in [0, 1]"},
        {"ridge", "within-class ridge per view: auto, auto:<scale> or a number"},
        {"eps", "outer convergence tolerance"},
        {"max-outer", "outer iteration limit"},
        {"laplacian", "normalized or unnormalized"},
        {"seed", "random seed"},
        {"out", "output directory"},
    };
    static const std::vector<Help> search = {
        {"search", "random or grid"},
        {"grid-points", "tau grid points per view (0 = automatic)"},
        {"random-frac", "fraction of the grid sampled in random mode (0 = automatic)"},
        {"spacing", "linear or log"},
        {"folds", "cross-validation folds"},
        {"workers", "worker threads"},
    };
    auto join = [](std::vector<Help> a, const std::vector<Help>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    static const std::map<std::string, std::vector<Help>> table = {
        {"simulate",
         {{"scenario", "S1, S2, S3, NET1 or NET2"},
          {"setting", "signal setting 1..3 (S scenarios)"},
          {"dims", "variables per view, one value or one per view"},
          {"nk", "samples per class"},
          {"seed", "random seed"},
          {"out", "output directory"}}},
        {"cv", join(data, search)},
        {"fit", join(data, {{"tau", "tau per view (one value applies to all views)"}, {"tau-file", "tau.json from cv"}})},
        {"predict",
         {{"views", "comma-separated view CSV files"},
          {"model", "model.json from fit"},
          {"separate", "also report per-view predictions"},
          {"out", "output directory"}}},
        {"evaluate",
         {{"views", "comma-separated view CSV files"},
          {"labels", "labels CSV"},
          {"model", "model.json from fit"},
          {"truth", "comma-separated truth index CSVs, one per view"},
          {"out", "output directory"}}},
        {"stability",
         join(join(data, search),
              {{"reps", "resampling repetitions"},
               {"freq", "selection frequency threshold"},
               {"percentile", "effect-size percentile kept"}})},
    };
    return table;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse integrative discriminant analysis for multi-view data"};
    app.require_subcommand(1);
    std::map<std::string, std::map<std::string, std::string>> given;
    std::map<std::string, std::string> config_paths;
    std::map<std::string, bool> separate;

    for (const auto& name : sida::command_names()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_paths[name], "JSON config file or a manifest from an earlier run");
        for (const auto& h : options().at(name)) {
            if (std::string(h.key) == "separate") {
                sub->add_flag("--separate", separate[name], h.text);
                continue;
            }
            sub->add_option("--" + std::string(h.key), given[name][h.key], h.text);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    for (const auto& name : sida::command_names()) {
        CLI::App* sub = app.get_subcommand(name);
        if (!sub->parsed()) continue;
        std::map<std::string, std::string> flags;
        for (const auto& h : options().at(name)) {
            const std::string key = h.key;
            if (key == "separate") {
                if (sub->count("--separate")) flags[key] = separate[name] ? "true" : "false";
            } else if (sub->count("--" + key)) {
                flags[key] = given[name][key];
            }
        }
        try {
            const sida::RunConfig cfg = sida::config_resolve(name, flags, config_paths[name]);
            sida::run(cfg, std::cout);
        } catch (const sida::Error& e) {
            std::cerr << sida::error_line(e) << '\n';
            return sida::exit_code(e.code());
        } catch (const std::exception& e) {
            std::cerr << sida::error_line(sida::Error(sida::ErrorCode::io, e.what())) << '\n';
            return 4;
        }
    }
    return 0;
}

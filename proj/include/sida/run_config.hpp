#pragma once

#include "error.hpp"
#include "model_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sida {

/// Every configurable key with its default ("" means unset). Flags, config
/// files and SIDA_<KEY> environment variables all use these names.
inline const std::vector<std::pair<std::string, std::string>>& config_keys()
{
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"views", ""},          {"labels", ""},        {"graphs", ""},       {"method", ""},
        {"rho", "0.5"},         {"eta", "0.5"},        {"folds", "5"},       {"grid-points", "0"},
        {"random-frac", "0"},   {"search", "random"},  {"spacing", "linear"}, {"seed", "0"},
        {"workers", "1"},       {"out", "."},          {"tau", ""},          {"tau-file", ""},
        {"model", ""},          {"truth", ""},         {"scenario", "S1"},   {"setting", "1"},
        {"dims", ""},           {"nk", ""},            {"reps", "20"},       {"freq", "0.6"},
        {"percentile", "0.01"}, {"ridge", "auto"},     {"eps", "1e-6"},      {"max-outer", "50"},
        {"separate", "false"},  {"laplacian", "normalized"},
    };
    return keys;
}

inline std::string env_name(const std::string& key)
{
    std::string out = "SIDA_";
    for (char c : key) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

/**
 * Resolved key/value configuration of one command. Values stay strings until
 * a command asks for them, so the resolved set can be echoed verbatim into
 * output manifests and fed back through --config.
 */
struct RunConfig {
    std::string command;
    std::map<std::string, std::string> values;

    const std::string& get(const std::string& key) const
    {
        const auto it = values.find(key);
        if (it == values.end()) fail(ErrorCode::validation, "unknown configuration key '" + key + "'");
        return it->second;
    }
    bool has(const std::string& key) const { return !get(key).empty(); }

    double number(const std::string& key) const
    {
        const std::string& s = get(key);
        double v = 0.0;
        if (!detail::parse_double(s, v)) fail(ErrorCode::validation, "--" + key + " expects a number, got '" + s + "'");
        return v;
    }

    long long integer(const std::string& key) const
    {
        const std::string& s = get(key);
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(s, &pos);
            if (pos == s.size()) return v;
        } catch (const std::exception&) {
        }
        fail(ErrorCode::validation, "--" + key + " expects an integer, got '" + s + "'");
    }

    bool flag(const std::string& key) const
    {
        const std::string& s = get(key);
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no" || s.empty()) return false;
        fail(ErrorCode::validation, "--" + key + " expects true or false, got '" + s + "'");
    }

    /// Comma-separated list; empty slots are kept ("a,,b" has three entries).
    std::vector<std::string> list(const std::string& key) const
    {
        const std::string& s = get(key);
        std::vector<std::string> out;
        if (s.empty()) return out;
        for (auto part : detail::split(s, ',')) out.emplace_back(detail::trim(part));
        return out;
    }

    std::vector<double> numbers(const std::string& key) const
    {
        std::vector<double> out;
        for (const std::string& s : list(key)) {
            double v = 0.0;
            if (!detail::parse_double(s, v)) fail(ErrorCode::validation, "--" + key + " expects numbers, got '" + s + "'");
            out.push_back(v);
        }
        return out;
    }

    Json to_json() const
    {
        Json j;
        j["command"] = command;
        Json cfg = Json::object();
        for (const auto& [k, v] : values) cfg[k] = v;
        j["config"] = cfg;
        return j;
    }
};

inline std::string json_scalar_to_string(const Json& v)
{
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
    if (v.is_number()) return format_double(v.get<double>());
    if (v.is_array()) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + json_scalar_to_string(v[i]);
        return out;
    }
    fail(ErrorCode::parse, "unsupported configuration value " + v.dump());
}

/// Reads a config file: a flat JSON object of keys, a manifest with a
/// "config" member, or an artifact that embeds such a manifest.
inline std::map<std::string, std::string> load_config_file(const std::string& path)
{
    const Json j = load_json(path);
    const Json& outer = j.contains("manifest") && j["manifest"].is_object() ? j["manifest"] : j;
    const Json& body = outer.contains("config") && outer["config"].is_object() ? outer["config"] : outer;
    if (!body.is_object()) fail(ErrorCode::parse, path + ": configuration must be a JSON object");
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : body.items()) out[k] = json_scalar_to_string(v);
    return out;
}

/**
 * Precedence: flags > config file > environment (SIDA_<KEY>) > defaults.
 * `getenv` is injectable for tests.
 */
inline RunConfig config_resolve(const std::string& command, const std::map<std::string, std::string>& flags,
                                const std::string& config_path = "",
                                const std::function<const char*(const char*)>& getenv = [](const char* n) {
                                    return std::getenv(n);
                                })
{
    RunConfig cfg;
    cfg.command = command;
    std::map<std::string, std::string> file;
    if (!config_path.empty()) file = load_config_file(config_path);
    for (const auto& [k, v] : file)
        if (std::none_of(config_keys().begin(), config_keys().end(), [&](const auto& kv) { return kv.first == k; }))
            fail(ErrorCode::validation, config_path + ": unknown configuration key '" + k + "'");
    for (const auto& [key, def] : config_keys()) {
        std::string value = def;
        if (const char* e = getenv(env_name(key).c_str())) value = e;
        if (auto it = file.find(key); it != file.end()) value = it->second;
        if (auto it = flags.find(key); it != flags.end()) value = it->second;
        cfg.values[key] = value;
    }
    for (const auto& [k, v] : flags)
        if (!cfg.values.count(k)) fail(ErrorCode::validation, "unknown option --" + k);
    return cfg;
}

} // namespace sida

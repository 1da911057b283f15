#pragma once

// Batch run configuration read from an INI file. Every section and key is
// optional; unknown ones are rejected so typos do not silently fall back to
// defaults. See configs/default.ini for the full key list.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <glob.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bayescombine/error.hpp"
#include "bayescombine/pipeline.hpp"
#include "bayescombine/timeseries.hpp"

namespace bayescombine {

struct RunConfig {
    std::vector<std::string> inputs; // paths or glob patterns
    std::filesystem::path output = "out";
    std::size_t jobs = 1;
    bool write_chain = true;
    PipelineConfig pipeline;

    void validate() const {
        pipeline.detectors.validate();
        pipeline.ensemble.sampler.validate();
        const auto& e = pipeline.ensemble;
        if (!(e.elicitation.kappa > 0.0 && e.elicitation.kappa < 1.0)) throw ConfigError("priors.kappa must lie in (0,1)");
        if (!(e.elicitation.max_concentration > 0.0)) throw ConfigError("priors.max_concentration must be positive");
        if (!(e.cutoff > 0.0 && e.cutoff < 1.0)) throw ConfigError("sampler.cutoff must lie in (0,1)");
        if (jobs < 1) throw ConfigError("run.jobs must be >= 1");
    }
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> schema{
        {"run", {"inputs", "output", "seed", "jobs", "chain"}},
        {"detectors", {"variance", "goldilocks", "holt_winters", "arma", "sigma_multiplier", "absolute_threshold"}},
        {"holt_winters", {"season_length", "level", "trend", "seasonal"}},
        {"goldilocks", {"window"}},
        {"arma", {"p", "q", "max_evaluations", "tolerance", "restarts"}},
        {"priors", {"kappa", "max_concentration"}},
        {"sampler", {"iterations", "burn_in", "thin", "proposal_scale", "cutoff"}},
    };
    return schema;
}

inline std::string config_key(const std::string& section, const std::string& key) { return section + "." + key; }

inline std::uint64_t parse_unsigned(const std::string& text, const std::string& key) {
    std::uint64_t v = 0;
    if (!parse_number(trim(text), v))
        throw ConfigError("config " + key + ": expected a nonnegative integer, got '" + text + "'");
    return v;
}

inline double parse_real(const std::string& text, const std::string& key) {
    double v = 0.0;
    if (!parse_number(trim(text), v) || !std::isfinite(v))
        throw ConfigError("config " + key + ": expected a number, got '" + text + "'");
    return v;
}

inline bool parse_bool(const std::string& text, const std::string& key) {
    const auto t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError("config " + key + ": expected true/false, got '" + text + "'");
}

inline std::vector<std::string> parse_list(const std::string& text) {
    std::vector<std::string> out;
    for (auto item : split_commas(text)) {
        const auto t = trim(item);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

} // namespace detail

inline RunConfig parse_run_config(const boost::property_tree::ptree& tree) {
    RunConfig cfg;
    const auto& schema = detail::config_schema();
    for (const auto& [section, body] : tree) {
        const auto known = schema.find(section);
        if (known == schema.end()) {
            if (body.empty()) throw ConfigError("config: key '" + section + "' outside any section");
            throw ConfigError("config: unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body) {
            if (!known->second.count(key)) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
            const std::string text = value.data();
            const std::string name = detail::config_key(section, key);
            auto u = [&] { return detail::parse_unsigned(text, name); };
            auto r = [&] { return detail::parse_real(text, name); };
            auto b = [&] { return detail::parse_bool(text, name); };

            auto& det = cfg.pipeline.detectors;
            auto& ens = cfg.pipeline.ensemble;
            if (section == "run") {
                if (key == "inputs") cfg.inputs = detail::parse_list(text);
                else if (key == "output") cfg.output = std::string(detail::trim(text));
                else if (key == "seed") cfg.pipeline.seed = u();
                else if (key == "jobs") cfg.jobs = u();
                else if (key == "chain") cfg.write_chain = b();
            } else if (section == "detectors") {
                if (key == "variance") det.enabled[0] = b();
                else if (key == "goldilocks") det.enabled[1] = b();
                else if (key == "holt_winters") det.enabled[2] = b();
                else if (key == "arma") det.enabled[3] = b();
                else if (key == "sigma_multiplier") det.policy.sigma_multiplier = r();
                else if (key == "absolute_threshold") {
                    if (detail::trim(text).empty()) det.policy.absolute_threshold.reset();
                    else det.policy.absolute_threshold = r();
                }
            } else if (section == "holt_winters") {
                if (key == "season_length") det.holt_winters.season_length = u();
                else if (key == "level") det.holt_winters.level_weight = r();
                else if (key == "trend") det.holt_winters.trend_weight = r();
                else if (key == "seasonal") det.holt_winters.seasonal_weight = r();
            } else if (section == "goldilocks") {
                det.goldilocks.window = u();
            } else if (section == "arma") {
                if (key == "p") det.arma.p = u();
                else if (key == "q") det.arma.q = u();
                else if (key == "max_evaluations") det.arma.fit.max_evaluations = static_cast<int>(u());
                else if (key == "tolerance") det.arma.fit.tolerance = r();
                else if (key == "restarts") det.arma.fit.restarts = static_cast<int>(u());
            } else if (section == "priors") {
                if (key == "kappa") ens.elicitation.kappa = r();
                else if (key == "max_concentration") ens.elicitation.max_concentration = r();
            } else if (section == "sampler") {
                if (key == "iterations") ens.sampler.iterations = u();
                else if (key == "burn_in") ens.sampler.burn_in = u();
                else if (key == "thin") ens.sampler.thin = u();
                else if (key == "proposal_scale") ens.sampler.proposal_scale = r();
                else if (key == "cutoff") ens.cutoff = r();
            }
        }
    }
    cfg.validate();
    return cfg;
}

inline RunConfig parse_run_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
    }
    return parse_run_config(tree);
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    try {
        return parse_run_config(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// Expands each pattern with glob(3); a pattern without wildcard characters
// is kept as a literal path. The result is sorted and deduplicated so the
// processing order does not depend on the directory listing.
inline std::vector<std::filesystem::path> expand_inputs(const std::vector<std::string>& patterns) {
    std::set<std::filesystem::path> found;
    for (const auto& pattern : patterns) {
        if (pattern.find_first_of("*?[") == std::string::npos) {
            found.insert(pattern);
            continue;
        }
        glob_t g{};
        const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
        if (rc == 0)
            for (std::size_t i = 0; i < g.gl_pathc; ++i) found.insert(g.gl_pathv[i]);
        ::globfree(&g);
        if (rc != 0 && rc != GLOB_NOMATCH) throw Error("glob failed for '" + pattern + "'");
    }
    return {found.begin(), found.end()};
}

} // namespace bayescombine

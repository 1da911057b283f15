#pragma once

// Subcommand implementations for the bayescombine command-line tool. Each
// returns a process exit code: 0 when every requested series produced a
// report, 1 when some did not, 2 for usage or configuration errors (those
// are thrown as ConfigError and mapped in main).

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "bayescombine/dawid_skene.hpp"
#include "bayescombine/evaluation.hpp"
#include "bayescombine/pipeline.hpp"
#include "bayescombine/run_config.hpp"
#include "bayescombine/timeseries.hpp"

namespace bayescombine::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Overrides {
    std::vector<std::string> inputs;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<std::string> out;
    bool inject_random_detector = false;
};

inline RunConfig resolve_config(const std::optional<std::string>& config_path, const Overrides& o) {
    RunConfig cfg = config_path ? load_run_config(*config_path) : RunConfig{};
    if (!o.inputs.empty()) cfg.inputs = o.inputs;
    if (o.seed) cfg.pipeline.seed = *o.seed;
    if (o.jobs) cfg.jobs = *o.jobs;
    if (o.out) cfg.output = *o.out;
    cfg.pipeline.inject_random_detector = cfg.pipeline.inject_random_detector || o.inject_random_detector;
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Output helpers

inline std::string fmt(double v) { return detail::format_double(v); }

inline void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline json config_echo(const RunConfig& cfg) {
    const auto& d = cfg.pipeline.detectors;
    const auto& e = cfg.pipeline.ensemble;
    json enabled = json::object();
    for (std::size_t k = 0; k < kDetectorNames.size(); ++k) enabled[std::string(kDetectorNames[k])] = d.enabled[k];
    json j;
    j["seed"] = cfg.pipeline.seed;
    j["detectors"] = enabled;
    j["sigma_multiplier"] = d.policy.sigma_multiplier;
    j["absolute_threshold"] = d.policy.absolute_threshold ? json(*d.policy.absolute_threshold) : json(nullptr);
    j["holt_winters"] = {{"season_length", d.holt_winters.season_length},
                         {"level", d.holt_winters.level_weight},
                         {"trend", d.holt_winters.trend_weight},
                         {"seasonal", d.holt_winters.seasonal_weight}};
    j["goldilocks"] = {{"window", d.goldilocks.window}};
    j["arma"] = {{"p", d.arma.p}, {"q", d.arma.q}};
    j["priors"] = {{"kappa", e.elicitation.kappa}, {"max_concentration", e.elicitation.max_concentration}};
    j["sampler"] = {{"iterations", e.sampler.iterations},
                    {"burn_in", e.sampler.burn_in},
                    {"thin", e.sampler.thin},
                    {"proposal_scale", e.sampler.proposal_scale},
                    {"cutoff", e.cutoff}};
    j["inject_random_detector"] = cfg.pipeline.inject_random_detector;
    return j;
}

inline json counts_json(const std::string& name, const ConfusionCounts& c) {
    json j;
    j["name"] = name;
    j["fn"] = c.fn;
    j["tn"] = c.tn;
    j["fp"] = c.fp;
    j["tp"] = c.tp;
    j["error_rate"] = c.total() ? json(error_rate(c)) : json(nullptr);
    return j;
}

inline json posterior_json(const EnsembleResult& r) {
    json j;
    j["detectors"] = r.posterior.detector_names;
    json mean = json::array(), var = json::array();
    for (std::size_t k = 0; k < r.posterior.confusion_mean.size(); ++k) {
        mean.push_back({r.posterior.confusion_mean[k][0], r.posterior.confusion_mean[k][1]});
        var.push_back({r.posterior.confusion_variance[k][0], r.posterior.confusion_variance[k][1]});
    }
    j["confusion_mean"] = mean;
    j["confusion_variance"] = var;
    j["acceptance_rate"] = r.posterior.acceptance_rate;
    j["n_samples"] = r.posterior.n_samples;
    j["prior_warnings"] = r.priors.warnings;
    j["p_anomaly"] = r.posterior.p_anomaly;
    return j;
}

// One row per point: timestamp, value, truth (when present), then label,
// raw score, p and z for each detector that ran.
inline std::string verdicts_csv(const LabeledSeries& s, const std::vector<DetectorRun>& runs,
                                const CombinedRun* combined) {
    std::ostringstream out;
    const bool labeled = s.truth().has_value();
    out << "timestamp,value";
    if (labeled) out << ",is_anomaly";
    for (const auto& r : runs)
        if (r.ran()) out << ',' << r.name << "_label," << r.name << "_raw," << r.name << "_p," << r.name << "_z";
    if (combined) out << ',' << kMajorityName << ",p_anomaly," << kBayesName;
    out << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        out << s.points()[i].timestamp << ',' << fmt(s.points()[i].value);
        if (labeled) out << ',' << int((*s.truth())[i]);
        for (const auto& r : runs) {
            if (!r.ran()) continue;
            const auto& v = r.verdicts[i];
            out << ',' << int(v.label) << ',' << fmt(v.raw_score) << ',' << fmt(v.probability) << ','
                << fmt(v.confidence);
        }
        if (combined)
            out << ',' << int(combined->majority[i]) << ',' << fmt(combined->ensemble.posterior.p_anomaly[i]) << ','
                << int(combined->ensemble.labels[i]);
        out << '\n';
    }
    return out.str();
}

// Thinned post-burn-in draws of every confusion diagonal.
inline std::string chain_csv(const ChainTrace& trace, const std::vector<std::string>& names) {
    std::ostringstream out;
    out << "sample,iteration,anomaly_count";
    for (const auto& n : names) out << ',' << n << "_pi00," << n << "_pi11";
    out << '\n';
    for (std::size_t s = 0; s < trace.iteration.size(); ++s) {
        out << s << ',' << trace.iteration[s] << ',' << fmt(trace.anomaly_count[s]);
        for (const auto& row : trace.pi[s]) out << ',' << fmt(row[0]) << ',' << fmt(row[1]);
        out << '\n';
    }
    return out.str();
}

// Fixed-width table with one column per method and the rows
// False Neg / True Neg / False Pos / True Pos / Error rate.
inline std::string counts_table(const std::vector<std::pair<std::string, ConfusionCounts>>& columns) {
    std::ostringstream out;
    auto cell = [&](const std::string& s) { out << std::setw(10) << s; };
    out << std::left << std::setw(12) << "" << std::right;
    for (const auto& [name, _] : columns) cell(name);
    out << '\n';
    auto row = [&](const char* label, auto value) {
        out << std::left << std::setw(12) << label << std::right;
        for (const auto& [_, c] : columns) cell(value(c));
        out << '\n';
    };
    row("False Neg", [](const ConfusionCounts& c) { return std::to_string(c.fn); });
    row("True Neg", [](const ConfusionCounts& c) { return std::to_string(c.tn); });
    row("False Pos", [](const ConfusionCounts& c) { return std::to_string(c.fp); });
    row("True Pos", [](const ConfusionCounts& c) { return std::to_string(c.tp); });
    row("Error rate", [](const ConfusionCounts& c) {
        if (c.total() == 0) return std::string("n/a");
        std::ostringstream s;
        s << std::fixed << std::setprecision(4) << error_rate(c);
        return s.str();
    });
    return out.str();
}

inline std::string relative_change_text(double before, double after) {
    const double r = relative_change(before, after);
    if (!std::isfinite(r)) return "n/a";
    std::ostringstream s;
    s << std::showpos << std::fixed << std::setprecision(1) << 100.0 * r << '%';
    return s.str();
}

inline json robustness_json(const ConfusionCounts& mv_before, const ConfusionCounts& mv_after,
                            const ConfusionCounts& b_before, const ConfusionCounts& b_after) {
    json j;
    j["before"] = json::array({counts_json(std::string(kMajorityName), mv_before),
                               counts_json(std::string(kBayesName), b_before)});
    j["after"] = json::array({counts_json(std::string(kMajorityName), mv_after),
                              counts_json(std::string(kBayesName), b_after)});
    if (mv_before.total() && b_before.total()) {
        j["majority_relative_change"] = relative_change(error_rate(mv_before), error_rate(mv_after));
        j["bayes_relative_change"] = relative_change(error_rate(b_before), error_rate(b_after));
    }
    return j;
}

inline std::string robustness_text(const ConfusionCounts& mv_before, const ConfusionCounts& mv_after,
                                   const ConfusionCounts& b_before, const ConfusionCounts& b_after) {
    std::ostringstream out;
    out << "Random detector injected\n\n";
    out << counts_table({{"MajVote", mv_before},
                         {"Bayes", b_before},
                         {"MajVote+R", mv_after},
                         {"Bayes+R", b_after}});
    if (mv_before.total() && b_before.total()) {
        out << "\nMajVote error change: "
            << relative_change_text(error_rate(mv_before), error_rate(mv_after)) << '\n';
        out << "Bayes error change:   " << relative_change_text(error_rate(b_before), error_rate(b_after)) << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Series loading and parallel execution

struct LoadedInputs {
    std::vector<LabeledSeries> series;
    std::vector<std::string> failures; // "path: reason"
    std::size_t requested = 0;
};

inline LoadedInputs load_inputs(const RunConfig& cfg) {
    const auto paths = expand_inputs(cfg.inputs);
    if (paths.empty()) throw ConfigError("no inputs");
    LoadedInputs in;
    in.requested = paths.size();
    std::set<std::string> ids;
    for (const auto& p : paths) {
        try {
            auto s = load_series(p);
            if (!ids.insert(s.id()).second) throw Error("duplicate series id '" + s.id() + "'");
            in.series.push_back(std::move(s));
        } catch (const Error& e) {
            in.failures.push_back(e.what());
            spdlog::error("{}", e.what());
        }
    }
    return in;
}

// Results in input order regardless of scheduling.
template <typename Fn>
auto parallel_map(std::size_t n, std::size_t jobs, Fn&& fn) {
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

inline void prepare_output(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir.string() + "'");
}

// ---------------------------------------------------------------------------
// detect

inline int cmd_detect(const RunConfig& cfg) {
    auto in = load_inputs(cfg);
    prepare_output(cfg.output);
    const auto runs = parallel_map(in.series.size(), cfg.jobs, [&](std::size_t i) {
        std::vector<DetectorRun> r;
        std::string error;
        try {
            r = run_detectors(in.series[i], cfg.pipeline.detectors);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            error = e.what();
        }
        return std::make_pair(std::move(r), std::move(error));
    });

    json summary;
    summary["command"] = "detect";
    summary["config"] = config_echo(cfg);
    summary["series"] = json::array();
    std::size_t produced = 0;
    for (std::size_t i = 0; i < in.series.size(); ++i) {
        const auto& s = in.series[i];
        const auto& [r, error] = runs[i];
        json js;
        js["id"] = s.id();
        js["points"] = s.size();
        bool any = false;
        json dets = json::array();
        for (const auto& d : r) {
            any = any || d.ran();
            dets.push_back({{"name", d.name}, {"ran", d.ran()}, {"skipped", d.skipped}});
        }
        js["detectors"] = dets;
        if (error.empty() && any) {
            write_file(cfg.output / (s.id() + ".verdicts.csv"), verdicts_csv(s, r, nullptr));
            ++produced;
            js["error"] = nullptr;
        } else {
            js["error"] = error.empty() ? "no detector could score this series" : error;
        }
        summary["series"].push_back(js);
    }
    summary["input_failures"] = in.failures;
    write_file(cfg.output / "detect.json", summary.dump(2) + "\n");
    spdlog::info("detect: {}/{} series written to {}", produced, in.requested, cfg.output.string());
    return produced == in.requested ? 0 : 1;
}

// ---------------------------------------------------------------------------
// ensemble

inline int cmd_ensemble(const RunConfig& cfg) {
    auto in = load_inputs(cfg);
    prepare_output(cfg.output);
    PipelineConfig pc = cfg.pipeline;
    pc.keep_chain = cfg.write_chain;
    const auto results = parallel_map(in.series.size(), cfg.jobs, [&](std::size_t i) {
        return run_series(in.series[i], pc);
    });

    json report;
    report["command"] = "ensemble";
    report["config"] = config_echo(cfg);
    report["series"] = json::array();
    std::size_t produced = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& s = in.series[i];
        const auto& r = results[i];
        json js;
        js["id"] = s.id();
        js["points"] = s.size();
        js["labeled"] = s.truth().has_value();
        json dets = json::array();
        for (const auto& d : r.detectors) dets.push_back({{"name", d.name}, {"ran", d.ran()}, {"skipped", d.skipped}});
        js["detectors"] = dets;
        if (!r.ok()) {
            js["error"] = r.error;
            report["series"].push_back(js);
            continue;
        }
        ++produced;
        js["error"] = nullptr;
        js["anomalies"] = {{"MajVote", std::count(r.base->majority.begin(), r.base->majority.end(), kAnomaly)},
                           {"Bayes", std::count(r.base->ensemble.labels.begin(), r.base->ensemble.labels.end(),
                                                kAnomaly)}};
        js["posterior"] = posterior_json(r.base->ensemble);
        if (s.truth()) {
            json m = json::array();
            for (const auto& d : r.detectors)
                if (d.ran()) m.push_back(counts_json(d.name, confusion(detail::verdict_labels(d.verdicts), *s.truth())));
            m.push_back(counts_json(std::string(kMajorityName), confusion(r.base->majority, *s.truth())));
            m.push_back(counts_json(std::string(kBayesName), confusion(r.base->ensemble.labels, *s.truth())));
            js["metrics"] = m;
        } else {
            js["metrics"] = nullptr;
        }
        if (r.with_random) {
            js["random_detector"] = {
                {"confusion_mean",
                 {r.with_random->ensemble.posterior.confusion_mean.back()[0],
                  r.with_random->ensemble.posterior.confusion_mean.back()[1]}},
                {"anomalies",
                 {{"MajVote", std::count(r.with_random->majority.begin(), r.with_random->majority.end(), kAnomaly)},
                  {"Bayes", std::count(r.with_random->ensemble.labels.begin(), r.with_random->ensemble.labels.end(),
                                       kAnomaly)}}}};
        }
        report["series"].push_back(js);

        write_file(cfg.output / (s.id() + ".verdicts.csv"), verdicts_csv(s, r.detectors, &*r.base));
        if (cfg.write_chain)
            write_file(cfg.output / (s.id() + ".chain.csv"),
                       chain_csv(r.base->chain, r.base->ensemble.posterior.detector_names));
    }
    report["input_failures"] = in.failures;

    const auto table = pool_metrics(results, in.series, cfg.pipeline.detectors);
    std::ostringstream text;
    text << "Series: " << produced << " of " << in.requested << " produced a report\n";
    json pooled;
    pooled["available"] = table.labeled_series > 0;
    pooled["labeled_series"] = table.labeled_series;
    if (table.labeled_series > 0) {
        pooled["methods"] = json::array();
        std::vector<std::pair<std::string, ConfusionCounts>> cols;
        for (const auto& m : table.methods) {
            auto jm = counts_json(m.name, m.counts);
            jm["series"] = m.series;
            pooled["methods"].push_back(jm);
            cols.emplace_back(m.name, m.counts);
        }
        text << "Pooled over " << table.labeled_series << " labeled series\n\n" << counts_table(cols);
    } else {
        text << "Metrics unavailable: no input carries ground-truth labels\n";
    }
    report["pooled"] = pooled;

    if (cfg.pipeline.inject_random_detector) {
        const auto rob = pool_robustness(results, in.series);
        if (rob.labeled_series > 0) {
            report["robustness"] =
                robustness_json(rob.majority_before, rob.majority_after, rob.bayes_before, rob.bayes_after);
            report["robustness"]["labeled_series"] = rob.labeled_series;
            text << '\n'
                 << robustness_text(rob.majority_before, rob.majority_after, rob.bayes_before, rob.bayes_after);
        } else {
            report["robustness"] = {{"available", false}};
            text << "\nRobustness metrics unavailable: no labeled series\n";
        }
    }

    write_file(cfg.output / "report.json", report.dump(2) + "\n");
    write_file(cfg.output / "report.txt", text.str());
    spdlog::info("ensemble: {}/{} series reported in {}", produced, in.requested, cfg.output.string());
    return produced == in.requested ? 0 : 1;
}

// ---------------------------------------------------------------------------
// simulate

// Reads {"points", "anomaly_rate", "seed"?, "detectors": [{"name",
// "normal", "anomaly"}]}. Type errors and range errors are reported together.
inline SyntheticSpec parse_synthetic_spec(const json& j, std::uint64_t fallback_seed) {
    std::vector<std::string> errs;
    SyntheticSpec spec;
    spec.seed = fallback_seed;
    if (!j.is_object()) throw ConfigError("invalid synthetic spec: top level must be an object");
    auto number = [&](const json& v, const std::string& field, double& out) {
        if (!v.is_number()) {
            errs.push_back(field + ": must be a number");
            return;
        }
        out = v.get<double>();
    };
    for (const auto& [key, _] : j.items())
        if (key != "points" && key != "anomaly_rate" && key != "seed" && key != "detectors")
            errs.push_back(key + ": unknown field");
    if (j.contains("points")) {
        if (j["points"].is_number_unsigned()) spec.points = j["points"].get<std::size_t>();
        else errs.push_back("points: must be a nonnegative integer");
    }
    if (j.contains("anomaly_rate")) number(j["anomaly_rate"], "anomaly_rate", spec.anomaly_rate);
    if (j.contains("seed")) {
        if (j["seed"].is_number_unsigned()) spec.seed = j["seed"].get<std::uint64_t>();
        else errs.push_back("seed: must be a nonnegative integer");
    }
    if (!j.contains("detectors") || !j["detectors"].is_array()) {
        errs.push_back("detectors: must be an array");
    } else {
        const auto& arr = j["detectors"];
        for (std::size_t k = 0; k < arr.size(); ++k) {
            const std::string where = "detectors[" + std::to_string(k) + "]";
            SyntheticDetector d;
            if (!arr[k].is_object()) {
                errs.push_back(where + ": must be an object");
                continue;
            }
            if (arr[k].contains("name")) {
                if (arr[k]["name"].is_string()) d.name = arr[k]["name"].get<std::string>();
                else errs.push_back(where + ".name: must be a string");
            }
            if (arr[k].contains("normal")) number(arr[k]["normal"], where + ".normal", d.diagonal[0]);
            else errs.push_back(where + ".normal: missing");
            if (arr[k].contains("anomaly")) number(arr[k]["anomaly"], where + ".anomaly", d.diagonal[1]);
            else errs.push_back(where + ".anomaly: missing");
            spec.detectors.push_back(d);
        }
    }
    for (auto& e : spec.validation_errors())
        if (std::find(errs.begin(), errs.end(), e) == errs.end()) errs.push_back(e);
    if (!errs.empty()) {
        std::string msg = "invalid synthetic spec:";
        for (const auto& e : errs) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return spec;
}

inline SyntheticSpec load_synthetic_spec(const fs::path& path, std::uint64_t fallback_seed) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open synthetic spec '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_synthetic_spec(j, fallback_seed);
}

inline std::string synthetic_csv(const SyntheticData& data) {
    std::ostringstream out;
    out << "point,truth";
    for (const auto& n : data.verdicts.names()) out << ',' << n << "_label," << n << "_z";
    out << '\n';
    for (std::size_t i = 0; i < data.verdicts.points(); ++i) {
        out << i << ',' << int(data.truth[i]);
        for (std::size_t k = 0; k < data.verdicts.detectors(); ++k)
            out << ',' << int(data.verdicts.label(i, k)) << ',' << fmt(data.verdicts.confidence(i, k));
        out << '\n';
    }
    return out.str();
}

inline int cmd_simulate(const RunConfig& cfg, const fs::path& spec_path) {
    const auto spec = load_synthetic_spec(spec_path, derive_seed(cfg.pipeline.seed, "synthetic"));
    prepare_output(cfg.output);
    if (spec.detectors.size() < 2)
        spdlog::warn("simulate: K = 1; the combiners cannot separate detector error from truth");

    const auto data = generate_synthetic(spec);
    EnsembleConfig ens = cfg.pipeline.ensemble;
    ens.sampler.seed = derive_seed(cfg.pipeline.seed, "sampler");
    ChainTrace trace;
    const auto bayes = run_ensemble(data.verdicts, ens, cfg.write_chain ? &trace : nullptr);
    const auto mv = majority_vote(data.verdicts);
    const auto ds = dawid_skene_em(data.verdicts);
    const auto empirical = empirical_diagonals(data.verdicts, data.truth);

    json report;
    report["command"] = "simulate";
    report["config"] = config_echo(cfg);
    report["spec"] = {{"points", spec.points}, {"anomaly_rate", spec.anomaly_rate}, {"seed", spec.seed}};
    report["truth_anomalies"] = std::count(data.truth.begin(), data.truth.end(), kAnomaly);
    json dets = json::array();
    std::ostringstream text;
    text << "Synthetic benchmark: " << spec.points << " points, anomaly rate " << spec.anomaly_rate << ", "
         << spec.detectors.size() << " detectors\n\n";
    text << "Confusion diagonals (normal / anomaly)\n";
    text << std::left << std::setw(12) << "detector" << std::right << std::setw(18) << "true" << std::setw(18)
         << "empirical" << std::setw(18) << "posterior" << std::setw(18) << "dawid-skene" << '\n';
    auto pair_text = [](double a, double b) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(3) << a << " / " << b;
        return s.str();
    };
    for (std::size_t k = 0; k < spec.detectors.size(); ++k) {
        const auto& name = data.verdicts.names()[k];
        const auto& pm = bayes.posterior.confusion_mean[k];
        const auto& pv = bayes.posterior.confusion_variance[k];
        const double ds0 = ds.confusion[k][0][0], ds1 = ds.confusion[k][1][1];
        dets.push_back({{"name", name},
                        {"true", {spec.detectors[k].diagonal[0], spec.detectors[k].diagonal[1]}},
                        {"empirical", {empirical[k][0], empirical[k][1]}},
                        {"posterior_mean", {pm[0], pm[1]}},
                        {"posterior_variance", {pv[0], pv[1]}},
                        {"dawid_skene", {ds0, ds1}}});
        text << std::left << std::setw(12) << name << std::right << std::setw(18)
             << pair_text(spec.detectors[k].diagonal[0], spec.detectors[k].diagonal[1]) << std::setw(18)
             << pair_text(empirical[k][0], empirical[k][1]) << std::setw(18) << pair_text(pm[0], pm[1])
             << std::setw(18) << pair_text(ds0, ds1) << '\n';
    }
    report["detectors"] = dets;
    report["acceptance_rate"] = bayes.posterior.acceptance_rate;
    report["prior_warnings"] = bayes.priors.warnings;

    const auto c_mv = confusion(mv, data.truth);
    const auto c_bayes = confusion(bayes.labels, data.truth);
    const auto c_ds = confusion(ds.labels, data.truth);
    report["metrics"] = json::array({counts_json(std::string(kMajorityName), c_mv),
                                     counts_json("DawidSkene", c_ds),
                                     counts_json(std::string(kBayesName), c_bayes)});
    text << '\n' << counts_table({{"MajVote", c_mv}, {"DawidSkene", c_ds}, {"Bayes", c_bayes}});

    if (cfg.pipeline.inject_random_detector) {
        const auto rob = robustness_experiment(data.verdicts, data.truth, derive_seed(cfg.pipeline.seed, "random"), ens);
        report["robustness"] = robustness_json(rob.majority_before.counts, rob.majority_after.counts,
                                               rob.bayes_before.counts, rob.bayes_after.counts);
        report["robustness"]["random_confusion_mean"] = {rob.random_confusion_mean[0], rob.random_confusion_mean[1]};
        text << '\n'
             << robustness_text(rob.majority_before.counts, rob.majority_after.counts, rob.bayes_before.counts,
                                rob.bayes_after.counts);
        std::ostringstream rm;
        rm << std::fixed << std::setprecision(3) << "Random detector posterior diagonals: "
           << rob.random_confusion_mean[0] << " / " << rob.random_confusion_mean[1] << '\n';
        text << rm.str();
    }

    write_file(cfg.output / "synthetic.csv", synthetic_csv(data));
    write_file(cfg.output / "simulate.json", report.dump(2) + "\n");
    write_file(cfg.output / "report.txt", text.str());
    if (cfg.write_chain) write_file(cfg.output / "chain.csv", chain_csv(trace, data.verdicts.names()));
    spdlog::info("simulate: outputs written to {}", cfg.output.string());
    return 0;
}

} // namespace bayescombine::cli

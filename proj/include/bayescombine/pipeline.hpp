#pragma once

// Per-series batch pipeline: run the enabled detectors, assemble the verdict
// matrix, combine with majority vote and the Bayesian ensemble, and pool
// confusion counts across series.
//
// A detector that cannot model a series (too short, non-positive values for
// Holt-Winters, a flat series, an ARMA fit that does not converge) is skipped
// for that series with the reason recorded; the remaining detectors still
// vote.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <spdlog/spdlog.h>

#include "bayescombine/arma.hpp"
#include "bayescombine/bcc.hpp"
#include "bayescombine/detectors.hpp"
#include "bayescombine/error.hpp"
#include "bayescombine/evaluation.hpp"
#include "bayescombine/timeseries.hpp"
#include "bayescombine/verdict.hpp"
#include "bayescombine/verdict_matrix.hpp"

namespace bayescombine {

// Column order of the pooled table.
inline constexpr std::array<std::string_view, 4> kDetectorNames{"Var", "Goldi", "HW", "ARMA"};
inline constexpr std::string_view kMajorityName = "MajVote";
inline constexpr std::string_view kBayesName = "Bayes";

struct DetectorSettings {
    std::array<bool, 4> enabled{true, true, true, true}; // indexed like kDetectorNames
    ThresholdPolicy policy;
    GoldilocksParams goldilocks;
    HoltWintersParams holt_winters;
    ArmaParams arma;

    void validate() const {
        bool any = false;
        for (bool e : enabled) any = any || e;
        if (!any) throw ConfigError("at least one detector must be enabled");
        policy.validate();
        holt_winters.validate();
        if (goldilocks.window < 3) throw ConfigError("Goldilocks window must be >= 3");
    }
};

struct DetectorRun {
    std::string name;
    std::vector<DetectorVerdict> verdicts;
    std::string skipped; // reason, empty when the detector ran

    bool ran() const noexcept { return skipped.empty(); }
};

namespace detail {

inline std::vector<DetectorVerdict> run_one(std::size_t which, std::span<const double> values,
                                            const DetectorSettings& s) {
    switch (which) {
    case 0: return variance_detector(values, s.policy);
    case 1: return goldilocks_detector(values, s.goldilocks, s.policy);
    case 2: return holt_winters_detector(values, s.holt_winters, s.policy);
    default: return arma_detector(values, s.arma, s.policy);
    }
}

} // namespace detail

// Enabled detectors in table order. Configuration errors propagate; data
// that a detector cannot handle yields a skipped run.
inline std::vector<DetectorRun> run_detectors(const LabeledSeries& series, const DetectorSettings& settings) {
    settings.validate();
    std::vector<DetectorRun> runs;
    for (std::size_t d = 0; d < kDetectorNames.size(); ++d) {
        if (!settings.enabled[d]) continue;
        DetectorRun run{std::string(kDetectorNames[d]), {}, {}};
        try {
            run.verdicts = detail::run_one(d, series.values(), settings);
        } catch (const InsufficientDataError& e) {
            run.skipped = e.what();
        } catch (const ModelInapplicableError& e) {
            run.skipped = e.what();
        } catch (const DegenerateError& e) {
            run.skipped = e.what();
        } catch (const ArmaConvergenceError& e) {
            run.skipped = e.what();
        }
        if (!run.ran()) spdlog::warn("series '{}': {} skipped: {}", series.id(), run.name, run.skipped);
        runs.push_back(std::move(run));
    }
    return runs;
}

inline VerdictMatrix assemble_verdicts(const std::vector<DetectorRun>& runs) {
    std::vector<std::vector<DetectorVerdict>> columns;
    std::vector<std::string> names;
    for (const auto& r : runs) {
        if (!r.ran()) continue;
        columns.push_back(r.verdicts);
        names.push_back(r.name);
    }
    if (columns.empty()) throw ModelInapplicableError("no detector could score this series");
    return VerdictMatrix::from_columns(columns, std::move(names));
}

// Stable per-series seed: FNV-1a over the tag, mixed with the base seed by
// a splitmix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t z = base ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct PipelineConfig {
    DetectorSettings detectors;
    EnsembleConfig ensemble;
    std::uint64_t seed = 1;
    bool inject_random_detector = false;
    bool keep_chain = false;
};

struct CombinedRun {
    VerdictMatrix verdicts;
    std::vector<Label> majority;
    EnsembleResult ensemble;
    ChainTrace chain;
};

struct SeriesResult {
    std::string id;
    std::vector<DetectorRun> detectors;
    std::optional<CombinedRun> base;
    std::optional<CombinedRun> with_random; // after appending the random detector
    std::string error;                      // set when no report could be produced

    bool ok() const noexcept { return error.empty() && base.has_value(); }
};

namespace detail {

inline CombinedRun combine(VerdictMatrix verdicts, const EnsembleConfig& config, bool keep_chain) {
    CombinedRun run{std::move(verdicts), {}, {}, {}};
    run.majority = majority_vote(run.verdicts);
    run.ensemble = run_ensemble(run.verdicts, config, keep_chain ? &run.chain : nullptr);
    return run;
}

} // namespace detail

// Never throws for data problems; they land in SeriesResult::error.
inline SeriesResult run_series(const LabeledSeries& series, const PipelineConfig& config) {
    SeriesResult out;
    out.id = series.id();
    try {
        out.detectors = run_detectors(series, config.detectors);
        EnsembleConfig ens = config.ensemble;
        ens.sampler.seed = derive_seed(config.seed, series.id() + "/sampler");
        out.base = detail::combine(assemble_verdicts(out.detectors), ens, config.keep_chain);
        if (config.inject_random_detector) {
            const auto coin = random_detector(series.size(), derive_seed(config.seed, series.id() + "/random"));
            out.with_random =
                detail::combine(out.base->verdicts.with_column(coin, kRandomDetectorName), ens, false);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        out.error = e.what();
        out.base.reset();
        out.with_random.reset();
        spdlog::error("series '{}': {}", series.id(), out.error);
    }
    return out;
}

// Pooled confusion counts per method over the labeled series. A detector
// skipped on a series contributes nothing for that series.
struct PooledMethod {
    std::string name;
    ConfusionCounts counts;
    std::size_t series = 0;

    double error_rate() const { return bayescombine::error_rate(counts); }
};

struct PooledTable {
    std::vector<PooledMethod> methods;
    std::size_t labeled_series = 0;

    const PooledMethod* find(std::string_view name) const {
        for (const auto& m : methods)
            if (m.name == name) return &m;
        return nullptr;
    }
};

namespace detail {

inline std::vector<Label> verdict_labels(const std::vector<DetectorVerdict>& v) {
    std::vector<Label> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].label;
    return out;
}

} // namespace detail

// Columns: enabled detectors in table order, then MajVote and Bayes.
inline PooledTable pool_metrics(std::span<const SeriesResult> results, std::span<const LabeledSeries> series,
                                const DetectorSettings& settings) {
    if (results.size() != series.size()) throw ConfigError("results and series differ in length");
    PooledTable table;
    for (std::size_t d = 0; d < kDetectorNames.size(); ++d)
        if (settings.enabled[d]) table.methods.push_back({std::string(kDetectorNames[d]), {}, 0});
    table.methods.push_back({std::string(kMajorityName), {}, 0});
    table.methods.push_back({std::string(kBayesName), {}, 0});

    auto add = [&](std::string_view name, std::span<const Label> predicted, std::span<const Label> truth) {
        for (auto& m : table.methods)
            if (m.name == name) {
                m.counts += confusion(predicted, truth);
                ++m.series;
            }
    };
    for (std::size_t s = 0; s < results.size(); ++s) {
        const auto& r = results[s];
        if (!r.ok() || !series[s].truth()) continue;
        const auto& truth = *series[s].truth();
        ++table.labeled_series;
        for (const auto& run : r.detectors)
            if (run.ran()) add(run.name, detail::verdict_labels(run.verdicts), truth);
        add(kMajorityName, r.base->majority, truth);
        add(kBayesName, r.base->ensemble.labels, truth);
    }
    return table;
}

// Pooled majority-vote and Bayes counts before and after the random
// detector is appended.
struct PooledRobustness {
    ConfusionCounts majority_before, majority_after, bayes_before, bayes_after;
    std::size_t labeled_series = 0;
};

inline PooledRobustness pool_robustness(std::span<const SeriesResult> results, std::span<const LabeledSeries> series) {
    if (results.size() != series.size()) throw ConfigError("results and series differ in length");
    PooledRobustness p;
    for (std::size_t s = 0; s < results.size(); ++s) {
        const auto& r = results[s];
        if (!r.ok() || !r.with_random || !series[s].truth()) continue;
        const auto& truth = *series[s].truth();
        ++p.labeled_series;
        p.majority_before += confusion(r.base->majority, truth);
        p.bayes_before += confusion(r.base->ensemble.labels, truth);
        p.majority_after += confusion(r.with_random->majority, truth);
        p.bayes_after += confusion(r.with_random->ensemble.labels, truth);
    }
    return p;
}

} // namespace bayescombine

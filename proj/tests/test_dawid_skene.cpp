#include <catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "bayescombine/dawid_skene.hpp"
#include "bayescombine/evaluation.hpp"

using namespace bayescombine;
using Catch::Matchers::WithinAbs;

TEST_CASE("perfect unanimous detectors are a fixed point") {
    const std::size_t I = 60;
    VerdictMatrix v(I, {"a", "b", "c"});
    std::vector<Label> truth(I);
    for (std::size_t i = 0; i < I; ++i) {
        truth[i] = i % 7 == 0 ? kAnomaly : kNormal;
        for (std::size_t k = 0; k < 3; ++k) v.set(i, k, truth[i], 0.9);
    }
    const auto r = dawid_skene_em(v);
    CHECK(r.labels == truth);
    CHECK(r.converged);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK_THAT(r.false_positive_rate[k], WithinAbs(0.0, 1e-12));
        CHECK_THAT(r.false_negative_rate[k], WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("a flipped detector gets near-zero diagonal accuracy") {
    SyntheticSpec spec;
    spec.points = 3000;
    spec.anomaly_rate = 0.2;
    spec.seed = 300;
    spec.detectors = {{"good1", {0.95, 0.9}}, {"good2", {0.9, 0.9}}, {"good3", {0.92, 0.85}}};
    auto data = generate_synthetic(spec);
    // Replace the third column with the negated truth.
    VerdictMatrix v(spec.points, {"good1", "good2", "flipped"});
    for (std::size_t i = 0; i < spec.points; ++i) {
        for (std::size_t k = 0; k < 2; ++k) v.set(i, k, data.verdicts.label(i, k), data.verdicts.confidence(i, k));
        v.set(i, 2, static_cast<Label>(1 - data.truth[i]), 0.9);
    }
    const auto r = dawid_skene_em(v);
    CHECK(r.confusion[2][0][0] < 0.05);
    CHECK(r.confusion[2][1][1] < 0.05);
    CHECK(r.confusion[0][0][0] > 0.9);
    CHECK_THAT(r.prevalence, WithinAbs(0.2, 0.03));
    CHECK(error_rate(confusion(r.labels, data.truth)) < 0.02);
}

TEST_CASE("log-likelihood never decreases") {
    std::mt19937_64 rng(301);
    std::uniform_real_distribution<double> acc(0.55, 0.98), rate(0.02, 0.4);
    for (int rep = 0; rep < 40; ++rep) {
        SyntheticSpec spec;
        spec.points = 50 + rng() % 500;
        spec.anomaly_rate = rate(rng);
        spec.seed = rng();
        const std::size_t K = 2 + rng() % 5;
        for (std::size_t k = 0; k < K; ++k) spec.detectors.push_back({"d", {acc(rng), acc(rng)}});
        const auto r = dawid_skene_em(generate_synthetic(spec).verdicts, 200, 1e-10);
        for (std::size_t t = 1; t < r.log_likelihood.size(); ++t)
            CHECK(r.log_likelihood[t] >= r.log_likelihood[t - 1] - 1e-9 * std::abs(r.log_likelihood[t - 1]));
    }
}

TEST_CASE("soft posteriors, rates and shape") {
    SyntheticSpec spec;
    spec.points = 500;
    spec.detectors = {{"a", {0.9, 0.8}}, {"b", {0.85, 0.7}}};
    const auto data = generate_synthetic(spec);
    const auto r = dawid_skene_em(data.verdicts, 50);
    CHECK(r.iterations <= 50);
    CHECK(r.labels.size() == spec.points);
    CHECK(r.confusion.size() == 2);
    for (double p : r.p_anomaly) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    for (const auto& c : r.confusion)
        for (const auto& row : c) CHECK_THAT(row[0] + row[1], WithinAbs(1.0, 1e-12));
    CHECK_THROWS_AS(dawid_skene_em(data.verdicts, 0), ConfigError);
}

TEST_CASE("single detector runs with a warning") {
    VerdictMatrix v(4, {"only"});
    v.set(1, 0, kAnomaly, 0.8);
    const auto r = dawid_skene_em(v);
    CHECK(r.labels.size() == 4);
}

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "bayescombine/detectors.hpp"

using namespace bayescombine;
using Catch::Matchers::WithinAbs;

namespace {

std::size_t count_anomalies(const std::vector<DetectorVerdict>& v) {
    std::size_t n = 0;
    for (const auto& x : v) n += x.label;
    return n;
}

// Reference multiplicative Holt-Winters one-step forecasts, written from the
// recursions directly (no shared code with the library).
std::vector<double> hw_reference(const std::vector<double>& y, std::size_t L, double a, double b, double g) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        s1 += y[i];
        s2 += y[L + i];
    }
    s1 /= static_cast<double>(L);
    s2 /= static_cast<double>(L);
    double level = s1, trend = (s2 - s1) / static_cast<double>(L);
    std::vector<double> season(L);
    for (std::size_t i = 0; i < L; ++i) season[i] = y[i] / level;
    std::vector<double> forecast(y.size(), 0.0);
    for (std::size_t t = L; t < y.size(); ++t) {
        const double s = season[t % L];
        forecast[t] = (level + trend) * s;
        const double new_level = a * (y[t] / s) + (1 - a) * (level + trend);
        trend = b * (new_level - level) + (1 - b) * trend;
        level = new_level;
        season[t % L] = g * (y[t] / level) + (1 - g) * s;
    }
    return forecast;
}

std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> e(0.0, 1.0);
    std::vector<double> y(n);
    double prev = 0.0;
    for (auto& v : y) {
        prev = phi * prev + e(rng);
        v = prev;
    }
    return y;
}

} // namespace

// ---------------------------------------------------------------------------
// Variance detector

TEST_CASE("variance detector on a constant series") {
    const auto v = variance_detector(std::vector<double>{5, 5, 5, 5});
    REQUIRE(v.size() == 4);
    for (const auto& x : v) {
        CHECK(x.label == kNormal);
        CHECK(x.raw_score == 0.0);
        CHECK(x.confidence == 0.5);
    }
}

TEST_CASE("variance detector with an absolute threshold") {
    const auto v = variance_detector(std::vector<double>{1, 2, 3}, ThresholdPolicy::absolute(0.5));
    CHECK(v[0].label == kNormal); // no predecessor
    CHECK(v[1].label == kAnomaly);
    CHECK(v[2].label == kAnomaly);
    CHECK(v[1].raw_score == 1.0);
}

TEST_CASE("variance detector flags a single jump") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<double> y{10.0};
    for (int i = 0; i < 50; ++i) y.push_back(y.back() + noise(rng));
    y.push_back(y.back() + 100.0);
    const auto v = variance_detector(y);
    CHECK(count_anomalies(v) == 1);
    CHECK(v.back().label == kAnomaly);

    // Hand check of the threshold: the jump's delta exceeds mean + 3 sd.
    const auto d = first_differences(y);
    const std::vector<double> pop(d.begin() + 1, d.end());
    const double mean = std::accumulate(pop.begin(), pop.end(), 0.0) / static_cast<double>(pop.size());
    double ss = 0.0;
    for (double x : pop) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(pop.size() - 1));
    CHECK(d.back() >= mean + 3 * sd);
}

TEST_CASE("variance detector needs three points") {
    CHECK_THROWS_AS(variance_detector(std::vector<double>{1, 2}), InsufficientDataError);
}

TEST_CASE("variance detector is shift and scale invariant") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.01, 100.0), shift(-1e3, 1e3);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> y(20 + rng() % 100);
        for (auto& v : y) v = noise(rng);
        y[rng() % y.size()] += 15.0;
        const double a = scale(rng), b = shift(rng);
        std::vector<double> shifted(y.size()), scaled(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            shifted[i] = y[i] + b;
            scaled[i] = a * y[i];
        }
        const auto base = variance_detector(y);
        const auto vs = variance_detector(shifted), va = variance_detector(scaled);
        for (std::size_t i = 0; i < y.size(); ++i) {
            CHECK(vs[i].label == base[i].label);
            CHECK(va[i].label == base[i].label);
        }
    }
}

// ---------------------------------------------------------------------------
// Holt-Winters

TEST_CASE("Holt-Winters fixed point on a constant series") {
    const std::vector<double> y{4, 4, 4, 4};
    const auto state = HoltWintersState::initialize(y, HoltWintersParams{1, 0.2, 0.05, 0.1});
    CHECK(state.level() == 4.0);
    CHECK(state.trend() == 0.0);
    const auto r = holt_winters_residuals(y, HoltWintersParams{1, 0.2, 0.05, 0.1});
    for (double x : r) CHECK(x == 0.0);
    CHECK(count_anomalies(holt_winters_detector(y, HoltWintersParams{1, 0.2, 0.05, 0.1})) == 0);
}

TEST_CASE("Holt-Winters on an exactly periodic series") {
    const std::vector<double> season{3, 5, 2, 7};
    std::vector<double> y;
    for (int rep = 0; rep < 12; ++rep) y.insert(y.end(), season.begin(), season.end());
    const HoltWintersParams p{4, 0.2, 0.05, 0.1};
    const auto r = holt_winters_residuals(y, p);
    for (std::size_t t = 4; t < y.size(); ++t) CHECK_THAT(r[t], WithinAbs(0.0, 1e-12));
    CHECK(count_anomalies(holt_winters_detector(y, p)) == 0);
}

TEST_CASE("Holt-Winters matches the reference recursion") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.8, 1.2);
    const std::size_t L = 6;
    std::vector<double> y;
    for (std::size_t t = 0; t < 120; ++t)
        y.push_back((50.0 + 0.3 * static_cast<double>(t)) * (1.0 + 0.4 * std::sin(2 * M_PI * t / L)) * u(rng));
    const HoltWintersParams p{L, 0.3, 0.1, 0.2};
    const auto ref = hw_reference(y, L, 0.3, 0.1, 0.2);
    const auto r = holt_winters_residuals(y, p);
    for (std::size_t t = L; t < y.size(); ++t) CHECK_THAT(r[t], WithinAbs(y[t] - ref[t], 1e-9));
}

TEST_CASE("Holt-Winters flags a 10x spike") {
    const std::vector<double> season{10, 20, 15, 30, 25, 12};
    std::mt19937_64 rng(8);
    std::normal_distribution<double> noise(0.0, 0.05);
    std::vector<double> y;
    for (int rep = 0; rep < 20; ++rep)
        for (double s : season) y.push_back(s * (1.0 + noise(rng)));
    const std::size_t spike = 70;
    y[spike] *= 10.0;
    const auto v = holt_winters_detector(y, HoltWintersParams{6, 0.2, 0.05, 0.1});
    CHECK(v[spike].label == kAnomaly);
}

TEST_CASE("Holt-Winters preconditions") {
    CHECK_THROWS_AS(holt_winters_detector(std::vector<double>{1, 2, 3}, HoltWintersParams{2, 0.2, 0.05, 0.1}),
                    InsufficientDataError);
    CHECK_THROWS_AS(holt_winters_detector(std::vector<double>{1, 2, -3, 4}, HoltWintersParams{2, 0.2, 0.05, 0.1}),
                    ModelInapplicableError);
    CHECK_THROWS_AS(holt_winters_detector(std::vector<double>{1, 2, 3, 4}, HoltWintersParams{2, 1.5, 0.05, 0.1}),
                    ConfigError);
}

// ---------------------------------------------------------------------------
// Goldilocks

TEST_CASE("Goldilocks on an exactly linear series") {
    std::vector<double> y(80);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = 2.0 * static_cast<double>(t);
    const auto r = goldilocks_residuals(y, GoldilocksParams{30});
    for (std::size_t t = 30; t < y.size(); ++t) CHECK_THAT(r[t], WithinAbs(0.0, 1e-8));
    CHECK(count_anomalies(goldilocks_detector(y, GoldilocksParams{30})) == 0);
}

TEST_CASE("Goldilocks on decreasing and negative series") {
    std::vector<double> y(60);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = -5.0 - 0.5 * static_cast<double>(t);
    const auto r = goldilocks_residuals(y, GoldilocksParams{10});
    for (std::size_t t = 10; t < y.size(); ++t) CHECK_THAT(r[t], WithinAbs(0.0, 1e-8));
}

TEST_CASE("Goldilocks on a constant series") {
    const std::vector<double> y(50, 7.5);
    const auto r = goldilocks_residuals(y, GoldilocksParams{10});
    for (std::size_t t = 10; t < y.size(); ++t) CHECK_THAT(r[t], WithinAbs(0.0, 1e-10));
    for (const auto& v : goldilocks_detector(y, GoldilocksParams{10})) CHECK(v.label == kNormal);
}

TEST_CASE("Goldilocks flags a displaced point") {
    std::vector<double> y(100);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = 3.0 + 0.5 * static_cast<double>(t);
    y[60] += 1000.0;
    const auto v = goldilocks_detector(y, GoldilocksParams{30});
    CHECK(v[60].label == kAnomaly);
    for (std::size_t t = 0; t < 30; ++t) {
        CHECK(v[t].label == kNormal);
        CHECK(v[t].confidence == 0.5);
    }
}

TEST_CASE("Goldilocks preconditions") {
    CHECK_THROWS_AS(goldilocks_detector(std::vector<double>(10, 1.0), GoldilocksParams{10}), InsufficientDataError);
    CHECK_THROWS_AS(goldilocks_detector(std::vector<double>(10, 1.0), GoldilocksParams{2}), ConfigError);
}

// ---------------------------------------------------------------------------
// Random detector

TEST_CASE("random detector") {
    const auto a = random_detector(10000, 99);
    const auto b = random_detector(10000, 99);
    CHECK(a == b);
    const double frac = static_cast<double>(count_anomalies(a)) / 10000.0;
    CHECK(frac >= 0.47);
    CHECK(frac <= 0.53);
    for (const auto& v : a) CHECK(v.confidence == kConfidenceCeiling);
    CHECK_THROWS_AS(random_detector(0, 1), ConfigError);
}

// ---------------------------------------------------------------------------
// Shared properties

TEST_CASE("verdict length equals series length and detectors are deterministic") {
    const auto y = ar1(300, 0.5, 10);
    std::vector<double> pos(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) pos[i] = y[i] + 20.0;
    CHECK(variance_detector(y).size() == y.size());
    CHECK(goldilocks_detector(y).size() == y.size());
    CHECK(holt_winters_detector(pos).size() == y.size());
    CHECK(variance_detector(y) == variance_detector(y));
    CHECK(goldilocks_detector(y) == goldilocks_detector(y));
    CHECK(holt_winters_detector(pos) == holt_winters_detector(pos));
}

TEST_CASE("anomaly labels pass the threshold rule") {
    const auto y = ar1(500, 0.3, 11);
    for (const auto& v : {variance_detector(y), goldilocks_detector(y)}) {
        for (const auto& x : v)
            if (x.label == kAnomaly) CHECK(x.probability >= std_normal_cdf(3.0) - 1e-12);
    }
}

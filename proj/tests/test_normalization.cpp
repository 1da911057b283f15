#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bayescombine/normalization.hpp"
#include "bayescombine/verdict.hpp"

using namespace bayescombine;
using Catch::Matchers::WithinAbs;

namespace {

// 0.5 + integral of the standard normal density over [0, x], composite
// Simpson with 20000 panels.
double cdf_oracle(double x) {
    const int n = 20000;
    const double h = x / n;
    auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
    double s = phi(0.0) + phi(x);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * phi(i * h);
    return 0.5 + s * h / 3.0;
}

} // namespace

TEST_CASE("normal cdf reference values") {
    CHECK(std_normal_cdf(0.0) == 0.5);
    CHECK_THAT(std_normal_cdf(1.0), WithinAbs(0.841345, 5e-7));
    CHECK_THAT(std_normal_cdf(3.0), WithinAbs(0.99865, 5e-6));
    CHECK_THROWS_AS(std_normal_cdf(INFINITY), ConfigError);
    CHECK_THROWS_AS(std_normal_cdf(NAN), ConfigError);
}

TEST_CASE("normal cdf matches quadrature oracle") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> dist(-8.0, 8.0);
    for (int i = 0; i < 200; ++i) {
        const double x = dist(rng);
        CHECK_THAT(std_normal_cdf(x), WithinAbs(cdf_oracle(x), 1e-10));
    }
}

TEST_CASE("normal cdf reflection and monotonicity") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> dist(0.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = dist(rng);
        CHECK_THAT(std_normal_cdf(x) + std_normal_cdf(-x), WithinAbs(1.0, 1e-12));
    }
    double prev = 0.0;
    for (double x = -10.0; x <= 10.0; x += 0.01) {
        const double v = std_normal_cdf(x);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("gaussian normalization examples") {
    const auto r = gaussian_normalize(std::vector<double>{1, 2, 3});
    CHECK_FALSE(r.degenerate);
    CHECK(r.probabilities[1] == 0.5);
    CHECK_THAT(r.probabilities[2], WithinAbs(0.841345, 5e-7)); // one sample sd above the mean

    // Ten zeros and one 10; the oracle recomputes the moments by hand.
    std::vector<double> s(10, 0.0);
    s.push_back(10.0);
    const double mean = 10.0 / 11.0;
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / 10.0);
    CHECK_THAT(gaussian_normalize(s).probabilities.back(), WithinAbs(cdf_oracle((10.0 - mean) / sd), 1e-10));

    const auto c = gaussian_normalize(std::vector<double>{4, 4, 4});
    CHECK(c.degenerate);
    CHECK(c.probabilities == std::vector<double>{0.5, 0.5, 0.5});
}

TEST_CASE("three standard deviations above the mean maps to 0.99865") {
    CHECK_THAT(std_normal_cdf(3.0), WithinAbs(0.99865, 5e-6));
    CHECK_THAT(cdf_oracle(3.0), WithinAbs(std_normal_cdf(3.0), 1e-12));
}

TEST_CASE("gaussian normalization is affine invariant and order preserving") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.001, 1000.0), shift(-1e4, 1e4);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> x(5 + rng() % 100);
        for (auto& v : x) v = dist(rng);
        const double a = scale(rng), b = shift(rng);
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
        const auto px = gaussian_normalize(x).probabilities, py = gaussian_normalize(y).probabilities;
        for (std::size_t i = 0; i < x.size(); ++i) CHECK_THAT(py[i], WithinAbs(px[i], 1e-9));
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j < x.size(); ++j)
                if (x[i] < x[j]) CHECK(px[i] <= px[j]);
    }
}

TEST_CASE("confidence examples") {
    CHECK(to_confidence(0.99, kAnomaly) == 0.99);
    CHECK_THAT(to_confidence(0.01, kNormal), WithinAbs(0.99, 1e-15));
    CHECK(to_confidence(0.5, kNormal) == 0.5);
    CHECK(to_confidence(0.5, kAnomaly) == 0.5);
    CHECK(to_confidence(1.0, kAnomaly) == kConfidenceCeiling);
    CHECK(to_confidence(0.2, kAnomaly) == 0.5);
    CHECK_THROWS_AS(to_confidence(1.5, kAnomaly), ConfigError);
}

TEST_CASE("confidence always lies in [0.5, ceiling]") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const double p = dist(rng);
        const Label l = static_cast<Label>(rng() & 1);
        const auto s = normalized_score(p, l);
        CHECK(s.confidence >= 0.5);
        CHECK(s.confidence <= kConfidenceCeiling);
        CHECK(s.confidence == std::clamp(l == kAnomaly ? p : 1.0 - p, 0.5, kConfidenceCeiling));
    }
}

TEST_CASE("score_verdicts warm-up and threshold rule") {
    std::vector<double> raw(60, 0.0);
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = (i % 2 ? 1.0 : -1.0);
    raw[50] = 40.0;
    const auto v = score_verdicts(raw, 5, ThresholdPolicy{});
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(v[i].label == kNormal);
        CHECK(v[i].probability == 0.5);
        CHECK(v[i].confidence == 0.5);
    }
    for (std::size_t i = 5; i < v.size(); ++i) CHECK(v[i].label == (i == 50 ? kAnomaly : kNormal));
    CHECK(v[50].probability > 0.99);

    const auto abs_rule = score_verdicts(std::vector<double>{0, 1, 1}, 1, ThresholdPolicy::absolute(0.5));
    CHECK(abs_rule[1].label == kAnomaly);
    CHECK(abs_rule[2].label == kAnomaly);

    const auto flat = score_verdicts(std::vector<double>{3, 3, 3, 3}, 0, ThresholdPolicy{});
    for (const auto& x : flat) {
        CHECK(x.label == kNormal);
        CHECK(x.confidence == 0.5);
    }
    CHECK_THROWS_AS(score_verdicts(raw, 0, ThresholdPolicy{0.0, std::nullopt}), ConfigError);
}

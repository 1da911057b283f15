#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "bayescombine/timeseries.hpp"

using namespace bayescombine;
using Catch::Matchers::WithinAbs;

namespace {

LabeledSeries parse(const std::string& text) {
    std::istringstream in(text);
    return parse_series(in, "s");
}

std::string roundtrip(const LabeledSeries& s) {
    std::ostringstream out;
    write_series(out, s);
    return out.str();
}

} // namespace

TEST_CASE("three labeled rows parse with truth") {
    const auto s = parse("timestamp,value,is_anomaly\n1,5.0,0\n2,6.0,0\n3,50.0,1\n");
    REQUIRE(s.size() == 3);
    REQUIRE(s.truth().has_value());
    CHECK(*s.truth() == std::vector<Label>{0, 0, 1});
    CHECK(s.values()[2] == 50.0);
}

TEST_CASE("two-column file has no truth") {
    const auto s = parse("timestamp,value\n1,5.0\n2,6.0\n");
    CHECK(s.size() == 2);
    CHECK_FALSE(s.truth().has_value());
}

TEST_CASE("malformed value names its line") {
    try {
        parse("timestamp,value,is_anomaly\n1,5.0,0\n2,abc,0\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("ingestion rejects bad rows") {
    CHECK_THROWS_AS(parse("timestamp,value\n1,5\n1,6\n"), ParseError);          // duplicate timestamp
    CHECK_THROWS_AS(parse("timestamp,value\n1,nan\n"), ParseError);             // non-finite
    CHECK_THROWS_AS(parse("timestamp,value\n1,inf\n"), ParseError);
    CHECK_THROWS_AS(parse("timestamp,value,is_anomaly\n1,5,2\n"), ParseError); // label outside {0,1}
    CHECK_THROWS_AS(parse("timestamp,value,is_anomaly\n1,5\n"), ParseError);   // missing field
    CHECK_THROWS_AS(parse("time,value\n1,5\n"), ParseError);                    // unknown header
    CHECK_THROWS_AS(parse("timestamp,value\n"), ParseError);                    // no rows
    CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("duplicate timestamp reported at the later line") {
    try {
        parse("timestamp,value\n5,1\n7,2\n5,3\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
    }
}

TEST_CASE("rows are sorted by timestamp with truth kept aligned") {
    const auto s = parse("timestamp,value,is_anomaly\n3,30,1\n1,10,0\n2,20,0\n");
    CHECK(s.points()[0].timestamp == 1);
    CHECK(s.values()[2] == 30.0);
    CHECK(*s.truth() == std::vector<Label>{0, 0, 1});
}

TEST_CASE("constructor enforces invariants") {
    CHECK_THROWS_AS(LabeledSeries("x", {{1, 1.0}, {1, 2.0}}), ConfigError);
    CHECK_THROWS_AS(LabeledSeries("x", {{2, 1.0}, {1, 2.0}}), ConfigError);
    CHECK_THROWS_AS(LabeledSeries("x", {{1, NAN}}), ConfigError);
    CHECK_THROWS_AS(LabeledSeries("x", {{1, 1.0}, {2, 2.0}}, std::vector<Label>{0}), ConfigError);
}

TEST_CASE("serialization round-trips bit-exactly") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 1e6);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<TimePoint> pts;
        std::vector<Label> truth;
        std::int64_t t = -1000;
        for (int i = 0; i < 50; ++i) {
            t += 1 + static_cast<std::int64_t>(rng() % 100);
            pts.push_back({t, noise(rng) * std::ldexp(1.0, static_cast<int>(rng() % 40) - 20)});
            truth.push_back(static_cast<Label>(rng() & 1));
        }
        const LabeledSeries s("r", pts, rep % 2 ? std::optional(truth) : std::nullopt);
        const auto text = roundtrip(s);
        const auto back = parse(text);
        REQUIRE(back.size() == s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(back.points()[i].timestamp == s.points()[i].timestamp);
            CHECK(back.values()[i] == s.values()[i]);
        }
        CHECK(back.truth() == s.truth());
        CHECK(roundtrip(back) == text);
    }
}

TEST_CASE("sliding window counts") {
    const auto s = LabeledSeries::from_values("w", std::vector<double>{1, 2, 3, 4, 5});
    CHECK(sliding_windows(s, 5).size() == 1);
    CHECK(sliding_windows(s, 2).size() == 4);
    const auto short_series = LabeledSeries::from_values("w", std::vector<double>{1, 2, 3});
    CHECK_THROWS_AS(sliding_windows(short_series, 4), InsufficientDataError);
    CHECK_THROWS_AS(sliding_windows(s, 0), ConfigError);
}

TEST_CASE("sliding windows tile with stride one") {
    std::mt19937 rng(3);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t len = 1 + rng() % 40;
        const std::size_t n = 1 + rng() % len;
        std::vector<double> v(len);
        for (std::size_t i = 0; i < len; ++i) v[i] = static_cast<double>(i);
        const auto ws = sliding_windows(std::span<const double>(v), n);
        REQUIRE(ws.size() == len - n + 1);
        for (std::size_t i = 0; i < ws.size(); ++i) {
            CHECK(ws[i].start == i);
            REQUIRE(ws[i].length() == n);
            CHECK(ws[i].values.front() == static_cast<double>(i));
            CHECK(ws[i].values.back() == static_cast<double>(i + n - 1));
        }
    }
}

TEST_CASE("standardize examples") {
    const auto a = standardize(std::vector<double>{1, 2, 3});
    CHECK_THAT(a.mean, WithinAbs(2.0, 1e-15));
    CHECK_THAT(a.stddev, WithinAbs(1.0, 1e-15));
    CHECK_THAT(a.z[0], WithinAbs(-1.0, 1e-15));
    CHECK_THAT(a.z[1], WithinAbs(0.0, 1e-15));
    CHECK_THAT(a.z[2], WithinAbs(1.0, 1e-15));

    CHECK_THROWS_AS(standardize(std::vector<double>{5, 5, 5}), DegenerateError);
    CHECK_THROWS_AS(standardize(std::vector<double>{5}), InsufficientDataError);

    const auto b = standardize(std::vector<double>{0, 10});
    CHECK_THAT(b.stddev, WithinAbs(7.0710678118654755, 1e-12));
    CHECK_THAT(b.z[0], WithinAbs(-0.70710678118654752, 1e-12));
    CHECK_THAT(b.z[1], WithinAbs(0.70710678118654752, 1e-12));
}

TEST_CASE("standardize output has zero mean and unit sample deviation") {
    std::mt19937_64 rng(11);
    std::lognormal_distribution<double> dist(0.0, 2.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> v(2 + rng() % 200);
        for (auto& x : v) x = dist(rng);
        const auto s = standardize(v);
        const auto m = sample_moments(s.z);
        CHECK_THAT(m.mean, WithinAbs(0.0, 1e-9));
        CHECK_THAT(m.stddev, WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("standardize is shift and scale equivariant") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.01, 100.0), shift(-1e3, 1e3);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> x(3 + rng() % 50);
        for (auto& v : x) v = dist(rng);
        const double a = scale(rng), b = shift(rng);
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
        const auto zx = standardize(x).z, zy = standardize(y).z;
        for (std::size_t i = 0; i < x.size(); ++i) CHECK_THAT(zy[i], WithinAbs(zx[i], 1e-9));
    }
}

#pragma once

// Time-series data model, Yahoo-S5-layout CSV ingestion, windowing and
// standardization shared by the detectors.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "bayescombine/error.hpp"
#include "bayescombine/types.hpp"

namespace bayescombine {

struct TimePoint {
    std::int64_t timestamp = 0;
    double value = 0.0;
};

class LabeledSeries {
public:
    LabeledSeries() = default;

    // Validates: values finite, timestamps strictly increasing, truth (when
    // present) as long as points.
    LabeledSeries(std::string id, std::vector<TimePoint> points,
                  std::optional<std::vector<Label>> truth = std::nullopt)
        : id_(std::move(id)), points_(std::move(points)), truth_(std::move(truth)) {
        values_.reserve(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (!std::isfinite(points_[i].value))
                throw ConfigError("series '" + id_ + "': non-finite value at index " +
                                  std::to_string(i));
            if (i > 0 && points_[i].timestamp <= points_[i - 1].timestamp)
                throw ConfigError("series '" + id_ +
                                  "': timestamps not strictly increasing at index " +
                                  std::to_string(i));
            values_.push_back(points_[i].value);
        }
        if (truth_) {
            if (truth_->size() != points_.size())
                throw ConfigError("series '" + id_ + "': truth length " +
                                  std::to_string(truth_->size()) + " != " +
                                  std::to_string(points_.size()) + " points");
            for (Label l : *truth_)
                if (l > 1) throw ConfigError("series '" + id_ + "': truth label outside {0,1}");
        }
    }

    // Convenience for index-spaced series (timestamps 0..n-1).
    static LabeledSeries from_values(std::string id, std::span<const double> values,
                                     std::optional<std::vector<Label>> truth = std::nullopt) {
        std::vector<TimePoint> pts(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            pts[i] = {static_cast<std::int64_t>(i), values[i]};
        return LabeledSeries(std::move(id), std::move(pts), std::move(truth));
    }

    const std::string& id() const noexcept { return id_; }
    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }
    const std::vector<TimePoint>& points() const noexcept { return points_; }
    std::span<const double> values() const noexcept { return values_; }
    bool has_truth() const noexcept { return truth_.has_value(); }
    const std::optional<std::vector<Label>>& truth() const noexcept { return truth_; }

private:
    std::string id_;
    std::vector<TimePoint> points_;
    std::vector<double> values_;
    std::optional<std::vector<Label>> truth_;
};

struct Window {
    std::size_t start = 0;
    std::span<const double> values;

    std::size_t length() const noexcept { return values.size(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto next = line.find(',', pos);
        out.push_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
    if (field.empty()) return false;
    if (field.front() == '+') field.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc() && ptr == field.data() + field.size();
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace detail

// Parses `timestamp,value[,is_anomaly]` CSV text. Rows are sorted by
// timestamp; duplicates, non-finite values and malformed rows are rejected
// with the offending (1-based, header = line 1) line number.
inline LabeledSeries parse_series(std::istream& in, std::string id) {
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    bool labeled = false;

    struct Row {
        TimePoint point;
        Label truth;
        std::size_t line;
    };
    std::vector<Row> rows;

    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = detail::trim(line);
        if (line_no == 1 && view.size() >= 3 && view.substr(0, 3) == "\xEF\xBB\xBF")
            view.remove_prefix(3);
        if (view.empty()) continue;
        auto fields = detail::split_commas(view);
        if (!header_seen) {
            if (fields.size() == 3 && fields[0] == "timestamp" && fields[1] == "value" &&
                fields[2] == "is_anomaly") {
                labeled = true;
            } else if (!(fields.size() == 2 && fields[0] == "timestamp" && fields[1] == "value")) {
                throw ParseError(line_no,
                                 "expected header 'timestamp,value,is_anomaly' or 'timestamp,value'");
            }
            header_seen = true;
            continue;
        }
        const std::size_t expected = labeled ? 3 : 2;
        if (fields.size() != expected)
            throw ParseError(line_no, "expected " + std::to_string(expected) + " fields, got " +
                                          std::to_string(fields.size()));
        Row row{{}, kNormal, line_no};
        if (!detail::parse_number(fields[0], row.point.timestamp))
            throw ParseError(line_no, "invalid timestamp '" + std::string(fields[0]) + "'");
        if (!detail::parse_number(fields[1], row.point.value))
            throw ParseError(line_no, "invalid value '" + std::string(fields[1]) + "'");
        if (!std::isfinite(row.point.value))
            throw ParseError(line_no, "non-finite value '" + std::string(fields[1]) + "'");
        if (labeled) {
            if (fields[2] == "0")
                row.truth = kNormal;
            else if (fields[2] == "1")
                row.truth = kAnomaly;
            else
                throw ParseError(line_no, "is_anomaly must be 0 or 1, got '" +
                                              std::string(fields[2]) + "'");
        }
        rows.push_back(row);
    }
    if (!header_seen) throw ParseError(std::max<std::size_t>(line_no, 1), "missing header");
    if (rows.empty()) throw ParseError(line_no, "no data rows");

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.point.timestamp < b.point.timestamp;
    });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].point.timestamp == rows[i - 1].point.timestamp) {
            const std::size_t dup = std::max(rows[i].line, rows[i - 1].line);
            throw ParseError(dup, "duplicate timestamp " + std::to_string(rows[i].point.timestamp));
        }
    }

    std::vector<TimePoint> points;
    points.reserve(rows.size());
    std::optional<std::vector<Label>> truth;
    if (labeled) truth.emplace();
    for (const auto& r : rows) {
        points.push_back(r.point);
        if (truth) truth->push_back(r.truth);
    }
    return LabeledSeries(std::move(id), std::move(points), std::move(truth));
}

inline LabeledSeries load_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    try {
        return parse_series(in, path.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(e.line(), path.string() + ": " + e.detail());
    }
}

// Writes the series back in the same layout. Values use the shortest
// round-trip representation, so parse(write(s)) reproduces s bit-exactly.
inline void write_series(std::ostream& out, const LabeledSeries& series) {
    out << (series.has_truth() ? "timestamp,value,is_anomaly\n" : "timestamp,value\n");
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& p = series.points()[i];
        out << p.timestamp << ',' << detail::format_double(p.value);
        if (series.has_truth()) out << ',' << static_cast<int>((*series.truth())[i]);
        out << '\n';
    }
}

// All length-n windows with stride 1: window i covers [i, i+n).
inline std::vector<Window> sliding_windows(std::span<const double> values, std::size_t n) {
    if (n == 0) throw ConfigError("window length must be positive");
    if (n > values.size())
        throw InsufficientDataError("window length " + std::to_string(n) + " exceeds series length " +
                                    std::to_string(values.size()));
    std::vector<Window> out;
    out.reserve(values.size() - n + 1);
    for (std::size_t i = 0; i + n <= values.size(); ++i) out.push_back({i, values.subspan(i, n)});
    return out;
}

inline std::vector<Window> sliding_windows(const LabeledSeries& series, std::size_t n) {
    return sliding_windows(series.values(), n);
}

struct Moments {
    double mean = 0.0;
    double stddev = 0.0; // sample (n-1) standard deviation
};

inline Moments sample_moments(std::span<const double> values) {
    if (values.size() < 2) throw InsufficientDataError("at least 2 values required for moments");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

struct Standardized {
    std::vector<double> z;
    double mean = 0.0;
    double stddev = 0.0;
};

// Relative threshold below which a standard deviation is treated as
// round-off of an exactly constant population.
inline constexpr double kDegenerateScaleTolerance = 1e-12;

inline bool is_degenerate_scale(const Moments& m, std::span<const double> values) {
    double max_abs = 0.0;
    for (double v : values) max_abs = std::max(max_abs, std::abs(v));
    return !(m.stddev > kDegenerateScaleTolerance * max_abs);
}

inline Standardized standardize(std::span<const double> values) {
    const Moments m = sample_moments(values);
    if (is_degenerate_scale(m, values))
        throw DegenerateError("zero variance: cannot standardize");
    Standardized out{std::vector<double>(values.size()), m.mean, m.stddev};
    for (std::size_t i = 0; i < values.size(); ++i) out.z[i] = (values[i] - m.mean) / m.stddev;
    return out;
}

} // namespace bayescombine

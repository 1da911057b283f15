#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "bayescombine/error.hpp"
#include "bayescombine/types.hpp"
#include "bayescombine/verdict.hpp"

namespace bayescombine {

// I points x K detectors of labels and confidences, stored row-major
// (point-major). The only input the combiners see.
class VerdictMatrix {
public:
    VerdictMatrix() = default;

    VerdictMatrix(std::size_t points, std::vector<std::string> detector_names)
        : points_(points), names_(std::move(detector_names)),
          labels_(points_ * names_.size(), kNormal),
          confidences_(points_ * names_.size(), kUninformativeConfidence) {}

    // One column per detector, all of the same length.
    static VerdictMatrix from_columns(const std::vector<std::vector<DetectorVerdict>>& columns,
                                      std::vector<std::string> names) {
        if (columns.empty()) throw ConfigError("verdict matrix needs at least one detector");
        if (columns.size() != names.size()) throw ConfigError("detector names do not match columns");
        VerdictMatrix m(columns.front().size(), std::move(names));
        for (std::size_t k = 0; k < columns.size(); ++k) {
            if (columns[k].size() != m.points())
                throw ConfigError("detector '" + m.names_[k] + "' has " + std::to_string(columns[k].size()) +
                                  " verdicts, expected " + std::to_string(m.points()));
            for (std::size_t i = 0; i < m.points(); ++i)
                m.set(i, k, columns[k][i].label, columns[k][i].confidence);
        }
        m.validate();
        return m;
    }

    std::size_t points() const noexcept { return points_; }
    std::size_t detectors() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }

    Label label(std::size_t i, std::size_t k) const { return labels_[i * detectors() + k]; }
    double confidence(std::size_t i, std::size_t k) const { return confidences_[i * detectors() + k]; }

    std::span<const Label> labels_at(std::size_t i) const {
        return std::span<const Label>(labels_).subspan(i * detectors(), detectors());
    }
    std::span<const double> confidences_at(std::size_t i) const {
        return std::span<const double>(confidences_).subspan(i * detectors(), detectors());
    }

    void set(std::size_t i, std::size_t k, Label label, double confidence) {
        labels_[i * detectors() + k] = label;
        confidences_[i * detectors() + k] = confidence;
    }

    // Appends a detector column.
    VerdictMatrix with_column(const std::vector<DetectorVerdict>& column, std::string name) const {
        if (column.size() != points_) throw ConfigError("appended column has wrong length");
        auto names = names_;
        names.push_back(std::move(name));
        VerdictMatrix out(points_, std::move(names));
        for (std::size_t i = 0; i < points_; ++i) {
            for (std::size_t k = 0; k < detectors(); ++k) out.set(i, k, label(i, k), confidence(i, k));
            out.set(i, detectors(), column[i].label, column[i].confidence);
        }
        return out;
    }

    // Reorders detectors; order[k] is the source column of new column k.
    VerdictMatrix permuted(std::span<const std::size_t> order) const {
        std::vector<std::string> names;
        for (auto k : order) names.push_back(names_.at(k));
        VerdictMatrix out(points_, std::move(names));
        for (std::size_t i = 0; i < points_; ++i)
            for (std::size_t k = 0; k < order.size(); ++k) out.set(i, k, label(i, order[k]), confidence(i, order[k]));
        return out;
    }

    void validate() const {
        if (points_ < 1 || detectors() < 1) throw ConfigError("verdict matrix must be at least 1x1");
        for (std::size_t n = 0; n < labels_.size(); ++n) {
            if (labels_[n] > 1) throw ConfigError("verdict label outside {0,1}");
            const double z = confidences_[n];
            if (!(z >= kUninformativeConfidence && z <= kConfidenceCeiling))
                throw ConfigError("verdict confidence outside [0.5, 1-1e-9]");
        }
    }

private:
    std::size_t points_ = 0;
    std::vector<std::string> names_;
    std::vector<Label> labels_;
    std::vector<double> confidences_;
};

} // namespace bayescombine

#pragma once

// Two-class Dawid-Skene EM: alternate soft true-label estimates given
// per-detector confusion matrices, and maximum-likelihood confusion matrices
// given soft labels. Initialized from the majority vote.

#include <array>
#include <cmath>
#include <vector>

#include <spdlog/spdlog.h>

#include "bayescombine/bcc.hpp"
#include "bayescombine/error.hpp"
#include "bayescombine/types.hpp"
#include "bayescombine/verdict_matrix.hpp"

namespace bayescombine {

struct DawidSkeneResult {
    std::vector<Label> labels;
    std::vector<double> p_anomaly;                   // soft posteriors
    std::vector<std::array<std::array<double, 2>, 2>> confusion; // [k][true][emitted]
    std::vector<double> false_positive_rate;        // confusion[k][0][1]
    std::vector<double> false_negative_rate;        // confusion[k][1][0]
    double prevalence = 0.0;
    std::vector<double> log_likelihood;             // per iteration, after each M-step
    int iterations = 0;
    bool converged = false;
};

namespace detail {

struct DsParams {
    double prevalence = 0.0;
    std::vector<std::array<std::array<double, 2>, 2>> confusion;
};

inline DsParams ds_m_step(const VerdictMatrix& v, const std::vector<double>& soft) {
    const std::size_t I = v.points(), K = v.detectors();
    DsParams p;
    double mass1 = 0.0;
    for (double s : soft) mass1 += s;
    const double mass0 = static_cast<double>(I) - mass1;
    p.prevalence = mass1 / static_cast<double>(I);
    p.confusion.assign(K, {{{0.0, 0.0}, {0.0, 0.0}}});
    for (std::size_t i = 0; i < I; ++i)
        for (std::size_t k = 0; k < K; ++k) {
            p.confusion[k][0][v.label(i, k)] += 1.0 - soft[i];
            p.confusion[k][1][v.label(i, k)] += soft[i];
        }
    for (std::size_t k = 0; k < K; ++k) {
        for (int j = 0; j < 2; ++j) {
            const double mass = j == 0 ? mass0 : mass1;
            if (mass > 0.0) {
                p.confusion[k][j][0] /= mass;
                p.confusion[k][j][1] /= mass;
            } else {
                p.confusion[k][j] = {0.5, 0.5};
            }
        }
    }
    return p;
}

// Joint probabilities P(t_i = j, c_i) under the parameters.
inline std::array<double, 2> ds_joint(const VerdictMatrix& v, const DsParams& p, std::size_t i) {
    std::array<double, 2> joint{1.0 - p.prevalence, p.prevalence};
    for (std::size_t k = 0; k < v.detectors(); ++k)
        for (int j = 0; j < 2; ++j) joint[j] *= p.confusion[k][j][v.label(i, k)];
    return joint;
}

} // namespace detail

inline DawidSkeneResult dawid_skene_em(const VerdictMatrix& verdicts, int max_iters = 100, double tol = 1e-8) {
    verdicts.validate();
    if (max_iters < 1) throw ConfigError("dawid_skene_em: max_iters must be positive");
    if (verdicts.detectors() < 2)
        spdlog::warn("Dawid-Skene with a single detector is not identifiable");
    const std::size_t I = verdicts.points();

    std::vector<double> soft(I);
    const auto mv = majority_vote(verdicts);
    for (std::size_t i = 0; i < I; ++i) soft[i] = mv[i];

    DawidSkeneResult r;
    detail::DsParams params;
    for (r.iterations = 1; r.iterations <= max_iters; ++r.iterations) {
        params = detail::ds_m_step(verdicts, soft);
        double ll = 0.0;
        double change = 0.0;
        for (std::size_t i = 0; i < I; ++i) {
            const auto joint = detail::ds_joint(verdicts, params, i);
            const double total = joint[0] + joint[1];
            ll += std::log(total);
            const double next = total > 0.0 ? joint[1] / total : soft[i];
            change = std::max(change, std::abs(next - soft[i]));
            soft[i] = next;
        }
        r.log_likelihood.push_back(ll);
        if (change < tol) {
            r.converged = true;
            break;
        }
    }
    r.iterations = std::min(r.iterations, max_iters);

    r.p_anomaly = soft;
    r.labels.resize(I);
    for (std::size_t i = 0; i < I; ++i) r.labels[i] = soft[i] > 0.5 ? kAnomaly : kNormal;
    r.confusion = params.confusion;
    r.prevalence = params.prevalence;
    for (const auto& c : r.confusion) {
        r.false_positive_rate.push_back(c[0][1]);
        r.false_negative_rate.push_back(c[1][0]);
    }
    return r;
}

} // namespace bayescombine

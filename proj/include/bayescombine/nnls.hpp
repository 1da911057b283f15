#pragma once

// Lawson-Hanson active-set solver for min ||A w - b||^2 subject to w >= 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "bayescombine/error.hpp"

namespace bayescombine {

struct NnlsFit {
    std::vector<double> weights;
    double residual_norm = 0.0;
    int iterations = 0;
};

struct NnlsOptions {
    // Dual-feasibility tolerance relative to ||A||_F * ||b||.
    double tolerance = 1e-13;
    int max_iterations = 0; // 0 -> 3 * columns
};

namespace detail {

// Minimum-norm least squares restricted to the columns flagged in `passive`.
inline Eigen::VectorXd restricted_lstsq(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                        const std::vector<bool>& passive) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        if (passive[j]) cols.push_back(j);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(a.cols());
    if (cols.empty()) return full;
    Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = a.col(cols[c]);
    Eigen::VectorXd s = sub.completeOrthogonalDecomposition().solve(b);
    for (std::size_t c = 0; c < cols.size(); ++c) full[cols[c]] = s[static_cast<Eigen::Index>(c)];
    return full;
}

} // namespace detail

inline NnlsFit nnls(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets,
                    const NnlsOptions& options = {}) {
    const Eigen::Index n = design.rows();
    const Eigen::Index d = design.cols();
    if (n < 1 || d < 1) throw ConfigError("nnls: empty design matrix");
    if (targets.size() != n) throw ConfigError("nnls: target length does not match design rows");
    if (!design.allFinite() || !targets.allFinite()) throw ConfigError("nnls: non-finite input");

    const double scale = std::max(design.norm() * targets.norm(), std::numeric_limits<double>::min());
    const double tol = options.tolerance * scale;
    const int max_outer = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(3 * d);

    std::vector<bool> passive(static_cast<std::size_t>(d), false);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd w = design.transpose() * (targets - design * x);

    int outer = 0;
    for (; outer < max_outer; ++outer) {
        Eigen::Index best = -1;
        double best_w = tol;
        for (Eigen::Index j = 0; j < d; ++j) {
            if (!passive[j] && w[j] > best_w) {
                best_w = w[j];
                best = j;
            }
        }
        if (best < 0) break;
        passive[best] = true;

        Eigen::VectorXd s = detail::restricted_lstsq(design, targets, passive);
        // Inner loop: step back toward feasibility until every passive entry is positive.
        for (Eigen::Index guard = 0; guard <= d; ++guard) {
            double alpha = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < d; ++j)
                if (passive[j] && s[j] <= 0.0) alpha = std::min(alpha, x[j] / (x[j] - s[j]));
            if (!std::isfinite(alpha)) break;
            x += alpha * (s - x);
            const double zero_tol = 1e-14 * std::max(1.0, x.cwiseAbs().maxCoeff());
            for (Eigen::Index j = 0; j < d; ++j) {
                if (passive[j] && x[j] <= zero_tol) {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
            s = detail::restricted_lstsq(design, targets, passive);
        }
        x = s;
        for (Eigen::Index j = 0; j < d; ++j)
            if (!passive[j]) x[j] = 0.0;
        w = design.transpose() * (targets - design * x);
    }

    NnlsFit fit;
    fit.weights.assign(x.data(), x.data() + d);
    for (double& v : fit.weights) v = std::max(v, 0.0);
    const Eigen::Map<const Eigen::VectorXd> xw(fit.weights.data(), d);
    fit.residual_norm = (targets - design * xw).norm();
    fit.iterations = outer;
    return fit;
}

// Largest violation of the NNLS optimality conditions: negative weights,
// nonzero gradient on free weights, negative gradient on active ones.
inline double nnls_kkt_residual(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets,
                                const std::vector<double>& weights) {
    const Eigen::Map<const Eigen::VectorXd> x(weights.data(), static_cast<Eigen::Index>(weights.size()));
    const Eigen::VectorXd grad = design.transpose() * (design * x - targets);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        worst = std::max(worst, -x[j]);
        if (x[j] > 0.0)
            worst = std::max(worst, std::abs(grad[j]));
        else
            worst = std::max(worst, -grad[j]);
    }
    return worst;
}

} // namespace bayescombine

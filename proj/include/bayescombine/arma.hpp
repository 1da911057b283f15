#pragma once

// ARMA(p,q) fitting by conditional sum of squares, one-step forecasting, and
// the residual-based ARMA detector.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "bayescombine/error.hpp"
#include "bayescombine/timeseries.hpp"
#include "bayescombine/verdict.hpp"

namespace bayescombine {

struct ArmaModel {
    double intercept = 0.0;
    std::vector<double> ar; // phi_1..phi_p
    std::vector<double> ma; // theta_1..theta_q
    double sigma2 = 1.0;    // innovation variance

    std::size_t p() const noexcept { return ar.size(); }
    std::size_t q() const noexcept { return ma.size(); }
};

class ArmaConvergenceError : public Error {
public:
    ArmaConvergenceError(const std::string& what, ArmaModel best)
        : Error(what), best_(std::move(best)) {}
    const ArmaModel& best_iterate() const noexcept { return best_; }

private:
    ArmaModel best_;
};

// Lagged data for a forecast; the most recent entry is last.
struct ArmaHistory {
    std::span<const double> values;
    std::span<const double> innovations;
};

// c + sum phi_i y_{t-i} + sum theta_i e_{t-i}; the current innovation is
// unobservable and contributes 0.
inline double arma_forecast(const ArmaModel& model, const ArmaHistory& history) {
    if (history.values.size() < model.p() || history.innovations.size() < model.q())
        throw InsufficientDataError("arma_forecast: history shorter than model order");
    double f = model.intercept;
    const std::size_t nv = history.values.size();
    const std::size_t ne = history.innovations.size();
    for (std::size_t i = 0; i < model.p(); ++i) f += model.ar[i] * history.values[nv - 1 - i];
    for (std::size_t i = 0; i < model.q(); ++i) f += model.ma[i] * history.innovations[ne - 1 - i];
    return f;
}

// All roots of 1 - c_1 z - ... - c_k z^k lie outside the unit circle,
// i.e. the companion matrix of (c_1..c_k) has spectral radius < 1.
inline bool roots_outside_unit_circle(std::span<const double> coeffs) {
    const auto k = static_cast<Eigen::Index>(coeffs.size());
    if (k == 0) return true;
    if (k == 1) return std::abs(coeffs[0]) < 1.0;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) companion(0, i) = coeffs[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 1; i < k; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    if (solver.info() != Eigen::Success) return false;
    return solver.eigenvalues().cwiseAbs().maxCoeff() < 1.0;
}

inline bool is_stationary(const ArmaModel& m) { return roots_outside_unit_circle(m.ar); }

inline bool is_invertible(const ArmaModel& m) {
    std::vector<double> neg(m.ma.size());
    std::transform(m.ma.begin(), m.ma.end(), neg.begin(), [](double t) { return -t; });
    return roots_outside_unit_circle(neg);
}

// Conditional innovations: e_t = 0 for t < max(p,q), then
// e_t = y_t - forecast(history up to t-1).
inline std::vector<double> arma_innovations(const ArmaModel& model, std::span<const double> values) {
    const std::size_t start = std::max(model.p(), model.q());
    std::vector<double> e(values.size(), 0.0);
    for (std::size_t t = start; t < values.size(); ++t) {
        double f = model.intercept;
        for (std::size_t i = 0; i < model.p(); ++i) f += model.ar[i] * values[t - 1 - i];
        for (std::size_t i = 0; i < model.q(); ++i) f += model.ma[i] * e[t - 1 - i];
        e[t] = values[t] - f;
    }
    return e;
}

struct ArmaFitOptions {
    int max_evaluations = 20000;
    double tolerance = 1e-10; // relative spread of simplex objective values
    int restarts = 2;
};

namespace detail {

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    bool converged = false;
    int evaluations = 0;
};

template <typename F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> start, double step, double tol,
                             int max_evals) {
    const std::size_t n = start.size();
    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> fx(n + 1);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step;
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        return f(x);
    };
    for (std::size_t i = 0; i <= n; ++i) fx[i] = eval(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    bool converged = false;
    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
        if (std::isfinite(fx[worst]) &&
            std::abs(fx[worst] - fx[best]) <= tol * (std::abs(fx[best]) + tol)) {
            converged = true;
            break;
        }
        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i)
            if (i != worst)
                for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
        auto along = [&](double coef) {
            std::vector<double> x(n);
            for (std::size_t j = 0; j < n; ++j) x[j] = centroid[j] + coef * (simplex[worst][j] - centroid[j]);
            return x;
        };
        auto xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < fx[best]) {
            auto xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = std::move(xe);
                fx[worst] = fe;
            } else {
                simplex[worst] = std::move(xr);
                fx[worst] = fr;
            }
        } else if (fr < fx[second]) {
            simplex[worst] = std::move(xr);
            fx[worst] = fr;
        } else {
            const bool outside = fr < fx[worst];
            auto xc = along(outside ? -0.5 : 0.5);
            const double fc = eval(xc);
            if (fc < (outside ? fr : fx[worst])) {
                simplex[worst] = std::move(xc);
                fx[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t j = 0; j < n; ++j)
                        simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
                    fx[i] = eval(simplex[i]);
                }
            }
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(fx.begin(), fx.end()) - fx.begin());
    return {simplex[best], fx[best], converged, evals};
}

inline ArmaModel unpack_arma(const std::vector<double>& x, std::size_t p, std::size_t q) {
    ArmaModel m;
    m.intercept = x[0];
    m.ar.assign(x.begin() + 1, x.begin() + 1 + static_cast<std::ptrdiff_t>(p));
    m.ma.assign(x.begin() + 1 + static_cast<std::ptrdiff_t>(p), x.end());
    (void)q;
    return m;
}

// Mean squared conditional innovation; +inf outside the stationary and
// invertible region.
inline double css_objective(const ArmaModel& m, std::span<const double> values) {
    if (!is_stationary(m) || !is_invertible(m)) return std::numeric_limits<double>::infinity();
    const auto e = arma_innovations(m, values);
    const std::size_t start = std::max(m.p(), m.q());
    double ss = 0.0;
    for (std::size_t t = start; t < e.size(); ++t) ss += e[t] * e[t];
    const double mse = ss / static_cast<double>(e.size() - start);
    return std::isfinite(mse) ? mse : std::numeric_limits<double>::infinity();
}

// Least-squares AR(p) regression with intercept, shrunk into the stationary
// region. Starting point for the simplex search.
inline std::vector<double> ar_starting_point(std::span<const double> y, std::size_t p, std::size_t q) {
    std::vector<double> x(1 + p + q, 0.0);
    if (p == 0) {
        x[0] = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
        return x;
    }
    const auto rows = static_cast<Eigen::Index>(y.size() - p);
    Eigen::MatrixXd a(rows, static_cast<Eigen::Index>(p + 1));
    Eigen::VectorXd b(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t t = static_cast<std::size_t>(r) + p;
        a(r, 0) = 1.0;
        for (std::size_t i = 0; i < p; ++i) a(r, static_cast<Eigen::Index>(i + 1)) = y[t - 1 - i];
        b[r] = y[t];
    }
    const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(b);
    for (Eigen::Index i = 0; i <= static_cast<Eigen::Index>(p); ++i) x[static_cast<std::size_t>(i)] = sol[i];
    ArmaModel probe = unpack_arma(x, p, q);
    for (int k = 0; k < 50 && !is_stationary(probe); ++k) {
        for (auto& phi : probe.ar) phi *= 0.9;
        std::copy(probe.ar.begin(), probe.ar.end(), x.begin() + 1);
    }
    return x;
}

} // namespace detail

// Conditional-sum-of-squares fit. The series is standardized internally and
// the parameters mapped back, so the intercept and variance are in series
// units.
inline ArmaModel fit_arma(std::span<const double> values, std::size_t p, std::size_t q,
                          const ArmaFitOptions& options = {}) {
    const std::size_t needed = 10 * (p + q + 1);
    if (values.size() < needed)
        throw InsufficientDataError("ARMA(" + std::to_string(p) + "," + std::to_string(q) + ") needs " +
                                    std::to_string(needed) + " points, got " +
                                    std::to_string(values.size()));
    const Moments mom = sample_moments(values);
    if (is_degenerate_scale(mom, values)) throw DegenerateError("ARMA fit: zero-variance series");

    std::vector<double> y(values.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = (values[i] - mom.mean) / mom.stddev;

    auto objective = [&](const std::vector<double>& x) {
        return detail::css_objective(detail::unpack_arma(x, p, q), y);
    };

    auto x = detail::ar_starting_point(y, p, q);
    int budget = options.max_evaluations;
    detail::NelderMeadResult result{x, objective(x), false, 0};
    double step = 0.1;
    for (int round = 0; round <= options.restarts && budget > 0; ++round) {
        auto r = detail::nelder_mead(objective, result.x, step, options.tolerance, budget);
        budget -= r.evaluations;
        const bool improved = r.value < result.value - options.tolerance * std::abs(result.value);
        result = r.value <= result.value ? r : result;
        result.converged = r.converged;
        if (r.converged && !improved && round > 0) break;
        step *= 0.5;
    }

    ArmaModel fitted = detail::unpack_arma(result.x, p, q);
    double ar_sum = 0.0;
    for (double phi : fitted.ar) ar_sum += phi;
    fitted.intercept = mom.mean * (1.0 - ar_sum) + mom.stddev * fitted.intercept;
    fitted.sigma2 = result.value * mom.stddev * mom.stddev;

    if (!result.converged || !std::isfinite(result.value))
        throw ArmaConvergenceError("ARMA fit did not converge within " +
                                       std::to_string(options.max_evaluations) + " evaluations",
                                   fitted);
    if (!(fitted.sigma2 > 0.0)) throw DegenerateError("ARMA fit: zero innovation variance");
    return fitted;
}

inline ArmaModel fit_arma(const LabeledSeries& series, std::size_t p, std::size_t q,
                          const ArmaFitOptions& options = {}) {
    return fit_arma(series.values(), p, q, options);
}

struct ArmaParams {
    std::size_t p = 2;
    std::size_t q = 1;
    ArmaFitOptions fit;
};

// Fits on the whole series, then scores each point by its one-step
// innovation y_t - forecast_t. The first p+q points are warm-up.
inline std::vector<DetectorVerdict> arma_detector(std::span<const double> values,
                                                  const ArmaParams& params = {},
                                                  const ThresholdPolicy& policy = {}) {
    const auto model = fit_arma(values, params.p, params.q, params.fit);
    const auto residuals = arma_innovations(model, values);
    const std::size_t warmup = std::max(params.p + params.q, std::max(params.p, params.q));
    return score_verdicts(residuals, warmup, policy, max_abs_value(values));
}

inline std::vector<DetectorVerdict> arma_detector(const LabeledSeries& series,
                                                  const ArmaParams& params = {},
                                                  const ThresholdPolicy& policy = {}) {
    return arma_detector(series.values(), params, policy);
}

} // namespace bayescombine

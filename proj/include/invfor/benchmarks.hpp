#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "invfor/errors.hpp"
#include "invfor/estimation.hpp"

namespace invfor {

/// Naive baseline: the forecast for hour t is the observation at t-1.
/// Returns forecasts for t = 1 .. n-1.
inline std::vector<double> persistence_forecast(std::span<const double> loads) {
    if (loads.size() < 2) throw InsufficientHistory("persistence needs at least two observations");
    return std::vector<double>(loads.begin(), loads.end() - 1);
}

/// Autoregressive moving-average model with exogenous regressors:
/// x_t = mu + sum_p phi_p x_{t-p} + sum_r gamma_r Z_{r,t} + sum_q theta_q e_{t-q} + e_t.
struct ArmaxModel {
    double mu = 0.0;
    std::vector<double> phi;
    std::vector<double> gamma;
    std::vector<double> theta;
    double sigma2 = 0.0;
};

namespace detail {

// OLS via rank-revealing QR; throws SingularDesign on collinear columns.
inline Eigen::VectorXd ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols()) throw SingularDesign("collinear regression design");
    return qr.solve(y);
}

inline std::size_t armax_warmup(int P, int Q, int long_ar) {
    std::size_t w = static_cast<std::size_t>(std::max(P, 0));
    if (Q > 0) w = std::max(w, static_cast<std::size_t>(long_ar + Q));
    return w;
}

inline int armax_long_ar(int P, int Q) { return std::max({P + Q, 10}); }

} // namespace detail

/// Fits the ARMAX coefficients.  Q = 0 is plain OLS on the lagged design.
/// Q > 0 uses the two-stage method: a long autoregression supplies residual
/// estimates, which then enter the final regression as the moving-average
/// columns.  `sample_start` pins the estimation sample (observations before
/// it only feed lags), so order-selection candidates stay comparable.
inline ArmaxModel fit_armax(std::span<const double> loads, const RegressorMatrix& Z, int P, int Q,
                            std::size_t sample_start = 0) {
    if (P < 0 || Q < 0) throw ConfigError("ARMAX orders must be nonnegative");
    const std::size_t T = loads.size();
    if (Z.regressors > 0 && Z.hours != T)
        throw InsufficientHistory("load series and regressor matrix disagree");
    const std::size_t R = Z.regressors;
    const int L = detail::armax_long_ar(P, Q);
    const std::size_t warm = std::max(sample_start, detail::armax_warmup(P, Q, L));
    const std::size_t k = 1 + static_cast<std::size_t>(P) + R + static_cast<std::size_t>(Q);
    if (T <= warm + k) throw InsufficientHistory("series too short for the requested ARMAX orders");
    const std::size_t rows = T - warm;

    // stage 1 (only for Q > 0): residuals of a long autoregression
    std::vector<double> resid(T, 0.0);
    if (Q > 0) {
        const std::size_t lwarm = static_cast<std::size_t>(L);
        if (T <= lwarm + static_cast<std::size_t>(L) + R + 1)
            throw InsufficientHistory("series too short for the long autoregression stage");
        const std::size_t lrows = T - lwarm;
        Eigen::MatrixXd X(lrows, 1 + static_cast<std::size_t>(L) + R);
        Eigen::VectorXd y(lrows);
        for (std::size_t i = 0; i < lrows; ++i) {
            const std::size_t t = lwarm + i;
            std::size_t c = 0;
            X(i, c++) = 1.0;
            for (int p = 1; p <= L; ++p) X(i, c++) = loads[t - static_cast<std::size_t>(p)];
            for (std::size_t r = 0; r < R; ++r) X(i, c++) = Z.at(r, t);
            y(i) = loads[t];
        }
        const Eigen::VectorXd beta = detail::ols(X, y);
        for (std::size_t i = 0; i < lrows; ++i) {
            const std::size_t t = lwarm + i;
            resid[t] = y(i) - X.row(i).dot(beta);
        }
    }

    Eigen::MatrixXd X(rows, k);
    Eigen::VectorXd y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t t = warm + i;
        std::size_t c = 0;
        X(i, c++) = 1.0;
        for (int p = 1; p <= P; ++p) X(i, c++) = loads[t - static_cast<std::size_t>(p)];
        for (std::size_t r = 0; r < R; ++r) X(i, c++) = Z.at(r, t);
        for (int q = 1; q <= Q; ++q) X(i, c++) = resid[t - static_cast<std::size_t>(q)];
        y(i) = loads[t];
    }
    const Eigen::VectorXd beta = detail::ols(X, y);

    ArmaxModel model;
    std::size_t c = 0;
    model.mu = beta(c++);
    for (int p = 0; p < P; ++p) model.phi.push_back(beta(c++));
    for (std::size_t r = 0; r < R; ++r) model.gamma.push_back(beta(c++));
    for (int q = 0; q < Q; ++q) model.theta.push_back(beta(c++));
    double rss = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double e = y(i) - X.row(i).dot(beta);
        rss += e * e;
    }
    model.sigma2 = rss / static_cast<double>(rows);
    return model;
}

/// One-step forecasts for hours [from, to) of the series.  Residuals for the
/// moving-average terms are reconstructed recursively over the available
/// history (zero before enough observations exist).
inline std::vector<double> armax_one_step(const ArmaxModel& model, std::span<const double> loads,
                                          const RegressorMatrix& Z, std::size_t from, std::size_t to) {
    const int P = static_cast<int>(model.phi.size());
    const int Q = static_cast<int>(model.theta.size());
    const std::size_t R = model.gamma.size();
    if (R > 0 && Z.regressors != R) throw ArityMismatch("regressor arity mismatch in ARMAX forecast");
    if (to > loads.size() + 1 || from > to) throw InsufficientHistory("forecast range outside series");

    auto predict = [&](std::size_t t, const std::vector<double>& resid) {
        double f = model.mu;
        for (int p = 1; p <= P; ++p) f += model.phi[static_cast<std::size_t>(p - 1)] * loads[t - static_cast<std::size_t>(p)];
        for (std::size_t r = 0; r < R; ++r) f += model.gamma[r] * Z.at(r, t);
        for (int q = 1; q <= Q; ++q) {
            if (t >= static_cast<std::size_t>(q))
                f += model.theta[static_cast<std::size_t>(q - 1)] * resid[t - static_cast<std::size_t>(q)];
        }
        return f;
    };

    std::vector<double> resid(loads.size(), 0.0);
    const std::size_t start = static_cast<std::size_t>(std::max(P, Q));
    if (Q > 0) {
        for (std::size_t t = start; t < loads.size(); ++t) resid[t] = loads[t] - predict(t, resid);
    }
    std::vector<double> out;
    out.reserve(to - from);
    for (std::size_t t = from; t < to; ++t) out.push_back(predict(t, resid));
    return out;
}

/// Grid search over (P, Q) minimizing the corrected Akaike criterion
/// AICc = T ln(RSS/T) + 2k + 2k(k+1)/(T-k-1) with k = P + Q + R + 1,
/// evaluated on the common sample all candidates can serve.  Lowest (P, Q)
/// lexicographically on ties.
inline std::pair<int, int> select_order_aicc(std::span<const double> loads, const RegressorMatrix& Z,
                                             int p_max, int q_max) {
    if (p_max < 0 || q_max < 0) throw ConfigError("empty order grid");
    std::size_t warm_max = 0;
    for (int P = 0; P <= p_max; ++P)
        for (int Q = 0; Q <= q_max; ++Q)
            warm_max = std::max(warm_max, detail::armax_warmup(P, Q, detail::armax_long_ar(P, Q)));

    double best = kInfinity;
    std::pair<int, int> best_pq{0, 0};
    bool found = false;
    for (int P = 0; P <= p_max; ++P) {
        for (int Q = 0; Q <= q_max; ++Q) {
            const ArmaxModel model = fit_armax(loads, Z, P, Q, warm_max);
            const double Tn = static_cast<double>(loads.size() - warm_max);
            const double k = static_cast<double>(P + Q + 1) + static_cast<double>(Z.regressors);
            if (Tn - k - 1.0 <= 0.0) continue;
            const double rss = model.sigma2 * Tn;
            const double aicc = Tn * std::log(std::max(rss / Tn, 1e-300)) + 2.0 * k +
                                2.0 * k * (k + 1.0) / (Tn - k - 1.0);
            if (!found || aicc < best) {
                found = true;
                best = aicc;
                best_pq = {P, Q};
            }
        }
    }
    if (!found) throw InsufficientHistory("no ARMAX order fits the sample");
    return best_pq;
}

/// Error metrics of a forecast series.
struct MetricsReport {
    double nrmse = 0.0;
    double smape = 0.0;
    double rmse = 0.0;
};

inline double rmse(std::span<const double> forecast, std::span<const double> actual) {
    if (forecast.size() != actual.size() || forecast.empty())
        throw ArityMismatch("metric inputs must have equal nonzero length");
    double sq = 0.0;
    for (std::size_t t = 0; t < forecast.size(); ++t) {
        const double e = forecast[t] - actual[t];
        sq += e * e;
    }
    return std::sqrt(sq / static_cast<double>(forecast.size()));
}

/// Root-mean-square error normalized by the range of the actuals over the
/// evaluation window.
inline double nrmse(std::span<const double> forecast, std::span<const double> actual) {
    const double r = rmse(forecast, actual);
    const auto [lo, hi] = std::minmax_element(actual.begin(), actual.end());
    const double range = *hi - *lo;
    if (range == 0.0) throw ZeroRange("constant actual series has no range to normalize by");
    return r / range;
}

/// Symmetric mean absolute percentage error with denominator
/// (|forecast| + |actual|) / 2.  Hours where both values are zero are
/// skipped; the count of skipped hours is reported through `skipped`.
inline double smape(std::span<const double> forecast, std::span<const double> actual,
                    std::size_t* skipped = nullptr) {
    if (forecast.size() != actual.size() || forecast.empty())
        throw ArityMismatch("metric inputs must have equal nonzero length");
    double acc = 0.0;
    std::size_t used = 0, skip = 0;
    for (std::size_t t = 0; t < forecast.size(); ++t) {
        const double denom = (std::abs(forecast[t]) + std::abs(actual[t])) / 2.0;
        if (denom == 0.0) {
            ++skip;
            continue;
        }
        acc += std::abs(forecast[t] - actual[t]) / denom;
        ++used;
    }
    if (skipped) *skipped = skip;
    return used == 0 ? 0.0 : acc / static_cast<double>(used);
}

inline MetricsReport compute_metrics(std::span<const double> forecast, std::span<const double> actual) {
    MetricsReport m;
    m.rmse = rmse(forecast, actual);
    m.nrmse = nrmse(forecast, actual);
    m.smape = smape(forecast, actual);
    return m;
}

} // namespace invfor

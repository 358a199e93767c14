#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "invfor/forward_model.hpp"
#include "invfor/lp.hpp"
#include "invfor/model.hpp"
#include "invfor/series.hpp"

namespace invfor {

/// Ordered regressor definitions: hour-of-day indicators, ambient
/// temperature, solar irradiance, lagged load, lagged price.  The
/// contemporaneous price is never a regressor; it enters only through the
/// reconstruction problem's objective.
struct RegressorSpec {
    int hour_indicators = 24;  // number of hour-of-day bins; 0 disables, must divide 24
    bool ambient_temperature = true;
    bool solar_irradiance = true;
    std::vector<int> load_lags;
    std::vector<int> price_lags;

    void validate() const {
        if (hour_indicators < 0 || (hour_indicators > 0 && 24 % hour_indicators != 0))
            throw ConfigError("hour_indicators must be 0 or a divisor of 24");
        for (int lag : load_lags)
            if (lag < 1) throw ConfigError("load lags must be >= 1");
        for (int lag : price_lags)
            if (lag < 1) throw ConfigError("price lags must be >= 1 (the hour-t price is not a regressor)");
    }

    std::size_t count() const {
        return static_cast<std::size_t>(hour_indicators) + (ambient_temperature ? 1 : 0) +
               (solar_irradiance ? 1 : 0) + load_lags.size() + price_lags.size();
    }

    int max_lag() const {
        int m = 0;
        for (int lag : load_lags) m = std::max(m, lag);
        for (int lag : price_lags) m = std::max(m, lag);
        return m;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (int h = 0; h < hour_indicators; ++h) out.push_back("hour_" + std::to_string(h));
        if (ambient_temperature) out.push_back("temp_ambient");
        if (solar_irradiance) out.push_back("solar");
        for (int lag : load_lags) out.push_back("load_lag_" + std::to_string(lag));
        for (int lag : price_lags) out.push_back("price_lag_" + std::to_string(lag));
        return out;
    }
};

/// Row-major regressor matrix over the usable suffix of a table (the first
/// max_lag hours only feed lagged columns).
struct RegressorMatrix {
    std::size_t regressors = 0;
    std::size_t hours = 0;
    std::size_t offset = 0;  // first usable index in the source table
    std::vector<double> data;

    double at(std::size_t r, std::size_t t) const { return data[r * hours + t]; }

    std::vector<double> column(std::size_t t) const {
        std::vector<double> out(regressors);
        for (std::size_t r = 0; r < regressors; ++r) out[r] = at(r, t);
        return out;
    }

    RegressorMatrix slice(std::size_t from, std::size_t len) const {
        if (from + len > hours) throw InsufficientHistory("regressor slice beyond matrix end");
        RegressorMatrix out;
        out.regressors = regressors;
        out.hours = len;
        out.offset = offset + from;
        out.data.resize(regressors * len);
        for (std::size_t r = 0; r < regressors; ++r)
            for (std::size_t t = 0; t < len; ++t) out.data[r * len + t] = at(r, from + t);
        return out;
    }
};

inline RegressorMatrix build_regressors(const TimeSeriesTable& table, const RegressorSpec& spec) {
    spec.validate();
    const int max_lag = spec.max_lag();
    if (table.size() <= static_cast<std::size_t>(max_lag))
        throw InsufficientHistory("table shorter than the maximal lag");
    if (!spec.load_lags.empty() && !table.has_load())
        throw InsufficientHistory("load lags requested but the table has no load column");

    RegressorMatrix Z;
    Z.regressors = spec.count();
    Z.offset = static_cast<std::size_t>(max_lag);
    Z.hours = table.size() - Z.offset;
    Z.data.assign(Z.regressors * Z.hours, 0.0);

    std::size_t r = 0;
    if (spec.hour_indicators > 0) {
        const int span = 24 / spec.hour_indicators;
        for (std::size_t t = 0; t < Z.hours; ++t) {
            const int bin = table.hour_of_day(Z.offset + t) / span;
            Z.data[(r + static_cast<std::size_t>(bin)) * Z.hours + t] = 1.0;
        }
        r += static_cast<std::size_t>(spec.hour_indicators);
    }
    if (spec.ambient_temperature) {
        for (std::size_t t = 0; t < Z.hours; ++t) Z.data[r * Z.hours + t] = table.temp_ambient[Z.offset + t];
        ++r;
    }
    if (spec.solar_irradiance) {
        for (std::size_t t = 0; t < Z.hours; ++t) Z.data[r * Z.hours + t] = table.solar[Z.offset + t];
        ++r;
    }
    for (int lag : spec.load_lags) {
        for (std::size_t t = 0; t < Z.hours; ++t)
            Z.data[r * Z.hours + t] = table.load[Z.offset + t - static_cast<std::size_t>(lag)];
        ++r;
    }
    for (int lag : spec.price_lags) {
        for (std::size_t t = 0; t < Z.hours; ++t)
            Z.data[r * Z.hours + t] = table.price[Z.offset + t - static_cast<std::size_t>(lag)];
        ++r;
    }
    return Z;
}

/// Bound-estimation result: fitted coefficients with the slack split of
/// every training hour and the evaluated bound series.
struct FpSolution {
    BoundsCoefficients coefficients;
    std::vector<double> xi_hi_pos;  // load mass below the upper bound
    std::vector<double> xi_hi_neg;  // load mass above the upper bound
    std::vector<double> xi_lo_pos;  // load mass above the lower bound
    std::vector<double> xi_lo_neg;  // load mass below the lower bound
    std::vector<double> pmin;
    std::vector<double> pmax;
    double objective = 0.0;
};

namespace detail {

// Power-of-two column scales make the LP better conditioned without any
// rounding in the recovered coefficients.
inline std::vector<double> regressor_scales(const RegressorMatrix& Z) {
    std::vector<double> s(Z.regressors, 1.0);
    for (std::size_t r = 0; r < Z.regressors; ++r) {
        double mx = 0.0;
        for (std::size_t t = 0; t < Z.hours; ++t) mx = std::max(mx, std::abs(Z.at(r, t)));
        if (mx > 0.0) s[r] = std::exp2(std::ceil(std::log2(mx)));
    }
    return s;
}

} // namespace detail

/// Fits the affine load bounds by minimizing the K-weighted trade-off
/// between load mass kept inside the interval (cost 1-K on the feasibility
/// slacks) and mass left outside (cost K on the infeasibility slacks),
/// subject to pmin <= pmax and pmin >= 0.
///
/// With K = 0 the infeasibility slacks are free of charge and the bound
/// interval is only forced together by a second, lexicographic solve that
/// minimizes them at fixed primary cost; this realizes the collapse
/// pmin = pmax that defines the K = 0 model.
inline FpSolution fit_bounds(std::span<const double> loads, const RegressorMatrix& Z, double K) {
    if (K < 0.0 || K >= 1.0) throw ConfigError("K must lie in [0, 1)");
    const std::size_t T = loads.size();
    if (T == 0 || T != Z.hours) throw InsufficientHistory("load series and regressor matrix disagree");
    const std::size_t R = Z.regressors;
    const auto scale = detail::regressor_scales(Z);

    struct Vars {
        int mu_lo, mu_hi;
        std::vector<int> alpha_lo, alpha_hi;
        std::vector<int> hi_pos, hi_neg, lo_pos, lo_neg;
    };

    auto build = [&](bool lexi_stage, double primary_bound) {
        LpProblem lp;
        Vars v;
        v.mu_lo = lp.add_variable(-kInfinity, kInfinity);
        v.mu_hi = lp.add_variable(-kInfinity, kInfinity);
        for (std::size_t r = 0; r < R; ++r) {
            v.alpha_lo.push_back(lp.add_variable(-kInfinity, kInfinity));
            v.alpha_hi.push_back(lp.add_variable(-kInfinity, kInfinity));
        }
        const double c_pos = lexi_stage ? 0.0 : (1.0 - K);
        const double c_neg = lexi_stage ? 1.0 : K;
        for (std::size_t t = 0; t < T; ++t) {
            v.hi_pos.push_back(lp.add_variable(0.0, kInfinity, c_pos));
            v.hi_neg.push_back(lp.add_variable(0.0, kInfinity, c_neg));
            v.lo_pos.push_back(lp.add_variable(0.0, kInfinity, c_pos));
            v.lo_neg.push_back(lp.add_variable(0.0, kInfinity, c_neg));
        }
        for (std::size_t t = 0; t < T; ++t) {
            // pmax_t - x'_t = hi_pos - hi_neg
            std::vector<std::pair<int, double>> up{{v.mu_hi, 1.0},
                                                   {v.hi_pos[t], -1.0},
                                                   {v.hi_neg[t], 1.0}};
            // x'_t - pmin_t = lo_pos - lo_neg
            std::vector<std::pair<int, double>> low{{v.mu_lo, 1.0},
                                                    {v.lo_pos[t], 1.0},
                                                    {v.lo_neg[t], -1.0}};
            // pmin_t <= pmax_t
            std::vector<std::pair<int, double>> ord{{v.mu_lo, 1.0}, {v.mu_hi, -1.0}};
            // pmin_t >= 0 (a-priori sign constraint)
            std::vector<std::pair<int, double>> sign{{v.mu_lo, 1.0}};
            for (std::size_t r = 0; r < R; ++r) {
                const double z = Z.at(r, t) / scale[r];
                if (z == 0.0) continue;
                up.emplace_back(v.alpha_hi[r], z);
                low.emplace_back(v.alpha_lo[r], z);
                ord.emplace_back(v.alpha_lo[r], z);
                ord.emplace_back(v.alpha_hi[r], -z);
                sign.emplace_back(v.alpha_lo[r], z);
            }
            lp.add_constraint(std::move(up), Relation::Equal, loads[t]);
            lp.add_constraint(std::move(low), Relation::Equal, loads[t]);
            lp.add_constraint(std::move(ord), Relation::LessEqual, 0.0);
            lp.add_constraint(std::move(sign), Relation::GreaterEqual, 0.0);
        }
        if (lexi_stage) {
            std::vector<std::pair<int, double>> cap;
            for (std::size_t t = 0; t < T; ++t) {
                cap.emplace_back(v.hi_pos[t], 1.0);
                cap.emplace_back(v.lo_pos[t], 1.0);
            }
            lp.add_constraint(std::move(cap), Relation::LessEqual, primary_bound);
        }
        return std::make_pair(std::move(lp), std::move(v));
    };

    auto [lp, v] = build(false, 0.0);
    LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal)
        throw SolverFailure("bound estimation LP did not solve to optimality");

    if (K == 0.0) {
        // secondary objective: deflate the costless infeasibility slacks
        double primary = 0.0;
        for (std::size_t t = 0; t < T; ++t)
            primary += sol.primal[static_cast<std::size_t>(v.hi_pos[t])] +
                       sol.primal[static_cast<std::size_t>(v.lo_pos[t])];
        auto [lp2, v2] = build(true, primary + 1e-9 * (1.0 + std::abs(primary)));
        LpSolution sol2 = solve_lp(lp2);
        if (sol2.status != LpStatus::Optimal)
            throw SolverFailure("bound estimation tie-break LP did not solve to optimality");
        lp = std::move(lp2);
        v = std::move(v2);
        sol = std::move(sol2);
    }

    FpSolution fp;
    fp.coefficients.mu_lo = sol.primal[static_cast<std::size_t>(v.mu_lo)];
    fp.coefficients.mu_hi = sol.primal[static_cast<std::size_t>(v.mu_hi)];
    for (std::size_t r = 0; r < R; ++r) {
        fp.coefficients.alpha_lo.push_back(sol.primal[static_cast<std::size_t>(v.alpha_lo[r])] / scale[r]);
        fp.coefficients.alpha_hi.push_back(sol.primal[static_cast<std::size_t>(v.alpha_hi[r])] / scale[r]);
    }
    fp.xi_hi_pos.resize(T);
    fp.xi_hi_neg.resize(T);
    fp.xi_lo_pos.resize(T);
    fp.xi_lo_neg.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        fp.xi_hi_pos[t] = std::max(0.0, sol.primal[static_cast<std::size_t>(v.hi_pos[t])]);
        fp.xi_hi_neg[t] = std::max(0.0, sol.primal[static_cast<std::size_t>(v.hi_neg[t])]);
        fp.xi_lo_pos[t] = std::max(0.0, sol.primal[static_cast<std::size_t>(v.lo_pos[t])]);
        fp.xi_lo_neg[t] = std::max(0.0, sol.primal[static_cast<std::size_t>(v.lo_neg[t])]);
    }
    fp.pmin.resize(T);
    fp.pmax.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        double lo = fp.coefficients.mu_lo;
        double hi = fp.coefficients.mu_hi;
        for (std::size_t r = 0; r < R; ++r) {
            lo += fp.coefficients.alpha_lo[r] * Z.at(r, t);
            hi += fp.coefficients.alpha_hi[r] * Z.at(r, t);
        }
        fp.pmin[t] = lo;
        fp.pmax[t] = hi;
    }
    fp.objective = 0.0;
    for (std::size_t t = 0; t < T; ++t)
        fp.objective += (1.0 - K) * (fp.xi_hi_pos[t] + fp.xi_lo_pos[t]) +
                        K * (fp.xi_hi_neg[t] + fp.xi_lo_neg[t]);
    return fp;
}

/// Measured loads clipped into the fitted interval and split over the block
/// partition, blocks filled in sequential order starting with the first.
struct AdjustedLoads {
    std::vector<double> totals;  // clipped loads per hour
    std::vector<double> blocks;  // [b * hours + t]
    BlockPartition partition;

    double block(std::size_t b, std::size_t t) const { return blocks[b * partition.hours + t]; }
};

inline AdjustedLoads adjust_and_split(std::span<const double> loads, const FpSolution& fp,
                                      std::size_t blocks) {
    if (blocks < 2) throw ConfigError("block count must be at least 2");
    const std::size_t T = loads.size();
    if (T != fp.pmin.size()) throw InsufficientHistory("load series and fitted bounds disagree");

    AdjustedLoads out;
    out.partition.blocks = blocks;
    out.partition.hours = T;
    out.partition.widths.assign(blocks * T, 0.0);
    out.blocks.assign(blocks * T, 0.0);
    out.totals.resize(T);

    for (std::size_t t = 0; t < T; ++t) {
        const double pmin = std::max(0.0, fp.pmin[t]);
        const double pmax = std::max(pmin, fp.pmax[t]);
        const double width = (pmax - pmin) / static_cast<double>(blocks - 1);
        out.partition.widths[t] = pmin;
        for (std::size_t b = 1; b < blocks; ++b) out.partition.widths[b * T + t] = width;

        const double adjusted = std::clamp(loads[t], pmin, pmax);
        out.totals[t] = adjusted;
        double rem = adjusted;
        for (std::size_t b = 0; b < blocks && rem > 0.0; ++b) {
            const double take = std::min(out.partition.widths[b * T + t], rem);
            out.blocks[b * T + t] = take;
            rem -= take;
        }
        // pin the ascending-order block sum to the adjusted load exactly
        for (int pass = 0; pass < 3; ++pass) {
            double sum = 0.0;
            for (std::size_t b = 0; b < blocks; ++b) sum += out.blocks[b * T + t];
            const double diff = adjusted - sum;
            if (diff == 0.0) break;
            for (std::size_t b = blocks; b-- > 0;) {
                if (out.blocks[b * T + t] > 0.0 || (b == 0 && adjusted == 0.0)) {
                    out.blocks[b * T + t] += diff;
                    break;
                }
            }
        }
    }
    return out;
}

/// Marginal-utility estimation result: fitted coefficients, the per-hour
/// duality gaps, and the dual variables of the reconstruction problem.
struct OpSolution {
    UtilityCoefficients coefficients;
    std::vector<double> epsilon;
    std::vector<double> lambda_lo;
    std::vector<double> lambda_hi;
    std::vector<double> phi_lo;  // [b * hours + t]
    std::vector<double> phi_hi;  // [b * hours + t]
    double objective = 0.0;
};

/// Fits the marginal utilities by minimizing the total duality gap of the
/// reconstruction problems, subject to relaxed strong duality, dual
/// feasibility, the affine utility map, monotone block intercepts and the
/// first-block offset.  The affine map is substituted into the rows, so the
/// utility values never appear as explicit LP variables; the dual-
/// feasibility equations surface as inequality rows whose slack is the
/// lower block dual.
inline OpSolution fit_utilities(const AdjustedLoads& adjusted, const FpSolution& fp,
                                std::span<const double> prices, const RegressorMatrix& Z,
                                double first_block_offset = 200.0) {
    const std::size_t T = adjusted.totals.size();
    const std::size_t B = adjusted.partition.blocks;
    const std::size_t R = Z.regressors;
    if (T != Z.hours || T != prices.size() || T != fp.pmin.size())
        throw InsufficientHistory("utility estimation inputs disagree in length");
    const auto scale = detail::regressor_scales(Z);

    LpProblem lp;
    std::vector<int> eps(T), lam_lo(T), lam_hi(T);
    std::vector<int> phi_hi(B * T);
    std::vector<int> mu(B), alpha(R);
    for (std::size_t t = 0; t < T; ++t) eps[t] = lp.add_variable(0.0, kInfinity, 1.0);
    for (std::size_t t = 0; t < T; ++t) {
        lam_lo[t] = lp.add_variable(0.0, kInfinity);
        lam_hi[t] = lp.add_variable(0.0, kInfinity);
    }
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t) phi_hi[b * T + t] = lp.add_variable(0.0, kInfinity);
    for (std::size_t b = 0; b < B; ++b) mu[b] = lp.add_variable(-kInfinity, kInfinity);
    for (std::size_t r = 0; r < R; ++r) alpha[r] = lp.add_variable(-kInfinity, kInfinity);

    for (std::size_t t = 0; t < T; ++t) {
        const double pmin = std::max(0.0, fp.pmin[t]);
        const double pmax = std::max(pmin, fp.pmax[t]);
        const double xt = adjusted.totals[t];

        // relaxed strong duality: dual objective minus gap equals the
        // surplus of the adjusted load
        std::vector<std::pair<int, double>> sd;
        sd.emplace_back(lam_hi[t], pmax);
        sd.emplace_back(lam_lo[t], -pmin);
        for (std::size_t b = 0; b < B; ++b) {
            const double w = adjusted.partition.widths[b * T + t];
            if (w != 0.0) sd.emplace_back(phi_hi[b * T + t], w);
        }
        sd.emplace_back(eps[t], -1.0);
        for (std::size_t b = 0; b < B; ++b) {
            const double xb = adjusted.block(b, t);
            if (xb != 0.0) sd.emplace_back(mu[b], -xb);
        }
        for (std::size_t r = 0; r < R; ++r) {
            const double c = xt * (Z.at(r, t) / scale[r]);
            if (c != 0.0) sd.emplace_back(alpha[r], -c);
        }
        lp.add_constraint(std::move(sd), Relation::Equal, -prices[t] * xt);

        // dual feasibility per block; the row slack is the lower dual phi_lo
        for (std::size_t b = 0; b < B; ++b) {
            std::vector<std::pair<int, double>> df;
            df.emplace_back(phi_hi[b * T + t], 1.0);
            df.emplace_back(lam_hi[t], 1.0);
            df.emplace_back(lam_lo[t], -1.0);
            df.emplace_back(mu[b], -1.0);
            for (std::size_t r = 0; r < R; ++r) {
                const double z = Z.at(r, t) / scale[r];
                if (z != 0.0) df.emplace_back(alpha[r], -z);
            }
            lp.add_constraint(std::move(df), Relation::GreaterEqual, -prices[t]);
        }
    }
    for (std::size_t b = 1; b < B; ++b) {
        const double offset = b == 1 ? first_block_offset : 0.0;
        lp.add_constraint({{mu[b - 1], 1.0}, {mu[b], -1.0}}, Relation::GreaterEqual, offset);
    }

    LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal)
        throw SolverFailure("utility estimation LP did not solve to optimality");

    OpSolution op;
    for (std::size_t b = 0; b < B; ++b)
        op.coefficients.mu_u.push_back(sol.primal[static_cast<std::size_t>(mu[b])]);
    for (std::size_t r = 0; r < R; ++r)
        op.coefficients.alpha_u.push_back(sol.primal[static_cast<std::size_t>(alpha[r])] / scale[r]);
    op.epsilon.resize(T);
    op.lambda_lo.resize(T);
    op.lambda_hi.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        op.epsilon[t] = std::max(0.0, sol.primal[static_cast<std::size_t>(eps[t])]);
        op.lambda_lo[t] = std::max(0.0, sol.primal[static_cast<std::size_t>(lam_lo[t])]);
        op.lambda_hi[t] = std::max(0.0, sol.primal[static_cast<std::size_t>(lam_hi[t])]);
    }
    op.phi_hi.resize(B * T);
    op.phi_lo.resize(B * T);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
            const double g = std::max(0.0, sol.primal[static_cast<std::size_t>(phi_hi[b * T + t])]);
            op.phi_hi[b * T + t] = g;
            double u = op.coefficients.mu_u[b];
            for (std::size_t r = 0; r < R; ++r) u += op.coefficients.alpha_u[r] * Z.at(r, t);
            op.phi_lo[b * T + t] =
                std::max(0.0, g + op.lambda_hi[t] - op.lambda_lo[t] - (u - prices[t]));
        }
    }
    op.objective = sol.objective;
    return op;
}

/// A fully estimated forecasting model.
struct EstimatedModel {
    std::size_t blocks = 0;
    double k = 0.0;
    double first_block_offset = 200.0;
    RegressorSpec spec;
    BoundsCoefficients bounds;
    UtilityCoefficients utilities;
    std::uint64_t fingerprint = 0;  // of the training window
};

inline std::uint64_t training_fingerprint(std::span<const double> loads,
                                          std::span<const double> prices) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](double v) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        __builtin_memcpy(&bits, &v, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    for (double v : loads) mix(v);
    for (double v : prices) mix(v);
    return h;
}

/// End-to-end estimation over one training window: bounds, adjustment,
/// utilities.
inline EstimatedModel fit_model(std::span<const double> loads, std::span<const double> prices,
                                const RegressorMatrix& Z, const RegressorSpec& spec, double k,
                                std::size_t blocks, double first_block_offset = 200.0) {
    EstimatedModel model;
    model.blocks = blocks;
    model.k = k;
    model.first_block_offset = first_block_offset;
    model.spec = spec;
    const FpSolution fp = fit_bounds(loads, Z, k);
    const AdjustedLoads adj = adjust_and_split(loads, fp, blocks);
    const OpSolution op = fit_utilities(adj, fp, prices, Z, first_block_offset);
    model.bounds = fp.coefficients;
    model.utilities = op.coefficients;
    model.fingerprint = training_fingerprint(loads, prices);
    return model;
}

/// Cross-validation curve for the penalty parameter K.
struct CvResult {
    double best_k = 0.0;
    std::vector<std::pair<double, double>> curve;  // (K, validation RMSE), ascending in K
};

namespace detail {

template <class F>
void parallel_for(std::size_t n, F&& f) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const std::size_t workers = std::min<std::size_t>(hw, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) f(i);
        });
    for (auto& th : pool) th.join();
}

} // namespace detail

/// Grid search for K: fit on the training window, forecast one step ahead
/// over the validation window, record the RMSE.  Grid points are evaluated
/// concurrently and reduced in ascending K order; ties keep the lowest K.
inline CvResult cross_validate_k(const TimeSeriesTable& table, const RegressorSpec& spec,
                                 std::vector<double> k_grid, std::size_t train_hours,
                                 std::size_t validation_hours, std::size_t blocks,
                                 double first_block_offset = 200.0) {
    if (k_grid.empty()) throw ConfigError("empty K grid");
    std::sort(k_grid.begin(), k_grid.end());
    k_grid.erase(std::unique(k_grid.begin(), k_grid.end()), k_grid.end());
    for (double k : k_grid)
        if (k < 0.0 || k >= 1.0) throw ConfigError("K grid values must lie in [0, 1)");

    const RegressorMatrix Z = build_regressors(table, spec);
    if (train_hours + validation_hours > Z.hours)
        throw InsufficientHistory("table too short for the train/validation split");
    const std::span<const double> loads(table.load.data() + Z.offset, Z.hours);
    const std::span<const double> prices(table.price.data() + Z.offset, Z.hours);
    const RegressorMatrix Ztr = Z.slice(0, train_hours);

    std::vector<double> rmse(k_grid.size(), 0.0);
    std::vector<std::string> failures(k_grid.size());
    detail::parallel_for(k_grid.size(), [&](std::size_t i) {
        try {
            const EstimatedModel model = fit_model(loads.subspan(0, train_hours),
                                                   prices.subspan(0, train_hours), Ztr, spec,
                                                   k_grid[i], blocks, first_block_offset);
            double sq = 0.0;
            for (std::size_t v = train_hours; v < train_hours + validation_hours; ++v) {
                const auto z = Z.column(v);
                const double f = forecast_one_step(model.bounds, model.utilities, z, prices[v]);
                const double e = f - loads[v];
                sq += e * e;
            }
            rmse[i] = std::sqrt(sq / static_cast<double>(validation_hours));
        } catch (const Error& e) {
            failures[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < k_grid.size(); ++i)
        if (!failures[i].empty())
            throw SolverFailure("cross-validation failed at K=" + format_double(k_grid[i]) + ": " +
                                failures[i]);

    CvResult out;
    out.curve.reserve(k_grid.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < k_grid.size(); ++i) {
        out.curve.emplace_back(k_grid[i], rmse[i]);
        if (rmse[i] < rmse[best]) best = i;
    }
    out.best_k = k_grid[best];
    return out;
}

} // namespace invfor

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "invfor/errors.hpp"
#include "invfor/estimation.hpp"
#include "invfor/lp.hpp"
#include "invfor/random.hpp"
#include "invfor/series.hpp"

namespace invfor {

/// Indoor air, floor and tank-water temperature of one building.
struct BuildingState {
    double room = 0.0;
    double floor = 0.0;
    double water = 0.0;

    Eigen::Vector3d vec() const { return {room, floor, water}; }
    static BuildingState from(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
};

/// Ambient temperature and solar irradiance.
struct WeatherSeries {
    std::vector<double> ambient;
    std::vector<double> solar;
};

/// One building's heating dynamics and EMPC parameters.  Comfort bands are
/// filled in by the dataset builder according to the flex/no-flex mode.
struct BuildingParams {
    Eigen::Matrix3d A;
    Eigen::Vector3d B;
    Eigen::Matrix<double, 3, 2> E;  // columns: ambient, solar
    double x_max = 5.0;             // kW
    double rho = 100.0;             // comfort penalty per degree-hour
    std::vector<double> y_min;      // room comfort band, absolute hours
    std::vector<double> y_max;
};

inline double spectral_radius(const Eigen::Matrix3d& A) {
    Eigen::EigenSolver<Eigen::Matrix3d> es(A, false);
    double rho = 0.0;
    for (int i = 0; i < 3; ++i) rho = std::max(rho, std::abs(es.eigenvalues()[i]));
    return rho;
}

/// Documented default building.  The heat pump charges the water tank; the
/// tank heats the floor and room, which in turn leak to ambient.  The solar
/// gains on room and floor are 0.01 and 0.001 degrees per W/m2.
inline BuildingParams default_building() {
    BuildingParams p;
    p.A << 0.70, 0.15, 0.05,
           0.10, 0.80, 0.08,
           0.08, 0.02, 0.88;
    p.B << 0.0, 0.0, 3.0;
    p.E << 0.10, 0.01,
           0.02, 0.001,
           0.02, 0.0;
    p.x_max = 5.0;
    p.rho = 100.0;
    return p;
}

/// One step of the state-space model: y' = A y + B x + E z.
inline BuildingState state_step(const BuildingState& y, double x, double ambient, double solar,
                                const BuildingParams& params) {
    return BuildingState::from(params.A * y.vec() + params.B * x +
                               params.E * Eigen::Vector2d(ambient, solar));
}

/// Optimal consumption plan for one horizon window.
struct EmpcPlan {
    std::vector<double> consumption;    // per hour, kW
    std::vector<BuildingState> states;  // state reached after each hour
    std::vector<double> violations;     // comfort slack per hour, degrees
    double objective = 0.0;
};

/// Solves the economic MPC problem over one window: minimize energy cost
/// plus rho-weighted comfort violations, subject to the building dynamics,
/// 0 <= x <= x_max and the soft comfort band on room temperature.  All input
/// spans cover the same H hours; y_min/y_max apply to the state reached at
/// the end of each hour.
inline EmpcPlan empc_schedule(const BuildingParams& params, std::span<const double> prices,
                              std::span<const double> ambient, std::span<const double> solar,
                              std::span<const double> y_min, std::span<const double> y_max,
                              const BuildingState& y0) {
    const std::size_t H = prices.size();
    if (H == 0) throw ConfigError("EMPC horizon must be at least 1");
    if (ambient.size() != H || solar.size() != H || y_min.size() != H || y_max.size() != H)
        throw ArityMismatch("EMPC window spans disagree in length");

    LpProblem lp;
    std::vector<int> x(H), v(H);
    std::vector<std::array<int, 3>> y(H);
    for (std::size_t t = 0; t < H; ++t) x[t] = lp.add_variable(0.0, params.x_max, prices[t]);
    for (std::size_t t = 0; t < H; ++t) v[t] = lp.add_variable(0.0, kInfinity, params.rho);
    for (std::size_t t = 0; t < H; ++t)
        for (int s = 0; s < 3; ++s) y[t][static_cast<std::size_t>(s)] = lp.add_variable(-kInfinity, kInfinity);

    for (std::size_t t = 0; t < H; ++t) {
        const Eigen::Vector3d disturbance =
            params.E * Eigen::Vector2d(ambient[t], solar[t]) + (t == 0 ? (params.A * y0.vec()).eval()
                                                                       : Eigen::Vector3d::Zero().eval());
        for (int s = 0; s < 3; ++s) {
            std::vector<std::pair<int, double>> row{{y[t][static_cast<std::size_t>(s)], 1.0},
                                                    {x[t], -params.B[s]}};
            if (t > 0)
                for (int s2 = 0; s2 < 3; ++s2) row.emplace_back(y[t - 1][static_cast<std::size_t>(s2)], -params.A(s, s2));
            lp.add_constraint(std::move(row), Relation::Equal, disturbance[s]);
        }
        // room comfort band with slack
        lp.add_constraint({{y[t][0], 1.0}, {v[t], 1.0}}, Relation::GreaterEqual, y_min[t]);
        lp.add_constraint({{y[t][0], 1.0}, {v[t], -1.0}}, Relation::LessEqual, y_max[t]);
    }

    const LpSolution sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) throw SolverFailure("EMPC window did not solve to optimality");

    EmpcPlan plan;
    plan.objective = sol.objective;
    plan.consumption.resize(H);
    plan.violations.resize(H);
    plan.states.resize(H);
    for (std::size_t t = 0; t < H; ++t) {
        plan.consumption[t] = sol.primal[static_cast<std::size_t>(x[t])];
        plan.violations[t] = sol.primal[static_cast<std::size_t>(v[t])];
        plan.states[t] = {sol.primal[static_cast<std::size_t>(y[t][0])],
                          sol.primal[static_cast<std::size_t>(y[t][1])],
                          sol.primal[static_cast<std::size_t>(y[t][2])]};
    }
    return plan;
}

/// Fleet generation: every nonzero heat-transfer coefficient of A is
/// perturbed by a uniform zero-centered draw whose variance is `scale`
/// times the coefficient's magnitude (half-width sqrt(3 * scale * |a|)).
/// Draws that destabilize the dynamics are rejected and retried.
inline std::vector<BuildingParams> generate_population(const BuildingParams& base, std::size_t n,
                                                       double scale, std::uint64_t seed) {
    if (spectral_radius(base.A) >= 1.0) throw UnstableBase("base building dynamics are unstable");
    if (scale < 0.0) throw ConfigError("perturbation scale must be nonnegative");
    std::vector<BuildingParams> fleet;
    fleet.reserve(n);
    Rng rng(seed);
    for (std::size_t b = 0; b < n; ++b) {
        BuildingParams p = base;
        for (int attempt = 0;; ++attempt) {
            if (attempt > 1000) throw UnstableBase("could not draw a stable building");
            Eigen::Matrix3d A = base.A;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double a = base.A(i, j);
                    if (a == 0.0) continue;
                    const double half_width = std::sqrt(3.0 * scale * std::abs(a));
                    A(i, j) = a + rng.uniform(-half_width, half_width);
                }
            if (spectral_radius(A) < 1.0) {
                p.A = A;
                break;
            }
        }
        fleet.push_back(std::move(p));
    }
    return fleet;
}

enum class ComfortMode { Flex, NoFlex };

/// Comfort setpoint policy: constant setpoint with an optional night
/// setback over [night_start, night_end) hours of day.
struct ComfortPolicy {
    double setpoint = 21.0;
    double flex_halfwidth = 1.0;   // flex mode: setpoint +/- halfwidth
    double night_setback = 0.0;    // degrees subtracted during night hours
    int night_start = 0;
    int night_end = 6;
    double water_init = 35.0;
};

struct DatasetOptions {
    ComfortMode mode = ComfortMode::Flex;
    std::size_t horizon = 24;
    std::size_t warmup_hours = 48;
    ComfortPolicy policy;
    bool per_building_columns = false;
};

/// Simulates the fleet hour by hour under receding-horizon EMPC (re-solve
/// each hour, apply the first action) and aggregates consumption into the
/// load column.  The input table supplies price and weather; the final
/// `horizon` hours only feed lookahead and the first `warmup_hours` rows
/// are discarded, so the output covers size() - warmup - horizon hours.
inline TimeSeriesTable build_dataset(const std::vector<BuildingParams>& fleet,
                                     const TimeSeriesTable& inputs, const DatasetOptions& opts) {
    const std::size_t M = inputs.size();
    const std::size_t H = opts.horizon;
    if (H == 0) throw ConfigError("EMPC horizon must be at least 1");
    if (M <= opts.warmup_hours + H)
        throw InsufficientHistory("input series too short for warmup plus horizon");
    const std::size_t N = M - H;  // hours actually simulated

    // comfort bands over the whole span, shared by the fleet
    const double half = opts.mode == ComfortMode::Flex ? opts.policy.flex_halfwidth : 0.0;
    std::vector<double> ymin(M), ymax(M);
    for (std::size_t t = 0; t < M; ++t) {
        const int hod = inputs.hour_of_day(t);
        double sp = opts.policy.setpoint;
        if (opts.policy.night_setback != 0.0 && hod >= opts.policy.night_start && hod < opts.policy.night_end)
            sp -= opts.policy.night_setback;
        ymin[t] = sp - half;
        ymax[t] = sp + half;
    }

    std::vector<std::vector<double>> per_building(fleet.size());
    detail::parallel_for(fleet.size(), [&](std::size_t b) {
        const BuildingParams& params = fleet[b];
        std::vector<double> loads(N, 0.0);
        BuildingState y{opts.policy.setpoint, opts.policy.setpoint, opts.policy.water_init};
        for (std::size_t tau = 0; tau < N; ++tau) {
            auto window = [&](const std::vector<double>& v) {
                return std::span<const double>(v.data() + tau, H);
            };
            const EmpcPlan plan =
                empc_schedule(params, window(inputs.price), window(inputs.temp_ambient),
                              window(inputs.solar), window(ymin), window(ymax), y);
            const double applied = plan.consumption[0];
            loads[tau] = applied;
            y = state_step(y, applied, inputs.temp_ambient[tau], inputs.solar[tau], params);
        }
        per_building[b] = std::move(loads);
    });

    const std::size_t out_len = N - opts.warmup_hours;
    TimeSeriesTable out = inputs.slice(opts.warmup_hours, out_len);
    out.extra.clear();
    out.load.assign(out_len, 0.0);
    for (std::size_t b = 0; b < fleet.size(); ++b)
        for (std::size_t t = 0; t < out_len; ++t) out.load[t] += per_building[b][opts.warmup_hours + t];
    if (opts.per_building_columns)
        for (std::size_t b = 0; b < fleet.size(); ++b)
            out.extra.emplace_back("building_" + std::to_string(b),
                                   std::vector<double>(per_building[b].begin() + opts.warmup_hours,
                                                       per_building[b].begin() + opts.warmup_hours + out_len));
    return out;
}

/// Synthetic price and weather inputs (diurnal sinusoids plus seeded AR(1)
/// noise) so the whole pipeline runs without external data.
struct SyntheticInputOptions {
    double temp_mean = 5.0;
    double temp_amplitude = 6.0;
    double temp_noise = 0.8;
    double temp_ar = 0.9;
    double solar_peak = 400.0;
    double price_mean = 40.0;
    double price_amplitude = 18.0;
    double price_noise = 4.0;
    double price_ar = 0.8;
    double price_floor = 1.0;
};

inline TimeSeriesTable synthetic_inputs(HourStamp start, std::size_t n, std::uint64_t seed,
                                        const SyntheticInputOptions& opt = {}) {
    TimeSeriesTable t;
    t.start = start;
    t.price.resize(n);
    t.temp_ambient.resize(n);
    t.solar.resize(n);
    Rng temp_rng = Rng(seed).fork(1);
    Rng cloud_rng = Rng(seed).fork(2);
    Rng price_rng = Rng(seed).fork(3);
    double temp_noise = 0.0, cloud_noise = 0.0, price_noise = 0.0;
    constexpr double two_pi = 6.283185307179586;
    for (std::size_t i = 0; i < n; ++i) {
        const int hod = t.hour_of_day(i);
        temp_noise = opt.temp_ar * temp_noise + temp_rng.normal(0.0, opt.temp_noise);
        t.temp_ambient[i] =
            opt.temp_mean + opt.temp_amplitude * std::sin(two_pi * (hod - 14) / 24.0) + temp_noise;
        cloud_noise = 0.85 * cloud_noise + cloud_rng.normal(0.0, 0.15);
        const double sun_curve = hod >= 6 && hod <= 18 ? std::sin(3.141592653589793 * (hod - 6) / 12.0) : 0.0;
        const double cloud = std::clamp(0.7 + cloud_noise, 0.2, 1.0);
        t.solar[i] = std::max(0.0, opt.solar_peak * sun_curve * cloud);
        price_noise = opt.price_ar * price_noise + price_rng.normal(0.0, opt.price_noise);
        const double diurnal = 0.6 * std::sin(two_pi * (hod - 18) / 24.0) +
                               0.4 * std::sin(two_pi * (hod - 8) / 24.0);
        t.price[i] = std::max(opt.price_floor, opt.price_mean + opt.price_amplitude * diurnal + price_noise);
    }
    return t;
}

} // namespace invfor

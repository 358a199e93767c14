#pragma once

// Synthetic data generators backed by a known forward model.  The
// rationalizable fixture is constructed so the two-stage estimator can
// recover the generator exactly: regressor rows include every corner of the
// unit cube (pinning the affine maps), loads touch both bounds on a
// sizeable share of hours, and each non-first block appears as the marginal
// block at exact-price hours.

#include <array>
#include <cmath>
#include <vector>

#include "invfor/estimation.hpp"
#include "invfor/forward_model.hpp"
#include "invfor/random.hpp"
#include "invfor/simulator.hpp"

namespace invfor::testing {

struct RationalizableData {
    RegressorMatrix Z;
    std::vector<double> loads;
    std::vector<double> prices;
    BoundsCoefficients bounds;     // generator truth
    UtilityCoefficients utilities; // generator truth
    std::size_t blocks = 4;

    RegressorMatrix Ztest;
    std::vector<double> test_prices;
    std::vector<double> test_loads;
};

inline double eval_affine(double mu, const std::vector<double>& alpha, std::span<const double> z) {
    double v = mu;
    for (std::size_t r = 0; r < alpha.size(); ++r) v += alpha[r] * z[r];
    return v;
}

inline RationalizableData make_rationalizable(std::size_t train_hours, std::size_t test_hours,
                                              std::uint64_t seed) {
    constexpr std::size_t R = 5;
    RationalizableData d;
    d.bounds.mu_lo = 30.0;
    d.bounds.alpha_lo = {1.0, 2.0, 0.0, 1.0, 0.0};
    d.bounds.mu_hi = 70.0;
    d.bounds.alpha_hi = {1.0, 2.0, 3.0, 1.0, 2.0};
    d.utilities.mu_u = {600.0, 60.0, 40.0, 20.0};
    d.utilities.alpha_u = {2.0, -1.0, 0.5, 1.5, -0.7};
    d.blocks = d.utilities.mu_u.size();

    Rng rng(seed);
    std::vector<std::array<double, R>> zs;
    std::vector<double> prices;

    auto push_corner_set = [&](const std::array<double, R>& z) {
        const std::vector<double> u = {
            eval_affine(d.utilities.mu_u[1], d.utilities.alpha_u, z),
            eval_affine(d.utilities.mu_u[2], d.utilities.alpha_u, z),
            eval_affine(d.utilities.mu_u[3], d.utilities.alpha_u, z)};
        // two hours touching pmax, two touching pmin, one exact-price hour
        // per non-first block
        zs.push_back(z), prices.push_back(rng.uniform(5.0, 15.0));
        zs.push_back(z), prices.push_back(rng.uniform(5.0, 15.0));
        zs.push_back(z), prices.push_back(rng.uniform(70.0, 90.0));
        zs.push_back(z), prices.push_back(rng.uniform(70.0, 90.0));
        zs.push_back(z), prices.push_back(u[0]);
        zs.push_back(z), prices.push_back(u[1]);
        zs.push_back(z), prices.push_back(u[2]);
    };

    for (unsigned mask = 0; mask < (1u << R); ++mask) {
        std::array<double, R> z{};
        for (std::size_t r = 0; r < R; ++r) z[r] = (mask >> r) & 1u ? 1.0 : 0.0;
        push_corner_set(z);
    }
    auto random_gap_price = [&](const std::array<double, R>& z) {
        const double u2 = eval_affine(d.utilities.mu_u[1], d.utilities.alpha_u, z);
        const double u3 = eval_affine(d.utilities.mu_u[2], d.utilities.alpha_u, z);
        const double u4 = eval_affine(d.utilities.mu_u[3], d.utilities.alpha_u, z);
        switch (rng.uniform_int(0, 4)) {
            case 0: return rng.uniform(5.0, u4 - 2.0);    // everything profitable
            case 1: return rng.uniform(u4 + 2.0, u3 - 2.0);
            case 2: return rng.uniform(u3 + 2.0, u2 - 2.0);
            case 3: return rng.uniform(u2 + 2.0, 68.0);   // only the first block
            default: return rng.uniform(70.0, 90.0);
        }
    };
    while (zs.size() < train_hours) {
        std::array<double, R> z{};
        for (auto& v : z) v = rng.uniform(0.0, 1.0);
        zs.push_back(z);
        prices.push_back(random_gap_price(z));
    }
    zs.resize(train_hours);
    prices.resize(train_hours);

    auto load_at = [&](const std::array<double, R>& z, double price) {
        const double pmin = eval_affine(d.bounds.mu_lo, d.bounds.alpha_lo, z);
        const double pmax = eval_affine(d.bounds.mu_hi, d.bounds.alpha_hi, z);
        const double w = (pmax - pmin) / static_cast<double>(d.blocks - 1);
        const std::vector<double> u = {
            eval_affine(d.utilities.mu_u[0], d.utilities.alpha_u, z),
            eval_affine(d.utilities.mu_u[1], d.utilities.alpha_u, z),
            eval_affine(d.utilities.mu_u[2], d.utilities.alpha_u, z),
            eval_affine(d.utilities.mu_u[3], d.utilities.alpha_u, z)};
        // exact-price hour: the tied block sits half full (any split is
        // optimal for the generator)
        for (std::size_t b = 1; b < d.blocks; ++b)
            if (price == u[b]) return pmin + static_cast<double>(b - 1) * w + 0.5 * w;
        std::vector<double> widths(d.blocks, w);
        widths[0] = pmin;
        const auto x = solve_rp_greedy(u, price, widths, pmin, pmax);
        double total = 0.0;
        for (double v : x) total += v;
        return total;
    };

    d.Z.regressors = R;
    d.Z.hours = train_hours;
    d.Z.offset = 0;
    d.Z.data.resize(R * train_hours);
    d.loads.resize(train_hours);
    d.prices = prices;
    for (std::size_t t = 0; t < train_hours; ++t) {
        for (std::size_t r = 0; r < R; ++r) d.Z.data[r * train_hours + t] = zs[t][r];
        d.loads[t] = load_at(zs[t], prices[t]);
    }

    d.Ztest.regressors = R;
    d.Ztest.hours = test_hours;
    d.Ztest.offset = 0;
    d.Ztest.data.resize(R * test_hours);
    d.test_prices.resize(test_hours);
    d.test_loads.resize(test_hours);
    for (std::size_t t = 0; t < test_hours; ++t) {
        std::array<double, R> z{};
        for (auto& v : z) v = rng.uniform(0.0, 1.0);
        const double price = random_gap_price(z);
        for (std::size_t r = 0; r < R; ++r) d.Ztest.data[r * test_hours + t] = z[r];
        d.test_prices[t] = price;
        d.test_loads[t] = load_at(z, price);
    }
    return d;
}

/// Table-backed generators for the cross-validation shape checks.  The flex
/// analogue draws loads from a price-responsive forward model; the no-flex
/// analogue is price-independent.
inline TimeSeriesTable make_cv_table(bool flex, std::size_t hours, std::uint64_t seed) {
    TimeSeriesTable t = synthetic_inputs(default_sim_start(), hours, seed);
    Rng rng(seed ^ 0xabcddcba12344321ull);

    BoundsCoefficients bc;
    UtilityCoefficients uc;
    // regressors at generation time: temp, solar, load lag 1, price lag 1
    bc.mu_lo = 40.0;
    bc.alpha_lo = {0.8, 0.01, 0.0, 0.0};
    bc.mu_hi = flex ? 110.0 : 40.0;
    bc.alpha_hi = {0.8, 0.01, 0.0, 0.0};
    if (!flex) bc.alpha_hi = bc.alpha_lo;
    uc.mu_u = {600.0, 52.0, 40.0, 28.0};
    uc.alpha_u = {0.3, 0.0, 0.05, 0.2};

    t.load.assign(hours, 0.0);
    double prev_load = 60.0;
    for (std::size_t h = 0; h < hours; ++h) {
        const double prev_price = h == 0 ? t.price[0] : t.price[h - 1];
        const std::vector<double> z{t.temp_ambient[h], t.solar[h], prev_load, prev_price};
        if (flex) {
            const auto cb = evaluate_bounds(bc, z);
            const auto u = evaluate_utilities(uc, z);
            const auto widths = block_widths(cb.pmin, cb.pmax, uc.blocks());
            const auto x = solve_rp_greedy(u, t.price[h], widths, cb.pmin, cb.pmax);
            double total = 0.0;
            for (double v : x) total += v;
            t.load[h] = total;
        } else {
            const auto cb = evaluate_bounds(bc, z);
            t.load[h] = cb.pmin + rng.normal(0.0, 0.3);
        }
        prev_load = t.load[h];
    }
    return t;
}

} // namespace invfor::testing

#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "invfor/forward_model.hpp"
#include "invfor/random.hpp"

using namespace invfor;

namespace {

double greedy_objective(std::span<const double> u, double price, std::span<const double> x) {
    double obj = 0.0;
    for (std::size_t b = 0; b < u.size(); ++b) obj += x[b] * (u[b] - price);
    return obj;
}

double total(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0); }

} // namespace

TEST_CASE("reconstruction problem matches the worked example") {
    const std::vector<double> u{200.0, 5.0}, E{2.0, 3.0};
    const auto lp = build_rp(u, 4.0, E, 2.0, 5.0);
    const auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == Catch::Approx(395.0).margin(1e-8));
    const auto x = solve_rp_greedy(u, 4.0, E, 2.0, 5.0);
    CHECK(greedy_objective(u, 4.0, x) == Catch::Approx(395.0).margin(1e-9));
    CHECK(x[0] == Catch::Approx(2.0));
    CHECK(x[1] == Catch::Approx(3.0));
}

TEST_CASE("single pinned block") {
    const std::vector<double> u{200.0}, E{2.0};
    const auto x = solve_rp_greedy(u, 4.0, E, 2.0, 2.0);
    CHECK(x[0] == Catch::Approx(2.0));
}

TEST_CASE("inconsistent bounds are rejected") {
    const std::vector<double> u{200.0}, E{2.0};
    CHECK_THROWS_AS(build_rp(u, 4.0, E, 3.0, 2.0), InconsistentBounds);
    CHECK_THROWS_AS(solve_rp_greedy(u, 4.0, E, 3.0, 2.0), InconsistentBounds);
    CHECK_THROWS_AS(solve_rp_greedy(u, 4.0, E, 2.5, 4.0), InconsistentBounds);  // widths sum < pmin
    const std::vector<double> bad{-1.0};
    CHECK_THROWS_AS(solve_rp_greedy(u, 4.0, bad, 0.0, 1.0), InconsistentBounds);
}

TEST_CASE("merit order fills profitable blocks only up to pmax") {
    const std::vector<double> u{200.0, 5.0, 3.0}, E{2.0, 1.0, 1.0};
    const auto x = solve_rp_greedy(u, 4.0, E, 2.0, 4.0);
    CHECK(x[0] == Catch::Approx(2.0));
    CHECK(x[1] == Catch::Approx(1.0));
    CHECK(x[2] == Catch::Approx(0.0));
    const auto sol = solve_lp(build_rp(u, 4.0, E, 2.0, 4.0));
    CHECK(greedy_objective(u, 4.0, x) == Catch::Approx(sol.objective).margin(1e-9));
}

TEST_CASE("pmin forces an unprofitable block") {
    const std::vector<double> u{200.0, 3.0}, E{2.0, 2.0};
    const auto x = solve_rp_greedy(u, 4.0, E, 3.0, 4.0);
    CHECK(x[0] == Catch::Approx(2.0));
    CHECK(x[1] == Catch::Approx(1.0));
    const auto sol = solve_lp(build_rp(u, 4.0, E, 3.0, 4.0));
    CHECK(greedy_objective(u, 4.0, x) == Catch::Approx(sol.objective).margin(1e-9));
}

TEST_CASE("price ties leave the block empty but cost nothing either way") {
    const std::vector<double> u{200.0, 4.0}, E{2.0, 3.0};
    const auto x = solve_rp_greedy(u, 4.0, E, 0.0, 5.0);
    CHECK(x[1] == 0.0);
    const auto sol = solve_lp(build_rp(u, 4.0, E, 0.0, 5.0));
    CHECK(greedy_objective(u, 4.0, x) == Catch::Approx(sol.objective).margin(1e-9));
}

TEST_CASE("greedy equals the LP on random instances") {
    Rng rng(4242);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t B = static_cast<std::size_t>(rng.uniform_int(1, 30));
        std::vector<double> u(B), E(B);
        double sum = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            u[b] = rng.uniform(-10.0, 300.0);
            E[b] = rng.uniform(0.0, 5.0);
            sum += E[b];
        }
        double price = rng.uniform(0.0, 150.0);
        if (trial % 10 == 0 && B > 1) u[1] = price;  // exercise the tie rule
        const double pmin = rng.uniform(0.0, sum);
        const double pmax = pmin + rng.uniform(0.0, sum);
        const auto x = solve_rp_greedy(u, price, E, pmin, pmax);
        const auto sol = solve_lp(build_rp(u, price, E, pmin, pmax));
        REQUIRE(sol.status == LpStatus::Optimal);
        INFO("trial " << trial);
        const double gobj = greedy_objective(u, price, x);
        CHECK(std::abs(gobj - sol.objective) <= 1e-9 * (1.0 + std::abs(sol.objective)));
        // greedy output is feasible
        double tx = total(x);
        CHECK(tx >= pmin - 1e-9);
        CHECK(tx <= pmax + 1e-9);
        for (std::size_t b = 0; b < B; ++b) {
            CHECK(x[b] >= -1e-12);
            CHECK(x[b] <= E[b] + 1e-12);
        }
    }
}

namespace {

BoundsCoefficients demo_bounds() {
    BoundsCoefficients bc;
    bc.mu_lo = 10.0;
    bc.mu_hi = 30.0;
    bc.alpha_lo = {1.0, -0.5};
    bc.alpha_hi = {2.0, 0.5};
    return bc;
}

UtilityCoefficients demo_utilities(std::size_t blocks) {
    UtilityCoefficients uc;
    uc.mu_u.push_back(400.0);
    for (std::size_t b = 1; b < blocks; ++b) uc.mu_u.push_back(60.0 - 12.0 * static_cast<double>(b));
    uc.alpha_u = {0.5, -0.2};
    return uc;
}

} // namespace

TEST_CASE("forecast collapses to the pinned interval") {
    BoundsCoefficients bc;
    bc.mu_lo = 7.0;
    bc.mu_hi = 7.0;
    bc.alpha_lo = {0.0};
    bc.alpha_hi = {0.0};
    UtilityCoefficients uc;
    uc.mu_u = {300.0, 50.0, 20.0};
    uc.alpha_u = {0.0};
    const std::vector<double> z{3.0};
    for (double price : {0.0, 10.0, 100.0, 1000.0})
        CHECK(forecast_one_step(bc, uc, z, price) == Catch::Approx(7.0).margin(1e-9));
}

TEST_CASE("price below the whole curve yields pmax") {
    const auto bc = demo_bounds();
    const auto uc = demo_utilities(4);
    const std::vector<double> z{2.0, 1.0};
    const auto cb = evaluate_bounds(bc, z);
    const auto u = evaluate_utilities(uc, z);
    const double low_price = *std::min_element(u.begin(), u.end()) - 1.0;
    CHECK(forecast_one_step(bc, uc, z, low_price) == Catch::Approx(cb.pmax).margin(1e-9));
}

TEST_CASE("forecast stays inside the clamped bounds and is monotone in price") {
    const auto bc = demo_bounds();
    const auto uc = demo_utilities(6);
    Rng rng(555);
    for (int trial = 0; trial < 50; ++trial) {
        const std::vector<double> z{rng.uniform(-5.0, 20.0), rng.uniform(-10.0, 10.0)};
        const auto cb = evaluate_bounds(bc, z);
        double prev = kInfinity;
        for (double price = 0.0; price <= 120.0; price += 2.5) {
            const double f = forecast_one_step(bc, uc, z, price);
            CHECK(f >= cb.pmin - 1e-9);
            CHECK(f <= cb.pmax + 1e-9);
            CHECK(f <= prev + 1e-9);
            prev = f;
        }
    }
}

TEST_CASE("first block fills whenever its utility clears the price") {
    const auto bc = demo_bounds();
    const auto uc = demo_utilities(5);
    Rng rng(808);
    for (int trial = 0; trial < 200; ++trial) {
        const std::vector<double> z{rng.uniform(0.0, 10.0), rng.uniform(-5.0, 5.0)};
        const double price = rng.uniform(0.0, 200.0);
        const auto cb = evaluate_bounds(bc, z);
        const auto u = evaluate_utilities(uc, z);
        const auto widths = block_widths(cb.pmin, cb.pmax, uc.blocks());
        const auto x = solve_rp_greedy(u, price, widths, cb.pmin, cb.pmax);
        if (u[0] > price) CHECK(x[0] == Catch::Approx(widths[0]).margin(1e-12));
    }
}

TEST_CASE("bound repair rule: inversion collapses to midpoint, negatives floor at zero") {
    BoundsCoefficients bc;
    bc.mu_lo = 10.0;
    bc.mu_hi = 4.0;  // inverted intercepts
    bc.alpha_lo = {};
    bc.alpha_hi = {};
    const auto cb = evaluate_bounds(bc, {});
    CHECK(cb.pmin == Catch::Approx(7.0));
    CHECK(cb.pmax == Catch::Approx(7.0));

    BoundsCoefficients neg;
    neg.mu_lo = -5.0;
    neg.mu_hi = 3.0;
    const auto cn = evaluate_bounds(neg, {});
    CHECK(cn.pmin == 0.0);
    CHECK(cn.pmax == Catch::Approx(3.0));

    BoundsCoefficients both_neg;
    both_neg.mu_lo = -9.0;
    both_neg.mu_hi = -10.0;
    const auto cb2 = evaluate_bounds(both_neg, {});
    CHECK(cb2.pmin == 0.0);
    CHECK(cb2.pmax == 0.0);
}

TEST_CASE("forecast reproduces a known generator on random draws") {
    const auto bc = demo_bounds();
    const auto uc = demo_utilities(8);
    Rng rng(31337);
    for (int trial = 0; trial < 100; ++trial) {
        const std::vector<double> z{rng.uniform(0.0, 8.0), rng.uniform(-4.0, 4.0)};
        const double price = rng.uniform(0.0, 80.0);
        // generator path: same clamp, widths and merit order
        const auto cb = evaluate_bounds(bc, z);
        const auto u = evaluate_utilities(uc, z);
        const auto widths = block_widths(cb.pmin, cb.pmax, uc.blocks());
        const double expected = total(solve_rp_greedy(u, price, widths, cb.pmin, cb.pmax));
        CHECK(forecast_one_step(bc, uc, z, price) == expected);
    }
}

TEST_CASE("regressor arity mismatches are rejected") {
    const auto bc = demo_bounds();
    const auto uc = demo_utilities(4);
    const std::vector<double> z{1.0};
    CHECK_THROWS_AS(forecast_one_step(bc, uc, z, 10.0), ArityMismatch);
}

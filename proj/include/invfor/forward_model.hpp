#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "invfor/lp.hpp"
#include "invfor/model.hpp"

namespace invfor {

/// Block widths per hour.  The first block carries the lower bound, the
/// interval up to the upper bound is divided equally among the rest.
struct BlockPartition {
    std::size_t blocks = 0;
    std::size_t hours = 0;
    std::vector<double> widths;  // [b * hours + t]

    double width(std::size_t b, std::size_t t) const { return widths[b * hours + t]; }
    std::vector<double> column(std::size_t t) const {
        std::vector<double> out(blocks);
        for (std::size_t b = 0; b < blocks; ++b) out[b] = width(b, t);
        return out;
    }
};

/// Widths for one hour: E_1 = pmin, E_b = (pmax - pmin) / (B - 1) for b > 1.
inline std::vector<double> block_widths(double pmin, double pmax, std::size_t blocks) {
    if (blocks < 2) throw ConfigError("block partition needs at least 2 blocks");
    std::vector<double> widths(blocks, std::max(0.0, (pmax - pmin) / static_cast<double>(blocks - 1)));
    widths[0] = std::max(0.0, pmin);
    return widths;
}

namespace detail {

inline void check_rp_inputs(std::span<const double> utilities, std::span<const double> widths,
                            double pmin, double pmax) {
    if (utilities.size() != widths.size())
        throw ArityMismatch("utilities and widths must have one entry per block");
    if (utilities.empty()) throw ArityMismatch("at least one block required");
    if (pmin > pmax) throw InconsistentBounds("pmin exceeds pmax");
    double total = 0.0;
    for (double w : widths) {
        if (w < 0.0) throw InconsistentBounds("negative block width");
        total += w;
    }
    if (total < pmin) throw InconsistentBounds("block widths cannot reach pmin");
}

inline std::vector<std::size_t> merit_order(std::span<const double> utilities) {
    std::vector<std::size_t> order(utilities.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return utilities[a] > utilities[b]; });
    return order;
}

} // namespace detail

/// The per-hour reconstruction problem: maximize the pool surplus
/// sum_b x_b (u_b - p) subject to pmin <= sum_b x_b <= pmax and
/// 0 <= x_b <= E_b.
inline LpProblem build_rp(std::span<const double> utilities, double price,
                          std::span<const double> widths, double pmin, double pmax) {
    detail::check_rp_inputs(utilities, widths, pmin, pmax);
    LpProblem lp;
    lp.sense = Sense::Maximize;
    std::vector<std::pair<int, double>> total;
    for (std::size_t b = 0; b < utilities.size(); ++b) {
        const int var = lp.add_variable(0.0, widths[b], utilities[b] - price);
        total.emplace_back(var, 1.0);
    }
    lp.add_constraint(total, Relation::GreaterEqual, pmin);
    lp.add_constraint(total, Relation::LessEqual, pmax);
    return lp;
}

/// Merit-order closed form of the reconstruction problem: blocks are filled
/// in order of decreasing utility while u_b > p (capped by pmax); blocks
/// priced at or below p stay empty unless needed to reach pmin, in which
/// case they fill in the same descending-utility order.  Ties u_b == p are
/// left empty beyond what pmin forces.
inline std::vector<double> solve_rp_greedy(std::span<const double> utilities, double price,
                                           std::span<const double> widths, double pmin,
                                           double pmax) {
    detail::check_rp_inputs(utilities, widths, pmin, pmax);
    const std::size_t B = utilities.size();
    const auto order = detail::merit_order(utilities);
    std::vector<double> x(B, 0.0);
    double total = 0.0;
    for (std::size_t b : order) {
        if (utilities[b] <= price) break;  // merit order is sorted
        if (total >= pmax) break;
        const double take = std::min(widths[b], pmax - total);
        x[b] = take;
        total += take;
    }
    if (total < pmin) {
        for (std::size_t b : order) {
            if (total >= pmin) break;
            const double take = std::min(widths[b] - x[b], pmin - total);
            if (take <= 0.0) continue;
            x[b] += take;
            total += take;
        }
    }
    return x;
}

/// One-step-ahead forecast: evaluate bounds and utilities at the regressor
/// row, apply the bound repair rule, build the block partition, and read the
/// reconstruction problem's optimal total load off the merit order.
inline double forecast_one_step(const BoundsCoefficients& bounds, const UtilityCoefficients& utilities,
                                std::span<const double> z, double price) {
    const auto cb = evaluate_bounds(bounds, z);
    const auto widths = block_widths(cb.pmin, cb.pmax, utilities.blocks());
    const auto u = evaluate_utilities(utilities, z);
    const auto x = solve_rp_greedy(u, price, widths, cb.pmin, cb.pmax);
    double total = 0.0;
    for (double v : x) total += v;
    return total;
}

} // namespace invfor

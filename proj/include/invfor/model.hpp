#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "invfor/errors.hpp"

namespace invfor {

/// Intercepts and per-regressor slopes of the affine load-bound maps.
struct BoundsCoefficients {
    double mu_lo = 0.0;
    double mu_hi = 0.0;
    std::vector<double> alpha_lo;
    std::vector<double> alpha_hi;

    std::size_t arity() const { return alpha_lo.size(); }
};

/// Per-block intercepts and shared regressor slopes of the marginal
/// utilities.  Intercepts are non-increasing in the block index, with the
/// first block held above the second by the configured offset.
struct UtilityCoefficients {
    std::vector<double> mu_u;     // one per block
    std::vector<double> alpha_u;  // shared across blocks

    std::size_t blocks() const { return mu_u.size(); }
    std::size_t arity() const { return alpha_u.size(); }
};

/// Evaluated load bounds for a span of hours.
struct LoadBounds {
    std::vector<double> pmin;
    std::vector<double> pmax;
};

namespace detail {

inline double affine_eval(double intercept, std::span<const double> slopes,
                          std::span<const double> z, const char* what) {
    if (slopes.size() != z.size())
        throw ArityMismatch(std::string(what) + ": expected " + std::to_string(slopes.size()) +
                            " regressors, got " + std::to_string(z.size()));
    double v = intercept;
    for (std::size_t r = 0; r < slopes.size(); ++r) v += slopes[r] * z[r];
    return v;
}

} // namespace detail

/// Bounds evaluated at one regressor row, with the out-of-sample repair
/// rule applied: an inverted pair collapses to its midpoint, then both are
/// floored at zero (loads are physical consumption).
struct ClampedBounds {
    double pmin = 0.0;
    double pmax = 0.0;
};

inline ClampedBounds evaluate_bounds(const BoundsCoefficients& bc, std::span<const double> z) {
    double lo = detail::affine_eval(bc.mu_lo, bc.alpha_lo, z, "lower bound");
    double hi = detail::affine_eval(bc.mu_hi, bc.alpha_hi, z, "upper bound");
    if (hi < lo) {
        const double mid = 0.5 * (lo + hi);
        lo = mid;
        hi = mid;
    }
    lo = std::max(0.0, lo);
    hi = std::max(0.0, hi);
    return {lo, hi};
}

inline std::vector<double> evaluate_utilities(const UtilityCoefficients& uc, std::span<const double> z) {
    std::vector<double> u(uc.blocks());
    for (std::size_t b = 0; b < uc.blocks(); ++b)
        u[b] = detail::affine_eval(uc.mu_u[b], uc.alpha_u, z, "utility");
    return u;
}

} // namespace invfor

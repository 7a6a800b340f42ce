// Test-only oracles, kept independent of the implementation paths they check.
#pragma once

#include <cmath>
#include <limits>

#include "ncvx/common.hpp"
#include "ncvx/numlin.hpp"

namespace ncvx::testing {

/// Two-stage log-polar grid search for the alignment parameter.
inline Complex grid_align_oracle(const CVec& h, const CVec& x, const CVec& hstar,
                                 const CVec& xstar) {
    double lo_r = std::log(0.125), hi_r = std::log(8.0);
    double lo_p = 0.0, hi_p = 2.0 * M_PI;
    Complex best(1.0, 0.0);
    double best_g = alignment_objective(best, h, x, hstar, xstar);
    for (int stage = 0; stage < 8; ++stage) {
        const int nr = 40, np = 80;
        double stage_r = std::log(std::abs(best));
        double stage_p = std::arg(best);
        for (int i = 0; i <= nr; ++i) {
            const double lr = lo_r + (hi_r - lo_r) * i / nr;
            for (int k = 0; k <= np; ++k) {
                const double ph = lo_p + (hi_p - lo_p) * k / np;
                const Complex cand = std::exp(lr) * Complex(std::cos(ph), std::sin(ph));
                const double g = alignment_objective(cand, h, x, hstar, xstar);
                if (g < best_g) {
                    best_g = g;
                    best = cand;
                    stage_r = lr;
                    stage_p = ph;
                }
            }
        }
        const double dr = (hi_r - lo_r) / nr, dp = (hi_p - lo_p) / np;
        lo_r = stage_r - 2 * dr;
        hi_r = stage_r + 2 * dr;
        lo_p = stage_p - 2 * dp;
        hi_p = stage_p + 2 * dp;
    }
    return best;
}

}  // namespace ncvx::testing

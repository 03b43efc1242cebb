#pragma once

#include <optional>

#include "gridforge/opf_types.hpp"

namespace gridforge::opf {

struct AcWarmStart {
    std::vector<double> va;  // rad by bus index (DC angles)
    std::vector<double> pg;  // pu by gen index (DC dispatch)
};

struct AcOptions {
    double tol = 1e-4;
    double tol_almost = 1e-2;
    int max_iterations = 10000;
    double timeout_s = 1800.0;  // per attempt; checked every iteration
};

// Full polar AC-OPF solved by a primal-dual interior-point method (log-barrier
// slacks on all inequalities, Newton steps on the condensed KKT system, exact
// second derivatives, fraction-to-boundary line search on an l1 merit
// function). Flat |V| = 1 start, optionally warm-started from DC.
OpfSolution solve_ac_opf(const PuNetwork& net, const LevelParams& lp,
                         const tables::Tables& tbl,
                         const AcWarmStart* warm = nullptr,
                         const AcOptions* opts = nullptr);

}  // namespace gridforge::opf

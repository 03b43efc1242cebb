#pragma once

#include "gridforge/diagnostics.hpp"
#include "gridforge/opf_types.hpp"

namespace gridforge::opf {

struct AttemptRecord {
    std::string formulation;  // "dc" | "ac"
    std::string level;
    bool ac1 = false;
    SolveStatus status = SolveStatus::failed;
    double objective_usd = 0;
    int iterations = 0;
    double solve_seconds = 0;
};

struct ShuntInjection {
    int bus_id = 0;
    double bs_mvar = 0;  // capacitor > 0, reactor < 0
};

struct ProgressiveOptions {
    bool dc_only = false;
    int max_level = 5;
    double timeout_s = 0;  // 0 = table default
};

struct ProgressiveResult {
    bool dc_ok = false, ac_ok = false;
    OpfSolution dc, ac;
    std::vector<AttemptRecord> attempts;
    std::vector<ShuntInjection> shunts_added;
};

// Reactive compensation sized from the DC dispatch: per-bus deficit
// Qd + sum of incident I^2 X proxies - Q capability - charging injection;
// beyond the 15% margin a capacitor (deficit) or reactor (surplus) is added.
// Mutates net.buses[].bs and returns the additions in MVAr.
std::vector<ShuntInjection> inject_shunts(PuNetwork& net, const OpfSolution& dc,
                                          const tables::Tables& tbl);

// Stage 1: DC ladder L0..max_level, first convergence wins. Stage 2: shunt
// injection from the DC dispatch. Stage 3: AC at L0 plain, then L0+AC1 through
// L5+AC1, warm-started from DC; stops at locally_solved, else keeps the best
// almost_locally_solved. Decommitment runs once before stage 1.
ProgressiveResult progressive_solve(PuNetwork& net, const tables::Tables& tbl,
                                    const ProgressiveOptions& opts, Diagnostics& diag);

}  // namespace gridforge::opf

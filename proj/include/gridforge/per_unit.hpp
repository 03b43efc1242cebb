#pragma once

#include <string>
#include <vector>

#include "gridforge/diagnostics.hpp"
#include "gridforge/tables.hpp"
#include "gridforge/topology.hpp"

namespace gridforge::opf {

struct PuBus {
    int id = 0;          // external bus id
    double base_kv = 0;
    double v_min = 0.95, v_max = 1.05;
    double bs = 0;       // shunt susceptance, pu injection at |V| = 1
    bool has_gen = false;
};

struct PuBranch {
    int from = 0, to = 0;  // bus indexes (not ids)
    double r = 0, x = 0, b = 0;
    double rate_a = 0;       // pu on 100 MVA; thermal_unlimited disables
    double ang_max_rad = 0;  // symmetric angle-difference bound
    bool transformer = false;
    int id = 0;
};

struct PuGen {
    int bus = 0;  // bus index
    double p_min = 0, p_max = 0, q_min = 0, q_max = 0;  // pu
    double c2 = 0, c1 = 0, c0 = 0;  // $/pu^2 h, $/pu h, $/h
    bool zero_marginal = false;     // renewable or nuclear (decommit-protected)
    bool dispatchable = true;       // non-renewable
    int id = 0;
};

struct PuLoad {
    int bus = 0;
    double pd = 0, qd = 0;  // pu
    int id = 0;
};

struct PuDcLink {
    int from = 0, to = 0;  // bus indexes
    double p_max = 0;      // pu
    double loss0 = 0, loss1 = 0;
    double q_min_f = 0, q_max_f = 0, q_min_t = 0, q_max_t = 0;
    int id = 0;
};

// Solver-facing network, everything per-unit on base_mva.
struct PuNetwork {
    double base_mva = 100.0;
    std::vector<PuBus> buses;
    std::vector<PuBranch> branches;
    std::vector<PuGen> gens;
    std::vector<PuLoad> loads;
    std::vector<PuDcLink> dclinks;
    int slack = 0;  // bus index

    double total_pd() const;
    double total_p_max() const;
};

// MW -> pu conversion; cost rescale c1 *= 100, c2 *= 100^2 so objectives stay
// in $/h. Branch impedances are already per-unit in the physical model.
PuNetwork to_per_unit(const topo::NetworkModel& model, const tables::Tables& tbl);

// Caps rate_a at (pi/2)/x wherever rate_a * x > pi/2, so the thermal limit
// stays reachable within angle stability. Returns clamped branch count.
int enforce_impedance_consistency(PuNetwork& net);

struct DecommitEvent {
    int gen_id = 0;
    double old_p_min = 0;
};

// While sum(P_min) > sum(P_d): zero the P_min of the costliest unprotected
// dispatchable unit (ties: smaller P_max, then lower id). Nuclear and
// renewables are protected.
std::vector<DecommitEvent> decommit_generators(PuNetwork& net, Diagnostics& diag);

}  // namespace gridforge::opf

#pragma once

#include <string>
#include <vector>

#include "gridforge/per_unit.hpp"
#include "gridforge/tables.hpp"

namespace gridforge::opf {

enum class SolveStatus {
    solved,                  // LP global optimum (DC)
    locally_solved,          // KKT residual <= 1e-4 (AC)
    almost_locally_solved,   // KKT residual <= 1e-2 (AC)
    infeasible,
    iteration_limit,
    timeout,
    failed,
};

std::string to_string(SolveStatus s);
bool converged(SolveStatus s);  // solved / locally_solved / almost_locally_solved

// Effective constraint set for one relaxation level. Zero-valued overrides
// keep the network's per-branch / per-bus defaults.
struct LevelParams {
    std::string name = "L0";
    int index = 0;
    double angle_deg = 0;
    double thermal_mult = 1.0;
    double v_min = 0, v_max = 0;
    double q_mult = 1.0;
    double load_cap = 0;  // served load cap as a fraction of total P_max
    double pmin_mult = 1.0;
    bool ac1 = false;
};

// Ladder row for `level` (0..5); ac1 overlays the persistent AC base layer
// (widest value wins against the level's own bounds).
LevelParams level_params(int level, bool ac1, const tables::Tables& tbl);

// Copy of `base` with the level applied: angle/thermal/V/Q/Pmin adjustments
// plus the impedance-consistency cap (skipped when thermal is unlimited).
PuNetwork apply_level(const PuNetwork& base, const LevelParams& lp, const tables::Tables& tbl);

struct BranchFlow {
    int id = 0;
    double p_from = 0, q_from = 0, p_to = 0, q_to = 0;  // pu, series flows
};

struct OpfSolution {
    SolveStatus status = SolveStatus::failed;
    std::string formulation;  // "dc" | "ac"
    std::string level = "L0";
    bool ac1 = false;
    double objective_usd = 0;       // $/h
    std::vector<double> va;         // rad, by bus index
    std::vector<double> vm;         // pu
    std::vector<double> pg, qg;     // pu, by gen index
    std::vector<BranchFlow> flows;  // by branch index
    std::vector<double> dc_flow;    // pu from-side flow, by dclink index
    std::vector<double> served;     // pu served per load (after shedding)
    double total_loss_pu = 0;       // branch (p_from + p_to) + dc link losses
    double loss_pct = 0;            // (generation - nominal load) / nominal load
    double served_mw = 0, shed_mw = 0;
    int iterations = 0;
    double solve_seconds = 0;
    double kkt_residual = 0;
};

// Objective, flows, losses, served/shed and loss_pct recomputed from the
// primal point; shared by both formulations.
void finish_solution(const PuNetwork& net, OpfSolution& sol);

}  // namespace gridforge::opf

#include "gridforge/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridforge/ac_flow.hpp"
#include "gridforge/ac_opf.hpp"
#include "gridforge/dc_opf.hpp"

namespace gridforge::opf {

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::solved: return "solved";
        case SolveStatus::locally_solved: return "locally_solved";
        case SolveStatus::almost_locally_solved: return "almost_locally_solved";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::iteration_limit: return "iteration_limit";
        case SolveStatus::timeout: return "timeout";
        case SolveStatus::failed: return "failed";
    }
    return "failed";
}

bool converged(SolveStatus s) {
    return s == SolveStatus::solved || s == SolveStatus::locally_solved ||
           s == SolveStatus::almost_locally_solved;
}

LevelParams level_params(int level, bool ac1, const tables::Tables& tbl) {
    if (level < 0 || level >= static_cast<int>(tbl.ladder.size()))
        throw std::out_of_range("relaxation level out of range");
    const tables::LadderRow& row = tbl.ladder[level];
    LevelParams lp;
    lp.name = row.level;
    lp.index = level;
    lp.angle_deg = row.angle_deg;
    lp.thermal_mult = row.thermal_mult;
    lp.v_min = row.v_min;
    lp.v_max = row.v_max;
    lp.q_mult = row.q_mult;
    lp.load_cap = row.load_cap;
    lp.pmin_mult = row.pmin_mult;
    lp.ac1 = ac1;
    if (ac1) {
        // persistent AC layer; the wider bound wins
        lp.v_min = lp.v_min > 0 ? std::min(lp.v_min, tbl.ac1.v_min) : tbl.ac1.v_min;
        lp.v_max = lp.v_max > 0 ? std::max(lp.v_max, tbl.ac1.v_max) : tbl.ac1.v_max;
        lp.q_mult = std::max(lp.q_mult, tbl.ac1.q_mult);
    }
    return lp;
}

PuNetwork apply_level(const PuNetwork& base, const LevelParams& lp, const tables::Tables& tbl) {
    PuNetwork net = base;
    const bool unlimited = lp.thermal_mult >= tbl.thermal_unlimited;
    for (PuBranch& br : net.branches) {
        if (lp.angle_deg > 0)
            br.ang_max_rad = std::max(br.ang_max_rad, lp.angle_deg * M_PI / 180.0);
        if (unlimited)
            br.rate_a = tbl.thermal_unlimited;
        else
            br.rate_a *= lp.thermal_mult;
    }
    for (PuBus& bus : net.buses) {
        if (lp.v_min > 0) bus.v_min = std::min(bus.v_min, lp.v_min);
        if (lp.v_max > 0) bus.v_max = std::max(bus.v_max, lp.v_max);
    }
    for (PuGen& g : net.gens) {
        g.q_max *= lp.q_mult;
        g.q_min *= lp.q_mult;
        g.p_min *= lp.pmin_mult;
    }
    if (!unlimited) enforce_impedance_consistency(net);
    return net;
}

void finish_solution(const PuNetwork& net, OpfSolution& sol) {
    const int n = static_cast<int>(net.buses.size());
    const int nb = static_cast<int>(net.branches.size());
    if (static_cast<int>(sol.vm.size()) != n) sol.vm.assign(n, 1.0);
    if (sol.qg.size() != net.gens.size()) sol.qg.assign(net.gens.size(), 0.0);
    if (sol.served.size() != net.loads.size()) {
        sol.served.resize(net.loads.size());
        for (size_t l = 0; l < net.loads.size(); ++l) sol.served[l] = net.loads[l].pd;
    }
    if (sol.dc_flow.size() != net.dclinks.size()) sol.dc_flow.assign(net.dclinks.size(), 0.0);

    sol.flows.assign(nb, BranchFlow{});
    double line_loss = 0;
    for (int e = 0; e < nb; ++e) {
        const PuBranch& br = net.branches[e];
        BranchFlow& f = sol.flows[e];
        f.id = br.id;
        if (sol.formulation == "dc") {
            f.p_from = (sol.va[br.from] - sol.va[br.to]) / br.x;
            f.p_to = -f.p_from;
        } else {
            acflow::Flow4 fl;
            acflow::branch_flows(br, sol.va[br.from], sol.va[br.to], sol.vm[br.from],
                                 sol.vm[br.to], false, fl);
            f.p_from = fl.val[0];
            f.q_from = fl.val[1];
            f.p_to = fl.val[2];
            f.q_to = fl.val[3];
        }
        line_loss += f.p_from + f.p_to;
    }
    double dc_loss = 0;
    for (size_t d = 0; d < net.dclinks.size(); ++d)
        dc_loss += net.dclinks[d].loss0 + net.dclinks[d].loss1 * std::abs(sol.dc_flow[d]);
    sol.total_loss_pu = line_loss + dc_loss;

    double objective = 0, total_pg = 0;
    for (size_t g = 0; g < net.gens.size(); ++g) {
        const PuGen& gen = net.gens[g];
        const double pg = g < sol.pg.size() ? sol.pg[g] : 0.0;
        objective += gen.c2 * pg * pg + gen.c1 * pg;
        if (pg > 1e-6) objective += gen.c0;
        total_pg += pg;
    }
    sol.objective_usd = objective;

    double nominal = 0, served = 0;
    for (size_t l = 0; l < net.loads.size(); ++l) {
        nominal += net.loads[l].pd;
        served += sol.served[l];
    }
    sol.served_mw = served * net.base_mva;
    sol.shed_mw = std::max(nominal - served, 0.0) * net.base_mva;
    sol.loss_pct = nominal > 0 ? (total_pg - nominal) / nominal * 100.0 : 0.0;
}

std::vector<ShuntInjection> inject_shunts(PuNetwork& net, const OpfSolution& dc,
                                          const tables::Tables& tbl) {
    const int n = static_cast<int>(net.buses.size());
    std::vector<double> qd(n, 0.0), i2x(n, 0.0), qcap(n, 0.0);
    for (const PuLoad& ld : net.loads) qd[ld.bus] += ld.qd;
    for (size_t e = 0; e < net.branches.size(); ++e) {
        const PuBranch& br = net.branches[e];
        const double p = e < dc.flows.size() ? dc.flows[e].p_from : 0.0;
        i2x[br.from] += p * p * br.x;
        i2x[br.to] += p * p * br.x;
    }
    for (const PuGen& g : net.gens) qcap[g.bus] += std::max(g.q_max, 0.0);
    const Eigen::VectorXd charging = acflow::lumped_shunts(net);

    std::vector<ShuntInjection> added;
    for (int i = 0; i < n; ++i) {
        const double deficit = qd[i] + i2x[i] - qcap[i] - charging[i];
        const double margin =
            tbl.shunt_margin * std::max({std::abs(qd[i]), qcap[i], std::abs(charging[i])});
        if (std::abs(deficit) <= margin || std::abs(deficit) < 1e-9) continue;
        net.buses[i].bs += deficit;
        added.push_back({net.buses[i].id, deficit * net.base_mva});
    }
    return added;
}

ProgressiveResult progressive_solve(PuNetwork& net, const tables::Tables& tbl,
                                    const ProgressiveOptions& opts, Diagnostics& diag) {
    ProgressiveResult out;
    decommit_generators(net, diag);

    const int max_level =
        std::clamp(opts.max_level, 0, static_cast<int>(tbl.ladder.size()) - 1);

    auto record = [&](const OpfSolution& sol) {
        out.attempts.push_back({sol.formulation, sol.level, sol.ac1, sol.status,
                                sol.objective_usd, sol.iterations, sol.solve_seconds});
    };

    for (int level = 0; level <= max_level; ++level) {
        const LevelParams lp = level_params(level, false, tbl);
        const PuNetwork staged = apply_level(net, lp, tbl);
        OpfSolution sol = solve_dc_opf(staged, lp, tbl);
        record(sol);
        diag.count("solve.dc_attempts");
        out.dc = sol;
        if (sol.status == SolveStatus::solved) {
            out.dc_ok = true;
            break;
        }
    }

    if (out.dc_ok) {
        out.shunts_added = inject_shunts(net, out.dc, tbl);
        diag.count("solve.shunts_added", static_cast<long long>(out.shunts_added.size()));
    }
    if (opts.dc_only) return out;

    AcOptions ac_opts;
    ac_opts.tol = tbl.tol_locally_solved;
    ac_opts.tol_almost = tbl.tol_almost_solved;
    ac_opts.max_iterations = tbl.max_iterations;
    ac_opts.timeout_s = opts.timeout_s > 0 ? opts.timeout_s : tbl.attempt_timeout_s;

    AcWarmStart warm;
    const AcWarmStart* warm_ptr = nullptr;
    if (out.dc_ok) {
        warm.va = out.dc.va;
        warm.pg = out.dc.pg;
        warm_ptr = &warm;
    }

    std::vector<std::pair<int, bool>> schedule;
    schedule.emplace_back(0, false);
    for (int level = 0; level <= max_level; ++level) schedule.emplace_back(level, true);

    bool have_almost = false;
    OpfSolution best_almost;
    for (const auto& [level, ac1] : schedule) {
        const LevelParams lp = level_params(level, ac1, tbl);
        const PuNetwork staged = apply_level(net, lp, tbl);
        OpfSolution sol = solve_ac_opf(staged, lp, tbl, warm_ptr, &ac_opts);
        record(sol);
        diag.count("solve.ac_attempts");
        out.ac = sol;
        if (sol.status == SolveStatus::locally_solved) {
            out.ac_ok = true;
            break;
        }
        if (sol.status == SolveStatus::almost_locally_solved &&
            (!have_almost || sol.kkt_residual < best_almost.kkt_residual)) {
            have_almost = true;
            best_almost = sol;
        }
    }
    if (!out.ac_ok && have_almost) {
        out.ac = best_almost;
        out.ac_ok = true;
        diag.count("solve.ac_accepted_almost");
    }
    return out;
}

}  // namespace gridforge::opf

#include "gridforge/dc_opf.hpp"

#include <algorithm>
#include <cmath>

#include "gridforge/simplex.hpp"

namespace gridforge::opf {

OpfSolution solve_dc_opf(const PuNetwork& net, const LevelParams& lp,
                         const tables::Tables& tbl) {
    const int n = static_cast<int>(net.buses.size());
    const int nb = static_cast<int>(net.branches.size());
    const int ng = static_cast<int>(net.gens.size());
    const int nl = static_cast<int>(net.dclinks.size());
    const bool shedding = lp.load_cap > 0;
    const int ns = shedding ? static_cast<int>(net.loads.size()) : 0;

    // variable layout: theta | branch flow | pg | per link (p+, p-) | shed | cap slack
    const int v_th = 0;
    const int v_f = v_th + n;
    const int v_pg = v_f + nb;
    const int v_dc = v_pg + ng;
    const int v_sh = v_dc + 2 * nl;
    const int nv = v_sh + ns + (shedding ? 1 : 0);

    const int r_flow = 0;         // nb rows: f - (th_i - th_k)/x = 0
    const int r_bal = r_flow + nb;  // n rows: nodal balance
    const int r_cap = r_bal + n;    // 1 row when shedding
    const int nr = r_cap + (shedding ? 1 : 0);

    LpProblem prob;
    prob.c = Eigen::VectorXd::Zero(nv);
    prob.A = Eigen::MatrixXd::Zero(nr, nv);
    prob.b = Eigen::VectorXd::Zero(nr);
    prob.lo = Eigen::VectorXd::Constant(nv, -kLpInf);
    prob.hi = Eigen::VectorXd::Constant(nv, kLpInf);

    prob.lo[v_th + net.slack] = 0;
    prob.hi[v_th + net.slack] = 0;

    for (int e = 0; e < nb; ++e) {
        const PuBranch& br = net.branches[e];
        double cap = br.ang_max_rad / br.x;
        if (br.rate_a < tbl.thermal_unlimited) cap = std::min(cap, br.rate_a);
        prob.lo[v_f + e] = -cap;
        prob.hi[v_f + e] = cap;
        prob.A(r_flow + e, v_f + e) = 1.0;
        prob.A(r_flow + e, v_th + br.from) = -1.0 / br.x;
        prob.A(r_flow + e, v_th + br.to) = 1.0 / br.x;
        prob.A(r_bal + br.from, v_f + e) = -1.0;
        prob.A(r_bal + br.to, v_f + e) = 1.0;
    }

    for (int g = 0; g < ng; ++g) {
        const PuGen& gen = net.gens[g];
        prob.lo[v_pg + g] = std::min(gen.p_min, gen.p_max);
        prob.hi[v_pg + g] = gen.p_max;
        prob.c[v_pg + g] = gen.c1;
        prob.A(r_bal + gen.bus, v_pg + g) = 1.0;
    }

    for (int d = 0; d < nl; ++d) {
        const PuDcLink& dc = net.dclinks[d];
        const int jp = v_dc + 2 * d, jn = jp + 1;
        prob.lo[jp] = prob.lo[jn] = 0;
        prob.hi[jp] = prob.hi[jn] = dc.p_max;
        prob.A(r_bal + dc.from, jp) = -1.0;
        prob.A(r_bal + dc.from, jn) = 1.0 - dc.loss1;
        prob.A(r_bal + dc.to, jp) = 1.0 - dc.loss1;
        prob.A(r_bal + dc.to, jn) = -1.0;
        prob.b[r_bal + dc.to] += dc.loss0;
    }

    double total_pd = 0;
    for (size_t l = 0; l < net.loads.size(); ++l) {
        const PuLoad& ld = net.loads[l];
        prob.b[r_bal + ld.bus] += ld.pd;
        total_pd += ld.pd;
        if (shedding) {
            const int js = v_sh + static_cast<int>(l);
            prob.lo[js] = 0;
            prob.hi[js] = std::max(ld.pd, 0.0);
            prob.c[js] = tbl.shed_penalty_usd_mwh * net.base_mva;
            prob.A(r_bal + ld.bus, js) = 1.0;
            prob.A(r_cap, js) = 1.0;
        }
    }
    if (shedding) {
        const int jz = v_sh + ns;  // surplus above the minimum required shed
        prob.lo[jz] = 0;
        prob.A(r_cap, jz) = -1.0;
        prob.b[r_cap] = total_pd - lp.load_cap * net.total_p_max();
    }

    LpResult res = solve_lp(prob);

    OpfSolution sol;
    sol.formulation = "dc";
    sol.level = lp.name;
    sol.ac1 = lp.ac1;
    sol.iterations = res.iterations;
    switch (res.status) {
        case LpStatus::optimal: sol.status = SolveStatus::solved; break;
        case LpStatus::infeasible: sol.status = SolveStatus::infeasible; break;
        case LpStatus::iteration_limit: sol.status = SolveStatus::iteration_limit; break;
        default: sol.status = SolveStatus::failed; break;
    }
    if (sol.status != SolveStatus::solved) return sol;

    sol.va.assign(n, 0.0);
    for (int i = 0; i < n; ++i) sol.va[i] = res.x[v_th + i];
    sol.pg.assign(ng, 0.0);
    for (int g = 0; g < ng; ++g) sol.pg[g] = res.x[v_pg + g];
    sol.dc_flow.assign(nl, 0.0);
    for (int d = 0; d < nl; ++d) sol.dc_flow[d] = res.x[v_dc + 2 * d] - res.x[v_dc + 2 * d + 1];
    sol.served.assign(net.loads.size(), 0.0);
    for (size_t l = 0; l < net.loads.size(); ++l) {
        double shed = shedding ? res.x[v_sh + static_cast<int>(l)] : 0.0;
        sol.served[l] = std::max(net.loads[l].pd - shed, 0.0);
    }
    finish_solution(net, sol);
    return sol;
}

}  // namespace gridforge::opf

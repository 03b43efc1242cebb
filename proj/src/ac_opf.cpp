#include "gridforge/ac_opf.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "gridforge/ac_flow.hpp"

namespace gridforge::opf {

namespace {

using Clock = std::chrono::steady_clock;
using Trip = Eigen::Triplet<double>;

constexpr double kTau = 0.995;          // fraction-to-boundary
constexpr double kMu0 = 1e-1;
constexpr double kMuLinear = 0.2;
constexpr double kSlackMin = 1e-4;
constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktrack = 20;

// Inequality row tags; rows are laid out once and evaluated in the same
// order every iteration.
enum class Ineq : signed char {
    var_upper,   // z[a] - bound <= 0
    var_lower,   // bound - z[a] <= 0
    thermal_f,   // pf^2 + qf^2 - rate^2 <= 0 on branch a
    thermal_t,
    angle_pos,   // (th_i - th_k) - ang <= 0 on branch a
    angle_neg,
    load_cap,    // sum(pd - shed) - cap <= 0
};

struct IneqRow {
    Ineq kind;
    int a = 0;        // variable index or branch index
    double bound = 0;
};

struct Eval {
    double f = 0;                  // scaled objective
    Eigen::VectorXd grad;          // scaled
    Eigen::VectorXd cE, cI;
    std::vector<Trip> jE, jI;
    std::vector<acflow::Flow4> fl;  // per branch, with hessians
};

}  // namespace

OpfSolution solve_ac_opf(const PuNetwork& net, const LevelParams& lp,
                         const tables::Tables& tbl, const AcWarmStart* warm,
                         const AcOptions* opts) {
    AcOptions op;
    if (opts) {
        op = *opts;
    } else {
        op.tol = tbl.tol_locally_solved;
        op.tol_almost = tbl.tol_almost_solved;
        op.max_iterations = tbl.max_iterations;
        op.timeout_s = tbl.attempt_timeout_s;
    }
    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                             std::chrono::duration<double>(op.timeout_s));

    const int n = static_cast<int>(net.buses.size());
    const int nb = static_cast<int>(net.branches.size());
    const int ng = static_cast<int>(net.gens.size());
    const int nl = static_cast<int>(net.dclinks.size());
    const bool shedding = lp.load_cap > 0;
    const int ns = shedding ? static_cast<int>(net.loads.size()) : 0;

    // variable layout: theta | v | pg | qg | per link (p+, p-, qf, qt) | shed
    const int v_th = 0, v_v = n, v_pg = 2 * n, v_qg = 2 * n + ng;
    const int v_dc = v_qg + ng, v_sh = v_dc + 4 * nl;
    const int nz = v_sh + ns;
    const int mE = 1 + 2 * n;  // slack angle + P and Q balance

    const double penalty = tbl.shed_penalty_usd_mwh * net.base_mva;
    double fscale = 1.0;
    for (const PuGen& g : net.gens)
        fscale = std::max(fscale, std::abs(g.c1) + 2 * std::abs(g.c2) * std::max(g.p_max, 1.0));
    if (shedding) fscale = std::max(fscale, penalty);

    const Eigen::VectorXd bs = acflow::lumped_shunts(net);

    // inequality layout
    std::vector<IneqRow> rows;
    auto box = [&](int var, double lo, double hi) {
        rows.push_back({Ineq::var_upper, var, std::max(lo, hi)});
        rows.push_back({Ineq::var_lower, var, std::min(lo, hi)});
    };
    for (int i = 0; i < n; ++i) box(v_v + i, net.buses[i].v_min, net.buses[i].v_max);
    for (int g = 0; g < ng; ++g) {
        box(v_pg + g, std::min(net.gens[g].p_min, net.gens[g].p_max), net.gens[g].p_max);
        box(v_qg + g, net.gens[g].q_min, net.gens[g].q_max);
    }
    for (int d = 0; d < nl; ++d) {
        const PuDcLink& dc = net.dclinks[d];
        box(v_dc + 4 * d + 0, 0, dc.p_max);
        box(v_dc + 4 * d + 1, 0, dc.p_max);
        box(v_dc + 4 * d + 2, dc.q_min_f, dc.q_max_f);
        box(v_dc + 4 * d + 3, dc.q_min_t, dc.q_max_t);
    }
    for (int l = 0; l < ns; ++l) box(v_sh + l, 0, std::max(net.loads[l].pd, 0.0));
    for (int e = 0; e < nb; ++e) {
        if (net.branches[e].rate_a < tbl.thermal_unlimited) {
            rows.push_back({Ineq::thermal_f, e, net.branches[e].rate_a});
            rows.push_back({Ineq::thermal_t, e, net.branches[e].rate_a});
        }
    }
    for (int e = 0; e < nb; ++e) {
        rows.push_back({Ineq::angle_pos, e, net.branches[e].ang_max_rad});
        rows.push_back({Ineq::angle_neg, e, net.branches[e].ang_max_rad});
    }
    double cap = 0, total_pd = 0;
    for (const PuLoad& ld : net.loads) total_pd += ld.pd;
    if (shedding) {
        cap = lp.load_cap * net.total_p_max();
        rows.push_back({Ineq::load_cap, 0, cap});
    }
    const int mI = static_cast<int>(rows.size());

    // start point
    Eigen::VectorXd z = Eigen::VectorXd::Zero(nz);
    for (int i = 0; i < n; ++i) z[v_v + i] = (net.buses[i].v_min + net.buses[i].v_max) / 2;
    for (int g = 0; g < ng; ++g) {
        const PuGen& gen = net.gens[g];
        const double lo = std::min(gen.p_min, gen.p_max);
        z[v_pg + g] = (lo + gen.p_max) / 2;
        z[v_qg + g] = (gen.q_min + gen.q_max) / 2;
    }
    if (warm) {
        for (int i = 0; i < n && i < static_cast<int>(warm->va.size()); ++i)
            z[v_th + i] = warm->va[i];
        for (int g = 0; g < ng && g < static_cast<int>(warm->pg.size()); ++g) {
            const PuGen& gen = net.gens[g];
            const double lo = std::min(gen.p_min, gen.p_max);
            const double pad = 0.01 * std::max(gen.p_max - lo, 1e-3);
            z[v_pg + g] = std::clamp(warm->pg[g], lo + pad, std::max(gen.p_max - pad, lo + pad));
        }
    }
    for (int d = 0; d < nl; ++d) {
        z[v_dc + 4 * d + 0] = 0.01 * net.dclinks[d].p_max;
        z[v_dc + 4 * d + 1] = 0.01 * net.dclinks[d].p_max;
        z[v_dc + 4 * d + 2] = (net.dclinks[d].q_min_f + net.dclinks[d].q_max_f) / 2;
        z[v_dc + 4 * d + 3] = (net.dclinks[d].q_min_t + net.dclinks[d].q_max_t) / 2;
    }
    if (shedding) {
        // start with uniform shedding when the cap already binds
        const double over = std::max(total_pd - cap, 0.0);
        for (int l = 0; l < ns; ++l) {
            const double pd = std::max(net.loads[l].pd, 0.0);
            z[v_sh + l] = total_pd > 0 ? std::min(0.99 * pd, 1.02 * over * pd / total_pd) : 0.0;
        }
    }

    auto evaluate = [&](const Eigen::VectorXd& zz, bool with_hess, Eval& ev) {
        ev.grad = Eigen::VectorXd::Zero(nz);
        ev.cE = Eigen::VectorXd::Zero(mE);
        ev.cI = Eigen::VectorXd::Zero(mI);
        ev.jE.clear();
        ev.jI.clear();
        ev.f = 0;

        for (int g = 0; g < ng; ++g) {
            const PuGen& gen = net.gens[g];
            const double pg = zz[v_pg + g];
            ev.f += (gen.c2 * pg * pg + gen.c1 * pg) / fscale;
            ev.grad[v_pg + g] = (2 * gen.c2 * pg + gen.c1) / fscale;
        }
        for (int l = 0; l < ns; ++l) {
            ev.f += penalty * zz[v_sh + l] / fscale;
            ev.grad[v_sh + l] += penalty / fscale;
        }

        // equalities: slack angle, then P/Q balance
        ev.cE[0] = zz[v_th + net.slack];
        ev.jE.emplace_back(0, v_th + net.slack, 1.0);
        const int rP = 1, rQ = 1 + n;
        ev.fl.assign(nb, acflow::Flow4{});
        for (int e = 0; e < nb; ++e) {
            const PuBranch& br = net.branches[e];
            acflow::branch_flows(br, zz[v_th + br.from], zz[v_th + br.to], zz[v_v + br.from],
                                 zz[v_v + br.to], with_hess, ev.fl[e]);
            const acflow::Flow4& fl = ev.fl[e];
            const int cols[4] = {v_th + br.from, v_th + br.to, v_v + br.from, v_v + br.to};
            const int brows[4] = {rP + br.from, rQ + br.from, rP + br.to, rQ + br.to};
            for (int f = 0; f < 4; ++f) {
                ev.cE[brows[f]] += fl.val[f];
                for (int v = 0; v < 4; ++v)
                    if (fl.grad[f][v] != 0.0) ev.jE.emplace_back(brows[f], cols[v], fl.grad[f][v]);
            }
        }
        for (int i = 0; i < n; ++i) {
            const double vi = zz[v_v + i];
            ev.cE[rQ + i] -= bs[i] * vi * vi;
            if (bs[i] != 0.0) ev.jE.emplace_back(rQ + i, v_v + i, -2 * bs[i] * vi);
        }
        for (int g = 0; g < ng; ++g) {
            ev.cE[rP + net.gens[g].bus] -= zz[v_pg + g];
            ev.cE[rQ + net.gens[g].bus] -= zz[v_qg + g];
            ev.jE.emplace_back(rP + net.gens[g].bus, v_pg + g, -1.0);
            ev.jE.emplace_back(rQ + net.gens[g].bus, v_qg + g, -1.0);
        }
        for (size_t l = 0; l < net.loads.size(); ++l) {
            const PuLoad& ld = net.loads[l];
            double served = ld.pd, qserved = ld.qd;
            if (shedding) {
                const double sh = zz[v_sh + static_cast<int>(l)];
                served = ld.pd - sh;
                const double qslope = ld.pd > 0 ? ld.qd / ld.pd : 0.0;
                qserved = ld.qd - qslope * sh;
                ev.jE.emplace_back(rP + ld.bus, v_sh + static_cast<int>(l), -1.0);
                if (qslope != 0.0)
                    ev.jE.emplace_back(rQ + ld.bus, v_sh + static_cast<int>(l), -qslope);
            }
            ev.cE[rP + ld.bus] += served;
            ev.cE[rQ + ld.bus] += qserved;
        }
        for (int d = 0; d < nl; ++d) {
            const PuDcLink& dc = net.dclinks[d];
            const double pp = zz[v_dc + 4 * d], pn = zz[v_dc + 4 * d + 1];
            ev.cE[rP + dc.from] += pp - (1 - dc.loss1) * pn;
            ev.cE[rP + dc.to] += pn - (1 - dc.loss1) * pp + dc.loss0;
            ev.jE.emplace_back(rP + dc.from, v_dc + 4 * d, 1.0);
            ev.jE.emplace_back(rP + dc.from, v_dc + 4 * d + 1, -(1 - dc.loss1));
            ev.jE.emplace_back(rP + dc.to, v_dc + 4 * d, -(1 - dc.loss1));
            ev.jE.emplace_back(rP + dc.to, v_dc + 4 * d + 1, 1.0);
            ev.cE[rQ + dc.from] -= zz[v_dc + 4 * d + 2];
            ev.cE[rQ + dc.to] -= zz[v_dc + 4 * d + 3];
            ev.jE.emplace_back(rQ + dc.from, v_dc + 4 * d + 2, -1.0);
            ev.jE.emplace_back(rQ + dc.to, v_dc + 4 * d + 3, -1.0);
        }

        // inequalities
        for (int j = 0; j < mI; ++j) {
            const IneqRow& row = rows[j];
            switch (row.kind) {
                case Ineq::var_upper:
                    ev.cI[j] = zz[row.a] - row.bound;
                    ev.jI.emplace_back(j, row.a, 1.0);
                    break;
                case Ineq::var_lower:
                    ev.cI[j] = row.bound - zz[row.a];
                    ev.jI.emplace_back(j, row.a, -1.0);
                    break;
                case Ineq::thermal_f:
                case Ineq::thermal_t: {
                    const PuBranch& br = net.branches[row.a];
                    const acflow::Flow4& fl = ev.fl[row.a];
                    const int p = row.kind == Ineq::thermal_f ? 0 : 2;
                    const int q = p + 1;
                    ev.cI[j] = fl.val[p] * fl.val[p] + fl.val[q] * fl.val[q] -
                               row.bound * row.bound;
                    const int cols[4] = {v_th + br.from, v_th + br.to, v_v + br.from,
                                         v_v + br.to};
                    for (int v = 0; v < 4; ++v) {
                        const double gv = 2 * (fl.val[p] * fl.grad[p][v] + fl.val[q] * fl.grad[q][v]);
                        if (gv != 0.0) ev.jI.emplace_back(j, cols[v], gv);
                    }
                    break;
                }
                case Ineq::angle_pos: {
                    const PuBranch& br = net.branches[row.a];
                    ev.cI[j] = zz[v_th + br.from] - zz[v_th + br.to] - row.bound;
                    ev.jI.emplace_back(j, v_th + br.from, 1.0);
                    ev.jI.emplace_back(j, v_th + br.to, -1.0);
                    break;
                }
                case Ineq::angle_neg: {
                    const PuBranch& br = net.branches[row.a];
                    ev.cI[j] = zz[v_th + br.to] - zz[v_th + br.from] - row.bound;
                    ev.jI.emplace_back(j, v_th + br.to, 1.0);
                    ev.jI.emplace_back(j, v_th + br.from, -1.0);
                    break;
                }
                case Ineq::load_cap: {
                    double srv = 0;
                    for (int l = 0; l < ns; ++l) {
                        srv += std::max(net.loads[l].pd, 0.0) - zz[v_sh + l];
                        ev.jI.emplace_back(j, v_sh + l, -1.0);
                    }
                    ev.cI[j] = srv - row.bound;
                    break;
                }
            }
        }
    };

    Eval ev;
    evaluate(z, true, ev);

    Eigen::VectorXd s(mI), w(mI), y = Eigen::VectorXd::Zero(mE);
    double mu = kMu0;
    for (int j = 0; j < mI; ++j) {
        s[j] = std::max(-ev.cI[j], kSlackMin);
        w[j] = mu / s[j];
    }

    OpfSolution sol;
    sol.formulation = "ac";
    sol.level = lp.name;
    sol.ac1 = lp.ac1;

    Eigen::SparseMatrix<double> jE(mE, nz), jI(mI, nz);
    double best_err = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_z = z;
    double reg = 0.0;
    bool timed_out = false, num_fail = false;
    int iter = 0;

    auto kkt_error = [&](const Eval& e) {
        jE.setFromTriplets(e.jE.begin(), e.jE.end());
        jI.setFromTriplets(e.jI.begin(), e.jI.end());
        Eigen::VectorXd lag = e.grad + jE.transpose() * y + jI.transpose() * w;
        double stat = lag.lpNorm<Eigen::Infinity>();
        double feasE = e.cE.size() ? e.cE.lpNorm<Eigen::Infinity>() : 0.0;
        double feasI = 0, comp = 0;
        for (int j = 0; j < mI; ++j) {
            feasI = std::max(feasI, e.cI[j]);
            comp = std::max(comp, std::abs(s[j] * w[j]));
        }
        return std::max({stat, feasE, feasI, comp});
    };

    for (;; ++iter) {
        const double err = kkt_error(ev);  // refreshes jE/jI from ev
        if (err < best_err) {
            best_err = err;
            best_z = z;
        }
        if (err <= op.tol) {
            sol.status = SolveStatus::locally_solved;
            break;
        }
        if (iter >= op.max_iterations) {
            sol.status = best_err <= op.tol_almost ? SolveStatus::almost_locally_solved
                                                   : SolveStatus::iteration_limit;
            break;
        }
        if (Clock::now() > deadline) {
            timed_out = true;
            sol.status = best_err <= op.tol_almost ? SolveStatus::almost_locally_solved
                                                   : SolveStatus::timeout;
            break;
        }

        // barrier parameter: monotone decrease once the mu-system is solved
        double err_mu = 0;
        {
            Eigen::VectorXd lag = ev.grad + jE.transpose() * y + jI.transpose() * w;
            err_mu = lag.lpNorm<Eigen::Infinity>();
            err_mu = std::max(err_mu, ev.cE.lpNorm<Eigen::Infinity>());
            for (int j = 0; j < mI; ++j) {
                err_mu = std::max(err_mu, std::abs(ev.cI[j] + s[j]));
                err_mu = std::max(err_mu, std::abs(s[j] * w[j] - mu));
            }
        }
        if (err_mu <= mu) mu = std::max(kMuLinear * mu, op.tol / 100);

        // condensed KKT: M = H + JI' diag(w/s) JI, bordered by JE
        std::vector<Trip> trip;
        trip.reserve(ev.jE.size() + ev.jI.size() + nb * 32 + nz + mE);
        for (int g = 0; g < ng; ++g)
            trip.emplace_back(v_pg + g, v_pg + g, 2 * net.gens[g].c2 / fscale);
        const int rP = 1, rQ = 1 + n;
        for (int e = 0; e < nb; ++e) {
            const PuBranch& br = net.branches[e];
            const acflow::Flow4& fl = ev.fl[e];
            const int cols[4] = {v_th + br.from, v_th + br.to, v_v + br.from, v_v + br.to};
            double lam[4] = {y[rP + br.from], y[rQ + br.from], y[rP + br.to], y[rQ + br.to]};
            double hl[4][4] = {};
            for (int f = 0; f < 4; ++f) {
                if (lam[f] == 0.0) continue;
                for (int a = 0; a < 4; ++a)
                    for (int c = 0; c < 4; ++c) hl[a][c] += lam[f] * fl.hess[f][a][c];
            }
            for (int a = 0; a < 4; ++a)
                for (int c = 0; c < 4; ++c)
                    if (hl[a][c] != 0.0) trip.emplace_back(cols[a], cols[c], hl[a][c]);
        }
        for (int i = 0; i < n; ++i)
            if (bs[i] != 0.0) trip.emplace_back(v_v + i, v_v + i, -2 * bs[i] * y[rQ + i]);
        for (int j = 0; j < mI; ++j) {
            const IneqRow& row = rows[j];
            if ((row.kind == Ineq::thermal_f || row.kind == Ineq::thermal_t) && w[j] != 0.0) {
                const PuBranch& br = net.branches[row.a];
                const acflow::Flow4& fl = ev.fl[row.a];
                const int p = row.kind == Ineq::thermal_f ? 0 : 2;
                const int q = p + 1;
                const int cols[4] = {v_th + br.from, v_th + br.to, v_v + br.from, v_v + br.to};
                for (int a = 0; a < 4; ++a)
                    for (int c = 0; c < 4; ++c) {
                        const double h =
                            2 * w[j] *
                            (fl.grad[p][a] * fl.grad[p][c] + fl.val[p] * fl.hess[p][a][c] +
                             fl.grad[q][a] * fl.grad[q][c] + fl.val[q] * fl.hess[q][a][c]);
                        if (h != 0.0) trip.emplace_back(cols[a], cols[c], h);
                    }
            }
        }
        // JI' diag(w/s) JI via dense per-row outer products on the sparse rows
        {
            std::vector<std::vector<std::pair<int, double>>> byrow(mI);
            for (const Trip& t : ev.jI) byrow[t.row()].emplace_back(t.col(), t.value());
            for (int j = 0; j < mI; ++j) {
                const double sig = w[j] / s[j];
                for (const auto& [ca, va] : byrow[j])
                    for (const auto& [cb, vb] : byrow[j])
                        trip.emplace_back(ca, cb, sig * va * vb);
            }
        }
        for (const Trip& t : ev.jE) {
            trip.emplace_back(nz + t.row(), t.col(), t.value());
            trip.emplace_back(t.col(), nz + t.row(), t.value());
        }

        // rhs
        Eigen::VectorXd rI = ev.cI + s;
        Eigen::VectorXd tmp(mI);
        for (int j = 0; j < mI; ++j) tmp[j] = mu / s[j] + w[j] / s[j] * rI[j];
        Eigen::VectorXd rhs(nz + mE);
        rhs.head(nz) = -(ev.grad + jE.transpose() * y + jI.transpose() * tmp);
        rhs.tail(mE) = -ev.cE;

        // factor with escalating primal regularization
        Eigen::VectorXd step;
        bool ok = false;
        double delta = reg;
        for (int attempt = 0; attempt < 12 && !ok; ++attempt) {
            std::vector<Trip> trip2 = trip;
            for (int i = 0; i < nz; ++i) trip2.emplace_back(i, i, delta);
            for (int i = 0; i < mE; ++i) trip2.emplace_back(nz + i, nz + i, -1e-10);
            Eigen::SparseMatrix<double> kkt(nz + mE, nz + mE);
            kkt.setFromTriplets(trip2.begin(), trip2.end());
            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
            lu.compute(kkt);
            if (lu.info() == Eigen::Success) {
                step = lu.solve(rhs);
                ok = step.allFinite();
            }
            if (!ok) delta = delta == 0.0 ? 1e-8 : delta * 10;
        }
        if (!ok) {
            num_fail = true;
            sol.status = best_err <= op.tol_almost ? SolveStatus::almost_locally_solved
                                                   : SolveStatus::failed;
            break;
        }
        reg = delta > 0 ? delta / 10 : 0.0;

        Eigen::VectorXd dz = step.head(nz);
        Eigen::VectorXd dy = step.tail(mE);
        Eigen::VectorXd jidz = jI * dz;
        Eigen::VectorXd ds(mI), dw(mI);
        for (int j = 0; j < mI; ++j) {
            ds[j] = -rI[j] - jidz[j];
            dw[j] = mu / s[j] - w[j] - w[j] / s[j] * ds[j];
        }

        double ap = 1.0, ad = 1.0;
        for (int j = 0; j < mI; ++j) {
            if (ds[j] < 0) ap = std::min(ap, -kTau * s[j] / ds[j]);
            if (dw[j] < 0) ad = std::min(ad, -kTau * w[j] / dw[j]);
        }

        // Armijo backtracking on the l1 merit
        const double nu =
            std::max({10.0, 2 * y.lpNorm<Eigen::Infinity>(), 2 * w.lpNorm<Eigen::Infinity>()});
        const double infeas0 = ev.cE.lpNorm<1>() + rI.lpNorm<1>();
        const double phi0 = ev.f + nu * infeas0;
        const double dphi = ev.grad.dot(dz) - nu * infeas0;
        Eval trial;
        double alpha = ap;
        for (int bt = 0; bt <= kMaxBacktrack; ++bt) {
            evaluate(z + alpha * dz, false, trial);
            Eigen::VectorXd snew = s + alpha * ds;
            double infeas = trial.cE.lpNorm<1>() + (trial.cI + snew).lpNorm<1>();
            if (trial.f + nu * infeas <= phi0 + kArmijo * alpha * std::min(dphi, 0.0)) break;
            if (bt == kMaxBacktrack) break;  // accept the damped step anyway
            alpha /= 2;
        }

        z += alpha * dz;
        s += alpha * ds;
        y += ad * dy;
        w += ad * dw;
        for (int j = 0; j < mI; ++j) {
            s[j] = std::max(s[j], 1e-14);
            w[j] = std::max(w[j], 1e-14);
        }
        evaluate(z, true, ev);
    }

    // extract the best point seen
    const Eigen::VectorXd& zb =
        (sol.status == SolveStatus::locally_solved || best_err >= 1e30) ? z : best_z;
    sol.kkt_residual = sol.status == SolveStatus::locally_solved
                           ? kkt_error(ev)
                           : best_err;
    sol.iterations = iter;
    (void)timed_out;
    (void)num_fail;

    sol.va.assign(n, 0.0);
    sol.vm.assign(n, 1.0);
    for (int i = 0; i < n; ++i) {
        sol.va[i] = zb[v_th + i];
        sol.vm[i] = zb[v_v + i];
    }
    sol.pg.assign(ng, 0.0);
    sol.qg.assign(ng, 0.0);
    for (int g = 0; g < ng; ++g) {
        sol.pg[g] = zb[v_pg + g];
        sol.qg[g] = zb[v_qg + g];
    }
    sol.dc_flow.assign(nl, 0.0);
    for (int d = 0; d < nl; ++d) sol.dc_flow[d] = zb[v_dc + 4 * d] - zb[v_dc + 4 * d + 1];
    sol.served.assign(net.loads.size(), 0.0);
    for (size_t l = 0; l < net.loads.size(); ++l) {
        double sh = shedding ? zb[v_sh + static_cast<int>(l)] : 0.0;
        sol.served[l] = std::max(net.loads[l].pd - sh, 0.0);
    }
    finish_solution(net, sol);
    return sol;
}

}  // namespace gridforge::opf

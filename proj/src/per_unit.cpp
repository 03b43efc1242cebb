#include "gridforge/per_unit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace gridforge::opf {

double PuNetwork::total_pd() const {
    double t = 0;
    for (const auto& l : loads) t += l.pd;
    return t;
}

double PuNetwork::total_p_max() const {
    double t = 0;
    for (const auto& g : gens) t += g.p_max;
    return t;
}

PuNetwork to_per_unit(const topo::NetworkModel& model, const tables::Tables& tbl) {
    PuNetwork net;
    net.base_mva = model.base_mva;
    const double s = model.base_mva;

    std::map<int, int> idx;
    for (const auto& b : model.buses) {
        idx[b.id] = static_cast<int>(net.buses.size());
        net.buses.push_back({b.id, b.base_kv, b.v_min, b.v_max, 0.0, false});
    }
    for (const auto& sh : model.shunts) {
        auto it = idx.find(sh.bus);
        if (it == idx.end()) throw std::runtime_error("shunt on unknown bus");
        net.buses[it->second].bs += sh.bs_mvar / s;
    }
    for (const auto& br : model.branches) {
        auto f = idx.find(br.from), t = idx.find(br.to);
        if (f == idx.end() || t == idx.end()) throw std::runtime_error("branch on unknown bus");
        PuBranch pb;
        pb.from = f->second;
        pb.to = t->second;
        pb.r = br.r_pu;
        pb.x = br.x_pu;
        pb.b = br.b_pu;
        pb.rate_a = br.rate_mva / s;
        pb.ang_max_rad = br.angle_limit_deg * M_PI / 180.0;
        pb.transformer = br.kind == topo::BranchKind::transformer;
        pb.id = br.id;
        net.branches.push_back(pb);
    }
    for (const auto& g : model.gens) {
        auto it = idx.find(g.bus);
        if (it == idx.end()) throw std::runtime_error("generator on unknown bus");
        PuGen pg;
        pg.bus = it->second;
        pg.p_min = g.p_min_mw / s;
        pg.p_max = std::min(g.p_max_mw, g.derated_p_max_mw) / s;
        pg.q_min = g.q_min_mvar / s;
        pg.q_max = g.q_max_mvar / s;
        pg.c2 = g.c2 * s * s;
        pg.c1 = g.c1 * s;
        pg.c0 = g.c0;
        pg.zero_marginal = tbl.zero_marginal_display.count(g.display_fuel) > 0;
        pg.dispatchable = tbl.renewable_display.count(g.display_fuel) == 0;
        pg.id = g.id;
        net.buses[it->second].has_gen = true;
        net.gens.push_back(pg);
    }
    for (const auto& l : model.loads) {
        auto it = idx.find(l.bus);
        if (it == idx.end()) throw std::runtime_error("load on unknown bus");
        net.loads.push_back({it->second, l.p_mw / s, l.q_mvar / s, l.id});
    }
    for (const auto& dc : model.dclinks) {
        auto f = idx.find(dc.from), t = idx.find(dc.to);
        if (f == idx.end() || t == idx.end()) throw std::runtime_error("dcline on unknown bus");
        PuDcLink pd;
        pd.from = f->second;
        pd.to = t->second;
        pd.p_max = dc.p_max_mw / s;
        pd.loss0 = dc.loss0_mw / s;
        pd.loss1 = dc.loss1;
        pd.q_min_f = dc.q_min_f / s;
        pd.q_max_f = dc.q_max_f / s;
        pd.q_min_t = dc.q_min_t / s;
        pd.q_max_t = dc.q_max_t / s;
        pd.id = dc.id;
        net.dclinks.push_back(pd);
    }

    auto sit = idx.find(model.slack_bus);
    if (sit == idx.end()) throw std::runtime_error("slack bus not present in model");
    net.slack = sit->second;
    return net;
}

int enforce_impedance_consistency(PuNetwork& net) {
    int clamped = 0;
    const double cap_angle = M_PI / 2.0;
    for (auto& br : net.branches) {
        if (br.x <= 0 || br.rate_a <= 0) continue;
        const double reachable = cap_angle / br.x;
        if (br.rate_a > reachable) {
            br.rate_a = reachable;
            ++clamped;
        }
    }
    return clamped;
}

std::vector<DecommitEvent> decommit_generators(PuNetwork& net, Diagnostics& diag) {
    std::vector<DecommitEvent> events;
    const double pd = net.total_pd();

    auto total_p_min = [&]() {
        double t = 0;
        for (const auto& g : net.gens) t += g.p_min;
        return t;
    };

    while (total_p_min() > pd + 1e-12) {
        PuGen* pick = nullptr;
        for (auto& g : net.gens) {
            if (g.p_min <= 0 || g.zero_marginal || !g.dispatchable) continue;
            if (!pick || g.c1 > pick->c1 + 1e-12 ||
                (std::abs(g.c1 - pick->c1) <= 1e-12 &&
                 (g.p_max < pick->p_max - 1e-12 ||
                  (std::abs(g.p_max - pick->p_max) <= 1e-12 && g.id < pick->id))))
                pick = &g;
        }
        if (!pick) {
            diag.warn("minimum-output total exceeds demand but no unit can be decommitted");
            break;
        }
        events.push_back({pick->id, pick->p_min});
        pick->p_min = 0;
        diag.count("decommit.units");
    }
    return events;
}

}  // namespace gridforge::opf

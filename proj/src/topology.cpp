#include "gridforge/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "gridforge/parameters.hpp"

namespace gridforge::topo {

namespace {

constexpr double kMinTransmissionKv = 69.0;
constexpr double kSplitRatio = 1.2;        // multi-voltage bus split (20%)
constexpr double kXfmrMinKvDiff = 10.0;     // transformer inference, absolute
constexpr double kXfmrMinRatio = 1.2;       // transformer inference, ratio
constexpr double kCatchAllRatio = 1.1;      // residual kv-mismatch conversion (10%)
constexpr double kAdhocClusterM = 50.0;
constexpr double kGenAssignM = 1000.0;
constexpr double kEiaMatchM = 5000.0;
constexpr double kPolygonBufferDeg = 0.0006;
constexpr double kPointBufferDeg = 0.0009;
constexpr double kEhvBridgeKv = 345.0;
constexpr double kMinSectionKm = 1e-3;      // zero-length guard for parameter math

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);  // lowest index is root
    }
};

long long qkv(double kv) { return std::llround(kv * 1000.0); }  // key in volts

struct MergeKey {
    geo::SnapKey at;
    long long volts = 0;
    int circuit_idx = 0;
    bool hvdc = false;
    bool operator==(const MergeKey&) const = default;
};

struct MergeKeyHash {
    std::size_t operator()(const MergeKey& k) const {
        std::size_t h = geo::SnapKeyHash()(k.at);
        h = h * 1000003u + static_cast<std::size_t>(k.volts);
        h = h * 31u + static_cast<std::size_t>(k.circuit_idx * 2 + (k.hvdc ? 1 : 0));
        return h;
    }
};

// Point -> containing facility (smallest index wins), grid-accelerated.
class FacilityLocator {
  public:
    FacilityLocator(const std::vector<ingest::Facility>& facilities,
                    const std::vector<geo::Footprint>& footprints)
        : facilities_(facilities), footprints_(footprints) {
        for (std::size_t i = 0; i < footprints.size(); ++i) {
            const auto& fp = footprints[i];
            index_.insert(fp.center, static_cast<int>(i));
            double extent = fp.buffer_deg;
            if (fp.is_polygon) {
                for (const auto& v : fp.poly.ring) {
                    extent = std::max(extent, std::max(std::abs(v.lat - fp.center.lat),
                                                       std::abs(v.lon - fp.center.lon)) +
                                                  fp.buffer_deg);
                }
            }
            radius_ = std::max(radius_, extent);
        }
    }

    int facility_at(const geo::LatLon& p) const {
        for (int id : index_.query(p, radius_ + 0.001))
            if (footprints_[id].contains(p)) return id;
        return -1;
    }

    const std::vector<ingest::Facility>& facilities_;
    const std::vector<geo::Footprint>& footprints_;
    geo::GridIndex index_{0.01};
    double radius_ = 0.0;
};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool hvdc_signals(const ingest::LineSection& s, const tables::Tables& tbl) {
    if (s.frequency_dc) return true;
    if (s.pm_voltage) return true;
    if (s.dc_type_tag) return true;
    const bool no_ac_frequency = !s.has_frequency_tag || s.frequency_dc;
    if (s.cables >= 1 && s.cables <= 2 && !s.voltages_kv.empty() &&
        s.voltages_kv.front() > tbl.cable_signal_min_kv && no_ac_frequency)
        return true;
    if (!s.name.empty()) {
        const std::string n = lower(s.name);
        for (const auto& proj : tbl.hvdc_projects)
            if (n.find(proj) != std::string::npos) return true;
    }
    return false;
}

double section_length_km(const ingest::LineSection& s) {
    return std::max(geo::polyline_length_km(s.path), kMinSectionKm);
}

}  // namespace

std::string to_string(CircuitClass c) {
    switch (c) {
        case CircuitClass::inter_facility: return "inter_facility";
        case CircuitClass::loop: return "loop";
        case CircuitClass::self_loop: return "self_loop";
        case CircuitClass::single_facility: return "single_facility";
        case CircuitClass::isolated: return "isolated";
        case CircuitClass::tap: return "tap";
    }
    return "unknown";
}

const BusRec* NetworkModel::bus_by_id(int id) const {
    auto it = std::lower_bound(buses.begin(), buses.end(), id,
                               [](const BusRec& b, int v) { return b.id < v; });
    return it != buses.end() && it->id == id ? &*it : nullptr;
}

InferenceResult infer_voltages(std::vector<ingest::LineSection>& sections,
                               const std::vector<ingest::Facility>& facilities,
                               const std::vector<geo::Footprint>& footprints) {
    InferenceResult res;
    for (const auto& s : sections)
        if (s.voltage_tagged) ++res.tagged;

    // endpoint key -> incident section indices
    std::unordered_map<geo::SnapKey, std::vector<int>, geo::SnapKeyHash> at;
    for (std::size_t i = 0; i < sections.size(); ++i) {
        if (sections[i].path.size() < 2) continue;
        at[geo::snap(sections[i].path.front())].push_back(static_cast<int>(i));
        at[geo::snap(sections[i].path.back())].push_back(static_cast<int>(i));
    }

    // substation voltages available at each endpoint key (static)
    FacilityLocator loc(facilities, footprints);
    std::unordered_map<geo::SnapKey, std::vector<double>, geo::SnapKeyHash> fac_votes;
    for (const auto& [key, incident] : at) {
        (void)incident;
        geo::LatLon p{key.lat * 1e-6, key.lon * 1e-6};
        int f = loc.facility_at(p);
        if (f >= 0 && facilities[f].kind == ingest::FacilityKind::substation &&
            !facilities[f].voltages_kv.empty())
            fac_votes[key] = facilities[f].voltages_kv;
    }

    std::vector<bool> resolved(sections.size());
    for (std::size_t i = 0; i < sections.size(); ++i) resolved[i] = !sections[i].voltages_kv.empty();

    for (int round = 0; round < 10; ++round) {
        std::vector<std::pair<int, double>> adoptions;
        for (std::size_t i = 0; i < sections.size(); ++i) {
            if (resolved[i] || sections[i].path.size() < 2) continue;
            const geo::SnapKey keys[2] = {geo::snap(sections[i].path.front()),
                                          geo::snap(sections[i].path.back())};

            // per-endpoint ballots (flattened) and voters (sets), section voters deduped
            std::vector<double> ballots[2];
            std::set<int> neighbor_ids;
            std::vector<const std::vector<double>*> voters;
            for (int e = 0; e < 2; ++e) {
                auto it = at.find(keys[e]);
                if (it != at.end()) {
                    for (int j : it->second) {
                        if (j == static_cast<int>(i) || !resolved[j]) continue;
                        for (double v : sections[j].voltages_kv) ballots[e].push_back(v);
                        if (neighbor_ids.insert(j).second)
                            voters.push_back(&sections[j].voltages_kv);
                    }
                }
                auto fv = fac_votes.find(keys[e]);
                if (fv != fac_votes.end()) {
                    for (double v : fv->second) ballots[e].push_back(v);
                    voters.push_back(&fv->second);
                }
            }
            if (keys[0] == keys[1]) {  // degenerate section, one endpoint pool
                ballots[1].clear();
            }

            // rule 1: unanimity at an endpoint; conflicting unanimous endpoints abstain
            double cand[2] = {0, 0};
            for (int e = 0; e < 2; ++e) {
                if (ballots[e].empty()) continue;
                bool all_same = std::all_of(ballots[e].begin(), ballots[e].end(),
                                            [&](double v) { return qkv(v) == qkv(ballots[e][0]); });
                if (all_same) cand[e] = ballots[e][0];
            }
            double adopted = 0;
            if (cand[0] > 0 && cand[1] > 0) {
                if (qkv(cand[0]) == qkv(cand[1])) adopted = cand[0];
            } else if (cand[0] > 0 || cand[1] > 0) {
                adopted = std::max(cand[0], cand[1]);
            }

            // rule 2: >= 3 tagged neighbor sections, >= 2/3 voter agreement
            if (adopted <= 0 && neighbor_ids.size() >= 3) {
                std::set<long long> candidates;
                for (const auto* v : voters)
                    for (double kv : *v) candidates.insert(qkv(kv));
                double best_v = 0;
                double best_share = 0;
                for (long long cq : candidates) {
                    int agree = 0;
                    for (const auto* v : voters)
                        if (std::any_of(v->begin(), v->end(),
                                        [&](double kv) { return qkv(kv) == cq; }))
                            ++agree;
                    double share = static_cast<double>(agree) / voters.size();
                    double kv = cq / 1000.0;
                    if (share > best_share + 1e-12 ||
                        (std::abs(share - best_share) <= 1e-12 && kv > best_v)) {
                        best_share = share;
                        best_v = kv;
                    }
                }
                if (best_share + 1e-9 >= 2.0 / 3.0) adopted = best_v;
            }

            if (adopted > 0) adoptions.emplace_back(static_cast<int>(i), adopted);
        }
        if (adoptions.empty()) break;
        ++res.iterations;
        for (auto [idx, kv] : adoptions) {
            sections[idx].voltages_kv = {kv};
            resolved[idx] = true;
            ++res.inferred;
        }
    }
    for (std::size_t i = 0; i < sections.size(); ++i)
        if (!resolved[i]) ++res.unresolved;
    return res;
}

long long filter_sections(std::vector<ingest::LineSection>& sections, Diagnostics& diag) {
    long long dropped_unresolved = 0, dropped_low = 0;
    auto end = std::remove_if(sections.begin(), sections.end(), [&](const ingest::LineSection& s) {
        if (s.voltages_kv.empty()) {
            ++dropped_unresolved;
            return true;
        }
        if (s.voltages_kv.front() < kMinTransmissionKv) {
            ++dropped_low;
            return true;
        }
        return false;
    });
    sections.erase(end, sections.end());
    if (dropped_unresolved) diag.count("filter.dropped_unresolved", dropped_unresolved);
    if (dropped_low) diag.count("filter.dropped_below_69kv", dropped_low);
    return static_cast<long long>(sections.size());
}

std::vector<CircuitRecord> resolve_circuit_counts(const std::vector<ingest::LineSection>& sections,
                                                  const tables::Tables& tbl, Diagnostics& diag) {
    std::vector<CircuitRecord> out;
    for (std::size_t i = 0; i < sections.size(); ++i) {
        const auto& s = sections[i];
        if (s.voltages_kv.empty()) continue;
        int declared;
        if (s.circuits >= 1) {
            declared = s.circuits;
        } else if (s.cables >= 1) {
            declared = std::max(1, s.cables / 3);
            if (s.cables % 3 != 0) diag.count("circuits.cables_not_multiple_of_3");
        } else {
            declared = 1;
        }
        const int v_count = static_cast<int>(s.voltages_kv.size());
        const bool hvdc = hvdc_signals(s, tbl);
        // trust_voltage: one record per listed voltage; surplus declared circuits
        // become parallels at the highest voltage
        for (int v = 0; v < v_count; ++v)
            out.push_back({static_cast<int>(i), s.voltages_kv[v], 0, hvdc});
        for (int extra = 0; extra < declared - v_count; ++extra)
            out.push_back({static_cast<int>(i), s.voltages_kv[0], extra + 1, hvdc});
        if (v_count != declared) diag.count("circuits.voltage_count_overrides");
    }
    return out;
}

std::vector<geo::Footprint> build_footprints(const std::vector<ingest::Facility>& facilities) {
    std::vector<geo::Footprint> out;
    out.reserve(facilities.size());
    for (const auto& f : facilities) {
        if (f.is_polygon)
            out.push_back(geo::make_polygon_footprint(f.poly, kPolygonBufferDeg));
        else
            out.push_back(geo::make_point_footprint(f.center, kPointBufferDeg));
    }
    return out;
}

std::vector<Circuit> merge_lines(const std::vector<ingest::LineSection>& sections,
                                 const std::vector<CircuitRecord>& records) {
    UnionFind uf(static_cast<int>(records.size()));
    std::unordered_map<MergeKey, int, MergeKeyHash> bucket;
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        const auto& path = sections[rec.section].path;
        if (path.size() < 2) continue;
        for (const auto& end : {path.front(), path.back()}) {
            MergeKey key{geo::snap(end), qkv(rec.voltage_kv), rec.circuit_idx, rec.hvdc};
            auto [it, inserted] = bucket.try_emplace(key, static_cast<int>(r));
            if (!inserted) uf.unite(static_cast<int>(r), it->second);
        }
    }

    std::map<int, std::vector<int>> groups;  // root -> record indices
    for (std::size_t r = 0; r < records.size(); ++r)
        groups[uf.find(static_cast<int>(r))].push_back(static_cast<int>(r));

    std::vector<Circuit> out;
    for (auto& [root, members] : groups) {
        (void)root;
        Circuit c;
        c.voltage_kv = records[members[0]].voltage_kv;
        c.circuit_idx = records[members[0]].circuit_idx;
        c.hvdc = records[members[0]].hvdc;
        for (int r : members) c.sections.push_back(records[r].section);
        std::sort(c.sections.begin(), c.sections.end());

        std::map<geo::SnapKey, int> incidence;
        std::map<geo::SnapKey, geo::LatLon> where;
        double under_km = 0;
        for (int s : c.sections) {
            const auto& sec = sections[s];
            const double len = geo::polyline_length_km(sec.path);
            c.route_km += len;
            if (sec.is_underground) under_km += len;
            if (c.name.empty() && !sec.name.empty()) c.name = sec.name;
            for (const auto& end : {sec.path.front(), sec.path.back()}) {
                auto key = geo::snap(end);
                ++incidence[key];
                where.emplace(key, end);
            }
        }
        c.underground = under_km > c.route_km - under_km;

        std::vector<geo::SnapKey> free_keys;
        for (const auto& [key, n] : incidence)
            if (n % 2 == 1) free_keys.push_back(key);
        if (free_keys.empty()) {
            c.cyclic = true;
            c.end_a = c.end_b = where.begin()->second;
        } else {
            c.end_a = where[free_keys.front()];
            c.end_b = where[free_keys.back()];
        }
        out.push_back(std::move(c));
    }

    std::sort(out.begin(), out.end(), [](const Circuit& a, const Circuit& b) {
        if (a.sections != b.sections) return a.sections < b.sections;
        if (qkv(a.voltage_kv) != qkv(b.voltage_kv)) return qkv(a.voltage_kv) > qkv(b.voltage_kv);
        if (a.circuit_idx != b.circuit_idx) return a.circuit_idx < b.circuit_idx;
        return a.hvdc < b.hvdc;
    });
    return out;
}

void classify_circuits(std::vector<Circuit>& circuits,
                       const std::vector<ingest::LineSection>& sections,
                       const std::vector<ingest::Facility>& facilities,
                       const std::vector<geo::Footprint>& footprints) {
    FacilityLocator loc(facilities, footprints);

    // interior vertices (path vertices that are not the group's free ends), per group
    std::unordered_map<geo::SnapKey, std::vector<int>, geo::SnapKeyHash> interior;
    for (std::size_t g = 0; g < circuits.size(); ++g) {
        std::set<geo::SnapKey> ends{geo::snap(circuits[g].end_a), geo::snap(circuits[g].end_b)};
        std::set<geo::SnapKey> verts;
        for (int s : circuits[g].sections)
            for (const auto& p : sections[s].path) verts.insert(geo::snap(p));
        for (const auto& v : verts)
            if (!ends.count(v)) interior[v].push_back(static_cast<int>(g));
    }

    for (std::size_t g = 0; g < circuits.size(); ++g) {
        Circuit& c = circuits[g];
        c.fac_a = loc.facility_at(c.end_a);
        c.fac_b = loc.facility_at(c.end_b);

        bool degenerate = false;
        std::set<int> seen;
        for (int s : c.sections) {
            if (!seen.insert(s).second) degenerate = true;
            if (geo::snap(sections[s].path.front()) == geo::snap(sections[s].path.back()))
                degenerate = true;
        }
        if (degenerate) {
            c.cls = CircuitClass::self_loop;
            continue;
        }
        if (c.cyclic || (c.fac_a >= 0 && c.fac_a == c.fac_b)) {
            c.cls = CircuitClass::loop;
            continue;
        }
        if (c.fac_a >= 0 && c.fac_b >= 0) {
            c.cls = CircuitClass::inter_facility;
            continue;
        }
        bool taps = false;
        for (const auto& [end, fac] : {std::pair{c.end_a, c.fac_a}, {c.end_b, c.fac_b}}) {
            if (fac >= 0) continue;
            auto it = interior.find(geo::snap(end));
            if (it == interior.end()) continue;
            for (int owner : it->second)
                if (owner != static_cast<int>(g)) taps = true;
        }
        if (taps)
            c.cls = CircuitClass::tap;
        else if (c.fac_a >= 0 || c.fac_b >= 0)
            c.cls = CircuitClass::single_facility;
        else
            c.cls = CircuitClass::isolated;
    }
}

std::vector<Circuit> collect_inter_facility(const std::vector<Circuit>& circuits) {
    std::vector<Circuit> out;
    for (const auto& c : circuits)
        if (c.cls == CircuitClass::inter_facility) out.push_back(c);
    return out;
}

BusBuild create_buses(const std::vector<Circuit>& circuits,
                      const std::vector<ingest::Facility>& facilities,
                      const std::vector<geo::Footprint>& footprints,
                      const tables::Tables& tbl) {
    (void)footprints;
    BusBuild out;

    struct EndRef {
        int circuit, side;
        geo::LatLon loc;
        int fac;
        double kv;
    };
    std::vector<EndRef> ends;
    for (std::size_t i = 0; i < circuits.size(); ++i) {
        const auto& c = circuits[i];
        ends.push_back({static_cast<int>(i), 0, c.end_a, c.fac_a, c.voltage_kv});
        ends.push_back({static_cast<int>(i), 1, c.end_b, c.fac_b, c.voltage_kv});
    }

    // cluster id: facility index for contained ends; ad-hoc union-find for the rest
    std::vector<int> adhoc_ids;
    for (std::size_t e = 0; e < ends.size(); ++e)
        if (ends[e].fac < 0) adhoc_ids.push_back(static_cast<int>(e));
    UnionFind uf(static_cast<int>(adhoc_ids.size()));
    {
        geo::GridIndex idx(0.001);
        for (std::size_t k = 0; k < adhoc_ids.size(); ++k)
            idx.insert(ends[adhoc_ids[k]].loc, static_cast<int>(k));
        for (std::size_t k = 0; k < adhoc_ids.size(); ++k) {
            for (int j : idx.query(ends[adhoc_ids[k]].loc, 0.002)) {
                if (j <= static_cast<int>(k)) continue;
                if (geo::haversine_m(ends[adhoc_ids[k]].loc, ends[adhoc_ids[j]].loc) <=
                    kAdhocClusterM)
                    uf.unite(static_cast<int>(k), j);
            }
        }
    }

    // cluster key: (0, facility) or (1, adhoc root); order facilities first
    std::map<std::pair<int, long long>, std::vector<int>> clusters;  // -> end indices
    for (std::size_t e = 0; e < ends.size(); ++e) {
        if (ends[e].fac >= 0) {
            clusters[{0, ends[e].fac}].push_back(static_cast<int>(e));
        }
    }
    // ad-hoc clusters keyed by smallest member snap key for deterministic order
    std::map<int, std::vector<int>> adhoc_groups;
    for (std::size_t k = 0; k < adhoc_ids.size(); ++k)
        adhoc_groups[uf.find(static_cast<int>(k))].push_back(adhoc_ids[k]);
    std::vector<std::pair<geo::SnapKey, std::vector<int>>> adhoc_sorted;
    for (auto& [root, members] : adhoc_groups) {
        (void)root;
        geo::SnapKey min_key = geo::snap(ends[members[0]].loc);
        for (int e : members) min_key = std::min(min_key, geo::snap(ends[e].loc));
        adhoc_sorted.emplace_back(min_key, members);
    }
    std::sort(adhoc_sorted.begin(), adhoc_sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    long long adhoc_seq = 0;
    for (auto& [key, members] : adhoc_sorted) {
        (void)key;
        clusters[{1, adhoc_seq++}] = members;
    }

    int next_id = 1;
    for (auto& [ckey, members] : clusters) {
        // voltage groups: greedy descending, split at >20% below the group head
        std::vector<double> kvs;
        for (int e : members) kvs.push_back(ends[e].kv);
        std::sort(kvs.rbegin(), kvs.rend());
        kvs.erase(std::unique(kvs.begin(), kvs.end(),
                              [](double a, double b) { return qkv(a) == qkv(b); }),
                  kvs.end());

        geo::LatLon loc;
        std::string name;
        int fac = -1;
        if (ckey.first == 0) {
            fac = static_cast<int>(ckey.second);
            loc = facilities[fac].center;
            name = facilities[fac].name;
        } else {
            for (int e : members) {
                loc.lat += ends[e].loc.lat;
                loc.lon += ends[e].loc.lon;
            }
            loc.lat /= members.size();
            loc.lon /= members.size();
            name = "junction";
        }

        std::map<long long, int> kv_to_bus;
        std::size_t i = 0;
        while (i < kvs.size()) {
            const double head = kvs[i];
            BusRec bus;
            bus.id = next_id++;
            bus.base_kv = head;
            bus.loc = loc;
            bus.facility = fac;
            bus.name = name;
            bus.v_min = tbl.v_load_min;
            bus.v_max = tbl.v_load_max;
            while (i < kvs.size() && head / kvs[i] <= kSplitRatio) {
                kv_to_bus[qkv(kvs[i])] = bus.id;
                ++i;
            }
            out.buses.push_back(std::move(bus));
        }

        for (int e : members) {
            int bus = kv_to_bus.at(qkv(ends[e].kv));
            auto& pair = out.circuit_buses[ends[e].circuit];
            (ends[e].side == 0 ? pair.first : pair.second) = bus;
        }
    }
    return out;
}

namespace {

BranchRec make_transformer(int id, int bus_hv, int bus_lv, double hv_kv, double lv_kv,
                           bool multi_state, const tables::Tables& tbl) {
    auto xp = par::transformer_parameters(hv_kv, lv_kv, tbl);
    auto sc = par::apply_scaling_factors(lv_kv, xp.r_pu, xp.x_pu, 0.0, xp.rate_mva,
                                         multi_state, tbl);
    BranchRec br;
    br.id = id;
    br.from = bus_hv;
    br.to = bus_lv;
    br.kind = BranchKind::transformer;
    br.r_pu = sc.r_pu;
    br.x_pu = sc.x_pu;
    br.b_pu = 0.0;
    br.rate_mva = sc.rate_mva;
    br.angle_limit_deg = par::branch_angle_limit_deg(true, lv_kv, tbl);
    br.voltage_kv = lv_kv;
    return br;
}

}  // namespace

BuildResult build_network(const ingest::ParsedFeatures& parsed,
                          const ingest::FixtureTables& fixtures,
                          const tables::Tables& tbl,
                          bool multi_state,
                          Diagnostics& diag) {
    BuildResult res;
    NetworkModel& model = res.model;
    TopoStats& stats = res.stats;
    model.multi_state = multi_state;

    res.sections = parsed.line_sections;
    stats.sections_input = static_cast<long long>(res.sections.size());

    auto footprints = build_footprints(parsed.facilities);
    auto inf = infer_voltages(res.sections, parsed.facilities, footprints);
    stats.sections_tagged = inf.tagged;
    stats.sections_inferred = inf.inferred;
    stats.sections_unresolved = inf.unresolved;

    stats.sections_retained = filter_sections(res.sections, diag);
    auto records = resolve_circuit_counts(res.sections, tbl, diag);
    stats.circuits_resolved = static_cast<long long>(records.size());

    res.circuits = merge_lines(res.sections, records);
    stats.merged_groups = static_cast<long long>(res.circuits.size());
    classify_circuits(res.circuits, res.sections, parsed.facilities, footprints);

    // converter-proximity promotion for lines missed by the tag signals
    for (auto& c : res.circuits) {
        if (c.hvdc || c.cyclic || parsed.converter_points.empty()) continue;
        auto near_converter = [&](const geo::LatLon& p) {
            for (const auto& cv : parsed.converter_points)
                if (geo::haversine_m(p, cv.loc) <= tbl.converter_radius_m) return true;
            return false;
        };
        if (near_converter(c.end_a) && near_converter(c.end_b)) {
            c.hvdc = true;
            diag.count("hvdc.converter_promotions");
        }
    }

    for (const auto& c : res.circuits) ++stats.class_counts[to_string(c.cls)];

    std::vector<Circuit> inter;
    std::vector<int> inter_orig;  // index into res.circuits
    for (std::size_t i = 0; i < res.circuits.size(); ++i) {
        if (res.circuits[i].cls == CircuitClass::inter_facility) {
            inter.push_back(res.circuits[i]);
            inter_orig.push_back(static_cast<int>(i));
        }
    }

    BusBuild bb = create_buses(inter, parsed.facilities, footprints, tbl);
    model.buses = bb.buses;
    stats.buses_created = static_cast<long long>(model.buses.size());

    // AC branches and DC links from inter-facility circuits
    int next_branch = 1, next_dclink = 1;
    for (std::size_t i = 0; i < inter.size(); ++i) {
        const Circuit& c = inter[i];
        auto [bus_a, bus_b] = bb.circuit_buses.at(static_cast<int>(i));
        if (bus_a == bus_b || bus_a == 0 || bus_b == 0) {
            diag.count("branches.degenerate_endpoints");
            continue;
        }
        if (c.hvdc) {
            DcLinkRec dc;
            dc.id = next_dclink++;
            dc.from = bus_a;
            dc.to = bus_b;
            dc.p_max_mw = tbl.dc_pmax_classes.empty() ? 1000.0 : tbl.dc_pmax_classes.back().p_max_mw;
            for (const auto& cls : tbl.dc_pmax_classes) {
                if (c.voltage_kv >= cls.min_kv) {
                    dc.p_max_mw = cls.p_max_mw;
                    break;
                }
            }
            dc.loss0_mw = tbl.dc_loss0_mw;
            dc.loss1 = tbl.dc_loss1;
            dc.q_max_f = dc.q_max_t = tbl.dc_q_frac * dc.p_max_mw;
            dc.q_min_f = dc.q_min_t = -tbl.dc_q_frac * dc.p_max_mw;
            dc.name = c.name;
            model.dclinks.push_back(std::move(dc));
            ++stats.dclinks_created;
            continue;
        }
        BranchRec br;
        br.id = next_branch++;
        br.from = bus_a;
        br.to = bus_b;
        br.kind = BranchKind::line;
        double rate = 1e30;
        for (int s : c.sections) {
            const auto& sec = res.sections[s];
            auto lp = par::line_parameters(c.voltage_kv, section_length_km(sec),
                                           sec.is_underground, tbl);
            br.r_pu += lp.r_pu;
            br.x_pu += lp.x_pu;
            br.b_pu += lp.b_pu;
            rate = std::min(rate, lp.rate_mva);
        }
        auto sc = par::apply_scaling_factors(c.voltage_kv, br.r_pu, br.x_pu, br.b_pu, rate,
                                             multi_state, tbl);
        br.r_pu = sc.r_pu;
        br.x_pu = sc.x_pu;
        br.b_pu = sc.b_pu;
        br.rate_mva = sc.rate_mva;
        br.angle_limit_deg = par::branch_angle_limit_deg(false, c.voltage_kv, tbl);
        br.length_km = c.route_km;
        br.voltage_kv = c.voltage_kv;
        br.circuit = inter_orig[i];
        model.branches.push_back(std::move(br));
    }

    // transformer inference: all qualifying voltage pairs at each facility
    std::map<int, std::vector<const BusRec*>> by_fac;
    for (const auto& b : model.buses)
        if (b.facility >= 0) by_fac[b.facility].push_back(&b);
    for (auto& [fac, buses] : by_fac) {
        (void)fac;
        std::sort(buses.begin(), buses.end(), [](const BusRec* a, const BusRec* b) {
            return a->base_kv != b->base_kv ? a->base_kv > b->base_kv : a->id < b->id;
        });
        for (std::size_t a = 0; a < buses.size(); ++a) {
            for (std::size_t b = a + 1; b < buses.size(); ++b) {
                const double hv = buses[a]->base_kv, lv = buses[b]->base_kv;
                if (hv - lv > kXfmrMinKvDiff && hv / lv > kXfmrMinRatio) {
                    model.branches.push_back(make_transformer(next_branch++, buses[a]->id,
                                                              buses[b]->id, hv, lv, multi_state,
                                                              tbl));
                    ++stats.transformers_inferred;
                }
            }
        }
    }

    // catch-all: any AC line whose endpoint buses still mismatch by >10%
    for (auto& br : model.branches) {
        if (br.kind != BranchKind::line) continue;
        const BusRec* fa = model.bus_by_id(br.from);
        const BusRec* fb = model.bus_by_id(br.to);
        const double hi = std::max(fa->base_kv, fb->base_kv);
        const double lo = std::min(fa->base_kv, fb->base_kv);
        if (hi / lo > kCatchAllRatio) {
            const int hv_bus = fa->base_kv >= fb->base_kv ? fa->id : fb->id;
            const int lv_bus = fa->base_kv >= fb->base_kv ? fb->id : fa->id;
            BranchRec conv = make_transformer(br.id, hv_bus, lv_bus, hi, lo, multi_state, tbl);
            conv.length_km = br.length_km;
            conv.circuit = br.circuit;
            br = conv;
            ++stats.branch_conversions;
        }
    }

    // generator assignment from OSM plants, EIA-860 capacity override
    int next_gen = 1;
    for (const auto& fac : parsed.facilities) {
        if (fac.kind != ingest::FacilityKind::plant) continue;
        const BusRec* best_bus = nullptr;
        double best_d = 0;
        for (const auto& b : model.buses) {  // ascending id, so ties keep the lower id
            double d = geo::haversine_m(fac.center, b.loc);
            if (d > kGenAssignM) continue;
            if (!best_bus || d < best_d - 1e-9) {
                best_bus = &b;
                best_d = d;
            }
        }
        if (!best_bus) {
            ++stats.generators_dropped;
            diag.count("gens.no_bus_within_1km");
            continue;
        }

        const std::string technical = par::normalize_fuel_technical(fac.fuel_raw, tbl);
        const ingest::EiaPlant* match = nullptr;
        double match_d = 0;
        const std::string norm_name = ingest::normalize_name(fac.name);
        if (!norm_name.empty()) {
            for (const auto& plant : fixtures.eia860) {
                const std::string eia_name = ingest::normalize_name(plant.name);
                const bool name_ok = eia_name == norm_name ||
                                     (!eia_name.empty() &&
                                      (eia_name.find(norm_name) != std::string::npos ||
                                       norm_name.find(eia_name) != std::string::npos));
                if (!name_ok) continue;
                if (par::normalize_fuel_technical(plant.fuel_raw, tbl) != technical) continue;
                double d = geo::haversine_m(fac.center, plant.loc);
                if (d > kEiaMatchM) continue;
                if (!match || d < match_d - 1e-9) {
                    match = &plant;
                    match_d = d;
                }
            }
        }

        double p_max = 0;
        if (match)
            p_max = match->capacity_mw;
        else if (fac.output_mw && *fac.output_mw > 0)
            p_max = *fac.output_mw;
        if (p_max <= 0) {
            ++stats.generators_dropped;
            diag.count("gens.no_capacity");
            continue;
        }

        double heat_rate = 0;
        if (match) {
            auto hr = fixtures.eia923_heat_rate.find(ingest::normalize_name(match->name));
            if (hr != fixtures.eia923_heat_rate.end()) heat_rate = hr->second;
        }
        auto econ = par::generator_costs(technical, p_max, heat_rate, fixtures.gas_price, tbl);
        auto lim = par::generator_limits(technical, p_max, tbl);

        GenRec g;
        g.id = next_gen++;
        g.bus = best_bus->id;
        g.name = fac.name;
        g.technical_fuel = technical;
        g.display_fuel = par::technical_to_display(technical, tbl);
        g.p_max_mw = p_max;
        g.p_min_mw = lim.p_min_mw;
        g.q_min_mvar = lim.q_min_mvar;
        g.q_max_mvar = lim.q_max_mvar;
        g.c1 = econ.c1;
        g.c0 = econ.c0;
        g.startup_usd = econ.startup;
        g.pf = econ.pf;
        g.eia_matched = match != nullptr;
        if (match) g.eia_name = match->name;
        g.p_set_mw = 0.5 * p_max;
        g.derated_p_max_mw = p_max;
        g.plant_id = fac.id;
        model.gens.push_back(std::move(g));
        ++stats.generators_assigned;
    }

    // generator buses get the wider voltage band
    {
        std::set<int> gen_buses;
        for (const auto& g : model.gens) gen_buses.insert(g.bus);
        for (auto& b : model.buses) {
            auto vb = par::bus_voltage_bounds(gen_buses.count(b.id) > 0, tbl);
            b.v_min = vb.v_min;
            b.v_max = vb.v_max;
        }
    }

    finalize_network(model, stats, next_branch, multi_state, tbl, diag);
    return res;
}

void finalize_network(NetworkModel& model, TopoStats& stats, int next_branch, bool multi_state,
                      const tables::Tables& tbl, Diagnostics& diag) {
    // index by bus id
    std::map<int, int> pos;
    for (std::size_t i = 0; i < model.buses.size(); ++i) pos[model.buses[i].id] = static_cast<int>(i);
    auto component_of = [&]() {
        UnionFind uf(static_cast<int>(model.buses.size()));
        for (const auto& br : model.branches) uf.unite(pos.at(br.from), pos.at(br.to));
        return uf;
    };

    // 1. bridging transformers at multi-voltage facilities still disconnected
    {
        UnionFind uf = component_of();
        std::map<int, std::vector<const BusRec*>> by_fac;
        for (const auto& b : model.buses)
            if (b.facility >= 0) by_fac[b.facility].push_back(&b);
        for (auto& [fac, buses] : by_fac) {
            (void)fac;
            if (buses.size() < 2) continue;
            std::sort(buses.begin(), buses.end(), [](const BusRec* a, const BusRec* b) {
                return a->base_kv != b->base_kv ? a->base_kv > b->base_kv : a->id < b->id;
            });
            for (std::size_t i = 0; i + 1 < buses.size(); ++i) {
                const BusRec* hv = buses[i];
                const BusRec* lv = buses[i + 1];
                if (uf.find(pos.at(hv->id)) == uf.find(pos.at(lv->id))) continue;
                const int units = hv->base_kv >= kEhvBridgeKv ? 2 : 1;
                for (int u = 0; u < units; ++u) {
                    model.branches.push_back(make_transformer(next_branch++, hv->id, lv->id,
                                                              hv->base_kv, lv->base_kv,
                                                              multi_state, tbl));
                    ++stats.bridging_transformers;
                }
                uf.unite(pos.at(hv->id), pos.at(lv->id));
            }
        }
    }

    // 2. isolated buses
    {
        std::set<int> touched;
        for (const auto& br : model.branches) {
            touched.insert(br.from);
            touched.insert(br.to);
        }
        std::vector<BusRec> kept;
        for (auto& b : model.buses) {
            if (touched.count(b.id))
                kept.push_back(std::move(b));
            else
                ++stats.isolated_buses_removed;
        }
        model.buses = std::move(kept);
    }

    // 3 + 4. generator-free components, then the largest remaining component
    pos.clear();
    for (std::size_t i = 0; i < model.buses.size(); ++i) pos[model.buses[i].id] = static_cast<int>(i);
    {
        UnionFind uf = component_of();
        std::map<int, long long> comp_size;
        std::set<int> comp_with_gen;
        for (std::size_t i = 0; i < model.buses.size(); ++i) ++comp_size[uf.find(static_cast<int>(i))];
        for (const auto& g : model.gens) {
            auto it = pos.find(g.bus);
            if (it != pos.end()) comp_with_gen.insert(uf.find(it->second));
        }
        int best_root = -1;
        long long best_size = -1;
        for (const auto& [root, size] : comp_size) {
            if (!comp_with_gen.count(root)) continue;
            if (size > best_size) {
                best_size = size;
                best_root = root;  // first-seen root has the lowest bus index on ties
            }
        }
        if (best_root < 0) throw std::runtime_error("no connected component contains a generator");

        std::vector<BusRec> kept;
        for (std::size_t i = 0; i < model.buses.size(); ++i) {
            const int root = uf.find(static_cast<int>(i));
            if (root == best_root) {
                kept.push_back(std::move(model.buses[i]));
            } else if (comp_with_gen.count(root)) {
                ++stats.offmain_component_buses_removed;
            } else {
                ++stats.genfree_component_buses_removed;
            }
        }
        model.buses = std::move(kept);
    }

    // prune everything referencing removed buses
    {
        std::set<int> alive;
        for (const auto& b : model.buses) alive.insert(b.id);
        std::erase_if(model.branches, [&](const BranchRec& br) {
            return !alive.count(br.from) || !alive.count(br.to);
        });
        long long gens_before = static_cast<long long>(model.gens.size());
        std::erase_if(model.gens, [&](const GenRec& g) { return !alive.count(g.bus); });
        stats.generators_dropped += gens_before - static_cast<long long>(model.gens.size());
        std::size_t dc_before = model.dclinks.size();
        std::erase_if(model.dclinks, [&](const DcLinkRec& dc) {
            return !alive.count(dc.from) || !alive.count(dc.to);
        });
        if (model.dclinks.size() != dc_before)
            diag.count("finalize.dclinks_dropped",
                       static_cast<long long>(dc_before - model.dclinks.size()));
        std::erase_if(model.loads, [&](const LoadRec& l) { return !alive.count(l.bus); });
        std::erase_if(model.shunts, [&](const ShuntRec& s) { return !alive.count(s.bus); });
    }

    if (model.gens.empty()) throw std::runtime_error("network has no generators after finalization");

    // 5. slack: bus hosting the largest generator
    const GenRec* slack_gen = &model.gens.front();
    for (const auto& g : model.gens) {
        if (g.p_max_mw > slack_gen->p_max_mw + 1e-9 ||
            (std::abs(g.p_max_mw - slack_gen->p_max_mw) <= 1e-9 && g.bus < slack_gen->bus))
            slack_gen = &g;
    }
    model.slack_bus = slack_gen->bus;

    stats.final_buses = static_cast<long long>(model.buses.size());
    stats.final_branches = static_cast<long long>(model.branches.size());
    stats.final_generators = static_cast<long long>(model.gens.size());
}

}  // namespace gridforge::topo

#include "gridforge/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gridforge/model_io.hpp"
#include "gridforge/per_unit.hpp"
#include "json.hpp"

namespace gridforge::cli {

namespace fs = std::filesystem;

int month_from_date(const std::string& yyyy_mm_dd) {
    int y = 0, m = 0, d = 0;
    char extra = 0;
    if (yyyy_mm_dd.size() != 10 ||
        std::sscanf(yyyy_mm_dd.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &extra) != 3)
        throw ValidationError("date must be YYYY-MM-DD, got '" + yyyy_mm_dd + "'");
    if (y < 1900 || y > 2200 || m < 1 || m > 12 || d < 1 || d > 31)
        throw ValidationError("date out of range: '" + yyyy_mm_dd + "'");
    return m;
}

namespace {

std::string state_name(const std::string& path) {
    return fs::path(path).stem().string();
}

std::string join_dir(const std::string& dir, const char* file) {
    return (fs::path(dir) / file).string();
}

}  // namespace

RunResult run_pipeline(const RunConfig& cfg, Diagnostics& diag) {
    if (cfg.state_files.empty()) throw ValidationError("at least one state file is required");
    if (cfg.hour_utc < 0 || cfg.hour_utc > 23)
        throw ValidationError("hour must be in 0..23, got " + std::to_string(cfg.hour_utc));
    if (cfg.out_dir.empty()) throw ValidationError("output directory is required");
    const int month = month_from_date(cfg.date);

    const tables::Tables* tbl = nullptr;
    try {
        tbl = &tables::load_tables(cfg.data_dir.empty() ? tables::default_data_dir()
                                                        : cfg.data_dir);
    } catch (const std::exception& e) {
        throw IoError(std::string("loading data tables: ") + e.what());
    }

    if (!fs::is_directory(cfg.fixtures_dir))
        throw IoError("fixtures directory not found: " + cfg.fixtures_dir);
    ingest::FixtureTables fixtures;
    try {
        fixtures = ingest::load_fixtures(cfg.fixtures_dir, diag);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("fixtures: ") + e.what());
    }

    std::vector<std::vector<ingest::RawFeature>> raw;
    std::vector<std::string> states;
    for (const std::string& file : cfg.state_files) {
        if (!fs::exists(file)) throw IoError("state file not found: " + file);
        try {
            raw.push_back(ingest::load_state_geojson(file));
        } catch (const std::exception& e) {
            throw ValidationError(std::string("state geojson: ") + e.what());
        }
        states.push_back(state_name(file));
    }

    RunResult out;
    dem::BaAssignment ba;
    std::map<std::string, double> fractions;
    dem::LoadSet loads;
    dem::DispatchPlan plan;
    dem::InjectionResult injected;
    topo::BuildResult build;
    try {
        const std::vector<ingest::RawFeature> merged = ingest::merge_states(raw, diag);
        const ingest::ParsedFeatures parsed = ingest::parse_feature_collection(merged, diag);
        build = topo::build_network(parsed, fixtures, *tbl, cfg.multi_state, diag);

        ba = dem::detect_balancing_authorities(build.model, fixtures, cfg.multi_state, diag);
        double osm_capacity = 0;
        for (const topo::GenRec& g : build.model.gens) osm_capacity += g.p_max_mw;
        fractions =
            dem::compute_regional_fractions(ba, fixtures, states, osm_capacity, build.model, diag);
        loads = dem::allocate_loads(build.model, ba, fractions, fixtures, cfg.hour_utc, *tbl, diag);
        build.model.loads = loads.loads;
        dem::derate_renewables(build.model.gens, cfg.hour_utc, month, *tbl);
        injected = dem::inject_eia_generators(build.model, fixtures, loads.total_p_mw,
                                              cfg.hour_utc, month, *tbl, diag);
        plan = dem::merit_order_dispatch(build.model.gens, loads.total_p_mw, *tbl);
        dem::reassign_slack(build.model, *tbl, diag);
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError(e.what());
    }

    opf::PuNetwork pu = opf::to_per_unit(build.model, *tbl);
    opf::ProgressiveOptions popts;
    popts.dc_only = cfg.dc_only;
    popts.max_level = cfg.max_level;
    out.solve = opf::progressive_solve(pu, *tbl, popts, diag);

    int next_shunt = 1;
    for (const topo::ShuntRec& s : build.model.shunts) next_shunt = std::max(next_shunt, s.id + 1);
    for (const opf::ShuntInjection& s : out.solve.shunts_added)
        build.model.shunts.push_back({next_shunt++, s.bus_id, s.bs_mvar});
    out.model = build.model;

    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec && !fs::is_directory(cfg.out_dir))
        throw IoError("cannot create output directory: " + cfg.out_dir);

    out.model_path = join_dir(cfg.out_dir, "model.json");
    out.dc_solution_path = join_dir(cfg.out_dir, "solution_dc.json");
    out.report_path = join_dir(cfg.out_dir, "report.json");
    out.topology_path = join_dir(cfg.out_dir, "topology.geojson");

    double derated_capacity = 0;
    for (const topo::GenRec& g : out.model.gens) derated_capacity += g.derated_p_max_mw;

    io::ReportInputs rep;
    rep.stats = build.stats;
    rep.ba = ba;
    rep.fractions = fractions;
    rep.total_load_mw = loads.total_p_mw;
    rep.gross_demand_mw = plan.gross_demand_mw;
    rep.capacity_mw = derated_capacity;
    rep.injected_generators = injected.injected;
    rep.dc_level = out.solve.dc.level;
    rep.dc_status = opf::to_string(out.solve.dc.status);
    rep.dc_objective = out.solve.dc.objective_usd;
    rep.ac_level = out.solve.ac.level;
    rep.ac_status = opf::to_string(out.solve.ac.status);
    rep.ac_objective = out.solve.ac.objective_usd;
    rep.ac_loss_pct = out.solve.ac.loss_pct;
    rep.served_mw = cfg.dc_only ? out.solve.dc.served_mw : out.solve.ac.served_mw;
    rep.shed_mw = cfg.dc_only ? out.solve.dc.shed_mw : out.solve.ac.shed_mw;
    rep.shunts_added = static_cast<int>(out.solve.shunts_added.size());
    for (const topo::Circuit& c : build.circuits) {
        if (c.cls != topo::CircuitClass::inter_facility) continue;
        auto& row = rep.coverage[c.voltage_kv];
        if (c.circuit_idx == 0) row[0] += c.route_km;
        row[1] += c.route_km;
    }
    for (auto& [kv, row] : rep.coverage) {
        auto it = fixtures.eia_circuit_km.find(kv);
        row[2] = it == fixtures.eia_circuit_km.end() ? 0.0 : it->second;
    }
    rep.warnings = diag.warnings;

    try {
        io::write_model_json(out.model, out.model_path);
        io::write_solution_json(out.model, out.solve.dc, out.solve.attempts,
                                out.dc_solution_path);
        if (!cfg.dc_only) {
            out.ac_solution_path = join_dir(cfg.out_dir, "solution_ac.json");
            io::write_solution_json(out.model, out.solve.ac, out.solve.attempts,
                                    out.ac_solution_path);
        }
        io::write_report_json(rep, out.report_path);
        io::write_topology_geojson(build.circuits, build.sections, out.topology_path);
    } catch (const std::exception& e) {
        throw IoError(e.what());
    }

    const bool ok = cfg.dc_only ? out.solve.dc_ok : out.solve.ac_ok;
    if (!ok)
        throw SolverError(cfg.dc_only ? "no DC relaxation level converged"
                                      : "no AC relaxation level converged");
    return out;
}

int run_solve(const std::string& model_path, bool dc_only, int max_level,
              const std::string& out_dir, const std::string& data_dir) {
    try {
        if (!fs::exists(model_path)) throw IoError("model file not found: " + model_path);
        topo::NetworkModel model;
        try {
            model = io::read_model_json(model_path);
        } catch (const std::exception& e) {
            throw ValidationError(e.what());
        }
        const tables::Tables& tbl =
            tables::load_tables(data_dir.empty() ? tables::default_data_dir() : data_dir);

        Diagnostics diag;
        opf::PuNetwork pu = opf::to_per_unit(model, tbl);
        opf::ProgressiveOptions popts;
        popts.dc_only = dc_only;
        popts.max_level = max_level;
        opf::ProgressiveResult res = opf::progressive_solve(pu, tbl, popts, diag);

        const std::string dir =
            out_dir.empty() ? fs::path(model_path).parent_path().string() : out_dir;
        std::error_code ec;
        if (!dir.empty()) fs::create_directories(dir, ec);
        try {
            io::write_solution_json(model, res.dc, res.attempts,
                                    (fs::path(dir) / "solution_dc.json").string());
            if (!dc_only)
                io::write_solution_json(model, res.ac, res.attempts,
                                        (fs::path(dir) / "solution_ac.json").string());
        } catch (const std::exception& e) {
            throw IoError(e.what());
        }

        std::cout << "dc: " << opf::to_string(res.dc.status) << " at " << res.dc.level;
        if (!dc_only)
            std::cout << "  ac: " << opf::to_string(res.ac.status) << " at " << res.ac.level
                      << (res.ac.ac1 ? "+AC1" : "");
        std::cout << '\n';
        if (dc_only ? !res.dc_ok : !res.ac_ok)
            throw SolverError("no relaxation level converged");
        return kExitOk;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}

int run_report(const std::string& run_dir) {
    const std::string path = (fs::path(run_dir) / "report.json").string();
    nlohmann::json doc;
    {
        std::ifstream in(path);
        if (!in) {
            std::cerr << "error: cannot read " << path << '\n';
            return kExitIo;
        }
        try {
            in >> doc;
        } catch (const std::exception& e) {
            std::cerr << "error: " << path << ": " << e.what() << '\n';
            return kExitIo;
        }
    }

    const auto& topo = doc["topology"];
    std::cout << "topology: " << topo.value("sections_input", 0LL) << " sections -> "
              << topo.value("sections_retained", 0LL) << " retained -> "
              << topo.value("circuits_resolved", 0LL) << " circuits\n";
    std::cout << "network: " << topo.value("final_buses", 0LL) << " buses, "
              << topo.value("final_branches", 0LL) << " branches, "
              << topo.value("final_generators", 0LL) << " generators\n";

    const auto& ba = doc["balancing_authorities"];
    std::cout << "primary BA: " << ba.value("primary", std::string("-")) << " (scope "
              << ba.value("scope", std::string("-")) << ")\n";

    const auto& demand = doc["demand"];
    std::printf("load: %.1f MW (gross %.1f MW), capacity %.1f MW, %d injected units\n",
                demand.value("total_load_mw", 0.0), demand.value("gross_demand_mw", 0.0),
                demand.value("capacity_mw", 0.0), demand.value("injected_generators", 0));

    const auto& solve = doc["solve"];
    std::cout << "dc: " << solve.value("dc_status", std::string("-")) << " at "
              << solve.value("dc_level", std::string("-")) << ", objective $"
              << solve.value("dc_objective_usd", 0.0) << "/h\n";
    std::cout << "ac: " << solve.value("ac_status", std::string("-")) << " at "
              << solve.value("ac_level", std::string("-")) << ", objective $"
              << solve.value("ac_objective_usd", 0.0) << "/h, losses "
              << solve.value("ac_loss_pct", 0.0) << "%\n";
    std::printf("served %.1f MW, shed %.1f MW, %d shunts added\n",
                solve.value("served_mw", 0.0), solve.value("shed_mw", 0.0),
                solve.value("shunts_added", 0));

    if (doc.contains("coverage"))
        for (const auto& row : doc["coverage"])
            std::printf("coverage %gkV: %.0f route km, %.0f circuit km, reference %.0f km\n",
                        row.value("voltage_kv", 0.0), row.value("route_km", 0.0),
                        row.value("circuit_km", 0.0), row.value("reference_km", 0.0));

    const auto warnings = doc.value("warnings", std::vector<std::string>{});
    std::cout << warnings.size() << " warnings\n";
    for (const std::string& w : warnings) std::cout << "  " << w << '\n';
    return kExitOk;
}

}  // namespace gridforge::cli

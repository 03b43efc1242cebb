#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gridforge/pipeline.hpp"

int main(int argc, char** argv) {
    using namespace gridforge;

    CLI::App app{"gridforge: GeoJSON power infrastructure to solved bus-branch models"};
    app.require_subcommand(1);

    cli::RunConfig cfg;
    CLI::App* build = app.add_subcommand("build", "ingest states and solve the resulting model");
    build->add_option("--state", cfg.state_files, "state GeoJSON file (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    build->add_option("--fixtures", cfg.fixtures_dir, "statistical fixture directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    build->add_option("--hour", cfg.hour_utc, "UTC hour of the demand snapshot (0-23)");
    build->add_option("--date", cfg.date, "snapshot date, YYYY-MM-DD");
    build->add_flag("--multi-state", cfg.multi_state, "regional run: multi-state scaling rules");
    build->add_option("--out", cfg.out_dir, "output directory")->required();
    build->add_option("--data-dir", cfg.data_dir, "override the shipped lookup-table directory");
    build->add_flag("--dc-only", cfg.dc_only, "stop after the DC stage");
    build->add_option("--max-level", cfg.max_level, "highest relaxation level to try (0-5)");

    std::string model_path, solve_out, solve_data;
    bool solve_dc_only = false;
    int solve_max_level = 5;
    CLI::App* solve = app.add_subcommand("solve", "run the relaxation ladder on a model file");
    solve->add_option("--model", model_path, "model.json to solve")->required();
    solve->add_flag("--dc-only", solve_dc_only, "stop after the DC stage");
    solve->add_option("--max-level", solve_max_level, "highest relaxation level to try (0-5)");
    solve->add_option("--out", solve_out, "output directory (default: alongside the model)");
    solve->add_option("--data-dir", solve_data, "override the shipped lookup-table directory");

    std::string run_dir;
    CLI::App* report = app.add_subcommand("report", "print a run directory's report");
    report->add_option("--run", run_dir, "run directory containing report.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? cli::kExitOk : cli::kExitValidation;
    }

    if (build->parsed()) {
        try {
            Diagnostics diag;
            cli::RunResult res = cli::run_pipeline(cfg, diag);
            std::cout << "model: " << res.model.buses.size() << " buses, "
                      << res.model.branches.size() << " branches, " << res.model.gens.size()
                      << " generators\n";
            std::cout << "dc: " << opf::to_string(res.solve.dc.status) << " at "
                      << res.solve.dc.level;
            if (!cfg.dc_only)
                std::cout << "  ac: " << opf::to_string(res.solve.ac.status) << " at "
                          << res.solve.ac.level << (res.solve.ac.ac1 ? "+AC1" : "");
            std::cout << '\n';
            for (const std::string& w : diag.warnings) std::cerr << "warning: " << w << '\n';
            std::cout << "artifacts in " << cfg.out_dir << '\n';
            return cli::kExitOk;
        } catch (const cli::ValidationError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return cli::kExitValidation;
        } catch (const cli::SolverError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return cli::kExitSolver;
        } catch (const cli::IoError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return cli::kExitIo;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return cli::kExitValidation;
        }
    }
    if (solve->parsed())
        return cli::run_solve(model_path, solve_dc_only, solve_max_level, solve_out, solve_data);
    if (report->parsed()) return cli::run_report(run_dir);
    return cli::kExitValidation;
}

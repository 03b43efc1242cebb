#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gridforge/diagnostics.hpp"
#include "gridforge/relaxation.hpp"
#include "gridforge/topology.hpp"

namespace gridforge::cli {

// Exit codes shared by the CLI and pipeline errors.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitIo = 4;

// Raised for invalid inputs / infeasible configuration (exit 2).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Raised when no relaxation level converges (exit 3).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Raised on unreadable/unwritable paths (exit 4).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::vector<std::string> state_files;
    std::string fixtures_dir;
    std::string out_dir;
    int hour_utc = 12;
    std::string date = "2024-07-15";  // YYYY-MM-DD
    bool multi_state = false;
    bool dc_only = false;
    int max_level = 5;
    std::string data_dir;             // empty = default
    bool deterministic = true;        // always on; zeroes artifact timings
};

struct RunResult {
    topo::NetworkModel model;
    opf::ProgressiveResult solve;
    std::string model_path, dc_solution_path, ac_solution_path, report_path, topology_path;
};

// build: ingest -> topology -> parameters -> demand -> progressive solve,
// writing model.json, solution_dc.json, solution_ac.json, report.json and
// topology.geojson into out_dir. Throws the error types above.
RunResult run_pipeline(const RunConfig& cfg, Diagnostics& diag);

// solve: load a model artifact and run the ladder on it.
int run_solve(const std::string& model_path, bool dc_only, int max_level,
              const std::string& out_dir, const std::string& data_dir);

// report: render a run directory's report.json to the console.
int run_report(const std::string& run_dir);

int month_from_date(const std::string& yyyy_mm_dd);  // throws ValidationError

}  // namespace gridforge::cli

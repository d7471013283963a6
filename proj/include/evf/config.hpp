// Run configuration: TOML-style sections parsed from one file per run.
// Unknown sections or keys are rejected; all model parameter range checks
// run at parse time.  The only environment override honoured anywhere is
// OUTPUT_DIR (reproducibility: everything else lives in the file).
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "evf/diagnostics.hpp"

namespace evf {

struct RunConfig {
    GridSpec grid;

    SchemeConfig scheme;                 // basis filled at build time in minmax mode
    std::string initial = "random";     // "random" | "minimizer"

    std::string model;                   // "q" | "s" | "llz"
    ParamsQ q{};
    ParamsS s{};
    ParamsLLZ llz{};

    std::vector<ForcingMode> forcing;

    std::string output_dir = "out";
    long snapshot_every = 0;             // 0 = no snapshots

    int threads = 0;                     // validated; execution is sequential

    // diagnostics toggles
    bool check_evi = true;
    double evi_tol_rel = 1e-6;           // tol = rel * (1 + E(0))
    int evi_stride = 8;
    bool check_weak_probe = false;
    bool check_bv = true;
};

// Parses and validates; throws ConfigError with the offending key and the
// valid range in the message.
RunConfig parse_config(const std::string& path);

std::unique_ptr<Model> make_model(const Grid& g, const RunConfig& cfg);

struct RunOutputs {
    // the trajectory's fields reference this grid; keep both alive together
    std::shared_ptr<const Grid> grid;
    std::shared_ptr<Model> model;
    AugmentedTrajectory traj;
    std::vector<CheckRecord> records;
    bool checks_pass = true;
};

// Builds grid/model/scheme from the config, runs the trajectory, runs the
// enabled diagnostics, and writes energy.csv / diagnostics.csv / snapshots
// under the output directory.
RunOutputs run_from_config(const RunConfig& cfg);

}  // namespace evf

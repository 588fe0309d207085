#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gradeflow/optimizer.hpp"
#include "gradeflow/problems.hpp"
#include "gradeflow/surrogate.hpp"

namespace gradeflow {

struct RunResult {
    ProblemConfig config;
    Mesh mesh;
    OptimizeResult result;
    double wall_seconds = 0.0;
};

/// Builds the flow problem and a freshly initialized network for `config`
/// and optimizes it.
RunResult run_problem(const ProblemConfig& config, const PermeabilitySurrogate& surrogate,
                      const EpochCallback& on_epoch = {});

/// Version, seed, config hash, final loss terms and timing.
nlohmann::json run_metadata(const RunResult& run);

/// Writes config.json, weights.json, trace.csv, snapshot.csv, fields.vtk,
/// topology.svg and metadata.json into `dir` (created if needed).
void write_run_artifacts(const std::string& dir, const RunResult& run);

struct ParetoRow {
    double target = 0.0;
    bool ok = false;
    double J = 0.0;
    double g = 0.0;
    double wall_seconds = 0.0;
    std::string error;  // set when the run failed
    std::string trace;  // trace file, when an output directory was given
};

/// Independent contact-area runs of `base`, one per target, sorted by target.
/// Throws ConfigError for fewer than two targets; a failing run is recorded
/// in its row and the sweep continues. With a non-empty `out_dir`, each run's
/// trace and the table (pareto.csv) are written there.
std::vector<ParetoRow> pareto_sweep(const ProblemConfig& base, std::vector<double> targets,
                                    const PermeabilitySurrogate& surrogate, const std::string& out_dir = "",
                                    const EpochCallback& on_epoch = {});

}  // namespace gradeflow

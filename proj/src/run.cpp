#include "gradeflow/run.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gradeflow/error.hpp"
#include "gradeflow/export.hpp"

namespace gradeflow {

RunResult run_problem(const ProblemConfig& config, const PermeabilitySurrogate& surrogate,
                      const EpochCallback& on_epoch) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const Mesh mesh = config.mesh();
    FlowProblem problem(mesh, config.bcs, config.mu);
    DesignEvaluator evaluator(problem, surrogate.select(config.shapes), config.constraint,
                              config.design_options(surrogate));
    DesignField field = DesignField::xavier(static_cast<int>(config.shapes.size()), config.box(), config.run.seed,
                                            config.run.hidden);
    OptimizeResult result = optimize(evaluator, std::move(field), config.run, on_epoch);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return RunResult{config, mesh, std::move(result), wall};
}

nlohmann::json run_metadata(const RunResult& run) {
    const Evaluation& f = run.result.final;
    return {{"version", kVersion},
            {"problem", run.config.name},
            {"config_hash", config_hash(run.config)},
            {"seed", run.config.run.seed},
            {"epochs", run.result.state.epoch},
            {"J", f.loss.J},
            {"g", f.loss.g},
            {"L", f.loss.L},
            {"J0", run.result.state.J0},
            {"p", run.result.state.trace.back().p},
            {"clamped_elements", f.clamped_elements},
            {"wall_seconds", run.wall_seconds}};
}

void write_run_artifacts(const std::string& dir, const RunResult& run) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
    const fs::path root(dir);
    const Evaluation& f = run.result.final;
    save_problem(run.config, (root / "config.json").string());
    save_checkpoint(run.result.field, (root / "weights.json").string());
    write_trace_csv((root / "trace.csv").string(), run.result.state.trace);
    write_snapshot_csv((root / "snapshot.csv").string(), run.mesh, f.design, f.elemental_j);
    write_vtk((root / "fields.vtk").string(), run.mesh, f.flow, f.design);
    write_topology_svg((root / "topology.svg").string(), run.mesh, f.design, run.config.shapes);
    write_json_file((root / "metadata.json").string(), run_metadata(run));
}

std::vector<ParetoRow> pareto_sweep(const ProblemConfig& base, std::vector<double> targets,
                                    const PermeabilitySurrogate& surrogate, const std::string& out_dir,
                                    const EpochCallback& on_epoch) {
    namespace fs = std::filesystem;
    if (targets.size() < 2) throw ConfigError("pareto: at least two contact-area targets are required");
    for (double t : targets)
        if (!(t > 0.0)) throw ConfigError("pareto: contact-area targets must be positive");
    std::sort(targets.begin(), targets.end());
    if (!out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw Error("cannot create output directory '" + out_dir + "': " + ec.message());
    }

    std::vector<ParetoRow> rows;
    for (double target : targets) {
        ParetoRow row;
        row.target = target;
        ProblemConfig config = base;
        config.constraint.mode = ConstraintMode::ContactArea;
        config.constraint.target = target;
        try {
            const RunResult run = run_problem(config, surrogate, on_epoch);
            row.ok = true;
            row.J = run.result.final.loss.J;
            row.g = run.result.final.loss.g;
            row.wall_seconds = run.wall_seconds;
            if (!out_dir.empty()) {
                char name[64];
                std::snprintf(name, sizeof name, "trace_%g.csv", target);
                row.trace = (fs::path(out_dir) / name).string();
                write_trace_csv(row.trace, run.result.state.trace);
            }
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }

    if (!out_dir.empty()) {
        const std::string path = (fs::path(out_dir) / "pareto.csv").string();
        std::ofstream out(path);
        if (!out) throw Error("cannot open '" + path + "' for writing");
        out << "target,ok,J,g,wall_seconds,trace,error\n";
        for (const ParetoRow& r : rows) {
            std::string err = r.error;
            std::replace(err.begin(), err.end(), ',', ';');
            std::replace(err.begin(), err.end(), '\n', ' ');
            char buf[160];
            std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,%.17g,%.3f,", r.target, r.ok ? 1 : 0, r.J, r.g,
                          r.wall_seconds);
            out << buf << r.trace << ',' << err << '\n';
        }
        if (!out) throw Error("failed writing '" + path + "'");
    }
    return rows;
}

}  // namespace gradeflow

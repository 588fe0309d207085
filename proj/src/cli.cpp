#include "gradeflow/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gradeflow/error.hpp"
#include "gradeflow/export.hpp"
#include "gradeflow/homogenize.hpp"
#include "gradeflow/problems.hpp"
#include "gradeflow/run.hpp"
#include "gradeflow/serialization.hpp"

namespace gradeflow {

namespace {

namespace fs = std::filesystem;

std::string output_root() {
    const char* env = std::getenv(kOutputRootEnv);
    return env && *env ? env : "gradeflow_out";
}

// Options shared by the commands that start from a problem definition.
struct ProblemArgs {
    std::string preset;
    std::string config;
    std::string constraint;
    std::string shapes;
    std::optional<std::uint64_t> seed;
    std::optional<int> nx;
    std::optional<int> ny;
    std::optional<int> epochs;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--preset", preset, "Benchmark preset (double_pipe, diffuser, bent_pipe)");
        cmd.add_option("--config", config, "Problem JSON file");
        cmd.add_option("--constraint", constraint, "contact_area=VALUE or volume=VALUE");
        cmd.add_option("--shapes", shapes, "all, a count, or a comma-separated list of shape names");
        cmd.add_option("--seed", seed, "Network initialization seed");
        cmd.add_option("--nx", nx, "Elements along x");
        cmd.add_option("--ny", ny, "Elements along y");
        cmd.add_option("--epochs", epochs, "Maximum epochs");
    }

    ProblemConfig load() const {
        if (preset.empty() == config.empty()) throw CLI::ValidationError("exactly one of --preset and --config is required");
        if (!preset.empty()) {
            const std::vector<std::string> names = preset_names();
            if (std::find(names.begin(), names.end(), preset) == names.end())
                throw CLI::ValidationError("--preset", "unknown preset '" + preset + "'");
        }
        ProblemConfig c = load_problem(preset.empty() ? config : preset);
        try {
            if (!constraint.empty()) c.constraint = parse_constraint(constraint);
            if (!shapes.empty()) {
                c.shapes = parse_shapes(shapes);
                if (c.size_fixed && c.shapes.size() != 1) c.size_fixed.reset();
            }
        } catch (const ConfigError& e) {
            throw CLI::ValidationError(e.what());
        }
        if (seed) c.run.seed = *seed;
        if (nx) c.domain.nx = *nx;
        if (ny) c.domain.ny = *ny;
        if (epochs) c.run.max_epochs = *epochs;
        c.validate();
        return c;
    }
};

// Surrogate source: explicit dataset file, else the cached dataset under the
// output root, else a fresh build that is cached there.
PermeabilitySurrogate obtain_surrogate(const std::string& dataset_path, std::ostream& out) {
    if (!dataset_path.empty()) return load_surrogate(dataset_path);
    const fs::path cached = fs::path(output_root()) / "dataset.json";
    if (fs::exists(cached)) return load_surrogate(cached.string());
    out << "no dataset found; building " << cached.string() << '\n';
    const std::vector<double> sizes = default_sizes();
    const HomogenizationDataset d = build_dataset(all_shapes(), sizes);
    fs::create_directories(cached.parent_path());
    save_dataset(d, cached.string());
    return load_surrogate(cached.string());
}

std::string resolve_out(const std::string& out, const std::string& name) {
    return out.empty() ? (fs::path(output_root()) / name).string() : out;
}

std::vector<double> parse_targets(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw CLI::ValidationError("--targets", "'" + item + "' is not a number");
        values.push_back(v);
    }
    return values;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Graded multiscale topology optimization for Stokes flow"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // homogenize
    auto* homogenize = app.add_subcommand("homogenize", "Build the unit-cell permeability dataset and its surrogate");
    std::string h_out;
    int h_resolution = 100;
    std::string h_shapes = "all";
    homogenize->add_option("--out", h_out, "Output directory");
    homogenize->add_option("--resolution", h_resolution, "Unit-cell elements per side")->check(CLI::Range(4, 1000));
    homogenize->add_option("--shapes", h_shapes, "Shapes to homogenize");

    // optimize
    auto* optimize_cmd = app.add_subcommand("optimize", "Optimize a problem and write run artifacts");
    ProblemArgs o_args;
    o_args.add_to(*optimize_cmd);
    std::string o_out, o_dataset;
    bool o_quiet = false;
    optimize_cmd->add_option("--out", o_out, "Output directory");
    optimize_cmd->add_option("--dataset", o_dataset, "Dataset JSON with surrogate");
    optimize_cmd->add_flag("--quiet", o_quiet, "Suppress the per-epoch log");

    // resample
    auto* resample = app.add_subcommand("resample", "Evaluate trained weights on a new mesh");
    std::string r_checkpoint, r_out, r_shapes;
    int r_nx = 0, r_ny = 0;
    resample->add_option("--checkpoint", r_checkpoint, "Weights JSON")->required();
    resample->add_option("--nx", r_nx, "Elements along x")->required()->check(CLI::PositiveNumber);
    resample->add_option("--ny", r_ny, "Elements along y")->required()->check(CLI::PositiveNumber);
    resample->add_option("--shapes", r_shapes, "Shape list of the trained network (default: first M)");
    resample->add_option("--out", r_out, "Output directory");

    // pareto
    auto* pareto = app.add_subcommand("pareto", "Sweep the contact-area target");
    ProblemArgs p_args;
    p_args.add_to(*pareto);
    std::string p_targets, p_out, p_dataset;
    pareto->add_option("--targets", p_targets, "Comma-separated contact-area targets")->required();
    pareto->add_option("--out", p_out, "Output directory");
    pareto->add_option("--dataset", p_dataset, "Dataset JSON with surrogate");

    // export
    auto* export_cmd = app.add_subcommand("export", "Re-solve a finished run and write its fields");
    std::string e_run, e_out, e_dataset;
    export_cmd->add_option("--run", e_run, "Run directory with config.json, weights.json and metadata.json")
        ->required();
    export_cmd->add_option("--out", e_out, "Output directory (default: the run directory)");
    export_cmd->add_option("--dataset", e_dataset, "Dataset JSON with surrogate");

    // catalog
    auto* catalog = app.add_subcommand("catalog", "Write the microstructure catalog");
    std::string c_out;
    catalog->add_option("--out", c_out, "Output directory");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*homogenize) {
            const std::string dir = resolve_out(h_out, "");
            fs::create_directories(dir);
            const std::vector<ShapeId> shapes = parse_shapes(h_shapes);
            const std::vector<double> sizes = default_sizes();
            const HomogenizationDataset d = build_dataset(shapes, sizes, h_resolution);
            const std::string path = (fs::path(dir) / "dataset.json").string();
            save_dataset(d, path);
            out << "dataset: " << path << " (" << d.shapes.size() << " shapes x " << sizes.size() << " sizes, "
                << d.wall_seconds << " s)\n";
        } else if (*optimize_cmd) {
            const ProblemConfig config = o_args.load();
            const PermeabilitySurrogate surrogate = obtain_surrogate(o_dataset, out);
            const std::string dir = resolve_out(o_out, config.name);
            if (!o_quiet) out << "epoch, L, J, g, alpha, lambda, p, wall_ms\n";
            const RunResult run = run_problem(config, surrogate, [&](const EpochRecord& r) {
                if (!o_quiet) out << format_epoch(r) << '\n' << std::flush;
            });
            write_run_artifacts(dir, run);
            out << "final J " << run.result.final.loss.J << " g " << run.result.final.loss.g << " in "
                << run.wall_seconds << " s; artifacts in " << dir << '\n';
        } else if (*resample) {
            const DesignField field = load_checkpoint(r_checkpoint);
            const Box box = field.box();
            const Mesh mesh = build_mesh(r_nx, r_ny, box.lx, box.ly);
            std::vector<Point2> points = mesh.element_centers();
            for (Point2& p : points) {
                p.x += box.x0;
                p.y += box.y0;
            }
            const DesignSnapshot snap = field.resample(points);
            const std::vector<ShapeId> shapes =
                parse_shapes(r_shapes.empty() ? std::to_string(field.num_shapes()) : r_shapes);
            if (static_cast<int>(shapes.size()) != field.num_shapes())
                throw ConfigError("--shapes lists " + std::to_string(shapes.size()) + " shapes but the network has " +
                                  std::to_string(field.num_shapes()));
            const std::string dir = resolve_out(r_out, "resample");
            fs::create_directories(dir);
            write_snapshot_csv((fs::path(dir) / "snapshot.csv").string(), mesh, snap, {});
            write_topology_svg((fs::path(dir) / "topology.svg").string(), mesh, snap, shapes);
            const std::string sum = snapshot_checksum(snap);
            write_json_file((fs::path(dir) / "metadata.json").string(),
                            {{"version", kVersion}, {"checkpoint", r_checkpoint}, {"nx", r_nx}, {"ny", r_ny},
                             {"checksum", sum}});
            out << "resampled " << snap.size() << " elements; checksum " << sum << "; artifacts in " << dir << '\n';
        } else if (*pareto) {
            const ProblemConfig config = p_args.load();
            const std::vector<double> targets = parse_targets(p_targets);
            const PermeabilitySurrogate surrogate = obtain_surrogate(p_dataset, out);
            const std::string dir = resolve_out(p_out, config.name + "_pareto");
            const std::vector<ParetoRow> rows = pareto_sweep(config, targets, surrogate, dir);
            out << "target, J, g, status\n";
            bool any_failed = false;
            for (const ParetoRow& r : rows) {
                out << r.target << ", " << r.J << ", " << r.g << ", " << (r.ok ? "ok" : "failed: " + r.error) << '\n';
                any_failed = any_failed || !r.ok;
            }
            out << "table: " << (fs::path(dir) / "pareto.csv").string() << '\n';
            if (any_failed) return 1;
        } else if (*export_cmd) {
            const fs::path run_dir(e_run);
            const ProblemConfig config = load_problem((run_dir / "config.json").string());
            const DesignField field = load_checkpoint((run_dir / "weights.json").string());
            std::ifstream meta_in(run_dir / "metadata.json");
            if (!meta_in) throw Error("cannot open '" + (run_dir / "metadata.json").string() + "'");
            const nlohmann::json meta = nlohmann::json::parse(meta_in, nullptr, false);
            if (meta.is_discarded() || !meta.contains("p") || !meta.contains("J0"))
                throw ConfigError((run_dir / "metadata.json").string() + ": fields 'p' and 'J0' are required");
            const PermeabilitySurrogate surrogate = obtain_surrogate(e_dataset, out);
            const Mesh mesh = config.mesh();
            FlowProblem problem(mesh, config.bcs, config.mu);
            DesignEvaluator evaluator(problem, surrogate.select(config.shapes), config.constraint,
                                      config.design_options(surrogate));
            LossParams lp;
            lp.p = meta["p"].get<double>();
            lp.J0 = meta["J0"].get<double>();
            const Evaluation ev = evaluator.evaluate(field, lp, false);
            const fs::path dir = e_out.empty() ? run_dir : fs::path(e_out);
            fs::create_directories(dir);
            write_snapshot_csv((dir / "snapshot.csv").string(), mesh, ev.design, ev.elemental_j);
            write_vtk((dir / "fields.vtk").string(), mesh, ev.flow, ev.design);
            write_topology_svg((dir / "topology.svg").string(), mesh, ev.design, config.shapes);
            out << "J " << ev.loss.J << " g " << ev.loss.g << "; fields in " << dir.string() << '\n';
        } else if (*catalog) {
            const std::string dir = resolve_out(c_out, "");
            fs::create_directories(dir);
            const std::string path = (fs::path(dir) / "catalog.json").string();
            save_catalog(path);
            for (const MicrostructureFamily& f : geometry::catalog())
                out << f.name << ": gamma_max " << f.gamma_max << ", v_max " << f.v_max << '\n';
            out << "catalog: " << path << '\n';
        }
    } catch (const CLI::ValidationError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace gradeflow

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gradeflow/cli.hpp"
#include "gradeflow/error.hpp"
#include "gradeflow/export.hpp"
#include "gradeflow/run.hpp"
#include "gradeflow/serialization.hpp"
#include "support.hpp"

using namespace gradeflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

DesignSnapshot uniform(int elements, std::vector<double> rho, double s, double theta) {
    DesignSnapshot d;
    d.num_shapes = static_cast<int>(rho.size());
    for (int e = 0; e < elements; ++e) {
        d.rho.insert(d.rho.end(), rho.begin(), rho.end());
        d.s.push_back(s);
        d.theta.push_back(theta);
    }
    return d;
}

int count(const std::string& text, const std::string& needle) {
    int n = 0;
    for (std::size_t at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
    return n;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    if (out_text) *out_text = out.str();
    return code;
}

}  // namespace

TEST_CASE("snapshot CSV") {
    TempDir tmp("gradeflow_csv_test");
    const Mesh mesh = build_mesh(3, 2, 1.5, 1.0);
    const DesignSnapshot d = uniform(6, {0.25, 0.75}, 0.5, 1.0);
    const std::vector<double> je = {1, 2, 3, 4, 5, 6};
    write_snapshot_csv((tmp.path / "a.csv").string(), mesh, d, je);
    CHECK(first_line(tmp.path / "a.csv") == "element,x,y,rho_1,rho_2,s,theta,J_e");
    const std::string text = slurp(tmp.path / "a.csv");
    CHECK(count(text, "\n") == 7);
    CHECK(text.find("\n0,0.25,0.25,0.25,0.75,0.5,1,1\n") != std::string::npos);
    write_snapshot_csv((tmp.path / "b.csv").string(), mesh, d, {});
    CHECK(slurp(tmp.path / "b.csv").find("\n0,0.25,0.25,0.25,0.75,0.5,1,\n") != std::string::npos);
    CHECK_THROWS_AS(write_snapshot_csv((tmp.path / "c.csv").string(), mesh, uniform(5, {1.0}, 0.5, 0.0), {}),
                    ContractError);
}

TEST_CASE("topology drawing") {
    const Mesh mesh = build_mesh(3, 3, 1.0, 1.0);
    const std::vector<ShapeId> circle = {ShapeId::Circle};

    SUBCASE("all-fluid design is a blank outline") {
        const std::string svg = topology_svg(mesh, uniform(9, {1.0}, 0.0, 0.0), circle);
        CHECK(count(svg, "<rect") == 1);
        CHECK(count(svg, "<polygon") == 0);
    }
    SUBCASE("full circles tile the grid and touch") {
        const std::string svg = topology_svg(mesh, uniform(9, {1.0}, 1.0, 0.7), circle, 300.0);
        CHECK(count(svg, "<polygon") == 9);
        // Each circle spans its 100 px cell exactly.
        std::istringstream in(svg);
        std::string line;
        while (std::getline(in, line)) {
            if (line.rfind("<polygon", 0) != 0) continue;
            const std::size_t a = line.find("points=\"") + 8;
            std::istringstream pts(line.substr(a, line.find('"', a) - a));
            double xmin = 1e9, xmax = -1e9;
            std::string pair;
            while (pts >> pair) {
                const double x = std::stod(pair.substr(0, pair.find(',')));
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
            }
            CHECK(xmax - xmin == doctest::Approx(100.0).epsilon(0.01));
        }
    }
    SUBCASE("output is deterministic") {
        const DesignField f = DesignField::xavier(2, Box{}, 77);
        const DesignSnapshot d = f.forward(mesh.element_centers());
        const std::vector<ShapeId> two = {ShapeId::Ellipse, ShapeId::Mucosa10};
        CHECK(topology_svg(mesh, d, two) == topology_svg(mesh, d, two));
        CHECK_THROWS_AS(topology_svg(mesh, d, circle), ContractError);
    }
}

TEST_CASE("VTK export") {
    TempDir tmp("gradeflow_vtk_test");
    const Mesh mesh = build_mesh(4, 4, 1.0, 1.0);
    const BoundaryConditions bcs{
        {FlowSegment{Side::Left, 0.5, 1.0, 1.0, true}, FlowSegment{Side::Right, 0.5, 1.0, 1.0, false}}};
    FlowProblem problem(mesh, bcs);
    const FlowSolution sol = problem.solve(std::vector<Sym2>(16, Sym2::iso(1.0)));
    write_vtk((tmp.path / "f.vtk").string(), mesh, sol, uniform(16, {0.5, 0.5}, 0.3, 0.2));
    const std::string text = slurp(tmp.path / "f.vtk");
    CHECK(text.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
    CHECK(text.find("DIMENSIONS 9 9 1") != std::string::npos);
    CHECK(text.find("POINT_DATA 81") != std::string::npos);
    CHECK(text.find("CELL_DATA 64") != std::string::npos);
    for (const char* field : {"velocity", "velocity_magnitude", "pressure", "size", "orientation", "dominant_shape",
                              "rho_1", "rho_2"})
        CHECK(text.find(std::string(" ") + field + " ") != std::string::npos);
}

TEST_CASE("snapshot checksum") {
    const DesignSnapshot a = uniform(4, {0.5, 0.5}, 0.25, 1.0);
    DesignSnapshot b = a;
    CHECK(snapshot_checksum(a) == snapshot_checksum(b));
    b.s[2] = 0.2500001;
    CHECK(snapshot_checksum(a) != snapshot_checksum(b));
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("pareto sweep preconditions") {
    const PermeabilitySurrogate sur = testing::synthetic_surrogate();
    CHECK_THROWS_AS(pareto_sweep(preset("diffuser"), {30.0}, sur), ConfigError);
    CHECK_THROWS_AS(pareto_sweep(preset("diffuser"), {30.0, -1.0}, sur), ConfigError);
}

TEST_CASE("pareto sweep runs and sorts") {
    TempDir tmp("gradeflow_pareto_test");
    ProblemConfig c = preset("diffuser");
    c.domain.nx = c.domain.ny = 4;
    c.run.max_epochs = 1;
    c.shapes = {ShapeId::Circle, ShapeId::Square};
    const auto rows = pareto_sweep(c, {6.0, 3.0}, testing::synthetic_surrogate(), tmp.path.string());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].target == 3.0);
    CHECK(rows[1].target == 6.0);
    CHECK(rows[0].ok);
    CHECK(fs::exists(tmp.path / "pareto.csv"));
    CHECK(fs::exists(rows[0].trace));
}

TEST_CASE("command line") {
    TempDir tmp("gradeflow_cli_test");
    const std::string dataset = (tmp.path / "dataset.json").string();
    save_dataset(testing::synthetic_dataset(), dataset);
    ::setenv(kOutputRootEnv, tmp.path.string().c_str(), 1);
    const std::string run = (tmp.path / "run").string();

    CHECK(cli({}) == 2);
    CHECK(cli({"frobnicate"}) == 2);
    CHECK(cli({"optimize", "--preset", "nowhere"}) == 2);
    CHECK(cli({"optimize", "--preset", "diffuser", "--shapes", "bogus"}) == 2);
    CHECK(cli({"optimize", "--preset", "diffuser", "--constraint", "speed=3"}) == 2);
    CHECK(cli({"optimize"}) == 2);
    CHECK(cli({"resample", "--checkpoint", (tmp.path / "missing.json").string(), "--nx", "4", "--ny", "4"}) == 1);

    std::string out;
    REQUIRE(cli({"optimize", "--preset", "diffuser", "--nx", "4", "--ny", "4", "--epochs", "1", "--quiet",
                 "--dataset", dataset, "--out", run},
                &out) == 0);
    CHECK(out.find("final J") != std::string::npos);
    for (const char* f : {"config.json", "weights.json", "trace.csv", "snapshot.csv", "fields.vtk", "topology.svg",
                          "metadata.json"})
        CHECK(fs::exists(fs::path(run) / f));
    CHECK(first_line(fs::path(run) / "trace.csv").rfind("epoch,L,J,g,alpha,lambda,p,wall_ms", 0) == 0);

    const std::string exported = (tmp.path / "export").string();
    CHECK(cli({"export", "--run", run, "--out", exported}) == 0);
    CHECK(slurp(fs::path(exported) / "snapshot.csv") == slurp(fs::path(run) / "snapshot.csv"));

    const std::string fine = (tmp.path / "fine").string();
    REQUIRE(cli({"resample", "--checkpoint", (fs::path(run) / "weights.json").string(), "--nx", "8", "--ny", "8",
                 "--out", fine},
                &out) == 0);
    CHECK(out.find("resampled 64 elements; checksum ") != std::string::npos);
    CHECK(fs::exists(fs::path(fine) / "topology.svg"));

    CHECK(cli({"pareto", "--preset", "diffuser", "--targets", "30", "--dataset", dataset}) == 1);
    CHECK(cli({"pareto", "--preset", "diffuser", "--targets", "30,x", "--dataset", dataset}) == 2);
    CHECK(cli({"catalog", "--out", tmp.path.string()}) == 0);
    CHECK(fs::exists(tmp.path / "catalog.json"));
    ::unsetenv(kOutputRootEnv);
}

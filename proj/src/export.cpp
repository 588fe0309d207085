#include "gradeflow/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gradeflow/error.hpp"

namespace gradeflow {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    return out;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw Error("failed writing '" + path + "'");
}

void check_design(const Mesh& mesh, const DesignSnapshot& design) {
    if (design.size() != static_cast<std::size_t>(mesh.num_elements()))
        throw ContractError("snapshot has " + std::to_string(design.size()) + " points for " +
                            std::to_string(mesh.num_elements()) + " elements");
}

int dominant_shape(const DesignSnapshot& design, std::size_t e) {
    const auto f = design.fractions(e);
    return static_cast<int>(std::max_element(f.begin(), f.end()) - f.begin());
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

void write_snapshot_csv(const std::string& path, const Mesh& mesh, const DesignSnapshot& design,
                        std::span<const double> elemental_j) {
    check_design(mesh, design);
    if (!elemental_j.empty() && elemental_j.size() != design.size())
        throw ContractError("elemental J does not match the snapshot");
    std::ofstream out = open_out(path);
    out << "element,x,y";
    for (int m = 0; m < design.num_shapes; ++m) out << ",rho_" << (m + 1);
    out << ",s,theta,J_e\n";
    for (std::size_t e = 0; e < design.size(); ++e) {
        const Point2 c = mesh.element_center(static_cast<int>(e));
        out << e << ',' << num(c.x) << ',' << num(c.y);
        for (double r : design.fractions(e)) out << ',' << num(r);
        out << ',' << num(design.s[e]) << ',' << num(design.theta[e]) << ',';
        if (!elemental_j.empty()) out << num(elemental_j[e]);
        out << '\n';
    }
    finish(out, path);
}

void write_vtk(const std::string& path, const Mesh& mesh, const FlowSolution& flow, const DesignSnapshot& design) {
    check_design(mesh, design);
    const int cols = mesh.vel_cols();
    const int rows = mesh.vel_rows();
    const int nodes = mesh.num_vel_nodes();
    if (flow.velocity.size() != 2 * nodes || flow.pressure.size() != mesh.num_pres_nodes())
        throw ContractError("flow solution does not match the mesh");
    std::ofstream out = open_out(path);
    out << "# vtk DataFile Version 3.0\nflow and design fields\nASCII\nDATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << cols << ' ' << rows << " 1\n";
    out << "ORIGIN 0 0 0\nSPACING " << num(0.5 * mesh.hx) << ' ' << num(0.5 * mesh.hy) << " 1\n";

    out << "POINT_DATA " << nodes << "\nVECTORS velocity double\n";
    for (int k = 0; k < nodes; ++k) out << num(flow.velocity[k]) << ' ' << num(flow.velocity[nodes + k]) << " 0\n";
    out << "SCALARS velocity_magnitude double 1\nLOOKUP_TABLE default\n";
    for (int k = 0; k < nodes; ++k) out << num(std::hypot(flow.velocity[k], flow.velocity[nodes + k])) << '\n';
    out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (int j = 0; j < rows; ++j) {
        for (int i = 0; i < cols; ++i) {
            // Bilinear pressure is exact at edge midpoints and centers as averages of corners.
            const int i0 = i / 2, i1 = (i + 1) / 2, j0 = j / 2, j1 = (j + 1) / 2;
            const double p = 0.25 * (flow.pressure[mesh.pres_node(i0, j0)] + flow.pressure[mesh.pres_node(i1, j0)] +
                                     flow.pressure[mesh.pres_node(i0, j1)] + flow.pressure[mesh.pres_node(i1, j1)]);
            out << num(p) << '\n';
        }
    }

    const int sub_cols = cols - 1;
    const int sub_rows = rows - 1;
    auto each_cell = [&](auto&& value) {
        for (int j = 0; j < sub_rows; ++j)
            for (int i = 0; i < sub_cols; ++i) out << value(static_cast<std::size_t>((j / 2) * mesh.nx + i / 2)) << '\n';
    };
    out << "CELL_DATA " << sub_cols * sub_rows << '\n';
    out << "SCALARS size double 1\nLOOKUP_TABLE default\n";
    each_cell([&](std::size_t e) { return num(design.s[e]); });
    out << "SCALARS orientation double 1\nLOOKUP_TABLE default\n";
    each_cell([&](std::size_t e) { return num(design.theta[e]); });
    out << "SCALARS dominant_shape int 1\nLOOKUP_TABLE default\n";
    each_cell([&](std::size_t e) { return std::to_string(dominant_shape(design, e)); });
    for (int m = 0; m < design.num_shapes; ++m) {
        out << "SCALARS rho_" << (m + 1) << " double 1\nLOOKUP_TABLE default\n";
        each_cell([&](std::size_t e) { return num(design.fractions(e)[m]); });
    }
    finish(out, path);
}

std::string topology_svg(const Mesh& mesh, const DesignSnapshot& design, std::span<const ShapeId> shapes,
                         double pixels_per_unit) {
    check_design(mesh, design);
    if (static_cast<int>(shapes.size()) != design.num_shapes)
        throw ContractError("topology_svg: shape list does not match the snapshot");
    constexpr int kSegments = 48;
    constexpr double kMinSize = 1e-3;
    const double w = mesh.lx * pixels_per_unit;
    const double h = mesh.ly * pixels_per_unit;
    auto px = [&](double x) { return x * pixels_per_unit; };
    auto py = [&](double y) { return (mesh.ly - y) * pixels_per_unit; };
    char buf[128];
    std::ostringstream out;
    std::snprintf(buf, sizeof buf, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.2f\" height=\"%.2f\">\n", w,
                  h);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"0\" y=\"0\" width=\"%.2f\" height=\"%.2f\" fill=\"white\" stroke=\"black\"/>\n", w, h);
    out << buf;
    for (std::size_t e = 0; e < design.size(); ++e) {
        const double s = design.s[e];
        if (s < kMinSize) continue;
        const ShapeId id = shapes[static_cast<std::size_t>(dominant_shape(design, e))];
        const Point2 c = mesh.element_center(static_cast<int>(e));
        const double ct = std::cos(design.theta[e]);
        const double st = std::sin(design.theta[e]);
        out << "<polygon fill=\"black\" points=\"";
        bool first = true;
        for (const Point2& p : geometry::boundary_polyline(id, s, kSegments)) {
            const double lx = (p.x - 0.5) * mesh.hx;
            const double ly = (p.y - 0.5) * mesh.hy;
            const double x = c.x + ct * lx - st * ly;
            const double y = c.y + st * lx + ct * ly;
            std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", first ? "" : " ", px(x), py(y));
            out << buf;
            first = false;
        }
        out << "\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

void write_topology_svg(const std::string& path, const Mesh& mesh, const DesignSnapshot& design,
                        std::span<const ShapeId> shapes) {
    const std::string text = topology_svg(mesh, design, shapes);
    std::ofstream out = open_out(path);
    out << text;
    finish(out, path);
}

void write_trace_csv(const std::string& path, std::span<const EpochRecord> trace) {
    std::ofstream out = open_out(path);
    out << trace_csv_header() << '\n';
    for (const EpochRecord& r : trace) out << trace_csv_row(r) << '\n';
    finish(out, path);
}

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string snapshot_checksum(const DesignSnapshot& design) {
    std::string text;
    char buf[32];
    auto add = [&](double v) {
        // Normalize negative zero so it hashes like zero.
        std::snprintf(buf, sizeof buf, "%.10g;", v == 0.0 ? 0.0 : v);
        text += buf;
    };
    for (double v : design.rho) add(v);
    for (double v : design.s) add(v);
    for (double v : design.theta) add(v);
    return fnv1a_hex(text);
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

}  // namespace gradeflow

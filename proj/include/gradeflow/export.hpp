#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gradeflow/design_field.hpp"
#include "gradeflow/fea.hpp"
#include "gradeflow/geometry.hpp"
#include "gradeflow/optimizer.hpp"

namespace gradeflow {

/// Per-element table: element,x,y,rho_1..rho_M,s,theta,J_e. `elemental_j` may
/// be empty (resampled snapshots carry no flow), leaving the J_e column blank.
void write_snapshot_csv(const std::string& path, const Mesh& mesh, const DesignSnapshot& design,
                        std::span<const double> elemental_j);

/// Legacy VTK structured points on the velocity-node lattice: velocity,
/// velocity magnitude and (bilinearly interpolated) pressure as point data;
/// rho_m, s, theta and the argmax shape index as cell data on the 2x2
/// sub-cells of each element.
void write_vtk(const std::string& path, const Mesh& mesh, const FlowSolution& flow, const DesignSnapshot& design);

/// Topology drawing: each element shows the outline of its dominant shape at
/// size s, rotated by theta about the element center. Output is a pure
/// function of the inputs.
std::string topology_svg(const Mesh& mesh, const DesignSnapshot& design, std::span<const ShapeId> shapes,
                         double pixels_per_unit = 400.0);
void write_topology_svg(const std::string& path, const Mesh& mesh, const DesignSnapshot& design,
                        std::span<const ShapeId> shapes);

void write_trace_csv(const std::string& path, std::span<const EpochRecord> trace);

/// 16 hex digits of the 64-bit FNV-1a hash of `text`.
std::string fnv1a_hex(std::string_view text);

/// FNV-1a over the snapshot values printed to 10 significant digits, so that
/// last-bit differences between platforms do not change it.
std::string snapshot_checksum(const DesignSnapshot& design);

void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace gradeflow

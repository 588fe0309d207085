#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradeflow/fea.hpp"
#include "gradeflow/geometry.hpp"
#include "gradeflow/optimizer.hpp"
#include "gradeflow/sensitivity.hpp"
#include "gradeflow/surrogate.hpp"

namespace gradeflow {

inline constexpr const char* kVersion = "1.0.0";

struct DomainSpec {
    double lx = 1.0;
    double ly = 1.0;
    int nx = 15;
    int ny = 15;
    friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

/// Pins the size variable everywhere: either directly, or through the solid
/// fraction of each cell (s^2 v_max = occupancy, single shape only).
struct SizeFixed {
    enum class Kind { Size, Occupancy };
    Kind kind = Kind::Occupancy;
    double value = 0.25;
    friend bool operator==(const SizeFixed&, const SizeFixed&) = default;
};

struct ProblemConfig {
    std::string name = "custom";
    DomainSpec domain;
    BoundaryConditions bcs;
    Constraint constraint;
    std::vector<ShapeId> shapes;
    double mu = 1.0;
    bool orientation_enabled = true;
    std::optional<SizeFixed> size_fixed;
    RunConfig run;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    Mesh mesh() const;
    Box box() const { return {0.0, 0.0, domain.lx, domain.ly}; }
    /// Overrides derived from orientation_enabled / size_fixed.
    DesignOptions design_options(const PermeabilitySurrogate& surrogate) const;

    friend bool operator==(const ProblemConfig&, const ProblemConfig&) = default;
};

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
ProblemConfig preset(const std::string& name);

nlohmann::json to_json(const ProblemConfig& config);
/// Validates; schema violations name the field.
ProblemConfig problem_from_json(const nlohmann::json& j);

void save_problem(const ProblemConfig& config, const std::string& path);
/// A preset name or a path to a JSON file.
ProblemConfig load_problem(const std::string& name_or_path);

/// 16 hex digits of a 64-bit FNV-1a hash over the canonical JSON text.
std::string config_hash(const ProblemConfig& config);

/// Parses "contact_area=70" or "volume=0.5".
Constraint parse_constraint(const std::string& text);
/// "all", a count "3" (first shapes of the catalog) or a comma-separated list of names.
std::vector<ShapeId> parse_shapes(const std::string& text);

}  // namespace gradeflow

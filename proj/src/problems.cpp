#include "gradeflow/problems.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "gradeflow/error.hpp"
#include "gradeflow/export.hpp"

namespace gradeflow {

using nlohmann::json;

namespace {

constexpr const char* kProblemFormat = "gradeflow-problem";

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError("problem config: '" + field + "' " + what);
}

const char* side_name(Side s) {
    switch (s) {
        case Side::Left: return "left";
        case Side::Right: return "right";
        case Side::Bottom: return "bottom";
        case Side::Top: return "top";
    }
    return "left";
}

Side side_from_name(const std::string& n, const std::string& field) {
    if (n == "left") return Side::Left;
    if (n == "right") return Side::Right;
    if (n == "bottom") return Side::Bottom;
    if (n == "top") return Side::Top;
    throw ConfigError("problem config: '" + field + "' must be one of left, right, bottom, top");
}

FlowSegment segment(Side side, double center, double span, double peak, bool inflow) {
    FlowSegment f;
    f.side = side;
    f.center = center;
    f.span = span;
    f.peak = peak;
    f.inflow = inflow;
    return f;
}

RunConfig preset_run() {
    RunConfig r;
    r.p_rate = 0.28;  // reaches p_max within the 25-epoch budget
    // A few inner steps per epoch, with each epoch's size change bounded so the
    // early low-penalty epochs cannot drive the design into a saturated state.
    r.lbfgs_iterations = 4;
    r.max_size_change = 0.15;
    return r;
}

// Reads j[key] as T; `path` is the dotted location used in messages.
template <class T>
T get(const json& j, const char* key, const std::string& path) {
    const std::string field = path.empty() ? key : path + "." + key;
    require(j.is_object() && j.contains(key), field, "is missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("problem config: '" + field + "' has the wrong type");
    }
}

template <class T>
T get_or(const json& j, const char* key, const std::string& path, T fallback) {
    return j.contains(key) ? get<T>(j, key, path) : fallback;
}

// Unbounded limits are stored as null.
json bound_to_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double bound_from_json(const json& j, const char* key, const std::string& path, double fallback) {
    if (!j.contains(key)) return fallback;
    if (j[key].is_null()) return std::numeric_limits<double>::infinity();
    return get<double>(j, key, path);
}

}  // namespace

void ProblemConfig::validate() const {
    require(domain.lx > 0.0 && std::isfinite(domain.lx), "domain.lx", "must be positive");
    require(domain.ly > 0.0 && std::isfinite(domain.ly), "domain.ly", "must be positive");
    require(domain.nx >= 2, "domain.nx", "must be at least 2");
    require(domain.ny >= 2, "domain.ny", "must be at least 2");
    require(std::abs(domain.lx / domain.nx - domain.ly / domain.ny) <= 1e-12 * domain.lx / domain.nx, "domain",
            "must have square elements (lx / nx == ly / ny)");
    require(!shapes.empty(), "shapes", "must not be empty");
    for (std::size_t i = 0; i < shapes.size(); ++i)
        for (std::size_t k = 0; k < i; ++k)
            require(shapes[i] != shapes[k], "shapes", "lists " + std::string(shape_name(shapes[i])) + " twice");
    require(mu > 0.0 && std::isfinite(mu), "mu", "must be positive");
    require(constraint.target > 0.0 && std::isfinite(constraint.target), "constraint.target", "must be positive");
    if (constraint.mode == ConstraintMode::Volume)
        require(constraint.target <= 1.0, "constraint.target", "must not exceed 1 in volume mode");
    require(constraint.length_scale > 0.0, "constraint.length_scale", "must be positive");
    if (size_fixed) {
        require(size_fixed->value >= 0.0 && size_fixed->value <= 1.0, "size_fixed", "must lie in [0, 1]");
        if (size_fixed->kind == SizeFixed::Kind::Occupancy)
            require(shapes.size() == 1, "size_fixed.occupancy", "requires exactly one shape");
    }
    require(!bcs.segments.empty(), "bcs", "must contain at least one segment");
    gradeflow::validate(bcs, domain.lx, domain.ly);
    run.validate();
}

Mesh ProblemConfig::mesh() const { return build_mesh(domain.nx, domain.ny, domain.lx, domain.ly); }

DesignOptions ProblemConfig::design_options(const PermeabilitySurrogate& surrogate) const {
    DesignOptions o;
    o.orientation_enabled = orientation_enabled;
    if (size_fixed) {
        if (size_fixed->kind == SizeFixed::Kind::Size) {
            o.fixed_size = size_fixed->value;
        } else {
            const double vmax = surrogate.shape(shapes.front()).v_max;
            const double s = std::sqrt(size_fixed->value / vmax);
            if (s > 1.0)
                throw ConfigError("problem config: 'size_fixed.occupancy' exceeds the solid fraction of " +
                                  std::string(shape_name(shapes.front())) + " at full size");
            o.fixed_size = s;
        }
    }
    return o;
}

std::vector<std::string> preset_names() { return {"double_pipe", "diffuser", "bent_pipe"}; }

ProblemConfig preset(const std::string& name) {
    ProblemConfig c;
    c.name = name;
    c.run = preset_run();
    if (name == "double_pipe") {
        c.domain = {1.0, 1.0, 15, 15};
        const double span = 1.0 / 6.0;
        c.bcs.segments = {segment(Side::Left, 0.25, span, 1.0, true), segment(Side::Left, 0.75, span, 1.0, true),
                          segment(Side::Right, 0.25, span, 1.0, false),
                          segment(Side::Right, 0.75, span, 1.0, false)};
        c.constraint = {ConstraintMode::Volume, 1.0 / 3.0, 1.0};
        c.shapes = {ShapeId::Square};
    } else if (name == "diffuser") {
        c.domain = {1.0, 1.0, 15, 15};
        c.bcs.segments = {segment(Side::Left, 0.5, 1.0, 1.0, true),
                          segment(Side::Right, 0.5, 1.0 / 3.0, 3.0, false)};
        c.constraint = {ConstraintMode::Volume, 0.5, 1.0};
        c.shapes = {ShapeId::Square};
    } else if (name == "bent_pipe") {
        c.domain = {1.0, 3.0, 20, 60};
        c.bcs.segments = {segment(Side::Left, 0.5, 0.5, 1.0, true), segment(Side::Top, 0.5, 0.5, 1.0, false)};
        c.constraint = {ConstraintMode::Volume, 0.75, 1.0};
        c.shapes = {ShapeId::FishBody2};
        c.size_fixed = SizeFixed{SizeFixed::Kind::Occupancy, 0.25};
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected double_pipe, diffuser or bent_pipe)");
    }
    c.validate();
    return c;
}

json to_json(const ProblemConfig& c) {
    json segs = json::array();
    for (const FlowSegment& s : c.bcs.segments) {
        segs.push_back({{"side", side_name(s.side)},
                        {"center", s.center},
                        {"span", s.span},
                        {"peak", s.peak},
                        {"direction", s.inflow ? "in" : "out"}});
    }
    json shapes = json::array();
    for (ShapeId id : c.shapes) shapes.push_back(std::string(shape_name(id)));
    const RunConfig& r = c.run;
    json run = {{"max_epochs", r.max_epochs},
                {"loss_tolerance", r.loss_tolerance},
                {"alpha0", r.alpha0},
                {"alpha_step", r.alpha_step},
                {"lambda0", r.lambda0},
                {"p0", r.p0},
                {"p_rate", r.p_rate},
                {"p_max", r.p_max},
                {"lbfgs_iterations", r.lbfgs_iterations},
                {"max_evaluations", r.max_evaluations},
                {"max_size_change", bound_to_json(r.max_size_change)},
                {"lbfgs",
                 {{"memory", r.lbfgs.memory},
                  {"c1", r.lbfgs.c1},
                  {"c2", r.lbfgs.c2},
                  {"max_line_search", r.lbfgs.max_line_search},
                  {"curvature_threshold", r.lbfgs.curvature_threshold},
                  {"tolerance_change", r.lbfgs.tolerance_change},
                  {"learning_rate", r.lbfgs.learning_rate},
                  {"max_displacement", bound_to_json(r.lbfgs.max_displacement)}}},
                {"seed", r.seed},
                {"hidden", r.hidden}};
    json j = {{"format", kProblemFormat},
              {"version", 1},
              {"name", c.name},
              {"domain", {{"lx", c.domain.lx}, {"ly", c.domain.ly}, {"nx", c.domain.nx}, {"ny", c.domain.ny}}},
              {"bcs", segs},
              {"constraint",
               {{"mode", c.constraint.mode == ConstraintMode::Volume ? "volume" : "contact_area"},
                {"target", c.constraint.target},
                {"length_scale", c.constraint.length_scale}}},
              {"shapes", shapes},
              {"mu", c.mu},
              {"orientation_enabled", c.orientation_enabled},
              {"run", run}};
    if (c.size_fixed) {
        j["size_fixed"] = {
            {c.size_fixed->kind == SizeFixed::Kind::Size ? "s" : "occupancy", c.size_fixed->value}};
    } else {
        j["size_fixed"] = nullptr;
    }
    return j;
}

ProblemConfig problem_from_json(const json& j) {
    require(j.is_object(), "<root>", "must be an object");
    if (j.contains("format"))
        require(j["format"] == kProblemFormat, "format", std::string("must be '") + kProblemFormat + "'");
    ProblemConfig c;
    c.name = get_or<std::string>(j, "name", "", "custom");
    const json dom = get<json>(j, "domain", "");
    c.domain.lx = get<double>(dom, "lx", "domain");
    c.domain.ly = get<double>(dom, "ly", "domain");
    c.domain.nx = get<int>(dom, "nx", "domain");
    c.domain.ny = get<int>(dom, "ny", "domain");

    const json segs = get<json>(j, "bcs", "");
    require(segs.is_array(), "bcs", "must be an array");
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const std::string at = "bcs[" + std::to_string(i) + "]";
        const json& s = segs[i];
        FlowSegment f;
        f.side = side_from_name(get<std::string>(s, "side", at), at + ".side");
        f.center = get<double>(s, "center", at);
        f.span = get<double>(s, "span", at);
        f.peak = get<double>(s, "peak", at);
        const std::string dir = get<std::string>(s, "direction", at);
        require(dir == "in" || dir == "out", at + ".direction", "must be 'in' or 'out'");
        f.inflow = dir == "in";
        c.bcs.segments.push_back(f);
    }

    const json con = get<json>(j, "constraint", "");
    const std::string mode = get<std::string>(con, "mode", "constraint");
    require(mode == "volume" || mode == "contact_area", "constraint.mode", "must be 'volume' or 'contact_area'");
    c.constraint.mode = mode == "volume" ? ConstraintMode::Volume : ConstraintMode::ContactArea;
    c.constraint.target = get<double>(con, "target", "constraint");
    c.constraint.length_scale = get_or<double>(con, "length_scale", "constraint", 1.0);

    const json shapes = get<json>(j, "shapes", "");
    require(shapes.is_array(), "shapes", "must be an array of shape names");
    for (const json& s : shapes) {
        require(s.is_string(), "shapes", "must be an array of shape names");
        c.shapes.push_back(shape_from_name(s.get<std::string>()));
    }
    c.mu = get_or<double>(j, "mu", "", 1.0);
    c.orientation_enabled = get_or<bool>(j, "orientation_enabled", "", true);
    if (j.contains("size_fixed") && !j["size_fixed"].is_null()) {
        const json& sf = j["size_fixed"];
        require(sf.is_object() && sf.size() == 1 && (sf.contains("s") || sf.contains("occupancy")), "size_fixed",
                "must be null, {\"s\": x} or {\"occupancy\": x}");
        const bool by_size = sf.contains("s");
        c.size_fixed = SizeFixed{by_size ? SizeFixed::Kind::Size : SizeFixed::Kind::Occupancy,
                                 get<double>(sf, by_size ? "s" : "occupancy", "size_fixed")};
    }

    if (j.contains("run")) {
        const json& r = j["run"];
        require(r.is_object(), "run", "must be an object");
        RunConfig& o = c.run;
        o.max_epochs = get_or<int>(r, "max_epochs", "run", o.max_epochs);
        o.loss_tolerance = get_or<double>(r, "loss_tolerance", "run", o.loss_tolerance);
        o.alpha0 = get_or<double>(r, "alpha0", "run", o.alpha0);
        o.alpha_step = get_or<double>(r, "alpha_step", "run", o.alpha_step);
        o.lambda0 = get_or<double>(r, "lambda0", "run", o.lambda0);
        o.p0 = get_or<double>(r, "p0", "run", o.p0);
        o.p_rate = get_or<double>(r, "p_rate", "run", o.p_rate);
        o.p_max = get_or<double>(r, "p_max", "run", o.p_max);
        o.lbfgs_iterations = get_or<int>(r, "lbfgs_iterations", "run", o.lbfgs_iterations);
        o.max_evaluations = get_or<int>(r, "max_evaluations", "run", o.max_evaluations);
        o.max_size_change = bound_from_json(r, "max_size_change", "run", o.max_size_change);
        o.seed = get_or<std::uint64_t>(r, "seed", "run", o.seed);
        o.hidden = get_or<std::vector<int>>(r, "hidden", "run", o.hidden);
        if (r.contains("lbfgs")) {
            const json& l = r["lbfgs"];
            LbfgsOptions& b = o.lbfgs;
            b.memory = get_or<int>(l, "memory", "run.lbfgs", b.memory);
            b.c1 = get_or<double>(l, "c1", "run.lbfgs", b.c1);
            b.c2 = get_or<double>(l, "c2", "run.lbfgs", b.c2);
            b.max_line_search = get_or<int>(l, "max_line_search", "run.lbfgs", b.max_line_search);
            b.curvature_threshold = get_or<double>(l, "curvature_threshold", "run.lbfgs", b.curvature_threshold);
            b.tolerance_change = get_or<double>(l, "tolerance_change", "run.lbfgs", b.tolerance_change);
            b.learning_rate = get_or<double>(l, "learning_rate", "run.lbfgs", b.learning_rate);
            b.max_displacement = bound_from_json(l, "max_displacement", "run.lbfgs", b.max_displacement);
        }
    }
    c.validate();
    return c;
}

void save_problem(const ProblemConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << to_json(config).dump(2) << '\n';
    if (!out) throw Error("failed writing '" + path + "'");
}

ProblemConfig load_problem(const std::string& name_or_path) {
    for (const std::string& n : preset_names())
        if (n == name_or_path) return preset(n);
    std::ifstream in(name_or_path);
    if (!in) throw ConfigError("'" + name_or_path + "' is neither a preset name nor a readable file");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + name_or_path + "' is not valid JSON: " + e.what());
    }
    return problem_from_json(j);
}

std::string config_hash(const ProblemConfig& config) {
    return fnv1a_hex(to_json(config).dump());
}

Constraint parse_constraint(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("constraint '" + text + "' must look like contact_area=70");
    const std::string mode = text.substr(0, eq);
    double value = 0.0;
    try {
        std::size_t used = 0;
        value = std::stod(text.substr(eq + 1), &used);
        if (used != text.size() - eq - 1) throw std::invalid_argument(text);
    } catch (const std::exception&) {
        throw ConfigError("constraint '" + text + "' has a malformed target");
    }
    Constraint c;
    if (mode == "contact_area") {
        c.mode = ConstraintMode::ContactArea;
    } else if (mode == "volume") {
        c.mode = ConstraintMode::Volume;
    } else {
        throw ConfigError("constraint mode '" + mode + "' must be contact_area or volume");
    }
    c.target = value;
    return c;
}

std::vector<ShapeId> parse_shapes(const std::string& text) {
    const auto& catalog = all_shapes();
    if (text == "all") return {catalog.begin(), catalog.end()};
    if (!text.empty() && text.find_first_not_of("0123456789") == std::string::npos) {
        const int m = std::stoi(text);
        if (m < 1 || m > kShapeCount) throw ConfigError("shape count must lie in [1, 8]");
        return {catalog.begin(), catalog.begin() + m};
    }
    std::vector<ShapeId> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(shape_from_name(item));
    if (out.empty()) throw ConfigError("empty shape list");
    return out;
}

}  // namespace gradeflow

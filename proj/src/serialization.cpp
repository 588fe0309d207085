#include "gradeflow/serialization.hpp"

#include <fstream>

#include <json.hpp>

#include "gradeflow/error.hpp"

namespace gradeflow {

using nlohmann::json;

namespace {

constexpr const char* kDatasetFormat = "gradeflow-dataset";
constexpr int kFormatVersion = 1;

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw Error("failed writing '" + path + "'");
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

template <class T>
T field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": field '" + key + "' has the wrong type");
    }
}

void check_format(const json& j, const char* format, const std::string& path) {
    if (field<std::string>(j, "format", path) != format)
        throw ConfigError(path + ": field 'format' must be '" + format + "'");
    if (field<int>(j, "version", path) != kFormatVersion)
        throw ConfigError(path + ": unsupported 'version'");
}

json fit_to_json(const ComponentFit& f) {
    return {{"coeffs", f.poly.coeffs}, {"mid", f.poly.mid},   {"half", f.poly.half}, {"log_space", f.log_space},
            {"s_lo", f.s_lo},          {"c_lo", f.c_lo},      {"s_hi", f.s_hi}};
}

ComponentFit fit_from_json(const json& j, const std::string& where) {
    ComponentFit f;
    f.poly.coeffs = field<std::array<double, 6>>(j, "coeffs", where);
    f.poly.mid = field<double>(j, "mid", where);
    f.poly.half = field<double>(j, "half", where);
    if (!(f.poly.half > 0.0)) throw ConfigError(where + ": field 'half' must be positive");
    f.log_space = field<bool>(j, "log_space", where);
    f.s_lo = field<double>(j, "s_lo", where);
    f.c_lo = field<double>(j, "c_lo", where);
    f.s_hi = field<double>(j, "s_hi", where);
    return f;
}

json surrogate_to_json(const PermeabilitySurrogate& surrogate) {
    json shapes = json::array();
    for (const ShapeSurrogate& s : surrogate.shapes()) {
        shapes.push_back({{"id", std::string(shape_name(s.shape))},
                          {"gamma_max", s.gamma_max},
                          {"v_max", s.v_max},
                          {"c00", fit_to_json(s.c00)},
                          {"c11", fit_to_json(s.c11)}});
    }
    return {{"shapes", shapes}};
}

}  // namespace

void save_dataset(const HomogenizationDataset& d, const std::string& path) {
    json shapes = json::array();
    for (const ShapeRecord& r : d.shapes) {
        json samples = json::array();
        for (const PermeabilitySample& s : r.samples) {
            samples.push_back({{"s", s.s},
                               {"c00", s.c00},
                               {"c11", s.c11},
                               {"c01", s.c01},
                               {"c10", s.c10},
                               {"floored", s.floored}});
        }
        shapes.push_back({{"id", std::string(shape_name(r.shape))},
                          {"gamma_max", r.gamma_max},
                          {"v_max", r.v_max},
                          {"samples", samples}});
    }
    json j = {{"format", kDatasetFormat},
              {"version", kFormatVersion},
              {"sizes", d.sizes},
              {"resolution", d.resolution},
              {"subsamples", d.subsamples},
              {"alpha_solid", d.options.alpha_solid},
              {"alpha_fluid", d.options.alpha_fluid},
              {"mu", d.options.mu},
              {"wall_seconds", d.wall_seconds},
              {"shapes", shapes},
              {"surrogate", surrogate_to_json(fit_polynomials(d))}};
    write_json(j, path);
}

HomogenizationDataset load_dataset(const std::string& path) {
    const json j = read_json(path);
    check_format(j, kDatasetFormat, path);
    HomogenizationDataset d;
    d.sizes = field<std::vector<double>>(j, "sizes", path);
    d.resolution = field<int>(j, "resolution", path);
    d.subsamples = field<int>(j, "subsamples", path);
    d.options.alpha_solid = field<double>(j, "alpha_solid", path);
    d.options.alpha_fluid = field<double>(j, "alpha_fluid", path);
    d.options.mu = field<double>(j, "mu", path);
    d.wall_seconds = field<double>(j, "wall_seconds", path);
    for (const json& r : field<json>(j, "shapes", path)) {
        ShapeRecord rec;
        rec.shape = shape_from_name(field<std::string>(r, "id", path + ": shapes[]"));
        const std::string where = path + ": shape " + std::string(shape_name(rec.shape));
        rec.gamma_max = field<double>(r, "gamma_max", where);
        rec.v_max = field<double>(r, "v_max", where);
        for (const json& s : field<json>(r, "samples", where)) {
            PermeabilitySample p;
            p.shape = rec.shape;
            p.s = field<double>(s, "s", where);
            p.c00 = field<double>(s, "c00", where);
            p.c11 = field<double>(s, "c11", where);
            p.c01 = field<double>(s, "c01", where);
            p.c10 = field<double>(s, "c10", where);
            p.floored = field<bool>(s, "floored", where);
            rec.samples.push_back(p);
        }
        if (rec.samples.size() != d.sizes.size())
            throw ConfigError(where + ": field 'samples' must have one entry per size");
        d.shapes.push_back(std::move(rec));
    }
    return d;
}

PermeabilitySurrogate load_surrogate(const std::string& path) {
    const json j = read_json(path);
    check_format(j, kDatasetFormat, path);
    const json sur = field<json>(j, "surrogate", path);
    const std::string base = path + ": surrogate";
    std::vector<ShapeSurrogate> shapes;
    for (const json& r : field<json>(sur, "shapes", base)) {
        ShapeSurrogate s;
        s.shape = shape_from_name(field<std::string>(r, "id", base + ".shapes[]"));
        const std::string where = base + " shape " + std::string(shape_name(s.shape));
        s.gamma_max = field<double>(r, "gamma_max", where);
        s.v_max = field<double>(r, "v_max", where);
        s.c00 = fit_from_json(field<json>(r, "c00", where), where + ".c00");
        s.c11 = fit_from_json(field<json>(r, "c11", where), where + ".c11");
        shapes.push_back(std::move(s));
    }
    if (shapes.empty()) throw ConfigError(base + ": field 'shapes' is empty");
    return PermeabilitySurrogate(std::move(shapes));
}

void save_catalog(const std::string& path) {
    json out = json::array();
    for (const MicrostructureFamily& f : geometry::catalog()) {
        json params = json::object();
        for (const auto& [k, v] : f.params) params[k] = v;
        out.push_back({{"id", f.name}, {"params", params}, {"gamma_max", f.gamma_max}, {"v_max", f.v_max}});
    }
    write_json({{"shapes", out}}, path);
}

}  // namespace gradeflow

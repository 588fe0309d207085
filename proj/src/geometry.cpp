#include "gradeflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gradeflow/error.hpp"
#include "gradeflow/kernels.hpp"

namespace gradeflow {

namespace {

constexpr double kPi = std::numbers::pi;

constexpr std::array<ShapeId, kShapeCount> kAllShapes = {
    ShapeId::Squircle, ShapeId::FishBody1, ShapeId::FishBody2, ShapeId::Square,
    ShapeId::Circle,   ShapeId::Ellipse,   ShapeId::Mucosa10,  ShapeId::Mucosa20};

constexpr std::array<std::string_view, kShapeCount> kNames = {
    "squircle", "fish_body_1", "fish_body_2", "square", "circle", "ellipse", "mucosa_10", "mucosa_20"};

double fish_thickness(ShapeId id) {
    return id == ShapeId::FishBody1 ? geometry::kFishBody1Thickness : geometry::kFishBody2Thickness;
}

int mucosa_ripples(ShapeId id) {
    return id == ShapeId::Mucosa10 ? geometry::kMucosa10Ripples : geometry::kMucosa20Ripples;
}

// Polar radius at s = 1 of the star-shaped families, for angle phi measured
// in the first quadrant (the shapes are even in X and Y).
double polar_radius(ShapeId id, double c, double sn, double phi) {
    switch (id) {
        case ShapeId::Circle:
            return 0.5;
        case ShapeId::Ellipse:
            return 0.5 / std::sqrt(c * c + 4.0 * sn * sn);
        case ShapeId::Squircle:
            return 0.5 / std::pow(std::pow(c, 4) + std::pow(sn, 4), 0.25);
        case ShapeId::Mucosa10:
        case ShapeId::Mucosa20: {
            using namespace geometry;
            const double q = kMucosaExponent;
            const double base =
                1.0 / std::pow(std::pow(c / kMucosaHalfWidth, q) + std::pow(sn / kMucosaHalfHeight, q), 1.0 / q);
            const double ripple = 0.5 * (1.0 - std::cos(mucosa_ripples(id) * phi));
            return base * (1.0 - kMucosaRippleDepth * ripple);
        }
        default:
            return 0.0;
    }
}

bool is_polar(ShapeId id) {
    return id == ShapeId::Circle || id == ShapeId::Ellipse || id == ShapeId::Squircle || id == ShapeId::Mucosa10 ||
           id == ShapeId::Mucosa20;
}

double lens_half_thickness(ShapeId id, double s, double X) {
    if (s <= 0.0) return 0.0;
    const double u = 2.0 * X / s;
    return std::max(0.0, 0.5 * fish_thickness(id) * s * (1.0 - u * u));
}

void check_size(double s) {
    if (!(s >= 0.0 && s <= 1.0)) {
        std::ostringstream msg;
        msg << "size s = " << s << " outside [0, 1]";
        throw DomainError(msg.str());
    }
}

}  // namespace

const std::array<ShapeId, kShapeCount>& all_shapes() { return kAllShapes; }

std::string_view shape_name(ShapeId id) { return kNames[static_cast<int>(id)]; }

ShapeId shape_from_name(std::string_view name) {
    for (int i = 0; i < kShapeCount; ++i) {
        if (kNames[i] == name) return kAllShapes[i];
    }
    throw ConfigError("unknown microstructure '" + std::string(name) + "'");
}

double UnitCellGrid::mean() const {
    double total = 0.0;
    for (double v : occupancy) total += v;
    return occupancy.empty() ? 0.0 : total / static_cast<double>(occupancy.size());
}

namespace geometry {

double level(ShapeId id, double s, double X, double Y) {
    const double ax = std::abs(X);
    const double ay = std::abs(Y);
    switch (id) {
        case ShapeId::Square:
            return std::max(ax, ay) - 0.5 * s;
        case ShapeId::Circle:
            return std::hypot(ax, ay) - 0.5 * s;
        case ShapeId::Ellipse:
            return std::hypot(ax, 2.0 * ay) - 0.5 * s;
        case ShapeId::Squircle:
            return std::pow(ax * ax * ax * ax + ay * ay * ay * ay, 0.25) - 0.5 * s;
        case ShapeId::FishBody1:
        case ShapeId::FishBody2:
            return std::max(ax - 0.5 * s, ay - lens_half_thickness(id, s, ax));
        case ShapeId::Mucosa10:
        case ShapeId::Mucosa20: {
            const double r = std::hypot(ax, ay);
            if (r == 0.0) return -0.5 * s * (1.0 - kMucosaRippleDepth);
            const double phi = std::atan2(ay, ax);
            return r - s * polar_radius(id, ax / r, ay / r, phi);
        }
    }
    return 1.0;
}

bool indicator(ShapeId id, double s, Point2 p) {
    check_size(s);
    if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
        throw DomainError("point outside the unit cell");
    }
    return level(id, s, p.x - 0.5, p.y - 0.5) < 0.0;
}

UnitCellGrid rasterize(ShapeId id, double s, int n, int subsamples) {
    check_size(s);
    if (n < 1 || subsamples < 1) throw ContractError("rasterize: resolution must be positive");
    UnitCellGrid grid;
    grid.n = n;
    grid.occupancy.assign(static_cast<std::size_t>(n) * n, 0.0);
    kernels::omp::rasterize(id, s, n, subsamples, grid.occupancy);
    return grid;
}

std::vector<Point2> boundary_polyline(ShapeId id, double s, int segments) {
    check_size(s);
    segments = std::max(segments, 8);
    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(segments));
    if (is_polar(id)) {
        for (int i = 0; i < segments; ++i) {
            const double phi = 2.0 * kPi * i / segments;
            const double c = std::cos(phi);
            const double sn = std::sin(phi);
            const double q = std::atan2(std::abs(sn), std::abs(c));
            const double r = s * polar_radius(id, std::abs(c), std::abs(sn), q);
            pts.push_back({0.5 + r * c, 0.5 + r * sn});
        }
    } else if (id == ShapeId::Square) {
        const int per_side = std::max(1, segments / 4);
        const double h = 0.5 * s;
        const std::array<Point2, 4> corners = {{{-h, -h}, {h, -h}, {h, h}, {-h, h}}};
        for (int c = 0; c < 4; ++c) {
            const Point2 a = corners[c];
            const Point2 b = corners[(c + 1) % 4];
            for (int i = 0; i < per_side; ++i) {
                const double t = static_cast<double>(i) / per_side;
                pts.push_back({0.5 + a.x + t * (b.x - a.x), 0.5 + a.y + t * (b.y - a.y)});
            }
        }
    } else {
        // Lens: upper arc right-to-left, lower arc left-to-right; cosine
        // spacing concentrates points at the pointed tips.
        const int half = segments / 2;
        for (int i = 0; i < half; ++i) {
            const double X = 0.5 * s * std::cos(kPi * i / half);
            pts.push_back({0.5 + X, 0.5 + lens_half_thickness(id, s, X)});
        }
        for (int i = 0; i < half; ++i) {
            const double X = -0.5 * s * std::cos(kPi * i / half);
            pts.push_back({0.5 + X, 0.5 - lens_half_thickness(id, s, X)});
        }
    }
    return pts;
}

double polyline_length(const std::vector<Point2>& closed) {
    double len = 0.0;
    for (std::size_t i = 0; i < closed.size(); ++i) {
        const Point2& a = closed[i];
        const Point2& b = closed[(i + 1) % closed.size()];
        len += std::hypot(b.x - a.x, b.y - a.y);
    }
    return len;
}

double perimeter_max(ShapeId id) {
    switch (id) {
        case ShapeId::Circle:
            return kPi;
        case ShapeId::Square:
            return 4.0;
        case ShapeId::Ellipse:
            // semi-axes 1/2 and 1/4: 4 a E(k), k^2 = 1 - (b/a)^2
            return 2.0 * std::comp_ellint_2(std::sqrt(0.75));
        default:
            return polyline_length(boundary_polyline(id, 1.0, 1 << 17));
    }
}

double volume_fraction_max(ShapeId id) {
    switch (id) {
        case ShapeId::Circle:
            return kPi / 4.0;
        case ShapeId::Square:
            return 1.0;
        case ShapeId::Ellipse:
            return kPi / 8.0;
        case ShapeId::Squircle:
            // |X|^4 + |Y|^4 <= (1/2)^4 has area Gamma(5/4)^2 / Gamma(3/2).
            return std::pow(std::tgamma(1.25), 2) / std::tgamma(1.5);
        case ShapeId::FishBody1:
        case ShapeId::FishBody2:
            return 2.0 * fish_thickness(id) / 3.0;
        case ShapeId::Mucosa10:
        case ShapeId::Mucosa20: {
            // (1/2) * integral of R(phi)^2 over a full turn; the integrand is
            // smooth and periodic, so the trapezoid rule converges fast.
            const int n = 1 << 16;
            double sum = 0.0;
            for (int i = 0; i < n; ++i) {
                const double phi = 2.0 * kPi * i / n;
                const double c = std::abs(std::cos(phi));
                const double sn = std::abs(std::sin(phi));
                const double r = polar_radius(id, c, sn, std::atan2(sn, c));
                sum += r * r;
            }
            return 0.5 * sum * (2.0 * kPi / n);
        }
    }
    return 0.0;
}

MicrostructureFamily family(ShapeId id) {
    MicrostructureFamily f{id, std::string(shape_name(id)), {}, perimeter_max(id), volume_fraction_max(id)};
    switch (id) {
        case ShapeId::Squircle:
            f.params = {{"exponent", 4.0}, {"half_side", 0.5}};
            break;
        case ShapeId::FishBody1:
        case ShapeId::FishBody2:
            f.params = {{"chord", 1.0}, {"thickness_ratio", fish_thickness(id)}};
            break;
        case ShapeId::Square:
            f.params = {{"side", 1.0}};
            break;
        case ShapeId::Circle:
            f.params = {{"diameter", 1.0}};
            break;
        case ShapeId::Ellipse:
            f.params = {{"major_axis", 1.0}, {"minor_axis", 0.5}};
            break;
        case ShapeId::Mucosa10:
        case ShapeId::Mucosa20:
            f.params = {{"half_width", kMucosaHalfWidth},
                        {"half_height", kMucosaHalfHeight},
                        {"envelope_exponent", kMucosaExponent},
                        {"ripple_depth", kMucosaRippleDepth},
                        {"ripples", static_cast<double>(mucosa_ripples(id))}};
            break;
    }
    return f;
}

std::vector<MicrostructureFamily> catalog() {
    std::vector<MicrostructureFamily> out;
    for (ShapeId id : kAllShapes) out.push_back(family(id));
    return out;
}

}  // namespace geometry
}  // namespace gradeflow

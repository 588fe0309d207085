#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gradeflow {

enum class ShapeId { Squircle, FishBody1, FishBody2, Square, Circle, Ellipse, Mucosa10, Mucosa20 };

inline constexpr int kShapeCount = 8;

/// Catalog order; the first m entries form the "first m shapes" subsets.
const std::array<ShapeId, kShapeCount>& all_shapes();

std::string_view shape_name(ShapeId id);
ShapeId shape_from_name(std::string_view name);  // throws ConfigError

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// A pre-selected microstructure: a shape inside the unit cell that scales
/// homothetically about the cell center with the size variable s in [0,1].
struct MicrostructureFamily {
    ShapeId id;
    std::string name;
    std::vector<std::pair<std::string, double>> params;
    double gamma_max;  // boundary length at s = 1, in cell side lengths
    double v_max;      // solid area fraction at s = 1
};

/// Occupancy of an n x n raster of the unit cell. Cell (i, j) covers
/// [i/n, (i+1)/n] x [j/n, (j+1)/n]; storage is row-major in j.
struct UnitCellGrid {
    int n = 0;
    std::vector<double> occupancy;

    double at(int i, int j) const { return occupancy[static_cast<std::size_t>(j) * n + i]; }
    double mean() const;
};

namespace geometry {

/// Continuous function of the centered coordinates (X, Y) = p - (0.5, 0.5),
/// strictly negative inside the solid and even in X and in Y.
double level(ShapeId id, double s, double X, double Y);

bool indicator(ShapeId id, double s, Point2 p);

UnitCellGrid rasterize(ShapeId id, double s, int n, int subsamples = 4);

/// Closed boundary curve at size s in cell coordinates, first point not repeated.
std::vector<Point2> boundary_polyline(ShapeId id, double s, int segments);

double polyline_length(const std::vector<Point2>& closed);

double perimeter_max(ShapeId id);
double volume_fraction_max(ShapeId id);

MicrostructureFamily family(ShapeId id);
std::vector<MicrostructureFamily> catalog();

// Shape constants, exposed for tests and documentation.
inline constexpr double kFishBody1Thickness = 0.60;
inline constexpr double kFishBody2Thickness = 0.40;
inline constexpr double kMucosaHalfWidth = 0.5;
inline constexpr double kMucosaHalfHeight = 0.375;
inline constexpr double kMucosaExponent = 4.0;
inline constexpr double kMucosaRippleDepth = 0.6;
inline constexpr int kMucosa10Ripples = 36;
inline constexpr int kMucosa20Ripples = 72;

}  // namespace geometry
}  // namespace gradeflow

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "gradeflow/geometry.hpp"
#include "gradeflow/homogenize.hpp"
#include "gradeflow/tensor.hpp"

namespace gradeflow {

inline constexpr double kPermeabilityCap = 1e3;

/// Degree-5 polynomial through six samples, stored in monomials of the
/// variable t = (s - mid) / half mapped onto [-1, 1].
struct Quintic {
    std::array<double, 6> coeffs{};
    double mid = 0.5;
    double half = 0.5;
    double value(double s) const;
    double derivative(double s) const;
};

/// One principal permeability component as a function of size.
struct ComponentFit {
    Quintic poly;
    bool log_space = false;  // poly interpolates log(c)
    double s_lo = 0.0;       // smallest fitted size; drag blends linearly to the cap below it
    double c_lo = 0.0;       // fitted value at s_lo
    double s_hi = 1.0;

    struct Value {
        double c = 0.0;
        double dc_ds = 0.0;
        bool clamped = false;
    };
    Value eval(double s) const;
};

struct ShapeSurrogate {
    ShapeId shape = ShapeId::Circle;
    double gamma_max = 0.0;
    double v_max = 0.0;
    ComponentFit c00;
    ComponentFit c11;
};

/// Per-shape polynomial fits of the principal permeabilities. Immutable once
/// built; evaluation is pure.
class PermeabilitySurrogate {
public:
    PermeabilitySurrogate() = default;
    explicit PermeabilitySurrogate(std::vector<ShapeSurrogate> shapes) : shapes_(std::move(shapes)) {}

    const std::vector<ShapeSurrogate>& shapes() const { return shapes_; }
    const ShapeSurrogate& shape(ShapeId id) const;
    bool has(ShapeId id) const;
    /// Subset in the given order, for a problem that uses only some shapes.
    std::vector<ShapeSurrogate> select(std::span<const ShapeId> ids) const;

private:
    std::vector<ShapeSurrogate> shapes_;
};

/// Interpolates one component through (sizes, values). Uses log space when the
/// direct fit dips non-positive anywhere on [sizes.front(), sizes.back()].
/// Throws ContractError on duplicate or unsorted sizes.
ComponentFit fit_component(std::span<const double> sizes, std::span<const double> values);

PermeabilitySurrogate fit_polynomials(const HomogenizationDataset& dataset);

/// Principal tensor diag(c00, c11) rotated by theta.
Sym2 rotate_tensor(double c00, double c11, double theta);
/// d rotate_tensor / d theta.
Sym2 rotate_tensor_dtheta(double c00, double c11, double theta);

/// Effective element permeability. Each shape's rotated tensor is weighted by
/// rho_m^p; eigenvalues of the sum are clamped to the permeability floor.
struct MixedPermeability {
    Sym2 c;
    Sym2 raw;
    bool clamped = false;
};
MixedPermeability mix_permeability(std::span<const ShapeSurrogate> shapes, std::span<const double> rho, double s,
                                   double theta, double p);

/// Reverse-mode derivative of mix_permeability(): given dL/dC (symmetric,
/// Frobenius pairing) accumulates dL/drho (overwritten), dL/ds and dL/dtheta.
void mix_permeability_pullback(std::span<const ShapeSurrogate> shapes, std::span<const double> rho, double s,
                               double theta, double p, const Sym2& dl_dc, std::span<double> dl_drho, double& dl_ds,
                               double& dl_dtheta);

/// Pullback of X -> X^{-1}: dL/dX = -X^{-1} dL/dY X^{-1}.
Sym2 inverse_pullback(const Sym2& x_inv, const Sym2& dl_dy);

/// Pullback through the eigenvalue clamp X -> Q max(lambda, floor) Q^T.
Sym2 clamp_pullback(const Sym2& raw, double floor, const Sym2& dl_dout);

/// Interface length of one element: h * s * sum_m rho_m gamma_m.
double contact_area(std::span<const double> rho, double s, std::span<const double> gamma_max, double h);

/// Fluid volume of one element: V_e (1 - s^2 sum_m rho_m v_m).
double fluid_volume(std::span<const double> rho, double s, std::span<const double> v_max, double element_volume);

}  // namespace gradeflow

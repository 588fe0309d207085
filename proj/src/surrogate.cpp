#include "gradeflow/surrogate.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "gradeflow/error.hpp"

namespace gradeflow {

double Quintic::value(double s) const {
    const double t = (s - mid) / half;
    double acc = 0.0;
    for (int k = 5; k >= 0; --k) acc = acc * t + coeffs[k];
    return acc;
}

double Quintic::derivative(double s) const {
    const double t = (s - mid) / half;
    double acc = 0.0;
    for (int k = 5; k >= 1; --k) acc = acc * t + k * coeffs[k];
    return acc / half;
}

ComponentFit::Value ComponentFit::eval(double s) const {
    Value out;
    if (s >= s_lo) {
        const double q = poly.value(s);
        const double dq = poly.derivative(s);
        if (log_space) {
            out.c = std::exp(q);
            out.dc_ds = out.c * dq;
        } else {
            out.c = q;
            out.dc_ds = dq;
        }
    } else {
        // Vanishing obstacles: blend the drag 1/c linearly to the open-channel
        // cap at s = 0. Blending c itself would make small obstacles nearly
        // drag-free while they still carry contact area.
        const double d_lo = 1.0 / c_lo;
        const double d_cap = 1.0 / kPermeabilityCap;
        const double slope = (d_lo - d_cap) / s_lo;
        const double drag = d_cap + slope * s;
        out.c = 1.0 / drag;
        out.dc_ds = -slope / (drag * drag);
    }
    if (!(out.c >= kPermeabilityFloor)) {
        out.c = kPermeabilityFloor;
        out.dc_ds = 0.0;
        out.clamped = true;
    } else if (out.c > kPermeabilityCap) {
        out.c = kPermeabilityCap;
        out.dc_ds = 0.0;
        out.clamped = true;
    }
    return out;
}

const ShapeSurrogate& PermeabilitySurrogate::shape(ShapeId id) const {
    for (const ShapeSurrogate& s : shapes_)
        if (s.shape == id) return s;
    throw ContractError("surrogate has no fit for shape '" + std::string(shape_name(id)) + "'");
}

bool PermeabilitySurrogate::has(ShapeId id) const {
    for (const ShapeSurrogate& s : shapes_)
        if (s.shape == id) return true;
    return false;
}

std::vector<ShapeSurrogate> PermeabilitySurrogate::select(std::span<const ShapeId> ids) const {
    std::vector<ShapeSurrogate> out;
    out.reserve(ids.size());
    for (ShapeId id : ids) out.push_back(shape(id));
    return out;
}

namespace {

Quintic interpolate(std::span<const double> x, std::span<const double> y) {
    Quintic q;
    q.mid = 0.5 * (x.front() + x.back());
    q.half = 0.5 * (x.back() - x.front());
    Eigen::Matrix<double, 6, 6> v;
    Eigen::Matrix<double, 6, 1> rhs;
    for (int i = 0; i < 6; ++i) {
        const double t = (x[i] - q.mid) / q.half;
        double pw = 1.0;
        for (int k = 0; k < 6; ++k) {
            v(i, k) = pw;
            pw *= t;
        }
        rhs(i) = y[i];
    }
    const Eigen::Matrix<double, 6, 1> c = v.fullPivLu().solve(rhs);
    for (int k = 0; k < 6; ++k) q.coeffs[k] = c(k);
    return q;
}

}  // namespace

ComponentFit fit_component(std::span<const double> sizes, std::span<const double> values) {
    if (sizes.size() != 6 || values.size() != 6) {
        throw ContractError("fit_component: quintic fit needs exactly 6 samples, got " +
                            std::to_string(sizes.size()));
    }
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        if (!(sizes[i] > sizes[i - 1])) {
            std::ostringstream msg;
            msg << "fit_component: sizes must be strictly increasing (duplicate or unsorted at " << sizes[i] << ")";
            throw ContractError(msg.str());
        }
    }
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ContractError("fit_component: permeability samples must be positive");
    }
    ComponentFit fit;
    fit.s_lo = sizes.front();
    fit.s_hi = sizes.back();
    fit.c_lo = values.front();
    fit.poly = interpolate(sizes, values);
    constexpr int kScan = 1000;
    bool positive = true;
    for (int i = 0; i <= kScan && positive; ++i) {
        const double s = fit.s_lo + (fit.s_hi - fit.s_lo) * i / kScan;
        positive = fit.poly.value(s) > 0.0;
    }
    if (!positive) {
        std::array<double, 6> logs;
        for (int i = 0; i < 6; ++i) logs[i] = std::log(values[i]);
        fit.poly = interpolate(sizes, logs);
        fit.log_space = true;
    }
    return fit;
}

PermeabilitySurrogate fit_polynomials(const HomogenizationDataset& dataset) {
    std::vector<ShapeSurrogate> shapes;
    for (const ShapeRecord& rec : dataset.shapes) {
        std::vector<double> c00, c11;
        for (const PermeabilitySample& smp : rec.samples) {
            c00.push_back(smp.c00);
            c11.push_back(smp.c11);
        }
        ShapeSurrogate s;
        s.shape = rec.shape;
        s.gamma_max = rec.gamma_max;
        s.v_max = rec.v_max;
        s.c00 = fit_component(dataset.sizes, c00);
        s.c11 = fit_component(dataset.sizes, c11);
        shapes.push_back(s);
    }
    return PermeabilitySurrogate(std::move(shapes));
}

Sym2 rotate_tensor(double c00, double c11, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c00 * c * c + c11 * s * s, (c00 - c11) * c * s, c00 * s * s + c11 * c * c};
}

Sym2 rotate_tensor_dtheta(double c00, double c11, double theta) {
    const double d = c00 - c11;
    const double s2 = std::sin(2.0 * theta);
    const double c2 = std::cos(2.0 * theta);
    return {-d * s2, d * c2, d * s2};
}

namespace {

void check_mix_inputs(std::span<const ShapeSurrogate> shapes, std::span<const double> rho, double p) {
    if (rho.size() != shapes.size()) {
        throw ContractError("mix_permeability: " + std::to_string(rho.size()) + " fractions for " +
                            std::to_string(shapes.size()) + " shapes");
    }
    if (!(p >= 1.0)) throw ContractError("mix_permeability: penalization exponent must be >= 1");
    double sum = 0.0;
    for (double r : rho) {
        if (!(r >= -1e-6)) throw ContractError("mix_permeability: negative shape fraction");
        sum += r;
    }
    if (!(std::abs(sum - 1.0) <= 1e-6)) {
        std::ostringstream msg;
        msg << "mix_permeability: shape fractions sum to " << sum << ", not 1";
        throw ContractError(msg.str());
    }
}

}  // namespace

MixedPermeability mix_permeability(std::span<const ShapeSurrogate> shapes, std::span<const double> rho, double s,
                                   double theta, double p) {
    check_mix_inputs(shapes, rho, p);
    Sym2 raw;
    for (std::size_t m = 0; m < shapes.size(); ++m) {
        const double w = std::pow(rho[m], p);
        raw += w * rotate_tensor(shapes[m].c00.eval(s).c, shapes[m].c11.eval(s).c, theta);
    }
    MixedPermeability out;
    out.raw = raw;
    const Eig2 e = eig(raw);
    if (e.lo < kPermeabilityFloor) {
        out.clamped = true;
        out.c = compose(e, kPermeabilityFloor, std::max(e.hi, kPermeabilityFloor));
    } else {
        out.c = raw;
    }
    return out;
}

Sym2 inverse_pullback(const Sym2& x_inv, const Sym2& dl_dy) { return -1.0 * sandwich(x_inv, dl_dy); }

Sym2 clamp_pullback(const Sym2& raw, double floor, const Sym2& g) {
    const Eig2 e = eig(raw);
    if (e.lo >= floor) return g;
    const double c = e.c, s = e.s;
    // Components of g in the eigenbasis v1 = (c, s), v2 = (-s, c).
    const double h11 = c * c * g.xx + 2.0 * c * s * g.xy + s * s * g.yy;
    const double h22 = s * s * g.xx - 2.0 * c * s * g.xy + c * c * g.yy;
    const double h12 = -c * s * g.xx + (c * c - s * s) * g.xy + c * s * g.yy;
    const double d11 = 0.0;  // lo is clamped
    const double d22 = e.hi > floor ? 1.0 : 0.0;
    const double gap = e.hi - e.lo;
    const double d12 = gap > 1e-14 * std::max(std::abs(e.hi), floor)
                           ? (std::max(e.hi, floor) - floor) / gap
                           : d22;
    const double a = d11 * h11, b = d22 * h22, k = d12 * h12;
    return {a * c * c + b * s * s - 2.0 * k * c * s, a * c * s - b * c * s + k * (c * c - s * s),
            a * s * s + b * c * c + 2.0 * k * c * s};
}

void mix_permeability_pullback(std::span<const ShapeSurrogate> shapes, std::span<const double> rho, double s,
                               double theta, double p, const Sym2& dl_dc, std::span<double> dl_drho, double& dl_ds,
                               double& dl_dtheta) {
    check_mix_inputs(shapes, rho, p);
    Sym2 raw;
    std::vector<ComponentFit::Value> v0(shapes.size()), v1(shapes.size());
    for (std::size_t m = 0; m < shapes.size(); ++m) {
        v0[m] = shapes[m].c00.eval(s);
        v1[m] = shapes[m].c11.eval(s);
        raw += std::pow(rho[m], p) * rotate_tensor(v0[m].c, v1[m].c, theta);
    }
    const Sym2 g = clamp_pullback(raw, kPermeabilityFloor, dl_dc);
    dl_ds = 0.0;
    dl_dtheta = 0.0;
    for (std::size_t m = 0; m < shapes.size(); ++m) {
        const double w = std::pow(rho[m], p);
        const double dw = rho[m] > 0.0 ? p * std::pow(rho[m], p - 1.0) : (p == 1.0 ? 1.0 : 0.0);
        dl_drho[m] = dw * g.dot(rotate_tensor(v0[m].c, v1[m].c, theta));
        dl_ds += w * g.dot(rotate_tensor(v0[m].dc_ds, v1[m].dc_ds, theta));
        dl_dtheta += w * g.dot(rotate_tensor_dtheta(v0[m].c, v1[m].c, theta));
    }
}

double contact_area(std::span<const double> rho, double s, std::span<const double> gamma_max, double h) {
    if (rho.size() != gamma_max.size()) throw ContractError("contact_area: size mismatch");
    double acc = 0.0;
    for (std::size_t m = 0; m < rho.size(); ++m) acc += rho[m] * gamma_max[m];
    return h * s * acc;
}

double fluid_volume(std::span<const double> rho, double s, std::span<const double> v_max, double element_volume) {
    if (rho.size() != v_max.size()) throw ContractError("fluid_volume: size mismatch");
    double acc = 0.0;
    for (std::size_t m = 0; m < rho.size(); ++m) acc += rho[m] * v_max[m];
    return element_volume * (1.0 - s * s * acc);
}

}  // namespace gradeflow

#include "gradeflow/fea.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "gradeflow/error.hpp"
#include "gradeflow/kernels.hpp"

namespace gradeflow {

namespace {

// 1D quadratic Lagrange basis on [-1, 1] with nodes -1, 0, 1.
std::array<double, 3> q2(double t) { return {0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)}; }
std::array<double, 3> dq2(double t) { return {t - 0.5, -2.0 * t, t + 0.5}; }
std::array<double, 2> q1(double t) { return {0.5 * (1.0 - t), 0.5 * (1.0 + t)}; }

}  // namespace

Point2 Mesh::vel_node_position(int node) const {
    const int i = node % vel_cols();
    const int j = node / vel_cols();
    return {0.5 * hx * i, 0.5 * hy * j};
}

Point2 Mesh::pres_node_position(int node) const {
    const int i = node % (nx + 1);
    const int j = node / (nx + 1);
    return {hx * i, hy * j};
}

Point2 Mesh::element_center(int e) const {
    const int ex = e % nx;
    const int ey = e / nx;
    return {hx * (ex + 0.5), hy * (ey + 0.5)};
}

std::vector<Point2> Mesh::element_centers() const {
    std::vector<Point2> out(static_cast<std::size_t>(num_elements()));
    for (int e = 0; e < num_elements(); ++e) out[e] = element_center(e);
    return out;
}

std::array<int, kVelNodes> Mesh::element_vel_nodes(int e) const {
    const int ex = e % nx;
    const int ey = e / nx;
    std::array<int, kVelNodes> out{};
    for (int b = 0; b < 3; ++b)
        for (int a = 0; a < 3; ++a) out[b * 3 + a] = vel_node(2 * ex + a, 2 * ey + b);
    return out;
}

std::array<int, kPresDofs> Mesh::element_pres_nodes(int e) const {
    const int ex = e % nx;
    const int ey = e / nx;
    return {pres_node(ex, ey), pres_node(ex + 1, ey), pres_node(ex, ey + 1), pres_node(ex + 1, ey + 1)};
}

ElementDofs Mesh::element_dofs(int e) const {
    ElementDofs d{};
    const auto vn = element_vel_nodes(e);
    const auto pn = element_pres_nodes(e);
    const int nv = num_vel_nodes();
    for (int k = 0; k < kVelNodes; ++k) {
        d[k] = vn[k];
        d[kVelNodes + k] = nv + vn[k];
    }
    for (int k = 0; k < kPresDofs; ++k) d[kVelDofs + k] = 2 * nv + pn[k];
    d[kElemDofs - 1] = multiplier_dof();
    return d;
}

bool Mesh::on_boundary(int node) const {
    const int i = node % vel_cols();
    const int j = node / vel_cols();
    return i == 0 || j == 0 || i == vel_cols() - 1 || j == vel_rows() - 1;
}

Mesh build_mesh(int nx, int ny, double lx, double ly) {
    if (nx < 2 || ny < 2) throw ContractError("build_mesh: need at least 2 elements per direction");
    if (!(lx > 0.0 && ly > 0.0)) throw ContractError("build_mesh: extents must be positive");
    const double hx = lx / nx;
    const double hy = ly / ny;
    if (std::abs(hx - hy) > 1e-12 * std::max(hx, hy)) {
        std::ostringstream msg;
        msg << "build_mesh: elements must be square (lx/nx = " << hx << ", ly/ny = " << hy << ")";
        throw ContractError(msg.str());
    }
    return Mesh{nx, ny, lx, ly, hx, hx};
}

Eigen::Matrix<double, kVelDofs, kVelDofs> ElementTemplates::brinkman(const Sym2& k) const {
    Eigen::Matrix<double, kVelDofs, kVelDofs> out;
    out.topLeftCorner<kVelNodes, kVelNodes>() = k.xx * mass;
    out.topRightCorner<kVelNodes, kVelNodes>() = k.xy * mass;
    out.bottomLeftCorner<kVelNodes, kVelNodes>() = k.xy * mass;
    out.bottomRightCorner<kVelNodes, kVelNodes>() = k.yy * mass;
    return out;
}

Eigen::Matrix<double, kElemDofs, kElemDofs> ElementTemplates::element_matrix(const Sym2& k) const {
    Eigen::Matrix<double, kElemDofs, kElemDofs> m = Eigen::Matrix<double, kElemDofs, kElemDofs>::Zero();
    m.topLeftCorner<kVelDofs, kVelDofs>() = viscous + brinkman(k);
    m.block<kVelDofs, kPresDofs>(0, kVelDofs) = div;
    m.block<kPresDofs, kVelDofs>(kVelDofs, 0) = div.transpose();
    m.block<kPresDofs, 1>(kVelDofs, kElemDofs - 1) = pmean;
    m.block<1, kPresDofs>(kElemDofs - 1, kVelDofs) = pmean.transpose();
    return m;
}

ElementTemplates element_matrices(double hx, double hy, double mu) {
    if (!(mu > 0.0)) throw ContractError("element_matrices: viscosity must be positive");
    if (!(hx > 0.0) || !(hy > 0.0)) throw ContractError("element_matrices: element size must be positive");
    ElementTemplates t;
    t.hx = hx;
    t.hy = hy;
    t.mu = mu;
    const double g = std::sqrt(0.6);
    const std::array<double, 3> pts = {-g, 0.0, g};
    const std::array<double, 3> wts = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const double jac = 0.25 * hx * hy;
    const double dxi = 2.0 / hx;
    const double deta = 2.0 / hy;

    Eigen::Matrix<double, kVelNodes, kVelNodes> kxx = Eigen::Matrix<double, kVelNodes, kVelNodes>::Zero();
    Eigen::Matrix<double, kVelNodes, kVelNodes> kyy = kxx, kyx = kxx;
    t.mass.setZero();
    t.load.setZero();
    t.div.setZero();
    t.pmean.setZero();

    for (int qy = 0; qy < 3; ++qy) {
        for (int qx = 0; qx < 3; ++qx) {
            const double w = wts[qx] * wts[qy] * jac;
            const auto nx = q2(pts[qx]);
            const auto ny = q2(pts[qy]);
            const auto dnx = dq2(pts[qx]);
            const auto dny = dq2(pts[qy]);
            const auto lx = q1(pts[qx]);
            const auto ly = q1(pts[qy]);
            std::array<double, kVelNodes> n{}, dx{}, dy{};
            for (int b = 0; b < 3; ++b) {
                for (int a = 0; a < 3; ++a) {
                    n[b * 3 + a] = nx[a] * ny[b];
                    dx[b * 3 + a] = dnx[a] * ny[b] * dxi;
                    dy[b * 3 + a] = nx[a] * dny[b] * deta;
                }
            }
            std::array<double, kPresDofs> l{};
            for (int b = 0; b < 2; ++b)
                for (int a = 0; a < 2; ++a) l[b * 2 + a] = lx[a] * ly[b];

            for (int i = 0; i < kVelNodes; ++i) {
                t.load(i) += w * n[i];
                for (int j = 0; j < kVelNodes; ++j) {
                    t.mass(i, j) += w * n[i] * n[j];
                    kxx(i, j) += w * dx[i] * dx[j];
                    kyy(i, j) += w * dy[i] * dy[j];
                    kyx(i, j) += w * dy[i] * dx[j];
                }
                for (int j = 0; j < kPresDofs; ++j) {
                    t.div(i, j) -= w * l[j] * dx[i];
                    t.div(kVelNodes + i, j) -= w * l[j] * dy[i];
                }
            }
            for (int j = 0; j < kPresDofs; ++j) t.pmean(j) += w * l[j];
        }
    }
    // Quadrature products are not commutative in floating point; force exact symmetry.
    t.mass = 0.5 * (t.mass + t.mass.transpose()).eval();
    kxx = 0.5 * (kxx + kxx.transpose()).eval();
    kyy = 0.5 * (kyy + kyy.transpose()).eval();
    t.viscous.topLeftCorner<kVelNodes, kVelNodes>() = mu * (2.0 * kxx + kyy);
    t.viscous.bottomRightCorner<kVelNodes, kVelNodes>() = mu * (2.0 * kyy + kxx);
    t.viscous.topRightCorner<kVelNodes, kVelNodes>() = mu * kyx;
    t.viscous.bottomLeftCorner<kVelNodes, kVelNodes>() = mu * kyx.transpose();
    return t;
}

namespace {

double side_length(Side side, double lx, double ly) {
    return (side == Side::Left || side == Side::Right) ? ly : lx;
}

// Outward-normal sign of the velocity component normal to a side: a segment
// with inflow on `side` has normal component  -sign * profile.
double outward_sign(Side side) { return (side == Side::Right || side == Side::Top) ? 1.0 : -1.0; }

double profile(const FlowSegment& seg, double t) {
    const double r = 2.0 * (t - seg.center) / seg.span;
    if (std::abs(r) >= 1.0) return 0.0;
    return seg.peak * (1.0 - r * r);
}

}  // namespace

void validate(const BoundaryConditions& bcs, double lx, double ly) {
    double in = 0.0;
    double net = 0.0;
    for (std::size_t k = 0; k < bcs.segments.size(); ++k) {
        const FlowSegment& s = bcs.segments[k];
        const double len = side_length(s.side, lx, ly);
        if (!(s.span > 0.0) || !(s.peak > 0.0)) {
            throw ConfigError("boundary segment " + std::to_string(k) + ": span and peak must be positive");
        }
        if (s.center - 0.5 * s.span < -1e-12 || s.center + 0.5 * s.span > len + 1e-12) {
            throw ConfigError("boundary segment " + std::to_string(k) + " extends beyond its side");
        }
        for (std::size_t m = 0; m < k; ++m) {
            const FlowSegment& o = bcs.segments[m];
            if (o.side == s.side && std::abs(o.center - s.center) < 0.5 * (o.span + s.span) - 1e-12) {
                throw ConfigError("boundary segments " + std::to_string(m) + " and " + std::to_string(k) + " overlap");
            }
        }
        const double q = s.nominal_flux();
        if (q > 0.0) in += q;
        net += q;
    }
    if (in > 0.0 && std::abs(net) > 1e-9 * in) {
        std::ostringstream msg;
        msg << "boundary conditions are not mass-balanced: net inflow " << net << " (total inflow " << in << ")";
        throw ConfigError(msg.str());
    }
}

double boundary_outflux(const Mesh& mesh, const Eigen::VectorXd& velocity) {
    const int nv = mesh.num_vel_nodes();
    double flux = 0.0;
    // Simpson's rule is exact for the quadratic trace on each element edge.
    auto edge = [&](int n0, int n1, int n2, double nxs, double nys) {
        auto un = [&](int n) { return nxs * velocity(n) + nys * velocity(nv + n); };
        const double len = nys != 0.0 ? mesh.hx : mesh.hy;
        flux += len / 6.0 * (un(n0) + 4.0 * un(n1) + un(n2));
    };
    for (int ex = 0; ex < mesh.nx; ++ex) {
        const int i = 2 * ex;
        edge(mesh.vel_node(i, 0), mesh.vel_node(i + 1, 0), mesh.vel_node(i + 2, 0), 0.0, -1.0);
        const int jt = mesh.vel_rows() - 1;
        edge(mesh.vel_node(i, jt), mesh.vel_node(i + 1, jt), mesh.vel_node(i + 2, jt), 0.0, 1.0);
    }
    for (int ey = 0; ey < mesh.ny; ++ey) {
        const int j = 2 * ey;
        edge(mesh.vel_node(0, j), mesh.vel_node(0, j + 1), mesh.vel_node(0, j + 2), -1.0, 0.0);
        const int ir = mesh.vel_cols() - 1;
        edge(mesh.vel_node(ir, j), mesh.vel_node(ir, j + 1), mesh.vel_node(ir, j + 2), 1.0, 0.0);
    }
    return flux;
}

DirichletData dirichlet_data(const Mesh& mesh, const BoundaryConditions& bcs) {
    validate(bcs, mesh.lx, mesh.ly);
    const int nv = mesh.num_vel_nodes();
    DirichletData d;
    d.mask.assign(static_cast<std::size_t>(mesh.num_dofs()), 0);
    d.values = Eigen::VectorXd::Zero(mesh.num_dofs());
    Eigen::VectorXd inflow = Eigen::VectorXd::Zero(2 * nv);
    Eigen::VectorXd outflow = Eigen::VectorXd::Zero(2 * nv);
    for (int node = 0; node < nv; ++node) {
        if (!mesh.on_boundary(node)) continue;
        d.mask[node] = 1;
        d.mask[nv + node] = 1;
        const Point2 p = mesh.vel_node_position(node);
        const int i = node % mesh.vel_cols();
        const int j = node / mesh.vel_cols();
        for (const FlowSegment& seg : bcs.segments) {
            bool on_side = false;
            double t = 0.0;
            switch (seg.side) {
                case Side::Left: on_side = (i == 0); t = p.y; break;
                case Side::Right: on_side = (i == mesh.vel_cols() - 1); t = p.y; break;
                case Side::Bottom: on_side = (j == 0); t = p.x; break;
                case Side::Top: on_side = (j == mesh.vel_rows() - 1); t = p.x; break;
            }
            if (!on_side) continue;
            const double v = profile(seg, t);
            if (v == 0.0) continue;
            // Normal velocity: into the domain for inflow, out for outflow.
            const double un = (seg.inflow ? -1.0 : 1.0) * outward_sign(seg.side) * v;
            const bool horizontal = (seg.side == Side::Left || seg.side == Side::Right);
            const int dof = horizontal ? node : nv + node;
            (seg.inflow ? inflow : outflow)(dof) += un;
        }
    }
    const double q_in = -boundary_outflux(mesh, inflow);
    const double q_out = boundary_outflux(mesh, outflow);
    if (q_out > 0.0 && q_in > 0.0) d.outflow_scale = q_in / q_out;
    d.values.head(2 * nv) = inflow + d.outflow_scale * outflow;
    return d;
}

Eigen::VectorXd FlowSolution::state() const {
    Eigen::VectorXd s(velocity.size() + pressure.size() + 1);
    s << velocity, pressure, multiplier;
    return s;
}

namespace {

// Center node (a = 1, b = 1) of the 3 x 3 velocity lattice, both components.
constexpr std::array<int, 2> kInteriorLocal = {4, kVelNodes + 4};

constexpr std::array<int, kElemDofs - 2> outer_locals() {
    std::array<int, kElemDofs - 2> out{};
    int k = 0;
    for (int a = 0; a < kElemDofs; ++a)
        if (a != kInteriorLocal[0] && a != kInteriorLocal[1]) out[k++] = a;
    return out;
}
constexpr std::array<int, kElemDofs - 2> kOuterLocal = outer_locals();

}  // namespace

SaddleSystem::SaddleSystem(std::vector<ElementDofs> element_dofs, int num_dofs, int num_vel_dofs,
                           ElementTemplates templates, std::vector<char> dirichlet_mask,
                           Eigen::VectorXd dirichlet_values, Eigen::VectorXd load)
    : element_dofs_(std::move(element_dofs)),
      num_dofs_(num_dofs),
      num_vel_dofs_(num_vel_dofs),
      templates_(std::move(templates)),
      dirichlet_mask_(std::move(dirichlet_mask)),
      dirichlet_values_(std::move(dirichlet_values)),
      load_(std::move(load)) {
    if (dirichlet_mask_.empty()) dirichlet_mask_.assign(static_cast<std::size_t>(num_dofs_), 0);
    if (dirichlet_values_.size() == 0) dirichlet_values_ = Eigen::VectorXd::Zero(num_dofs_);
    if (load_.size() == 0) load_ = Eigen::VectorXd::Zero(num_dofs_);
    if (static_cast<int>(dirichlet_mask_.size()) != num_dofs_ || dirichlet_values_.size() != num_dofs_ ||
        load_.size() != num_dofs_) {
        throw ContractError("SaddleSystem: dof vectors have inconsistent sizes");
    }
    std::vector<int> owners(static_cast<std::size_t>(num_dofs_), 0);
    for (const ElementDofs& dofs : element_dofs_)
        for (int a = 0; a < kElemDofs; ++a) ++owners[dofs[a]];
    std::vector<char> condensed(static_cast<std::size_t>(num_dofs_), 0);
    for (const ElementDofs& dofs : element_dofs_) {
        for (int a : kInteriorLocal) {
            const int d = dofs[a];
            if (owners[d] != 1 || dirichlet_mask_[d]) {
                throw ContractError("SaddleSystem: element center dofs must be interior and unconstrained");
            }
            condensed[d] = 1;
        }
    }
    reduced_index_.assign(static_cast<std::size_t>(num_dofs_), -1);
    for (int d = 0; d < num_dofs_; ++d) {
        if (!dirichlet_mask_[d] && !condensed[d]) reduced_index_[d] = num_free_++;
    }

    // Pattern: every reduced pair that shares an element.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(element_dofs_.size() * kOuter * kOuter);
    for (const ElementDofs& dofs : element_dofs_) {
        for (int a : kOuterLocal) {
            const int r = reduced_index_[dofs[a]];
            if (r < 0) continue;
            for (int b : kOuterLocal) {
                const int c = reduced_index_[dofs[b]];
                if (c >= 0) trips.emplace_back(r, c, 1.0);
            }
        }
    }
    matrix_.resize(num_free_, num_free_);
    matrix_.setFromTriplets(trips.begin(), trips.end());
    matrix_.makeCompressed();

    scatter_.assign(element_dofs_.size() * kOuter * kOuter, -1);
    const int* outer = matrix_.outerIndexPtr();
    const int* inner = matrix_.innerIndexPtr();
    for (std::size_t e = 0; e < element_dofs_.size(); ++e) {
        const ElementDofs& dofs = element_dofs_[e];
        for (int j = 0; j < kOuter; ++j) {
            const int c = reduced_index_[dofs[kOuterLocal[j]]];
            if (c < 0) continue;
            for (int i = 0; i < kOuter; ++i) {
                const int r = reduced_index_[dofs[kOuterLocal[i]]];
                if (r < 0) continue;
                const int* first = inner + outer[c];
                const int* last = inner + outer[c + 1];
                const int* pos = std::lower_bound(first, last, r);
                scatter_[(e * kOuter + i) * kOuter + j] = static_cast<int>(pos - inner);
            }
        }
    }
    interior_inv_.resize(element_dofs_.size());
    coupling_.resize(element_dofs_.size());
    lift_ = Eigen::VectorXd::Zero(num_free_);
    rhs_ = Eigen::VectorXd::Zero(num_free_);
}

namespace {

void check_drag(std::span<const Sym2> drag, std::size_t expected) {
    if (drag.size() != expected) {
        throw ContractError("expected " + std::to_string(expected) + " drag tensors, got " +
                            std::to_string(drag.size()));
    }
    for (std::size_t e = 0; e < drag.size(); ++e) {
        const Sym2& k = drag[e];
        const bool finite = std::isfinite(k.xx) && std::isfinite(k.xy) && std::isfinite(k.yy);
        const double scale = std::max({std::abs(k.xx), std::abs(k.yy), 1e-300});
        if (!finite || k.xx < 0.0 || k.yy < 0.0 || k.det() < -1e-12 * scale * scale) {
            std::ostringstream msg;
            msg << "element " << e << ": inverse permeability [[" << k.xx << ", " << k.xy << "], [" << k.xy << ", "
                << k.yy << "]] is not positive semidefinite";
            throw ContractError(msg.str());
        }
    }
}

}  // namespace

void SaddleSystem::assemble(std::span<const Sym2> drag) {
    check_drag(drag, element_dofs_.size());
    double* vals = matrix_.valuePtr();
    std::fill(vals, vals + matrix_.nonZeros(), 0.0);
    lift_.setZero();
    for (std::size_t e = 0; e < element_dofs_.size(); ++e) {
        const auto ke = templates_.element_matrix(drag[e]);
        Eigen::Matrix2d kii;
        Eigen::Matrix<double, kInterior, kOuter> kio;
        for (int r = 0; r < kInterior; ++r) {
            for (int c = 0; c < kInterior; ++c) kii(r, c) = ke(kInteriorLocal[r], kInteriorLocal[c]);
            for (int c = 0; c < kOuter; ++c) kio(r, c) = ke(kInteriorLocal[r], kOuterLocal[c]);
        }
        interior_inv_[e] = kii.inverse();
        coupling_[e] = interior_inv_[e] * kio;
        // Schur complement K_OO - K_OI K_II^{-1} K_IO.
        Eigen::Matrix<double, kOuter, kOuter> schur_update = kio.transpose() * coupling_[e];
        schur_update = 0.5 * (schur_update + schur_update.transpose()).eval();
        const ElementDofs& dofs = element_dofs_[e];
        const int* map = scatter_.data() + e * kOuter * kOuter;
        for (int i = 0; i < kOuter; ++i) {
            const int r = reduced_index_[dofs[kOuterLocal[i]]];
            if (r < 0) continue;
            for (int j = 0; j < kOuter; ++j) {
                const double v = ke(kOuterLocal[i], kOuterLocal[j]) - schur_update(i, j);
                const int pos = map[i * kOuter + j];
                if (pos >= 0) {
                    vals[pos] += v;
                } else {
                    const int d = dofs[kOuterLocal[j]];
                    if (dirichlet_mask_[d]) lift_(r) -= v * dirichlet_values_(d);
                }
            }
        }
    }
    rhs_ = reduce_rhs(load_) + lift_;
    factorized_ = false;
}

Eigen::VectorXd SaddleSystem::reduce_rhs(const Eigen::VectorXd& load_full) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(num_free_);
    for (int d = 0; d < num_dofs_; ++d) {
        if (reduced_index_[d] >= 0) r(reduced_index_[d]) += load_full(d);
    }
    // f_O - W^T f_I
    for (std::size_t e = 0; e < element_dofs_.size(); ++e) {
        const ElementDofs& dofs = element_dofs_[e];
        const Eigen::Vector2d fi(load_full(dofs[kInteriorLocal[0]]), load_full(dofs[kInteriorLocal[1]]));
        if (fi.isZero(0.0)) continue;
        const Eigen::Matrix<double, kOuter, 1> upd = coupling_[e].transpose() * fi;
        for (int i = 0; i < kOuter; ++i) {
            const int row = reduced_index_[dofs[kOuterLocal[i]]];
            if (row >= 0) r(row) -= upd(i);
        }
    }
    return r;
}

Eigen::VectorXd SaddleSystem::expand(const Eigen::VectorXd& x, const Eigen::VectorXd& load_full,
                                     bool homogeneous) const {
    Eigen::VectorXd full = homogeneous ? Eigen::VectorXd::Zero(num_dofs_) : dirichlet_values_;
    for (int d = 0; d < num_dofs_; ++d) {
        if (reduced_index_[d] >= 0) full(d) = x(reduced_index_[d]);
    }
    // u_I = K_II^{-1} f_I - W u_O
    for (std::size_t e = 0; e < element_dofs_.size(); ++e) {
        const ElementDofs& dofs = element_dofs_[e];
        Eigen::Matrix<double, kOuter, 1> uo;
        for (int i = 0; i < kOuter; ++i) uo(i) = full(dofs[kOuterLocal[i]]);
        const Eigen::Vector2d fi(load_full(dofs[kInteriorLocal[0]]), load_full(dofs[kInteriorLocal[1]]));
        const Eigen::Vector2d ui = interior_inv_[e] * fi - coupling_[e] * uo;
        full(dofs[kInteriorLocal[0]]) = ui(0);
        full(dofs[kInteriorLocal[1]]) = ui(1);
    }
    return full;
}

namespace {

FlowSolution split_state(const Eigen::VectorXd& full, int num_vel_dofs, double residual) {
    FlowSolution sol;
    sol.velocity = full.head(num_vel_dofs);
    sol.pressure = full.segment(num_vel_dofs, full.size() - num_vel_dofs - 1);
    sol.multiplier = full(full.size() - 1);
    sol.residual = residual;
    return sol;
}

}  // namespace

FlowSolution SaddleSystem::solve() {
    lu_.factorize(matrix_);
    factorized_ = true;
    const Eigen::VectorXd x = lu_.solve(matrix_, rhs_);
    return split_state(expand(x, load_, false), num_vel_dofs_, lu_.last_residual());
}

FlowSolution SaddleSystem::solve_load(const Eigen::VectorXd& load_full) {
    if (load_full.size() != num_dofs_) throw ContractError("solve_load: load has the wrong size");
    if (!factorized_) {
        lu_.factorize(matrix_);
        factorized_ = true;
    }
    const Eigen::VectorXd x = lu_.solve(matrix_, reduce_rhs(load_full) + lift_);
    return split_state(expand(x, load_full, false), num_vel_dofs_, lu_.last_residual());
}

Eigen::VectorXd SaddleSystem::solve_adjoint(const Eigen::VectorXd& rhs_full) const {
    if (!factorized_) throw ContractError("solve_adjoint: no factorization available; call solve() first");
    if (rhs_full.size() > num_dofs_) throw ContractError("solve_adjoint: right-hand side is too long");
    Eigen::VectorXd r = Eigen::VectorXd::Zero(num_dofs_);
    r.head(rhs_full.size()) = rhs_full;
    for (int d = 0; d < num_dofs_; ++d)
        if (dirichlet_mask_[d]) r(d) = 0.0;
    const Eigen::VectorXd x = lu_.solve(matrix_, reduce_rhs(r));
    return expand(x, r, true);
}

Eigen::SparseMatrix<double> SaddleSystem::full_matrix(std::span<const Sym2> drag) const {
    check_drag(drag, element_dofs_.size());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(element_dofs_.size() * kElemDofs * kElemDofs);
    for (std::size_t e = 0; e < element_dofs_.size(); ++e) {
        const auto ke = templates_.element_matrix(drag[e]);
        for (int a = 0; a < kElemDofs; ++a)
            for (int b = 0; b < kElemDofs; ++b) trips.emplace_back(element_dofs_[e][a], element_dofs_[e][b], ke(a, b));
    }
    Eigen::SparseMatrix<double> m(num_dofs_, num_dofs_);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

ElemVel SaddleSystem::gather_velocity(const Eigen::VectorXd& full, int e) const {
    ElemVel u;
    const ElementDofs& dofs = element_dofs_[e];
    for (int k = 0; k < kVelDofs; ++k) u(k) = full(dofs[k]);
    return u;
}

namespace {

SaddleSystem make_flow_system(const Mesh& mesh, const DirichletData& dd, double mu) {
    std::vector<ElementDofs> dofs(static_cast<std::size_t>(mesh.num_elements()));
    for (int e = 0; e < mesh.num_elements(); ++e) dofs[e] = mesh.element_dofs(e);
    return SaddleSystem(std::move(dofs), mesh.num_dofs(), 2 * mesh.num_vel_nodes(), element_matrices(mesh.hx, mesh.hy, mu),
                        dd.mask, dd.values, Eigen::VectorXd());
}

}  // namespace

FlowProblem::FlowProblem(const Mesh& mesh, const BoundaryConditions& bcs, double mu)
    : mesh_(mesh), system_([&] {
          const DirichletData dd = dirichlet_data(mesh, bcs);
          outflow_scale_ = dd.outflow_scale;
          return make_flow_system(mesh, dd, mu);
      }()) {}

FlowSolution FlowProblem::solve(std::span<const Sym2> drag) {
    system_.assemble(drag);
    return system_.solve();
}

std::vector<double> elemental_dissipation(const SaddleSystem& system, const Eigen::VectorXd& velocity,
                                          std::span<const Sym2> drag) {
    std::vector<double> out(system.element_dofs().size());
    kernels::omp::elemental_dissipation(system, velocity, drag, out);
    return out;
}

double dissipated_power(const SaddleSystem& system, const Eigen::VectorXd& velocity, std::span<const Sym2> drag) {
    const std::vector<double> terms = elemental_dissipation(system, velocity, drag);
    double j = 0.0;
    for (double t : terms) j += t;
    return j;
}

}  // namespace gradeflow

#pragma once

#include <random>
#include <vector>

#include "gradeflow/design_field.hpp"
#include "gradeflow/homogenize.hpp"
#include "gradeflow/surrogate.hpp"

namespace testing {

// Smooth positive decreasing samples standing in for a homogenization run;
// shape-dependent anisotropy keeps the orientation derivatives non-trivial.
inline gradeflow::HomogenizationDataset synthetic_dataset() {
    using namespace gradeflow;
    HomogenizationDataset d;
    d.sizes = default_sizes();
    for (ShapeId id : all_shapes()) {
        ShapeRecord r{id, geometry::perimeter_max(id), geometry::volume_fraction_max(id), {}};
        const double aniso = 1.0 + 0.15 * static_cast<int>(id);
        for (double s : d.sizes) {
            PermeabilitySample p;
            p.shape = id;
            p.s = s;
            p.c00 = 0.12 * (1.05 - s) * (1.05 - s) * aniso;
            p.c11 = 0.12 * (1.05 - s) * (1.05 - s);
            r.samples.push_back(p);
        }
        d.shapes.push_back(r);
    }
    return d;
}

inline gradeflow::PermeabilitySurrogate synthetic_surrogate() { return gradeflow::fit_polynomials(synthetic_dataset()); }

// Network with every weight and bias drawn at random, so that no hidden unit
// sits on the LeakyReLU kink at the sample points.
inline gradeflow::DesignField random_field(int num_shapes, gradeflow::Box box, std::vector<int> hidden,
                                           std::uint64_t seed, double scale = 0.6) {
    gradeflow::DesignField f(num_shapes, box, std::move(hidden));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::VectorXd w(f.num_weights());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = normal(rng);
    f.set_weights(w);
    return f;
}

inline Eigen::VectorXd random_direction(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) d[i] = normal(rng);
    return d / d.norm();
}

}  // namespace testing

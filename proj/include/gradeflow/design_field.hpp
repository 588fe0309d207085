#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gradeflow/geometry.hpp"

namespace gradeflow {

inline constexpr double kLeakySlope = 0.01;

/// Axis-aligned box used to normalize network inputs to [-0.5, 0.5]^2.
struct Box {
    double x0 = 0.0;
    double y0 = 0.0;
    double lx = 1.0;
    double ly = 1.0;
};

/// Microstructure parameters at a set of points: fractions rho (row-major,
/// num_shapes per point), size s in [0, 1] and orientation theta in [0, 2 pi].
struct DesignSnapshot {
    int num_shapes = 0;
    std::vector<double> rho;
    std::vector<double> s;
    std::vector<double> theta;

    std::size_t size() const { return s.size(); }
    std::span<const double> fractions(std::size_t i) const {
        return {rho.data() + i * num_shapes, static_cast<std::size_t>(num_shapes)};
    }
};

/// Upstream derivatives with the same layout as DesignSnapshot.
struct DesignGradient {
    std::vector<double> rho;
    std::vector<double> s;
    std::vector<double> theta;
};

/// Fully connected network mapping a point to (rho, s, theta). Hidden layers
/// use LeakyReLU; the output is split into a softmax over shapes, a sigmoid
/// size and a 2 pi sigmoid orientation.
class DesignField {
public:
    DesignField(int num_shapes, Box box, std::vector<int> hidden = {20, 20});

    /// Xavier-uniform weights and zero biases from a counter-based stream.
    static DesignField xavier(int num_shapes, Box box, std::uint64_t seed, std::vector<int> hidden = {20, 20});

    int num_shapes() const { return num_shapes_; }
    int num_outputs() const { return num_shapes_ + 2; }
    int num_weights() const { return static_cast<int>(weights_.size()); }
    const Box& box() const { return box_; }
    const std::vector<int>& hidden() const { return hidden_; }
    /// Layer widths including input (2) and output (num_shapes + 2).
    std::vector<int> widths() const;

    const Eigen::VectorXd& weights() const { return weights_; }
    void set_weights(const Eigen::VectorXd& w);

    /// Offsets of layer l's weight matrix (row-major out x in) and bias.
    int weight_offset(int layer) const { return offsets_[layer]; }
    int bias_offset(int layer) const;
    int num_layers() const { return static_cast<int>(offsets_.size()); }

    DesignSnapshot forward(std::span<const Point2> points) const;

    /// Outputs at one point; rho must hold num_shapes() values.
    void evaluate(const Point2& point, double* rho, double& s, double& theta) const;
    /// Adds dL/dw at one point to grad (num_weights() values).
    void accumulate_gradient(const Point2& point, const double* dl_drho, double dl_ds, double dl_dtheta,
                             double* grad) const;
    /// Single point, pre-head activations.
    Eigen::VectorXd raw_output(const Point2& point) const;

    /// dL/dw for upstream derivatives with respect to (rho, s, theta).
    Eigen::VectorXd backward(std::span<const Point2> points, const DesignGradient& upstream) const;

    /// Evaluates on a new point set (e.g. a finer mesh) without retraining.
    DesignSnapshot resample(std::span<const Point2> points) const { return forward(points); }

private:
    int num_shapes_;
    Box box_;
    std::vector<int> hidden_;
    std::vector<int> offsets_;
    Eigen::VectorXd weights_;
};

/// Checkpoint with architecture, box and weights (JSON).
void save_checkpoint(const DesignField& field, const std::string& path);
DesignField load_checkpoint(const std::string& path);

}  // namespace gradeflow

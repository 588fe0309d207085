#include "gradeflow/design_field.hpp"

#include <cmath>
#include <algorithm>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "gradeflow/error.hpp"
#include "gradeflow/kernels.hpp"
#include "gradeflow/rng.hpp"

namespace gradeflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxWidth = 64;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

DesignField::DesignField(int num_shapes, Box box, std::vector<int> hidden)
    : num_shapes_(num_shapes), box_(box), hidden_(std::move(hidden)) {
    if (num_shapes_ < 1) throw ContractError("DesignField: need at least one shape");
    if (!(box_.lx > 0.0) || !(box_.ly > 0.0)) throw ContractError("DesignField: box must have positive extent");
    const std::vector<int> w = widths();
    for (int width : w) {
        if (width < 1 || width > kMaxWidth) throw ContractError("DesignField: layer widths must be in [1, 64]");
    }
    int total = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l) {
        offsets_.push_back(total);
        total += w[l] * w[l + 1] + w[l + 1];
    }
    weights_ = Eigen::VectorXd::Zero(total);
}

std::vector<int> DesignField::widths() const {
    std::vector<int> w{2};
    w.insert(w.end(), hidden_.begin(), hidden_.end());
    w.push_back(num_outputs());
    return w;
}

int DesignField::bias_offset(int layer) const {
    const std::vector<int> w = widths();
    return offsets_[layer] + w[layer] * w[layer + 1];
}

DesignField DesignField::xavier(int num_shapes, Box box, std::uint64_t seed, std::vector<int> hidden) {
    DesignField f(num_shapes, box, std::move(hidden));
    const std::vector<int> w = f.widths();
    CounterRng rng(seed);
    for (int l = 0; l < f.num_layers(); ++l) {
        const double bound = std::sqrt(6.0 / (w[l] + w[l + 1]));
        const int off = f.offsets_[l];
        for (int k = 0; k < w[l] * w[l + 1]; ++k) f.weights_(off + k) = rng.uniform(-bound, bound);
    }
    return f;
}

void DesignField::set_weights(const Eigen::VectorXd& w) {
    if (w.size() != weights_.size()) {
        throw ContractError("DesignField: expected " + std::to_string(weights_.size()) + " weights, got " +
                            std::to_string(w.size()));
    }
    weights_ = w;
}

Eigen::VectorXd DesignField::raw_output(const Point2& p) const {
    const std::vector<int> w = widths();
    const int layers = num_layers();
    double a[kMaxWidth], z[kMaxWidth];
    a[0] = (p.x - box_.x0) / box_.lx - 0.5;
    a[1] = (p.y - box_.y0) / box_.ly - 0.5;
    for (int l = 0; l < layers; ++l) {
        const double* wm = weights_.data() + offsets_[l];
        const double* b = wm + w[l] * w[l + 1];
        for (int o = 0; o < w[l + 1]; ++o) {
            double acc = b[o];
            for (int i = 0; i < w[l]; ++i) acc += wm[o * w[l] + i] * a[i];
            z[o] = acc;
        }
        const bool hidden = l + 1 < layers;
        for (int o = 0; o < w[l + 1]; ++o) a[o] = hidden && z[o] < 0.0 ? kLeakySlope * z[o] : z[o];
    }
    return Eigen::Map<const Eigen::VectorXd>(a, num_outputs());
}

void DesignField::evaluate(const Point2& point, double* rho, double& s, double& theta) const {
    const Eigen::VectorXd z = raw_output(point);
    const int m = num_shapes_;
    const double zmax = z.head(m).maxCoeff();
    double sum = 0.0;
    for (int k = 0; k < m; ++k) {
        rho[k] = std::exp(z(k) - zmax);
        sum += rho[k];
    }
    for (int k = 0; k < m; ++k) rho[k] /= sum;
    s = sigmoid(z(m));
    theta = kTwoPi * sigmoid(z(m + 1));
}

void DesignField::accumulate_gradient(const Point2& p, const double* dl_drho, double dl_ds, double dl_dtheta,
                                      double* grad) const {
    const std::vector<int> w = widths();
    const int layers = num_layers();
    // Forward pass keeping every layer's input activation and pre-activation.
    double act[8][kMaxWidth];
    double pre[8][kMaxWidth];
    if (layers > 7) throw ContractError("DesignField: too many layers");
    act[0][0] = (p.x - box_.x0) / box_.lx - 0.5;
    act[0][1] = (p.y - box_.y0) / box_.ly - 0.5;
    for (int l = 0; l < layers; ++l) {
        const double* wm = weights_.data() + offsets_[l];
        const double* b = wm + w[l] * w[l + 1];
        for (int o = 0; o < w[l + 1]; ++o) {
            double acc = b[o];
            for (int i = 0; i < w[l]; ++i) acc += wm[o * w[l] + i] * act[l][i];
            pre[l][o] = acc;
            act[l + 1][o] = (l + 1 < layers && acc < 0.0) ? kLeakySlope * acc : acc;
        }
    }
    const double* z = pre[layers - 1];
    const int m = num_shapes_;

    // Heads.
    double delta[kMaxWidth];
    double rho[kMaxWidth];
    const double zmax = *std::max_element(z, z + m);
    double sum = 0.0;
    for (int k = 0; k < m; ++k) {
        rho[k] = std::exp(z[k] - zmax);
        sum += rho[k];
    }
    double mean = 0.0;
    for (int k = 0; k < m; ++k) {
        rho[k] /= sum;
        mean += rho[k] * dl_drho[k];
    }
    for (int k = 0; k < m; ++k) delta[k] = rho[k] * (dl_drho[k] - mean);
    const double ss = sigmoid(z[m]);
    delta[m] = dl_ds * ss * (1.0 - ss);
    const double st = sigmoid(z[m + 1]);
    delta[m + 1] = dl_dtheta * kTwoPi * st * (1.0 - st);

    // Backpropagate.
    double next[kMaxWidth];
    for (int l = layers - 1; l >= 0; --l) {
        const double* wm = weights_.data() + offsets_[l];
        double* gw = grad + offsets_[l];
        double* gb = gw + w[l] * w[l + 1];
        for (int o = 0; o < w[l + 1]; ++o) {
            gb[o] += delta[o];
            for (int i = 0; i < w[l]; ++i) gw[o * w[l] + i] += delta[o] * act[l][i];
        }
        if (l == 0) break;
        for (int i = 0; i < w[l]; ++i) {
            double acc = 0.0;
            for (int o = 0; o < w[l + 1]; ++o) acc += wm[o * w[l] + i] * delta[o];
            next[i] = pre[l - 1][i] < 0.0 ? kLeakySlope * acc : acc;
        }
        std::copy(next, next + w[l], delta);
    }
}

DesignSnapshot DesignField::forward(std::span<const Point2> points) const {
    DesignSnapshot out;
    out.num_shapes = num_shapes_;
    out.rho.resize(points.size() * num_shapes_);
    out.s.resize(points.size());
    out.theta.resize(points.size());
    kernels::omp::mlp_forward(*this, points, out);
    return out;
}

Eigen::VectorXd DesignField::backward(std::span<const Point2> points, const DesignGradient& upstream) const {
    if (upstream.s.size() != points.size() || upstream.theta.size() != points.size() ||
        upstream.rho.size() != points.size() * num_shapes_) {
        throw ContractError("DesignField::backward: upstream gradient does not match the point set");
    }
    Eigen::VectorXd grad;
    kernels::omp::mlp_backward(*this, points, upstream, grad);
    return grad;
}

void save_checkpoint(const DesignField& field, const std::string& path) {
    nlohmann::json j;
    j["format"] = "gradeflow-design-field";
    j["version"] = 1;
    j["num_shapes"] = field.num_shapes();
    j["hidden"] = field.hidden();
    j["box"] = {field.box().x0, field.box().y0, field.box().lx, field.box().ly};
    j["activation"] = "leaky_relu";
    j["leaky_slope"] = kLeakySlope;
    j["weights"] = std::vector<double>(field.weights().data(), field.weights().data() + field.num_weights());
    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint '" + path + "'");
    out << j.dump() << '\n';
}

DesignField load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read checkpoint '" + path + "'");
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        if (j.at("format") != "gradeflow-design-field") throw ConfigError("'" + path + "' is not a design field checkpoint");
        const auto box = j.at("box").get<std::vector<double>>();
        if (box.size() != 4) throw ConfigError("checkpoint box must have 4 entries");
        DesignField f(j.at("num_shapes").get<int>(), Box{box[0], box[1], box[2], box[3]},
                      j.at("hidden").get<std::vector<int>>());
        const auto w = j.at("weights").get<std::vector<double>>();
        f.set_weights(Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed checkpoint '" + path + "': " + e.what());
    }
}

}  // namespace gradeflow

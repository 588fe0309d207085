#pragma once

#include <deque>
#include <functional>
#include <limits>

#include <Eigen/Core>

namespace gradeflow {

struct LbfgsOptions {
    int memory = 10;
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_line_search = 20;
    double curvature_threshold = 1e-10;  // pairs with s^T y at or below this are dropped
    double tolerance_change = 1e-9;      // smallest bracket width (times |d|) worth refining
    double learning_rate = 1.0;          // initial trial step along the quasi-Newton direction
    double max_displacement = std::numeric_limits<double>::infinity();  // cap on |t d|_inf per iteration
    friend bool operator==(const LbfgsOptions&, const LbfgsOptions&) = default;
};

/// Returns f(x) and writes grad f(x).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsStep {
    double f = 0.0;
    Eigen::VectorXd grad;
    double step = 0.0;
    int evaluations = 0;
    bool moved = false;
    bool line_search_failed = false;  // fell back to steepest-descent backtracking
};

/// Limited-memory BFGS with a strong-Wolfe line search. Curvature pairs are
/// kept across calls to step().
class Lbfgs {
public:
    explicit Lbfgs(LbfgsOptions options = {});

    /// Two-loop recursion: approximate -H grad.
    Eigen::VectorXd direction(const Eigen::VectorXd& grad) const;

    /// One quasi-Newton iteration from x (with known f and grad). On return x
    /// holds the accepted point; its loss is never above f.
    LbfgsStep step(Eigen::VectorXd& x, double f, const Eigen::VectorXd& grad, const Objective& objective);

    void reset();
    int num_pairs() const { return static_cast<int>(s_.size()); }
    int iterations() const { return iterations_; }
    const LbfgsOptions& options() const { return options_; }

private:
    LbfgsOptions options_;
    std::deque<Eigen::VectorXd> s_;
    std::deque<Eigen::VectorXd> y_;
    std::deque<double> rho_;
    int iterations_ = 0;
};

/// Strong-Wolfe line search along d from x. Returns the accepted step length
/// (0 if none satisfies sufficient decrease) and writes f and grad there.
struct LineSearchResult {
    double t = 0.0;
    double f = 0.0;
    Eigen::VectorXd grad;
    int evaluations = 0;
    bool wolfe = false;
};
LineSearchResult strong_wolfe(const Objective& objective, const Eigen::VectorXd& x, double f0,
                              const Eigen::VectorXd& g0, const Eigen::VectorXd& d, double t0,
                              const LbfgsOptions& options);

}  // namespace gradeflow

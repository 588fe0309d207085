#include "gradeflow/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gradeflow {

namespace {

// Minimizer of the cubic through (x1, f1, g1) and (x2, f2, g2), kept inside
// [lo, hi]; bisects when the cubic has no real minimizer.
double cubic_minimizer(double x1, double f1, double g1, double x2, double f2, double g2, double lo, double hi) {
    const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    const double d2sq = d1 * d1 - g1 * g2;
    if (d2sq >= 0.0) {
        const double d2 = std::sqrt(d2sq);
        double xmin;
        if (x1 <= x2) {
            xmin = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2));
        } else {
            xmin = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
        }
        if (std::isfinite(xmin)) return std::clamp(xmin, lo, hi);
    }
    return 0.5 * (lo + hi);
}

struct Sample {
    double t;
    double f;
    Eigen::VectorXd g;
    double gtd;
};

}  // namespace

LineSearchResult strong_wolfe(const Objective& objective, const Eigen::VectorXd& x, double f0,
                              const Eigen::VectorXd& g0, const Eigen::VectorXd& d, double t0,
                              const LbfgsOptions& opt) {
    LineSearchResult res;
    res.f = f0;
    res.grad = g0;
    const double gtd0 = g0.dot(d);
    const double dnorm = d.cwiseAbs().maxCoeff();
    auto eval = [&](double t) {
        Sample smp{t, 0.0, Eigen::VectorXd(), 0.0};
        smp.f = objective(x + t * d, smp.g);
        smp.gtd = smp.g.dot(d);
        ++res.evaluations;
        return smp;
    };
    auto armijo = [&](const Sample& smp) { return std::isfinite(smp.f) && smp.f <= f0 + opt.c1 * smp.t * gtd0; };
    auto curvature = [&](const Sample& smp) { return std::abs(smp.gtd) <= -opt.c2 * gtd0; };
    auto accept = [&](const Sample& smp, bool wolfe) {
        res.t = smp.t;
        res.f = smp.f;
        res.grad = smp.g;
        res.wolfe = wolfe;
    };

    const double t_cap = dnorm > 0.0 ? opt.max_displacement / dnorm : t0;
    Sample prev{0.0, f0, g0, gtd0};
    Sample cur = eval(std::min(t0, t_cap));
    Sample lo = prev, hi = prev;
    bool bracketed = false;
    while (true) {
        if (!armijo(cur) || (res.evaluations > 1 && cur.f >= prev.f)) {
            lo = prev;
            hi = cur;
            bracketed = true;
            break;
        }
        if (curvature(cur)) {
            accept(cur, true);
            return res;
        }
        if (cur.gtd >= 0.0) {
            lo = cur;
            hi = prev;
            bracketed = true;
            break;
        }
        if (res.evaluations >= opt.max_line_search || cur.t >= t_cap) break;
        // Extrapolate.
        const double max_step = std::min(cur.t * 10.0, t_cap);
        const double min_step = std::min(cur.t + 0.01 * (cur.t - prev.t), max_step);
        const double next = cubic_minimizer(prev.t, prev.f, prev.gtd, cur.t, cur.f, cur.gtd, min_step, max_step);
        prev = cur;
        cur = eval(next);
    }
    if (!bracketed) {
        // Budget or displacement cap reached while still descending: keep the last point.
        if (armijo(cur)) accept(cur, false);
        return res;
    }

    // Zoom: lo always satisfies sufficient decrease (or is the origin).
    bool insufficient_progress = false;
    while (res.evaluations < opt.max_line_search) {
        const double a = std::min(lo.t, hi.t);
        const double b = std::max(lo.t, hi.t);
        if ((b - a) * dnorm < opt.tolerance_change) break;
        double t = cubic_minimizer(lo.t, lo.f, lo.gtd, hi.t, hi.f, hi.gtd, a, b);
        // Keep trial points away from the bracket ends.
        const double eps = 0.1 * (b - a);
        if (std::min(b - t, t - a) < eps) {
            if (insufficient_progress || t >= b || t <= a) {
                t = std::abs(t - b) < std::abs(t - a) ? b - eps : a + eps;
                insufficient_progress = false;
            } else {
                insufficient_progress = true;
            }
        } else {
            insufficient_progress = false;
        }
        const Sample smp = eval(t);
        if (!armijo(smp) || smp.f >= lo.f) {
            hi = smp;
        } else {
            if (curvature(smp)) {
                accept(smp, true);
                return res;
            }
            if (smp.gtd * (hi.t - lo.t) >= 0.0) hi = lo;
            lo = smp;
        }
    }
    if (lo.t > 0.0) accept(lo, false);
    return res;
}

Lbfgs::Lbfgs(LbfgsOptions options) : options_(options) {}

void Lbfgs::reset() {
    s_.clear();
    y_.clear();
    rho_.clear();
}

Eigen::VectorXd Lbfgs::direction(const Eigen::VectorXd& grad) const {
    Eigen::VectorXd q = -grad;
    const int k = num_pairs();
    std::vector<double> alpha(static_cast<std::size_t>(k));
    for (int i = k - 1; i >= 0; --i) {
        alpha[i] = rho_[i] * s_[i].dot(q);
        q -= alpha[i] * y_[i];
    }
    if (k > 0) q *= s_.back().dot(y_.back()) / y_.back().squaredNorm();
    for (int i = 0; i < k; ++i) {
        const double beta = rho_[i] * y_[i].dot(q);
        q += (alpha[i] - beta) * s_[i];
    }
    return q;
}

LbfgsStep Lbfgs::step(Eigen::VectorXd& x, double f, const Eigen::VectorXd& grad, const Objective& objective) {
    LbfgsStep out;
    out.f = f;
    out.grad = grad;
    if (grad.size() == 0 || grad.cwiseAbs().maxCoeff() == 0.0) return out;

    Eigen::VectorXd d = direction(grad);
    double gtd = grad.dot(d);
    if (!(gtd < 0.0)) {
        reset();
        d = -grad;
        gtd = grad.dot(d);
    }
    const double t0 = options_.learning_rate *
                      (iterations_ == 0 && num_pairs() == 0 ? std::min(1.0, 1.0 / grad.cwiseAbs().sum()) : 1.0);
    LineSearchResult ls = strong_wolfe(objective, x, f, grad, d, t0, options_);
    out.evaluations = ls.evaluations;

    if (!(ls.t > 0.0)) {
        // Steepest descent with backtracking.
        out.line_search_failed = true;
        reset();
        d = -grad;
        double t = std::min(1.0, 1.0 / grad.cwiseAbs().sum());
        for (int i = 0; i < options_.max_line_search; ++i, t *= 0.5) {
            Eigen::VectorXd g_new;
            const double f_new = objective(x + t * d, g_new);
            ++out.evaluations;
            if (std::isfinite(f_new) && f_new <= f - options_.c1 * t * grad.squaredNorm()) {
                ls.t = t;
                ls.f = f_new;
                ls.grad = g_new;
                break;
            }
        }
        if (!(ls.t > 0.0)) return out;
    }

    const Eigen::VectorXd s = ls.t * d;
    const Eigen::VectorXd y = ls.grad - grad;
    const double sy = s.dot(y);
    if (sy > options_.curvature_threshold) {
        if (num_pairs() == options_.memory) {
            s_.pop_front();
            y_.pop_front();
            rho_.pop_front();
        }
        s_.push_back(s);
        y_.push_back(y);
        rho_.push_back(1.0 / sy);
    }
    x += s;
    ++iterations_;
    out.f = ls.f;
    out.grad = ls.grad;
    out.step = ls.t;
    out.moved = true;
    return out;
}

}  // namespace gradeflow

#include "gradeflow/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "gradeflow/error.hpp"

namespace gradeflow {

void RunConfig::validate() const {
    auto require = [](bool ok, const char* field, const char* what) {
        if (!ok) throw ConfigError(std::string("run config: '") + field + "' " + what);
    };
    require(max_epochs >= 0, "max_epochs", "must be non-negative");
    require(loss_tolerance >= 0.0, "loss_tolerance", "must be non-negative");
    require(alpha0 >= 0.0, "alpha0", "must be non-negative");
    require(alpha_step > 0.0, "alpha_step", "must be positive");
    require(p0 >= 1.0, "p0", "must be at least 1");
    require(p_rate >= 0.0, "p_rate", "must be non-negative");
    require(p_max >= p0, "p_max", "must be at least p0");
    require(lbfgs_iterations >= 1, "lbfgs_iterations", "must be at least 1");
    require(max_evaluations >= 2, "max_evaluations", "must be at least 2");
    require(max_size_change > 0.0, "max_size_change", "must be positive");
    require(lbfgs.learning_rate > 0.0, "lbfgs.learning_rate", "must be positive");
    require(lbfgs.max_displacement > 0.0, "lbfgs.max_displacement", "must be positive");
    require(lbfgs.memory >= 1, "lbfgs.memory", "must be at least 1");
    require(lbfgs.c1 > 0.0 && lbfgs.c1 < lbfgs.c2 && lbfgs.c2 < 1.0, "lbfgs.c1/c2", "must satisfy 0 < c1 < c2 < 1");
    require(lbfgs.max_line_search >= 1, "lbfgs.max_line_search", "must be at least 1");
    for (int h : hidden) require(h >= 1, "hidden", "widths must be positive");
}

OptimizerState initial_state(const RunConfig& config) {
    OptimizerState s;
    s.p = config.p0;
    s.alpha = config.alpha0;
    s.lambda = config.lambda0;
    return s;
}

void update_al(OptimizerState& state, double g, const RunConfig& config) {
    state.alpha += config.alpha_step;
    state.lambda += 2.0 * state.alpha * g;
    state.p = std::min(state.p + config.p_rate, config.p_max);
}

OptimizeResult optimize(DesignEvaluator& evaluator, DesignField field, const RunConfig& config,
                        const EpochCallback& on_epoch) {
    config.validate();
    using clock = std::chrono::steady_clock;
    OptimizerState state = initial_state(config);
    auto params_for = [&](const OptimizerState& st) {
        LossParams lp;
        lp.alpha = st.alpha;
        lp.lambda = st.lambda;
        lp.p = st.p;
        lp.J0 = st.J0;
        return lp;
    };
    auto guarded = [&](auto&& fn) {
        try {
            return fn();
        } catch (const SingularSystemError&) {
            if (!config.failure_checkpoint.empty()) save_checkpoint(field, config.failure_checkpoint);
            throw;
        }
    };

    // Epoch 0: the initial design fixes the normalizer.
    auto start = clock::now();
    Evaluation current = guarded([&] { return evaluator.evaluate(field, params_for(state), true); });
    state.J0 = current.loss.J;
    current.loss = loss(current.loss.J, current.loss.g, state.alpha, state.lambda, state.J0);
    {
        EpochRecord r{0, current.loss.L, current.loss.J, current.loss.g, state.alpha, state.lambda, state.p,
                      std::chrono::duration<double, std::milli>(clock::now() - start).count(), 1,
                      current.gradient.norm(), false};
        state.trace.push_back(r);
        if (on_epoch) on_epoch(r);
    }
    double previous_loss = current.loss.L;
    double last_p = state.p;

    Lbfgs lbfgs(config.lbfgs);
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        start = clock::now();
        const LossParams lp = params_for(state);
        last_p = lp.p;
        Evaluation last;
        Eigen::VectorXd last_w;
        const bool limited = std::isfinite(config.max_size_change);
        const std::vector<double> start_sizes = limited ? evaluator.design(field).s : std::vector<double>{};
        Objective objective = [&](const Eigen::VectorXd& w, Eigen::VectorXd& grad) {
            DesignField trial = field;
            trial.set_weights(w);
            if (limited) {
                const std::vector<double> sizes = evaluator.design(trial).s;
                for (std::size_t i = 0; i < sizes.size(); ++i) {
                    if (std::abs(sizes[i] - start_sizes[i]) > config.max_size_change) {
                        grad = Eigen::VectorXd::Zero(w.size());
                        return std::numeric_limits<double>::infinity();
                    }
                }
            }
            last = evaluator.evaluate(trial, lp, true);
            last_w = w;
            grad = last.gradient;
            return last.loss.L;
        };
        // The loss changed with (alpha, lambda, p); re-evaluate at the current weights.
        Evaluation accepted = guarded([&] { return evaluator.evaluate(field, lp, true); });
        Eigen::VectorXd w = field.weights();
        double f = accepted.loss.L;
        Eigen::VectorXd grad = accepted.gradient;
        int evaluations = 1;
        bool failed = false;
        for (int it = 0; it < config.lbfgs_iterations && evaluations < config.max_evaluations; ++it) {
            const double f_before = f;
            const LbfgsStep st = guarded([&] { return lbfgs.step(w, f, grad, objective); });
            evaluations += st.evaluations;
            failed = failed || st.line_search_failed;
            if (!st.moved) break;
            f = st.f;
            grad = st.grad;
            if (last_w.size() == w.size() && last_w == w) {
                accepted = last;
            } else {
                // The line search settled on an earlier trial point.
                field.set_weights(w);
                accepted = guarded([&] { return evaluator.evaluate(field, lp, false); });
                accepted.gradient = grad;
                ++evaluations;
            }
            if (std::abs(f - f_before) < config.lbfgs.tolerance_change) break;
        }
        field.set_weights(w);
        current = std::move(accepted);

        EpochRecord r;
        r.epoch = epoch;
        r.L = current.loss.L;
        r.J = current.loss.J;
        r.g = current.loss.g;
        r.alpha = state.alpha;
        r.lambda = state.lambda;
        r.p = state.p;
        r.evaluations = evaluations;
        r.grad_norm = grad.norm();
        r.line_search_failed = failed;
        state.epoch = epoch;
        update_al(state, current.loss.g, config);
        r.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
        state.trace.push_back(r);
        if (on_epoch) on_epoch(r);
        const double change = std::abs(r.L - previous_loss);
        previous_loss = r.L;
        if (change < config.loss_tolerance) break;
    }

    LossParams final_params = params_for(state);
    final_params.p = last_p;
    OptimizeResult out{field, state, guarded([&] { return evaluator.evaluate(field, final_params, false); })};
    return out;
}

std::string format_epoch(const EpochRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d, %.8g, %.8g, %.6g, %.4g, %.6g, %.4g, %.1f", r.epoch, r.L, r.J, r.g, r.alpha,
                  r.lambda, r.p, r.wall_ms);
    return buf;
}

std::string trace_csv_header() { return "epoch,L,J,g,alpha,lambda,p,wall_ms,evaluations,grad_norm,line_search_failed"; }

std::string trace_csv_row(const EpochRecord& r) {
    char buf[320];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f,%d,%.17g,%d", r.epoch, r.L, r.J, r.g,
                  r.alpha, r.lambda, r.p, r.wall_ms, r.evaluations, r.grad_norm, r.line_search_failed ? 1 : 0);
    return buf;
}

}  // namespace gradeflow

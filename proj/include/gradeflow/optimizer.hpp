#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gradeflow/design_field.hpp"
#include "gradeflow/lbfgs.hpp"
#include "gradeflow/sensitivity.hpp"

namespace gradeflow {

struct RunConfig {
    int max_epochs = 25;
    double loss_tolerance = 1e-5;  // stop when |L_k - L_{k-1}| falls below
    double alpha0 = 0.05;
    double alpha_step = 0.15;
    double lambda0 = 0.0;
    double p0 = 1.0;
    double p_rate = 0.02;  // added to p after every epoch
    double p_max = 8.0;
    int lbfgs_iterations = 1;  // quasi-Newton iterations per epoch
    int max_evaluations = 25;  // loss evaluations per epoch before the iterations stop early
    double max_size_change = std::numeric_limits<double>::infinity();  // per element and epoch; trials beyond it are rejected
    LbfgsOptions lbfgs;
    std::uint64_t seed = 77;
    std::vector<int> hidden = {20, 20};
    std::string failure_checkpoint;  // written with the last good weights if a solve fails

    /// Throws ConfigError naming the offending field.
    void validate() const;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct EpochRecord {
    int epoch = 0;
    double L = 0.0;
    double J = 0.0;
    double g = 0.0;
    double alpha = 0.0;
    double lambda = 0.0;
    double p = 1.0;
    double wall_ms = 0.0;
    int evaluations = 0;
    double grad_norm = 0.0;
    bool line_search_failed = false;
};

struct OptimizerState {
    int epoch = 0;
    double p = 1.0;
    double alpha = 0.0;
    double lambda = 0.0;
    double J0 = 0.0;
    std::vector<EpochRecord> trace;
};

OptimizerState initial_state(const RunConfig& config);

/// alpha += alpha_step, then lambda += 2 alpha g with the new alpha, then
/// p += p_rate capped at p_max.
void update_al(OptimizerState& state, double g, const RunConfig& config);

struct OptimizeResult {
    DesignField field;
    OptimizerState state;
    Evaluation final;  // last accepted design, evaluated with the p it was optimized under
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Augmented-Lagrangian training loop over the network weights.
OptimizeResult optimize(DesignEvaluator& evaluator, DesignField field, const RunConfig& config,
                        const EpochCallback& on_epoch = {});

/// `epoch, L, J, g, alpha, lambda, p, wall_ms`
std::string format_epoch(const EpochRecord& r);
std::string trace_csv_header();
std::string trace_csv_row(const EpochRecord& r);

}  // namespace gradeflow

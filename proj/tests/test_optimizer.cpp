#include <doctest.h>

#include <cmath>

#include "gradeflow/error.hpp"
#include "gradeflow/optimizer.hpp"
#include "support.hpp"

using namespace gradeflow;

namespace {

struct SmallProblem {
    Mesh mesh = build_mesh(6, 6, 1.0, 1.0);
    FlowProblem problem{mesh, BoundaryConditions{{FlowSegment{Side::Left, 0.5, 1.0, 1.0, true},
                                                  FlowSegment{Side::Right, 0.5, 1.0 / 3.0, 3.0, false}}}};
    DesignEvaluator evaluator{problem,
                              testing::synthetic_surrogate().select(std::vector<ShapeId>{ShapeId::Square}),
                              Constraint{ConstraintMode::Volume, 0.5}};
};

}  // namespace

TEST_CASE("augmented Lagrangian update") {
    RunConfig c;
    OptimizerState s = initial_state(c);
    CHECK(s.alpha == 0.05);
    CHECK(s.lambda == 0.0);
    CHECK(s.p == 1.0);
    update_al(s, 0.2, c);
    CHECK(s.alpha == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(s.lambda == doctest::Approx(0.08).epsilon(1e-15));
    CHECK(s.p == doctest::Approx(1.02).epsilon(1e-15));
    const double lambda = s.lambda;
    update_al(s, 0.0, c);
    CHECK(s.lambda == lambda);
    s.p = 8.0;
    update_al(s, 0.1, c);
    CHECK(s.p == 8.0);
}

TEST_CASE("run config validation") {
    RunConfig c;
    CHECK_NOTHROW(c.validate());
    auto rejects = [](auto mutate) {
        RunConfig bad;
        mutate(bad);
        CHECK_THROWS_AS(bad.validate(), ConfigError);
    };
    rejects([](RunConfig& r) { r.max_epochs = -1; });
    rejects([](RunConfig& r) { r.alpha_step = 0.0; });
    rejects([](RunConfig& r) { r.p0 = 0.5; });
    rejects([](RunConfig& r) { r.p_max = 0.9; });
    rejects([](RunConfig& r) { r.lbfgs_iterations = 0; });
    rejects([](RunConfig& r) { r.max_evaluations = 1; });
    rejects([](RunConfig& r) { r.max_size_change = 0.0; });
    rejects([](RunConfig& r) { r.lbfgs.c2 = 0.5e-4; });
    rejects([](RunConfig& r) { r.lbfgs.memory = 0; });
}

TEST_CASE("zero epochs returns the initial design") {
    SmallProblem sp;
    RunConfig c;
    c.max_epochs = 0;
    const DesignField f = DesignField::xavier(1, Box{}, 77);
    const OptimizeResult r = optimize(sp.evaluator, f, c);
    CHECK(r.field.weights() == f.weights());
    REQUIRE(r.state.trace.size() == 1);
    CHECK(r.final.loss.J == r.state.trace[0].J);
    CHECK(r.state.J0 == r.final.loss.J);
}

TEST_CASE("training reduces the loss and respects the schedule") {
    SmallProblem sp;
    RunConfig c;
    c.max_epochs = 6;
    c.loss_tolerance = 0.0;
    c.p_rate = 0.5;
    c.lbfgs_iterations = 2;
    std::vector<EpochRecord> seen;
    const OptimizeResult r = optimize(sp.evaluator, DesignField::xavier(1, Box{}, 77), c,
                                      [&](const EpochRecord& e) { seen.push_back(e); });
    CHECK(seen.size() == r.state.trace.size());
    CHECK(r.state.epoch == 6);
    // Records carry the parameters an epoch was optimized under; epochs 0 and 1 share the initial ones.
    for (std::size_t k = 1; k < r.state.trace.size(); ++k) {
        CHECK(r.state.trace[k].p >= r.state.trace[k - 1].p);
        if (k >= 2) CHECK(r.state.trace[k].alpha > r.state.trace[k - 1].alpha);
        CHECK(std::isfinite(r.state.trace[k].L));
    }
    CHECK(r.state.trace[1].L <= r.state.trace[0].L);
    CHECK(r.state.p <= c.p_max);
}

TEST_CASE("identical runs give identical traces") {
    RunConfig c;
    c.max_epochs = 3;
    auto run = [&] {
        SmallProblem sp;
        return optimize(sp.evaluator, DesignField::xavier(1, Box{}, 5), c).state.trace;
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].L == b[k].L);
        CHECK(a[k].J == b[k].J);
        CHECK(a[k].g == b[k].g);
    }
}

TEST_CASE("size change limit holds per epoch") {
    SmallProblem sp;
    RunConfig c;
    c.max_epochs = 3;
    c.lbfgs_iterations = 4;
    c.max_size_change = 0.05;
    DesignField field = DesignField::xavier(1, Box{}, 77);
    std::vector<double> before = sp.evaluator.design(field).s;
    for (int epoch = 0; epoch < 3; ++epoch) {
        RunConfig one = c;
        one.max_epochs = 1;
        const OptimizeResult r = optimize(sp.evaluator, field, one);
        const std::vector<double> after = sp.evaluator.design(r.field).s;
        for (std::size_t i = 0; i < after.size(); ++i) CHECK(std::abs(after[i] - before[i]) <= 0.05 + 1e-12);
        field = r.field;
        before = after;
    }
}

TEST_CASE("trace formatting") {
    EpochRecord r;
    r.epoch = 3;
    r.L = 1.5;
    CHECK(format_epoch(r).rfind("3, 1.5, ", 0) == 0);
    CHECK(trace_csv_header().rfind("epoch,L,J,g,alpha,lambda,p,wall_ms", 0) == 0);
    CHECK(trace_csv_row(r).rfind("3,1.5,", 0) == 0);
}

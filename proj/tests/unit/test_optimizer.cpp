#include "borat/optimizer.hpp"

#include <doctest.h>

#include <cmath>

using namespace borat;

namespace {

// l(w) = 1/2 |w|^2 with a single sample.
class HalfSquare final : public StochasticObjective {
public:
    explicit HalfSquare(Eigen::Index d) : d_(d) { metadata_.minimizer = ParamVector::Zero(d); }
    std::string name() const override { return "half_square"; }
    Eigen::Index dimension() const override { return d_; }
    std::size_t num_samples() const override { return 1; }
    LossGrad sample_loss_grad(std::size_t, const ParamVector& w) const override {
        return {0.5 * squared_norm(w), w};
    }

private:
    Eigen::Index d_;
};

BoratConfig config(std::size_t n, double eta) {
    BoratConfig c;
    c.bundle_size = n;
    c.eta = eta;
    c.max_steps = 100;
    return c;
}

} // namespace

TEST_CASE("one step on a half square") {
    const HalfSquare obj(1);
    BoratConfig c = config(2, 1.0);
    auto state = OptimizerState::start_at(ParamVector::Constant(1, 1.0));
    BatchSampler sampler(1, 1, 0);
    const StepReport r = step(state, obj, c, sampler);
    CHECK(r.alpha.alpha[0] == 0.5);
    CHECK(state.params[0] == 0.5);
    CHECK(r.batches_consumed == 1);
    CHECK(state.step_index == 1);
    CHECK(r.losses.size() == 1);
    CHECK(r.losses[0] == 0.5);
}

TEST_CASE("zero loss is a fixed point") {
    const HalfSquare obj(3);
    for (std::size_t n : {2u, 3u, 5u}) {
        auto state = OptimizerState::start_at(ParamVector::Zero(3));
        BatchSampler sampler(1, 1, 0);
        const StepReport r = step(state, obj, config(n, 0.7), sampler);
        CHECK(state.params.isZero(0.0));
        CHECK(r.alpha.support == (SubsetMask{1} << (n - 1)));
        CHECK_FALSE(r.degenerate_gradient);
    }
}

TEST_CASE("iterates stay inside the feasible region") {
    const HalfSquare obj(2);
    BoratConfig c = config(3, 10.0);
    c.region = FeasibleRegion::l2_ball(0.25);
    auto state = OptimizerState::start_at(ParamVector::Constant(2, 0.3));
    BatchSampler sampler(1, 1, 0);
    for (int k = 0; k < 20; ++k) {
        step(state, obj, c, sampler);
        CHECK(squared_norm(state.params) <= 0.25 * (1 + 1e-12));
    }
}

TEST_CASE("classify_step names") {
    DualSolution s;
    s.alpha = Eigen::VectorXd::Zero(3);
    s.support = 0b001u;
    CHECK(classify_step(s, 3) == "SGD");
    s.support = 0b100u;
    CHECK(classify_step(s, 3) == "ZERO");
    s.support = 0b101u;
    CHECK(classify_step(s, 3) == "ALIG");
    s.support = 0b110u;
    CHECK(classify_step(s, 3) == "EALIG");
    s.support = 0b010u;
    CHECK(classify_step(s, 3) == "SEGD");
    s.support = 0b011u;
    CHECK(classify_step(s, 3) == "MAX2");
    s.support = 0b111u;
    CHECK(classify_step(s, 3) == "MAX3");
    s.support = 0b0101u;
    CHECK(classify_step(s, 4) == "{1 3}");
}

TEST_CASE("ALI-G and two-row steps agree exactly") {
    const auto obj = make_interp_least_squares(20, 30, 4);
    BoratConfig c = config(2, 0.3);
    c.seed = 9;
    auto a = OptimizerState::start_at(obj->initial_point(1));
    auto b = a;
    BatchSampler sa(obj->num_samples(), 1, 5);
    BatchSampler sb(obj->num_samples(), 1, 5);
    for (int k = 0; k < 100; ++k) {
        const auto ra = step(a, *obj, c, sa);
        const auto rb = alig_step(b, *obj, c, sb);
        CHECK(a.params == b.params);
        CHECK(ra.alpha.alpha[0] == rb.alpha.alpha[0]);
    }
}

TEST_CASE("momentum and projection use the literal update") {
    const HalfSquare obj(1);
    BoratConfig c = config(2, 1.0);
    c.momentum = 0.5;
    auto state = OptimizerState::start_at(ParamVector::Constant(1, 1.0));
    BatchSampler sampler(1, 1, 0);
    step(state, obj, c, sampler);
    // v = -eta * alpha_1 * g = -0.5, w = 1 + 0.5 * v = 0.75.
    CHECK(state.velocity[0] == -0.5);
    CHECK(state.params[0] == 0.75);
}

TEST_CASE("alig gamma is one for smooth losses with a small rate") {
    const auto obj = make_interp_least_squares(20, 30, 2);
    BoratConfig c = config(3, 0.5 / *obj->metadata().beta);
    c.resample = false;
    auto state = OptimizerState::start_at(obj->initial_point(0));
    BatchSampler sampler(obj->num_samples(), 1, 1);
    for (int k = 0; k < 200; ++k) {
        const auto r = step(state, *obj, c, sampler);
        CHECK(r.alig_gamma >= 1.0 - 1e-12);
        CHECK(r.batches_consumed == 2);  // evaluations, not fresh batches
        CHECK(sampler.batches_drawn() == static_cast<std::size_t>(k + 1));
    }
}

TEST_CASE("resampling consumes one batch per added row") {
    const auto obj = make_interp_least_squares(10, 20, 2);
    BoratConfig c = config(4, 0.5);
    auto state = OptimizerState::start_at(obj->initial_point(0));
    BatchSampler sampler(obj->num_samples(), 1, 1);
    const auto r = step(state, *obj, c, sampler);
    CHECK(r.batches_consumed == 3);
    CHECK(sampler.batches_drawn() == 3);
}

TEST_CASE("degenerate gradient is flagged") {
    // Shifted osc1d: positive loss and zero gradient at the origin.
    const auto obj = shift_objective(make_oscillation_1d(), 0.01);
    BoratConfig c = config(2, 1.0);
    auto state = OptimizerState::start_at(ParamVector::Zero(1));
    BatchSampler sampler(1, 1, 0);
    const auto r = step(state, *obj, c, sampler);
    CHECK(r.degenerate_gradient);
    CHECK(state.params[0] == 0.0);
}

TEST_CASE("config validation") {
    BoratConfig c;
    c.eta = 0.0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = BoratConfig{};
    c.bundle_size = 1;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c.bundle_size = 11;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = BoratConfig{};
    c.momentum = 1.0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
    c = BoratConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("step budget counts bundle evaluations") {
    BoratConfig c;
    c.bundle_size = 3;
    c.max_epochs = 10;
    // 100 samples, batch 1: 1000 evaluations, two per step.
    CHECK(step_budget(c, 100) == 500);
    c.max_epochs.reset();
    c.max_steps = 7;
    CHECK(step_budget(c, 100) == 7);
}

TEST_CASE("train is deterministic and logs step zero") {
    const auto obj = make_interp_least_squares(20, 30, 1);
    BoratConfig c = config(3, 0.4);
    c.seed = 2;
    TrainOptions opt;
    opt.log_every = 10;
    std::size_t observed = 0;
    const auto a = train(*obj, c, opt, [&](const TraceRecord&) { ++observed; });
    const auto b = train(*obj, c, opt);
    CHECK(a.final_params == b.final_params);
    CHECK(a.trace.records == b.trace.records);
    REQUIRE_FALSE(a.trace.records.empty());
    CHECK(a.trace.records.front().step == 0);
    CHECK(a.trace.records.front().full_obj.has_value());
    CHECK(a.trace.records.back().full_obj.has_value());
    CHECK(a.steps == 100);
    CHECK(observed == a.trace.records.size());
    CHECK(a.trace.records.back().full_obj.value() < a.trace.records.front().full_obj.value());
}

TEST_CASE("train stops when asked") {
    const auto obj = make_interp_least_squares(20, 30, 1);
    std::atomic<bool> stop{true};
    TrainOptions opt;
    opt.stop = &stop;
    const auto r = train(*obj, config(2, 0.4), opt);
    CHECK(r.interrupted);
    CHECK(r.steps == 0);
}

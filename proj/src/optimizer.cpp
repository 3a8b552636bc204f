#include "borat/optimizer.hpp"

#include <chrono>
#include <cmath>

namespace borat {

void BoratConfig::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw InvalidInput("eta must be positive and finite");
    }
    if (bundle_size < kMinBundleRows || bundle_size > kMaxBundleRows) {
        throw InvalidInput("bundle size must be in [2, 10]");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw InvalidInput("momentum must lie in [0, 1)");
    }
    if (batch_size == 0) {
        throw InvalidInput("batch size must be positive");
    }
    if (region.kind == FeasibleRegion::Kind::l2_ball && !(region.r > 0.0)) {
        throw InvalidInput("l2 ball parameter must be positive");
    }
    if (!std::isfinite(lower_bound)) {
        throw InvalidInput("lower bound must be finite");
    }
}

OptimizerState OptimizerState::start_at(ParamVector w0) {
    OptimizerState s;
    s.velocity = ParamVector::Zero(w0.size());
    s.params = std::move(w0);
    return s;
}

namespace {

std::vector<std::size_t> copy_batch(std::span<const std::size_t> b) { return {b.begin(), b.end()}; }

void check_finite(const LossGrad& lg, const char* where) {
    if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) {
        throw NumericError(std::string("non-finite loss or gradient at ") + where);
    }
}

void check_bound(double loss, double bound) {
    if (loss < bound) {
        throw ContractViolation("sampled loss " + std::to_string(loss) + " is below the lower bound " +
                                std::to_string(bound));
    }
}

// w <- Proj(w - eta d) without momentum; with momentum
// v <- mu v - eta d, w <- Proj(w + mu v).
void apply_update(OptimizerState& state, const ParamVector& direction, const BoratConfig& config) {
    const ParamVector scaled = config.eta * direction;
    ParamVector raw;
    if (config.momentum > 0.0) {
        state.velocity = config.momentum * state.velocity - scaled;
        raw = state.params + config.momentum * state.velocity;
    } else {
        raw = state.params - scaled;
    }
    if (!raw.allFinite()) {
        throw NumericError("non-finite parameters after update at step " + std::to_string(state.step_index + 1));
    }
    state.params = project(config.region, raw);
    ++state.step_index;
}

} // namespace

StepReport step(OptimizerState& state, const StochasticObjective& objective, const BoratConfig& config,
                BatchSampler& sampler) {
    const std::size_t n_rows = config.bundle_size;
    StepReport report;

    const auto first_batch = copy_batch(sampler.next());
    const LossGrad first = objective.loss_and_grad(first_batch, state.params);
    check_finite(first, "the current iterate");
    check_bound(first.loss, config.lower_bound);

    Bundle bundle = init_bundle(state.params, config.eta, first.loss, first.grad, LowerBound{config.lower_bound},
                                n_rows);
    const double first_sq = squared_norm(first.grad);
    report.losses.push_back(first.loss);
    report.grad_norms.push_back(std::sqrt(first_sq));
    const double shifted = first.loss - config.lower_bound;
    report.alig_gamma = solve_dual_closed_form_n2(shifted, first_sq, config.eta);
    report.degenerate_gradient = first_sq == 0.0 && shifted > 0.0;

    DualProblem problem = bundle.dual_problem();
    std::vector<SubsetCandidate> cache = solve_all_subsystems(problem);
    DualSolution sol = select_optimum(problem, cache);

    for (std::size_t n = 2; n < n_rows; ++n) {
        const ParamVector site = bundle_minimizer(bundle, sol);
        LossGrad lg;
        if (config.resample) {
            const auto batch = copy_batch(sampler.next());
            lg = objective.loss_and_grad(batch, site);
        } else {
            lg = objective.loss_and_grad(first_batch, site);
        }
        check_finite(lg, "a bundle minimiser");
        check_bound(lg.loss, config.lower_bound);
        report.losses.push_back(lg.loss);
        report.grad_norms.push_back(std::sqrt(squared_norm(lg.grad)));
        const std::size_t idx = add_linearization(bundle, lg.loss, lg.grad, site);
        problem = bundle.dual_problem();
        sol = solve_dual_incremental(problem, cache, idx);
    }

    const ParamVector direction = bundle_direction(bundle, sol.alpha);
    apply_update(state, direction, config);

    report.step_type = classify_step(sol, n_rows);
    report.dual_value = sol.value;
    report.batches_consumed = n_rows - 1;
    report.alpha = std::move(sol);
    return report;
}

StepReport alig_step(OptimizerState& state, const StochasticObjective& objective, const BoratConfig& config,
                     BatchSampler& sampler) {
    if (config.bundle_size != 2) {
        throw InvalidInput("alig_step requires bundle size 2");
    }
    StepReport report;
    const auto batch = copy_batch(sampler.next());
    const LossGrad lg = objective.loss_and_grad(batch, state.params);
    check_finite(lg, "the current iterate");
    check_bound(lg.loss, config.lower_bound);

    const double sq = squared_norm(lg.grad);
    const double shifted = lg.loss - config.lower_bound;
    const double a1 = solve_dual_closed_form_n2(shifted, sq, config.eta);

    ParamVector direction = ParamVector::Zero(state.params.size());
    if (a1 != 0.0) {
        direction += a1 * lg.grad;
    }
    apply_update(state, direction, config);

    DualSolution sol;
    sol.alpha.resize(2);
    sol.alpha << a1, 1.0 - a1;
    sol.support = a1 == 1.0 ? 0b01u : (a1 == 0.0 ? 0b10u : 0b11u);
    sol.value = a1 * shifted - 0.5 * config.eta * a1 * a1 * sq;
    sol.multiplier_c = sol.support == 0b10u ? 0.0 : shifted - config.eta * a1 * sq;

    report.losses.push_back(lg.loss);
    report.grad_norms.push_back(std::sqrt(sq));
    report.alig_gamma = a1;
    report.degenerate_gradient = sq == 0.0 && shifted > 0.0;
    report.step_type = classify_step(sol, 2);
    report.dual_value = sol.value;
    report.batches_consumed = 1;
    report.alpha = std::move(sol);
    return report;
}

std::string classify_step(const DualSolution& alpha, std::size_t n) {
    if (n == 3) {
        switch (alpha.support) {
        case 0b001: return "SGD";
        case 0b010: return "SEGD";
        case 0b100: return "ZERO";
        case 0b110: return "EALIG";
        case 0b101: return "ALIG";
        case 0b011: return "MAX2";
        case 0b111: return "MAX3";
        default: break;
        }
    }
    return format_subset(alpha.support, n);
}

std::size_t step_budget(const BoratConfig& config, std::size_t num_samples) {
    std::optional<std::size_t> steps = config.max_steps;
    if (config.max_epochs) {
        const std::size_t bs = std::min(config.batch_size, num_samples);
        const std::size_t per_epoch = (num_samples + bs - 1) / bs;
        const std::size_t evaluations = *config.max_epochs * per_epoch;
        const std::size_t from_epochs = std::max<std::size_t>(1, evaluations / (config.bundle_size - 1));
        steps = steps ? std::min(*steps, from_epochs) : from_epochs;
    }
    if (!steps) {
        throw InvalidInput("either max_steps or max_epochs must be set");
    }
    return *steps;
}

TrainResult train(const StochasticObjective& objective, const BoratConfig& config, const TrainOptions& options,
                  const StepObserver& observer) {
    config.validate();
    if (options.method == Method::alig && config.bundle_size != 2) {
        throw InvalidInput("the alig method uses bundle size 2");
    }
    if (options.log_every == 0) {
        throw InvalidInput("log cadence must be at least 1");
    }
    const std::size_t total = step_budget(config, objective.num_samples());

    ParamVector w0 = options.initial_point ? *options.initial_point : objective.initial_point(config.seed);
    if (w0.size() != objective.dimension()) {
        throw InvalidInput("initial point has the wrong dimension");
    }
    OptimizerState state = OptimizerState::start_at(project(config.region, w0));
    BatchSampler sampler(objective.num_samples(), config.batch_size, mix64(config.seed));

    TrainResult result;
    result.trace.bundle_size = config.bundle_size;
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&]() -> std::optional<double> {
        if (!options.timing) {
            return std::nullopt;
        }
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    auto emit = [&](TraceRecord rec) {
        if (observer) {
            observer(rec);
        }
        result.trace.records.push_back(std::move(rec));
    };

    {
        TraceRecord rec;
        rec.step = 0;
        rec.full_obj = objective.full_objective(state.params);
        rec.accuracy = objective.accuracy(state.params);
        rec.param_norm_sq = squared_norm(state.params);
        rec.elapsed_s = elapsed();
        emit(std::move(rec));
    }

    for (std::size_t t = 1; t <= total; ++t) {
        if (options.stop != nullptr && options.stop->load()) {
            result.interrupted = true;
            break;
        }
        StepReport rep = options.method == Method::alig ? alig_step(state, objective, config, sampler)
                                                        : step(state, objective, config, sampler);
        TraceRecord rec;
        rec.step = t;
        rec.sampled_loss = rep.losses.front();
        rec.dual_value = rep.dual_value;
        rec.step_type = rep.step_type;
        rec.alpha.assign(rep.alpha.alpha.data(), rep.alpha.alpha.data() + rep.alpha.alpha.size());
        rec.param_norm_sq = squared_norm(state.params);
        if (t % options.log_every == 0 || t == total) {
            const double f = objective.full_objective(state.params);
            if (!std::isfinite(f)) {
                throw NumericError("full objective became non-finite at step " + std::to_string(t));
            }
            rec.full_obj = f;
            rec.accuracy = objective.accuracy(state.params);
        }
        rec.elapsed_s = elapsed();
        emit(std::move(rec));
        result.steps = t;
    }
    result.final_params = state.params;
    return result;
}

} // namespace borat

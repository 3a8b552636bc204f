/**
 * @file optimizer.hpp
 * @brief The bundle training loop and its N = 2 closed-form special case.
 *
 * Each step builds a bundle around the current parameters w_t: the
 * linearisation at w_t, the lower bound, and up to N - 2 further
 * linearisations placed at successive bundle minimisers. The exact dual
 * solution alpha gives the update w_t - eta * A alpha, followed by optional
 * Nesterov momentum and projection onto the feasible region.
 */
#pragma once

#include "borat/bundle.hpp"
#include "borat/objectives.hpp"
#include "borat/projections.hpp"
#include "borat/trace.hpp"

#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace borat {

struct BoratConfig {
    double eta = 0.1;             ///< maximal learning rate
    std::size_t bundle_size = 2;  ///< N, including the lower-bound row
    double momentum = 0.0;        ///< 0 disables
    FeasibleRegion region;
    bool resample = true;         ///< fresh batch for every added row
    std::optional<std::size_t> max_steps;
    std::optional<std::size_t> max_epochs;
    std::size_t batch_size = 1;
    std::uint64_t seed = 0;
    double lower_bound = 0.0;

    void validate() const;
};

struct OptimizerState {
    ParamVector params;
    ParamVector velocity;
    std::size_t step_index = 0;

    static OptimizerState start_at(ParamVector w0);
};

struct StepReport {
    DualSolution alpha;
    std::string step_type;
    double dual_value = 0.0;
    std::vector<double> losses;      ///< raw loss at each bundle site
    std::vector<double> grad_norms;  ///< gradient norm at each bundle site
    std::size_t batches_consumed = 0;
    /// min{l / (eta ||g||^2), 1} for the first row: the capped Polyak factor.
    double alig_gamma = 1.0;
    bool degenerate_gradient = false;  ///< positive loss with g = 0 at w_t
};

/// One bundle step with the exact dual solver.
StepReport step(OptimizerState& state, const StochasticObjective& objective, const BoratConfig& config,
                BatchSampler& sampler);

/// Bundle size 2 via the closed form; produces the same update as step().
StepReport alig_step(OptimizerState& state, const StochasticObjective& objective, const BoratConfig& config,
                     BatchSampler& sampler);

/// SGD/SEGD/ZERO/EALIG/ALIG/MAX2/MAX3 for N = 3, the support set otherwise.
std::string classify_step(const DualSolution& alpha, std::size_t n);

enum class Method { alig, borat };

struct TrainOptions {
    Method method = Method::borat;
    std::size_t log_every = 100;  ///< steps between full-objective evaluations
    bool timing = false;          ///< record wall-clock seconds in the trace
    const std::atomic<bool>* stop = nullptr;
    std::optional<ParamVector> initial_point;
};

using StepObserver = std::function<void(const TraceRecord&)>;

struct TrainResult {
    RunTrace trace;
    ParamVector final_params;
    std::size_t steps = 0;
    bool interrupted = false;
};

/// Number of steps implied by the step and epoch budgets.
std::size_t step_budget(const BoratConfig& config, std::size_t num_samples);

/// Runs until the budget is spent. Deterministic given config.seed.
/// Throws NumericError on non-finite iterates; records already passed to
/// `observer` form a valid partial trace.
TrainResult train(const StochasticObjective& objective, const BoratConfig& config, const TrainOptions& options,
                  const StepObserver& observer = {});

} // namespace borat

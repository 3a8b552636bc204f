#include "borat/verify.hpp"

#include "borat/bundle.hpp"
#include "borat/harness.hpp"
#include "borat/objectives.hpp"
#include "borat/optimizer.hpp"
#include "borat/projections.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include <unistd.h>

namespace borat {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

constexpr double kEtas[] = {0.01, 0.1, 1.0};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

ParamVector gaussian(std::mt19937_64& rng, Eigen::Index d, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    ParamVector v(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        v[i] = scale * normal(rng);
    }
    return v;
}

void record(CheckResult& r, double measure, bool ok) {
    ++r.trials;
    r.worst = std::max(r.worst, measure);
    if (!ok) {
        ++r.failures;
    }
}

CheckResult finish(CheckResult r, Clock::time_point t0) {
    r.passed = r.trials > 0 && r.failures == 0;
    r.seconds = seconds_since(t0);
    return r;
}

bool files_equal(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::ifstream fa(a, std::ios::binary);
    std::ifstream fb(b, std::ios::binary);
    if (!fa || !fb) {
        return false;
    }
    std::stringstream sa;
    std::stringstream sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    return sa.str() == sb.str() && !sa.str().empty();
}

// Runs `steps` optimizer steps with the same seeding as train(), calling
// on_step(t, state, report) after each one. on_step(0, state, {}) sees w_0.
using StepHook = std::function<bool(std::size_t, const OptimizerState&, const StepReport*)>;

void drive(const StochasticObjective& objective, const BoratConfig& config, Method method, std::size_t steps,
           const StepHook& hook) {
    config.validate();
    OptimizerState state =
        OptimizerState::start_at(project(config.region, objective.initial_point(config.seed)));
    BatchSampler sampler(objective.num_samples(), config.batch_size, mix64(config.seed));
    if (!hook(0, state, nullptr)) {
        return;
    }
    for (std::size_t t = 1; t <= steps; ++t) {
        const StepReport rep = method == Method::alig ? alig_step(state, objective, config, sampler)
                                                      : step(state, objective, config, sampler);
        if (!hook(t, state, &rep)) {
            return;
        }
    }
}

struct OracleCase {
    std::size_t n;
    double eta;
};

OracleCase oracle_case(std::size_t k) { return {2 + k % 4, kEtas[(k / 4) % 3]}; }

} // namespace

DualProblem random_bundle_problem(std::mt19937_64& rng, std::size_t n, double eta, Eigen::Index d) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> log_scale(-1.0, 1.0);
    std::vector<ParamVector> rows;
    std::vector<double> offsets;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        rows.push_back(gaussian(rng, d, std::exp(log_scale(rng))));
        offsets.push_back(i == 0 ? std::abs(normal(rng)) : normal(rng));
    }
    rows.push_back(ParamVector::Zero(d));
    offsets.push_back(0.0);
    return build_dual_problem(rows, offsets, eta);
}

bool VerifyReport::passed() const {
    for (const auto& c : checks) {
        if (!c.passed) {
            return false;
        }
    }
    return !checks.empty();
}

std::string VerifyReport::to_json() const {
    nlohmann::json j;
    j["suite"] = suite;
    j["passed"] = passed();
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) {
        j["checks"].push_back({{"name", c.name},
                               {"passed", c.passed},
                               {"trials", c.trials},
                               {"failures", c.failures},
                               {"worst", c.worst},
                               {"tolerance", c.tolerance},
                               {"detail", c.detail},
                               {"seconds", c.seconds}});
    }
    return j.dump(2);
}

namespace checks {

CheckResult qp_oracle(std::size_t problems, std::size_t iterations, std::uint64_t seed) {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "qp-oracle";
    r.tolerance = 1e-6;
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < problems; ++k) {
        const auto [n, eta] = oracle_case(k);
        const DualProblem p = random_bundle_problem(rng, n, eta);
        const DualSolution exact = solve_dual(p);
        const DualSolution oracle = brute_force_dual(p, iterations, 1.0 / p.q_matrix().trace());
        const double gap = std::abs(dual_value(p, exact.alpha) - dual_value(p, oracle.alpha));
        record(r, gap, gap <= r.tolerance);
    }
    r.detail = std::to_string(r.trials - r.failures) + "/" + std::to_string(r.trials) +
               " problems within tolerance; worst |D(solve) - D(oracle)| = " + fmt(r.worst);
    return finish(r, t0);
}

CheckResult kkt(std::size_t problems, std::uint64_t seed) {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "kkt";
    r.tolerance = 1e-7;
    std::mt19937_64 rng(seed);
    std::size_t simplex_fail = 0;
    for (std::size_t k = 0; k < problems; ++k) {
        const auto [n, eta] = oracle_case(k);
        const DualProblem p = random_bundle_problem(rng, n, eta);
        const DualSolution s = solve_dual(p);
        bool in_simplex = std::abs(s.alpha.sum() - 1.0) <= 1e-9 && s.alpha.minCoeff() >= -1e-9;
        for (Eigen::Index i = 0; i < s.alpha.size(); ++i) {
            if (!(s.support & (SubsetMask{1} << i)) && s.alpha[i] > 1e-9) {
                in_simplex = false;
            }
        }
        simplex_fail += in_simplex ? 0 : 1;
        const bool ok = kkt_check(p, s, r.tolerance) && in_simplex;
        record(r, ok ? 0.0 : 1.0, ok);
    }
    r.detail = std::to_string(r.trials - r.failures) + "/" + std::to_string(r.trials) +
               " solutions satisfy the optimality conditions; simplex violations: " +
               std::to_string(simplex_fail);
    return finish(r, t0);
}

CheckResult closed_form(std::size_t trials, std::uint64_t seed) {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "closed-form";
    r.tolerance = 1e-9;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> log_scale(-2.0, 2.0);
    for (std::size_t k = 0; k < trials; ++k) {
        const double eta = kEtas[k % 3] * std::exp(log_scale(rng));
        const ParamVector g = gaussian(rng, 10, std::exp(log_scale(rng)));
        const double loss = std::abs(normal(rng)) * std::exp(log_scale(rng));
        const Bundle bundle = init_bundle(ParamVector::Zero(10), eta, loss, g, LowerBound{0.0}, 2);
        const DualSolution s = solve_dual(bundle.dual_problem());
        const double a1 = solve_dual_closed_form_n2(loss, squared_norm(g), eta);
        const double diff = std::abs(s.alpha[0] - a1);
        record(r, diff, diff <= r.tolerance);
    }
    r.detail = "worst |alpha_1(solve) - alpha_1(closed form)| = " + fmt(r.worst) + " over " +
               std::to_string(r.trials) + " two-row bundles";
    return finish(r, t0);
}

CheckResult monotonicity(std::size_t trials, std::uint64_t seed) {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "monotonicity";
    r.tolerance = 1e-9;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> size(2, kMaxBundleRows - 1);
    for (std::size_t k = 0; k < trials; ++k) {
        const std::size_t n = size(rng);
        const double eta = kEtas[k % 3];
        std::vector<ParamVector> rows;
        std::vector<double> offsets;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            rows.push_back(gaussian(rng, 10));
            offsets.push_back(i == 0 ? std::abs(normal(rng)) : normal(rng));
        }
        rows.push_back(ParamVector::Zero(10));
        offsets.push_back(0.0);
        const double before = solve_dual(build_dual_problem(rows, offsets, eta)).value;
        rows.insert(rows.end() - 1, gaussian(rng, 10));
        offsets.insert(offsets.end() - 1, normal(rng));
        const double after = solve_dual(build_dual_problem(rows, offsets, eta)).value;
        const double drop = before - after;
        record(r, std::max(0.0, drop), drop <= r.tolerance);
    }
    r.detail = "largest decrease of the dual optimum after adding a row: " + fmt(r.worst);
    return finish(r, t0);
}

CheckResult strong_duality(std::size_t trials, std::uint64_t seed) {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "duality";
    r.tolerance = 1e-7;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> extra(0, kMaxBundleRows - 2);
    for (std::size_t k = 0; k < trials; ++k) {
        const double eta = kEtas[k % 3];
        const ParamVector anchor = gaussian(rng, 10);
        Bundle bundle = init_bundle(anchor, eta, std::abs(normal(rng)), gaussian(rng, 10), LowerBound{0.0},
                                    kMaxBundleRows);
        const std::size_t m = extra(rng);
        for (std::size_t i = 0; i < m; ++i) {
            const ParamVector site = anchor + gaussian(rng, 10, eta);
            add_linearization(bundle, std::abs(normal(rng)), gaussian(rng, 10), site);
        }
        const DualSolution s = solve_dual(bundle.dual_problem());
        const double primal = model_value(bundle, bundle_minimizer(bundle, s));
        const double rel = std::abs(primal - s.value) / std::max(1.0, std::abs(s.value));
        record(r, rel, rel <= r.tolerance);
    }
    r.detail = "worst relative primal-dual gap at the bundle minimiser: " + fmt(r.worst);
    return finish(r, t0);
}

CheckResult incremental(std::size_t trials, std::uint64_t seed) {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "incremental";
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> size(3, kMaxBundleRows);
    for (std::size_t k = 0; k < trials; ++k) {
        const std::size_t n = size(rng);
        const double eta = kEtas[k % 3];
        std::vector<ParamVector> rows;
        std::vector<double> offsets;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            rows.push_back(gaussian(rng, 10));
            offsets.push_back(i == 0 ? std::abs(normal(rng)) : normal(rng));
        }
        std::uniform_int_distribution<std::size_t> where(0, n - 1);
        const std::size_t idx = where(rng);
        auto cache = solve_all_subsystems(build_dual_problem(rows, offsets, eta));
        rows.insert(rows.begin() + static_cast<std::ptrdiff_t>(idx), gaussian(rng, 10));
        offsets.insert(offsets.begin() + static_cast<std::ptrdiff_t>(idx), normal(rng));
        const DualProblem grown = build_dual_problem(rows, offsets, eta);
        const DualSolution inc = solve_dual_incremental(grown, cache, idx);
        const DualSolution full = solve_dual(grown);
        const bool same = inc.support == full.support && inc.alpha == full.alpha && inc.value == full.value;
        record(r, same ? 0.0 : 1.0, same);
    }
    r.detail = std::to_string(r.trials - r.failures) + "/" + std::to_string(r.trials) +
               " incremental solves identical to full enumeration";
    return finish(r, t0);
}

CheckResult alig_equivalence(std::size_t runs, std::size_t steps) {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "alig-equivalence";
    for (std::size_t k = 0; k < runs; ++k) {
        const ObjectivePtr obj = make_interp_least_squares(10, 20, k);
        BoratConfig cfg;
        cfg.bundle_size = 2;
        cfg.eta = kEtas[k % 3] * 10.0;
        cfg.seed = k;
        cfg.momentum = k % 2 == 0 ? 0.0 : 0.9;
        cfg.region = k % 4 < 2 ? FeasibleRegion::none() : FeasibleRegion::l2_ball(50.0);
        std::vector<ParamVector> a;
        std::vector<ParamVector> b;
        drive(*obj, cfg, Method::alig, steps, [&](std::size_t, const OptimizerState& s, const StepReport*) {
            a.push_back(s.params);
            return true;
        });
        drive(*obj, cfg, Method::borat, steps, [&](std::size_t, const OptimizerState& s, const StepReport*) {
            b.push_back(s.params);
            return true;
        });
        const bool same = a == b;
        record(r, same ? 0.0 : 1.0, same);
    }
    r.detail = std::to_string(r.trials - r.failures) + "/" + std::to_string(r.trials) +
               " seeded runs bitwise identical between the closed form and the N=2 solver";
    return finish(r, t0);
}

CheckResult projections(std::size_t trials, std::uint64_t seed) {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "projections";
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> radius(0.1, 10.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < trials; ++k) {
        const FeasibleRegion region = k % 5 == 0 ? FeasibleRegion::none() : FeasibleRegion::l2_ball(radius(rng));
        const ParamVector a = gaussian(rng, 8, 2.0);
        const ParamVector b = gaussian(rng, 8, 2.0);
        const ParamVector pa = project(region, a);
        const ParamVector pb = project(region, b);
        bool ok = project(region, pa) == pa;
        ok = ok && contains(region, pa, 1e-9);
        ok = ok && (pa - pb).norm() <= (a - b).norm() + 1e-12;
        // Random feasible point: direction scaled into the ball.
        ParamVector u = gaussian(rng, 8);
        if (region.kind == FeasibleRegion::Kind::l2_ball) {
            u *= std::sqrt(region.r * unit(rng)) / u.norm();
        }
        ok = ok && (a - pa).norm() <= (a - u).norm() + 1e-9;
        record(r, ok ? 0.0 : 1.0, ok);
    }
    r.detail = "idempotence, membership, non-expansiveness and optimality on " + std::to_string(r.trials) +
               " random cases; failures: " + std::to_string(r.failures);
    return finish(r, t0);
}

CheckResult gradients(std::size_t probes, std::uint64_t seed) {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "gradients";
    struct Entry {
        std::string label;
        ObjectivePtr obj;
        bool mlp;
    };
    DatasetSpec three;
    three.num_classes = 3;
    three.n_train = 64;
    three.n_test = 16;
    DatasetSpec moons;
    moons.kind = DatasetSpec::Kind::moons;
    moons.n_train = 64;
    moons.n_test = 16;
    moons.noise = 0.1;
    MlpSpec small;
    small.hidden = 16;
    const std::vector<Entry> entries = {
        {"lsq", make_interp_least_squares(20, 100, seed), false},
        {"hinge", make_separable_hinge(20, 50, 0.1, seed), false},
        {"osc1d", make_oscillation_1d(), false},
        {"rsi", make_rsi_objective(10, seed), false},
        {"mlp-ce", make_mlp_objective(DatasetSpec{}, MlpSpec{}, MlpLoss::cross_entropy, seed), true},
        {"mlp-ce-moons", make_mlp_objective(moons, small, MlpLoss::cross_entropy, seed), true},
        {"mlp-hinge-3class", make_mlp_objective(three, small, MlpLoss::multiclass_hinge, seed), true},
    };
    std::mt19937_64 rng(seed);
    std::vector<std::string> bad;
    for (const auto& e : entries) {
        std::size_t fails = 0;
        std::uniform_int_distribution<std::size_t> pick(0, e.obj->num_samples() - 1);
        for (std::size_t k = 0; k < probes; ++k) {
            const std::size_t z = pick(rng);
            ParamVector w = e.obj->initial_point(seed + k) + gaussian(rng, e.obj->dimension(), 0.5);
            const LossGrad lg = e.obj->sample_loss_grad(z, w);
            ParamVector fd(w.size());
            const double h = 1e-6;
            for (Eigen::Index i = 0; i < w.size(); ++i) {
                const double keep = w[i];
                w[i] = keep + h;
                const double up = e.obj->sample_loss(z, w);
                w[i] = keep - h;
                const double down = e.obj->sample_loss(z, w);
                w[i] = keep;
                fd[i] = (up - down) / (2.0 * h);
            }
            const double err = (lg.grad - fd).norm();
            const double tol = e.mlp ? 1e-4 * std::max(lg.grad.norm(), fd.norm()) + 1e-7
                                     : std::max(1e-5, 1e-3 * lg.grad.norm());
            record(r, err / tol, err <= tol);
            fails += err <= tol ? 0 : 1;
        }
        if (fails > 0) {
            bad.push_back(e.label + " (" + std::to_string(fails) + ")");
        }
    }
    r.tolerance = 1.0;
    r.detail = std::to_string(entries.size()) + " objectives x " + std::to_string(probes) +
               " probes; worst error/tolerance ratio " + fmt(r.worst);
    for (const auto& b : bad) {
        r.detail += "; failing: " + b;
    }
    return finish(r, t0);
}

CheckResult hinge_rate() {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "rate-convex-lipschitz";
    r.tolerance = 1.0;
    const auto obj = make_separable_hinge(20, 50, 0.1, 0);
    const auto& meta = obj->metadata();
    const double c = *meta.lipschitz_c;
    const std::vector<std::size_t> checkpoints = {100, 1000, 10000};
    std::ostringstream detail;
    for (std::size_t n : {std::size_t{2}, std::size_t{3}}) {
        BoratConfig cfg;
        cfg.eta = 1.0;
        cfg.bundle_size = n;
        cfg.resample = false;
        cfg.seed = 11;
        const ParamVector w0 = obj->initial_point(cfg.seed);
        const double r2 = (w0 - *meta.minimizer).squaredNorm();
        ParamVector sum = ParamVector::Zero(obj->dimension());
        drive(*obj, cfg, Method::borat, checkpoints.back(), [&](std::size_t t, const OptimizerState& s, const StepReport*) {
            sum += s.params;
            for (std::size_t cp : checkpoints) {
                if (t == cp) {
                    const double tp1 = static_cast<double>(t + 1);
                    const ParamVector avg = sum / tp1;
                    const double gap = obj->full_objective(avg);
                    const double bound = c * std::sqrt(r2 / tp1) + r2 / (cfg.eta * tp1);
                    record(r, gap / bound, gap <= bound);
                    detail << "N=" << n << " T=" << t << ": " << fmt(gap) << " <= " << fmt(bound) << "; ";
                }
            }
            return true;
        });
    }
    r.detail = detail.str();
    return finish(r, t0);
}

CheckResult lsq_rate() {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "rate-strongly-convex";
    r.tolerance = 1.0;
    const auto obj = make_interp_least_squares(20, 100, 0);
    const auto& meta = obj->metadata();
    const double beta = *meta.beta;
    const double mu = *meta.strong_convexity;
    const double eta = 1.0 / (2.0 * beta);
    constexpr std::size_t steps = 10000;
    constexpr std::size_t log_every = 10;
    std::ostringstream detail;
    detail << "beta=" << fmt(beta) << " alpha=" << fmt(mu) << " eta=" << fmt(eta) << "; ";
    for (std::size_t n : {std::size_t{2}, std::size_t{3}}) {
        BoratConfig cfg;
        cfg.eta = eta;
        cfg.bundle_size = n;
        cfg.seed = 3;
        const double r2 = (obj->initial_point(cfg.seed) - *meta.minimizer).squaredNorm();
        std::size_t violations = 0;
        double final_obj = 0.0;
        drive(*obj, cfg, Method::borat, steps, [&](std::size_t t, const OptimizerState& s, const StepReport*) {
            if (t % log_every == 0) {
                const double f = obj->full_objective(s.params);
                const double env = 0.5 * beta * std::exp(-mu * eta * static_cast<double>(t) / 2.0) * r2;
                record(r, f / env, f <= env);
                violations += f <= env ? 0 : 1;
                final_obj = f;
            }
            return true;
        });
        const bool reached = final_obj < 1e-8;
        record(r, 0.0, reached);
        detail << "N=" << n << ": envelope violations " << violations << ", final objective " << fmt(final_obj)
               << "; ";
    }
    r.detail = detail.str();
    return finish(r, t0);
}

CheckResult rsi_rate() {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "rate-rsi";
    r.tolerance = 1.0;
    const auto obj = make_rsi_objective(10, 0);
    const auto& meta = obj->metadata();
    const double beta = *meta.beta;
    const double mu = *meta.rsi_mu;
    const double eta = std::min({1.0 / (4.0 * beta), 1.0 / (4.0 * mu), mu / (2.0 * beta * beta)});
    const double h = *meta.rsi_region_halfwidth;
    constexpr std::size_t steps = 2000;
    constexpr std::size_t log_every = 10;
    BoratConfig cfg;
    cfg.eta = eta;
    cfg.bundle_size = 3;
    cfg.resample = false;
    cfg.seed = 5;
    const ParamVector& w_star = *meta.minimizer;
    const double r2 = (obj->initial_point(cfg.seed) - w_star).squaredNorm();
    std::size_t violations = 0;
    bool left_region = false;
    double final_obj = 0.0;
    drive(*obj, cfg, Method::borat, steps, [&](std::size_t t, const OptimizerState& s, const StepReport*) {
        if ((s.params - w_star).lpNorm<Eigen::Infinity>() > h) {
            left_region = true;
        }
        if (t % log_every == 0) {
            const double f = obj->full_objective(s.params);
            const double env = std::exp(-(3.0 / 8.0) * eta * mu * static_cast<double>(t)) * r2;
            record(r, f / env, f <= env);
            violations += f <= env ? 0 : 1;
            final_obj = f;
        }
        return true;
    });
    record(r, left_region ? 1.0 : 0.0, !left_region);
    std::ostringstream detail;
    detail << "beta=" << fmt(beta) << " mu=" << fmt(mu) << " eta=" << fmt(eta) << "; envelope violations "
           << violations << " over " << steps / log_every << " checkpoints; final objective " << fmt(final_obj)
           << (left_region ? "; iterates left the certified region" : "");
    r.detail = detail.str();
    return finish(r, t0);
}

CheckResult taxonomy() {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "taxonomy";
    r.tolerance = 1e-12;
    const std::vector<std::pair<std::string, ObjectivePtr>> problems = {
        {"lsq", make_interp_least_squares(20, 100, 0)},
        {"rsi", make_rsi_objective(10, 0)},
    };
    constexpr std::size_t steps = 10000;
    std::ostringstream detail;
    for (const auto& [label, obj] : problems) {
        BoratConfig cfg;
        cfg.eta = 1.0 / (2.0 * *obj->metadata().beta);
        cfg.bundle_size = 3;
        cfg.resample = false;
        cfg.seed = 9;
        std::map<std::string, std::size_t> counts;
        std::size_t gamma_bad = 0;
        std::size_t positive = 0;
        drive(*obj, cfg, Method::borat, steps, [&](std::size_t, const OptimizerState&, const StepReport* rep) {
            if (rep == nullptr) {
                return true;
            }
            ++counts[rep->step_type];
            const bool forbidden = rep->step_type == "ALIG" || rep->step_type == "EALIG" || rep->step_type == "MAX3";
            record(r, 0.0, !forbidden);
            if (rep->losses.front() > cfg.lower_bound) {
                ++positive;
                const double dev = 1.0 - rep->alig_gamma;
                record(r, dev, dev <= r.tolerance);
                gamma_bad += dev <= r.tolerance ? 0 : 1;
            }
            return true;
        });
        detail << label << ": ";
        for (const auto& [type, count] : counts) {
            detail << type << "=" << count << " ";
        }
        detail << "gamma<1 at " << gamma_bad << "/" << positive << " positive-loss steps; ";
    }
    r.detail = detail.str();
    return finish(r, t0);
}

CheckResult osc_robustness() {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "robustness-osc1d";
    r.tolerance = 1e-3;
    const ObjectivePtr obj = make_oscillation_1d();
    constexpr std::size_t steps = 1000;
    auto first_hit = [&](Method method, std::size_t n, double eta) -> std::optional<std::size_t> {
        BoratConfig cfg;
        cfg.eta = eta;
        cfg.bundle_size = n;
        std::optional<std::size_t> hit;
        drive(*obj, cfg, method, steps, [&](std::size_t t, const OptimizerState& s, const StepReport*) {
            if (std::abs(s.params[0]) < 1e-3) {
                hit = t;
                return false;
            }
            return true;
        });
        return hit;
    };
    std::ostringstream detail;
    const auto alig = first_hit(Method::alig, 2, 10.0);
    record(r, 0.0, !alig.has_value());
    detail << "ALI-G eta=10: " << (alig ? "reached at step " + std::to_string(*alig) : "never reached") << "; ";
    for (double eta : {0.01, 0.1, 1.0, 10.0}) {
        const auto hit = first_hit(Method::borat, 3, eta);
        record(r, 0.0, hit.has_value());
        detail << "N=3 eta=" << fmt(eta) << ": " << (hit ? "step " + std::to_string(*hit) : "not reached") << "; ";
    }
    r.detail = detail.str();
    return finish(r, t0);
}

CheckResult mlp_robustness(std::size_t jobs) {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "robustness-mlp";
    r.tolerance = 1e-2;
    RunConfig base;
    base.problem = ProblemSpec::defaults_for("mlp");
    base.problem.data_seed = 0;
    base.optimizer.batch_size = 32;
    base.optimizer.max_epochs = 100;
    base.optimizer.seed = 1;
    base.log_every = 1000000;
    const std::vector<double> etas = {0.01, 0.1, 1.0, 10.0};
    const std::vector<double> rs = {50, 100, 150, 200, 250};
    RunConfig two = base;
    two.optimizer.bundle_size = 2;
    RunConfig three = base;
    three.optimizer.bundle_size = 3;
    const SweepGrid g2 = sweep(two, etas, rs, SweepMetric::final_objective, jobs);
    const SweepGrid g3 = sweep(three, etas, rs, SweepMetric::final_objective, jobs);
    const std::size_t c2 = count_cells_below(g2, r.tolerance);
    const std::size_t c3 = count_cells_below(g3, r.tolerance);
    record(r, 0.0, c3 >= c2);
    r.detail = "cells with train loss < 1e-2: N=3 " + std::to_string(c3) + "/20, N=2 " + std::to_string(c2) + "/20";
    return finish(r, t0);
}

CheckResult determinism(const std::filesystem::path& scratch) {
    const auto t0 = Clock::now();
    CheckResult r;
    r.name = "determinism";
    std::filesystem::create_directories(scratch);
    std::ostringstream detail;

    for (const auto format : {TraceFormat::csv, TraceFormat::jsonl}) {
        RunConfig c;
        c.problem = ProblemSpec::defaults_for("lsq");
        c.optimizer.eta = 0.1;
        c.optimizer.bundle_size = 3;
        c.optimizer.max_steps = 500;
        c.optimizer.seed = 7;
        c.log_every = 10;
        c.format = format;
        const auto a = scratch / ("run_a." + to_string(format));
        const auto b = scratch / ("run_b." + to_string(format));
        c.out = a;
        run(c);
        c.out = b;
        run(c);
        const bool same = files_equal(a, b);
        record(r, same ? 0.0 : 1.0, same);
        detail << "run " << to_string(format) << (same ? " identical" : " DIFFERENT") << "; ";
    }

    RunConfig base;
    base.problem = ProblemSpec::defaults_for("mlp");
    base.problem.dataset.n_train = 64;
    base.problem.model.hidden = 16;
    base.optimizer.bundle_size = 3;
    base.optimizer.batch_size = 16;
    base.optimizer.max_epochs = 3;
    base.optimizer.seed = 3;
    base.log_every = 5;
    const std::vector<double> etas = {0.1, 1.0};
    const std::vector<double> rs = {50.0, 100.0};
    const auto da = scratch / "sweep_a";
    const auto db = scratch / "sweep_b";
    const SweepGrid ga = sweep(base, etas, rs, SweepMetric::final_objective, 1, da);
    const SweepGrid gb = sweep(base, etas, rs, SweepMetric::final_objective, 2, db);
    write_grid_csv(ga, da / "grid.csv");
    write_grid_csv(gb, db / "grid.csv");
    bool same = files_equal(da / "grid.csv", db / "grid.csv");
    for (std::size_t i = 0; i < rs.size(); ++i) {
        for (std::size_t j = 0; j < etas.size(); ++j) {
            const auto name = std::filesystem::path(ga.trace_paths[i][j]).filename();
            same = same && files_equal(da / name, db / name);
        }
    }
    record(r, same ? 0.0 : 1.0, same);
    detail << "sweep (1 vs 2 workers)" << (same ? " identical" : " DIFFERENT");
    r.detail = detail.str();
    return finish(r, t0);
}

} // namespace checks

const std::vector<std::string>& verify_suite_names() {
    static const std::vector<std::string> names = {
        "qp-oracle", "kkt",      "closed-form", "monotonicity", "duality",    "incremental", "projections",
        "gradients", "rates",    "taxonomy",    "robustness",   "determinism", "all"};
    return names;
}

VerifyReport run_verify(const std::string& suite) {
    VerifyReport report;
    report.suite = suite;
    const bool all = suite == "all";
    bool known = all;
    auto want = [&](const char* name) {
        if (all || suite == name) {
            known = true;
            return true;
        }
        return false;
    };
    if (want("qp-oracle")) {
        report.checks.push_back(checks::qp_oracle());
    }
    if (want("kkt")) {
        report.checks.push_back(checks::kkt());
    }
    if (want("closed-form")) {
        report.checks.push_back(checks::closed_form());
        report.checks.push_back(checks::alig_equivalence());
    }
    if (want("monotonicity")) {
        report.checks.push_back(checks::monotonicity());
    }
    if (want("duality")) {
        report.checks.push_back(checks::strong_duality());
    }
    if (want("incremental")) {
        report.checks.push_back(checks::incremental());
    }
    if (want("projections")) {
        report.checks.push_back(checks::projections());
    }
    if (want("gradients")) {
        report.checks.push_back(checks::gradients());
    }
    if (want("rates")) {
        report.checks.push_back(checks::hinge_rate());
        report.checks.push_back(checks::lsq_rate());
        report.checks.push_back(checks::rsi_rate());
    }
    if (want("taxonomy")) {
        report.checks.push_back(checks::taxonomy());
    }
    if (want("robustness")) {
        report.checks.push_back(checks::osc_robustness());
        report.checks.push_back(checks::mlp_robustness(std::max(1u, std::thread::hardware_concurrency())));
    }
    if (want("determinism")) {
        report.checks.push_back(
            checks::determinism(std::filesystem::temp_directory_path() / ("borat_verify_" + std::to_string(::getpid()))));
    }
    if (!known) {
        throw InvalidInput("unknown verify suite '" + suite + "'");
    }
    return report;
}

} // namespace borat

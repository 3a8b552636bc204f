/**
 * @file verify.hpp
 * @brief Invariant and oracle suites, shared by `borat verify` and the
 * acceptance tests.
 */
#pragma once

#include "borat/simplex_qp.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace borat {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::size_t trials = 0;
    std::size_t failures = 0;
    double worst = 0.0;      ///< largest observed violation measure
    double tolerance = 0.0;  ///< threshold the measure is compared against
    std::string detail;
    double seconds = 0.0;
};

struct VerifyReport {
    std::string suite;
    std::vector<CheckResult> checks;

    bool passed() const;
    std::string to_json() const;
};

/// Suite names accepted by run_verify, "all" included.
const std::vector<std::string>& verify_suite_names();

/// Throws InvalidInput for an unknown suite.
VerifyReport run_verify(const std::string& suite);

/// Standard bundle dual: n - 1 Gaussian gradient rows in R^d with random
/// scales, then the zero lower-bound row. Offsets are |N(0,1)| for the first
/// row and N(0,1) for the others.
DualProblem random_bundle_problem(std::mt19937_64& rng, std::size_t n, double eta, Eigen::Index d = 10);

namespace checks {

CheckResult qp_oracle(std::size_t problems = 1000, std::size_t iterations = 100000, std::uint64_t seed = 1);
CheckResult closed_form(std::size_t trials = 10000, std::uint64_t seed = 2);
CheckResult kkt(std::size_t problems = 1000, std::uint64_t seed = 1);
CheckResult monotonicity(std::size_t trials = 10000, std::uint64_t seed = 3);
CheckResult strong_duality(std::size_t trials = 1000, std::uint64_t seed = 4);
CheckResult incremental(std::size_t trials = 1000, std::uint64_t seed = 5);
CheckResult alig_equivalence(std::size_t runs = 100, std::size_t steps = 200);
CheckResult projections(std::size_t trials = 10000, std::uint64_t seed = 6);
CheckResult gradients(std::size_t probes = 100, std::uint64_t seed = 7);
CheckResult hinge_rate();
CheckResult lsq_rate();
CheckResult rsi_rate();
CheckResult taxonomy();
CheckResult osc_robustness();
CheckResult mlp_robustness(std::size_t jobs = 1);
/// Runs and sweeps twice each under `scratch` and compares the files.
CheckResult determinism(const std::filesystem::path& scratch);

} // namespace checks

} // namespace borat

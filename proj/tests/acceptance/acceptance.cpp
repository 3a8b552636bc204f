// Runs every acceptance check and prints one PASS/FAIL line per criterion.
// Exit status is nonzero if any criterion fails.

#include "borat/verify.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace {

struct Criterion {
    int id;
    std::string title;
    std::function<std::vector<borat::CheckResult>()> run;
};

void print(int id, const std::string& title, const std::vector<borat::CheckResult>& results, double seconds) {
    bool ok = true;
    for (const auto& r : results) {
        ok = ok && r.passed;
    }
    std::printf("%s %2d %-28s (%.1fs)\n", ok ? "PASS" : "FAIL", id, title.c_str(), seconds);
    for (const auto& r : results) {
        std::printf("        %-20s trials=%zu failures=%zu worst=%.3g tol=%.3g %s\n", r.name.c_str(), r.trials,
                    r.failures, r.worst, r.tolerance, r.detail.c_str());
    }
    std::fflush(stdout);
}

} // namespace

int main(int argc, char** argv) {
    namespace fs = std::filesystem;
    using namespace borat;

    const fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "borat_acceptance";
    const std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());

    const std::vector<Criterion> criteria{
        {1, "dual oracle equivalence", [] { return std::vector{checks::qp_oracle()}; }},
        {2, "closed form, two rows", [] { return std::vector{checks::closed_form()}; }},
        {3, "KKT conditions", [] { return std::vector{checks::kkt()}; }},
        {4, "dual monotonicity", [] { return std::vector{checks::monotonicity()}; }},
        {5, "strong duality", [] { return std::vector{checks::strong_duality()}; }},
        {6, "convex Lipschitz rate", [] { return std::vector{checks::hinge_rate()}; }},
        {7, "strongly convex rate", [] { return std::vector{checks::lsq_rate()}; }},
        {8, "RSI rate", [] { return std::vector{checks::rsi_rate()}; }},
        {9, "gamma and step taxonomy", [] { return std::vector{checks::taxonomy()}; }},
        {10, "robustness", [jobs] { return std::vector{checks::osc_robustness(), checks::mlp_robustness(jobs)}; }},
        {11, "gradient integrity", [] { return std::vector{checks::gradients()}; }},
        {12, "determinism", [scratch] { return std::vector{checks::determinism(scratch)}; }},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<CheckResult> results;
        try {
            results = c.run();
        } catch (const std::exception& e) {
            CheckResult r;
            r.name = "exception";
            r.detail = e.what();
            results.push_back(r);
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        print(c.id, c.title, results, secs);
        for (const auto& r : results) {
            if (!r.passed) {
                ++failed;
                break;
            }
        }
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}

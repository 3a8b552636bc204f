#include "borat/simplex_qp.hpp"
#include "borat/verify.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace borat;

namespace {

std::vector<ParamVector> rows_of(std::initializer_list<std::initializer_list<double>> rows) {
    std::vector<ParamVector> out;
    for (const auto& r : rows) {
        ParamVector v(static_cast<Eigen::Index>(r.size()));
        Eigen::Index i = 0;
        for (double x : r) {
            v[i++] = x;
        }
        out.push_back(v);
    }
    return out;
}

DualProblem make(std::initializer_list<std::initializer_list<double>> rows, std::vector<double> b, double eta) {
    const auto r = rows_of(rows);
    return build_dual_problem(r, b, eta);
}

} // namespace

TEST_CASE("build_dual_problem forms the scaled Gram matrix") {
    const auto p = make({{1, 0}, {0, 0}}, {0.5, 0}, 1.0);
    CHECK(p.q_matrix()(0, 0) == 1.0);
    CHECK(p.q_matrix()(0, 1) == 0.0);
    CHECK(p.q_matrix()(1, 1) == 0.0);
    CHECK(p.b_vector()[0] == 0.5);

    const auto z = make({{0, 0}, {0, 0}}, {0, 0}, 1.0);
    CHECK(z.q_matrix().isZero(0.0));
    CHECK(z.b_vector().isZero(0.0));

    const auto o = make({{1, 0}, {0, 1}, {0, 0}}, {1, 1, 0}, 2.0);
    CHECK(o.q_matrix()(0, 0) == 2.0);
    CHECK(o.q_matrix()(1, 1) == 2.0);
    CHECK(o.q_matrix()(0, 1) == 0.0);
    CHECK(o.q_matrix().row(2).isZero(0.0));
    REQUIRE(o.zero_row().has_value());
    CHECK(*o.zero_row() == 2);
}

TEST_CASE("build_dual_problem rejects bad input") {
    const auto mismatched = rows_of({{1, 0}, {0, 0, 0}});
    const std::vector<double> b{1, 0};
    CHECK_THROWS_AS(build_dual_problem(mismatched, b, 1.0), InvalidInput);
    const auto ok = rows_of({{1, 0}, {0, 0}});
    CHECK_THROWS_AS(build_dual_problem(ok, b, 0.0), InvalidInput);
    CHECK_THROWS_AS(build_dual_problem(ok, b, -1.0), InvalidInput);
    const auto one = rows_of({{1, 0}});
    const std::vector<double> b1{1};
    CHECK_THROWS_AS(build_dual_problem(one, b1, 1.0), InvalidInput);
}

TEST_CASE("DualProblem validates symmetry and semidefiniteness") {
    Eigen::MatrixXd q(2, 2);
    q << 1, 0.5, 0.4, 1;
    CHECK_THROWS_AS(DualProblem(q, Eigen::VectorXd::Zero(2)), InvalidInput);
    q << 1, 2, 2, 1;  // eigenvalues 3, -1
    CHECK_THROWS_AS(DualProblem(q, Eigen::VectorXd::Zero(2)), InvalidInput);
    q << -1, 0, 0, 0;
    CHECK_THROWS_AS(DualProblem(q, Eigen::VectorXd::Zero(2)), InvalidInput);
}

TEST_CASE("solve_dual on a single active row") {
    // rows=[[1,0],[0,0]], offsets=[0.5,0], eta=1: alpha_1 = 0.5 / 1.
    const auto p = make({{1, 0}, {0, 0}}, {0.5, 0}, 1.0);
    const auto s = solve_dual(p);
    CHECK(s.alpha[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.alpha[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.value == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(s.support == 0b11u);
    CHECK(kkt_check(p, s, 1e-9));
}

TEST_CASE("solve_dual takes the full step when the loss is large") {
    const auto p = make({{1, 0}, {0, 0}}, {2.0, 0}, 1.0);
    const auto s = solve_dual(p);
    CHECK(s.alpha[0] == 1.0);
    CHECK(s.support == 0b01u);
    CHECK(s.value == doctest::Approx(1.5));
}

TEST_CASE("solve_dual puts all mass on the bound row at zero loss") {
    const auto p = make({{1, 2}, {0, 0}}, {0.0, 0}, 1.0);
    const auto s = solve_dual(p);
    CHECK(s.alpha[0] == 0.0);
    CHECK(s.alpha[1] == 1.0);
    CHECK(s.support == 0b10u);
    // Zero gradient as well: the tie still resolves to the bound row.
    const auto z = make({{0, 0}, {0, 0}}, {0.0, 0}, 1.0);
    CHECK(solve_dual(z).support == 0b10u);
}

TEST_CASE("solve_dual matches frozen interior-point solutions") {
    // Reference values from an independent conic solver, accurate to ~1e-9.
    SUBCASE("three rows") {
        const auto p = make({{1.0, 0.2}, {0.2, 0.5}, {0, 0}}, {0.8, 0.3, 0.0}, 1.0);
        const auto s = solve_dual(p);
        CHECK(s.alpha[0] == doctest::Approx(0.67123288).epsilon(1e-7));
        CHECK(s.alpha[1] == doctest::Approx(0.32876712).epsilon(1e-7));
        CHECK(s.alpha[2] == 0.0);
        CHECK(s.value == doctest::Approx(0.319452054794).epsilon(1e-9));
    }
    SUBCASE("four rows, SGD vertex") {
        const auto p = make({{1.0, -1.0, 0.5}, {-0.5, 0.3, 1.2}, {2.0, 0.1, -0.4}, {0, 0, 0}}, {1.5, -0.2, 0.4, 0.0},
                            0.1);
        const auto s = solve_dual(p);
        CHECK(s.support == 0b0001u);
        CHECK(s.value == doctest::Approx(1.3875).epsilon(1e-12));
    }
    SUBCASE("five rows with duplicated gradients") {
        const auto p = make({{0.3, 0.1}, {0.3, 0.1}, {-1.0, 2.0}, {0.5, 0.5}, {0, 0}}, {0.05, 0.02, 0.3, -0.1, 0.0},
                            10.0);
        const auto s = solve_dual(p);
        CHECK(s.alpha[0] == doctest::Approx(0.05714286).epsilon(1e-6));
        CHECK(s.alpha[1] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(s.alpha[2] == doctest::Approx(0.00714286).epsilon(1e-6));
        CHECK(s.alpha[3] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(s.alpha[4] == doctest::Approx(0.93571429).epsilon(1e-7));
        CHECK(s.value == doctest::Approx(0.0025).epsilon(1e-9));
    }
}

TEST_CASE("singular supports are skipped") {
    // Rows 1 and 2 are identical, so the support {1,2} has a singular system.
    const auto p = make({{1, 1}, {1, 1}, {0, 0}}, {0.5, 0.5, 0}, 1.0);
    CHECK_FALSE(solve_subsystem(p, 0b011u).has_value());
    const auto s = solve_dual(p);
    CHECK(s.singular_skipped >= 1);
    CHECK_FALSE(s.fallback_used);
    CHECK(kkt_check(p, s, 1e-9));
}

TEST_CASE("subset candidates are lifted with zeros") {
    const auto p = make({{1, 0}, {0, 1}, {0.5, 0.5}, {0, 0}}, {1, 0.2, 0.3, 0}, 0.5);
    for (const auto& c : solve_all_subsystems(p)) {
        for (Eigen::Index i = 0; i < 4; ++i) {
            if (!(c.subset & (SubsetMask{1} << i))) {
                CHECK(c.psi[i] == 0.0);
            }
        }
        if (c.feasible) {
            CHECK(c.psi.sum() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(c.value == doctest::Approx(dual_value(p, c.psi)).epsilon(1e-14));
        }
    }
}

TEST_CASE("solve_subsystem rejects empty or out-of-range subsets") {
    const auto p = make({{1, 0}, {0, 0}}, {0.5, 0}, 1.0);
    CHECK_THROWS_AS(solve_subsystem(p, 0u), InvalidInput);
    CHECK_THROWS_AS(solve_subsystem(p, 0b100u), InvalidInput);
}

TEST_CASE("multiplier equals the shared partial derivative") {
    const auto p = make({{1.0, 0.2}, {0.2, 0.5}, {0, 0}}, {0.8, 0.3, 0.0}, 1.0);
    const auto s = solve_dual(p);
    const Eigen::VectorXd partial = p.b_vector() - p.q_matrix() * s.alpha;
    CHECK(s.multiplier_c == doctest::Approx(partial[0]).epsilon(1e-12));
    CHECK(s.multiplier_c == doctest::Approx(partial[1]).epsilon(1e-12));
}

TEST_CASE("selection does not depend on candidate order") {
    std::mt19937_64 rng(42);
    for (int k = 0; k < 50; ++k) {
        const auto p = random_bundle_problem(rng, 2 + static_cast<std::size_t>(k % 5), 0.5);
        auto cands = solve_all_subsystems(p);
        const auto a = select_optimum(p, cands);
        std::shuffle(cands.begin(), cands.end(), rng);
        const auto b = select_optimum(p, cands);
        CHECK(a.support == b.support);
        CHECK(a.alpha == b.alpha);
    }
}

TEST_CASE("closed form for two rows") {
    CHECK(solve_dual_closed_form_n2(0.5, 1.0, 1.0) == 0.5);
    CHECK(solve_dual_closed_form_n2(3.0, 1.0, 1.0) == 1.0);   // capped: SGD step
    CHECK(solve_dual_closed_form_n2(0.0, 1.0, 1.0) == 0.0);
    CHECK(solve_dual_closed_form_n2(0.7, 0.0, 1.0) == 1.0);   // zero gradient, positive loss
    CHECK(solve_dual_closed_form_n2(0.0, 0.0, 1.0) == 0.0);
    CHECK_THROWS_AS(solve_dual_closed_form_n2(1.0, 1.0, 0.0), InvalidInput);
}

TEST_CASE("closed form equals the enumerated solution bitwise on random bundles") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < 2000; ++k) {
        ParamVector g(5);
        for (Eigen::Index i = 0; i < 5; ++i) {
            g[i] = normal(rng);
        }
        const double loss = std::abs(normal(rng));
        const double eta = std::exp(normal(rng));
        const std::vector<ParamVector> rows{g, ParamVector::Zero(5)};
        const std::vector<double> b{loss, 0.0};
        const auto s = solve_dual(build_dual_problem(rows, b, eta));
        CHECK(s.alpha[0] == solve_dual_closed_form_n2(loss, squared_norm(g), eta));
    }
}

TEST_CASE("incremental solve matches full enumeration") {
    std::mt19937_64 rng(8);
    for (std::size_t n = 3; n <= kMaxBundleRows; ++n) {
        auto small = random_bundle_problem(rng, n - 1, 0.3);
        auto cache = solve_all_subsystems(small);
        // Insert a new row before the bound row, as the optimizer does.
        Eigen::MatrixXd rows(static_cast<Eigen::Index>(n), 4);
        rows.setZero();
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i + 1 < static_cast<Eigen::Index>(n); ++i) {
            for (Eigen::Index j = 0; j < 4; ++j) {
                rows(i, j) = normal(rng);
            }
        }
        std::vector<ParamVector> r;
        std::vector<double> b;
        for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
            r.push_back(rows.row(i).transpose());
            b.push_back(i + 1 == static_cast<Eigen::Index>(n) ? 0.0 : normal(rng));
        }
        b[0] = std::abs(b[0]);
        std::vector<ParamVector> r_small(r.begin(), r.end());
        std::vector<double> b_small(b.begin(), b.end());
        r_small.erase(r_small.end() - 2);
        b_small.erase(b_small.end() - 2);
        cache = solve_all_subsystems(build_dual_problem(r_small, b_small, 0.3));
        const auto grown = build_dual_problem(r, b, 0.3);
        const auto inc = solve_dual_incremental(grown, cache, n - 2);
        const auto full = solve_dual(grown);
        CHECK(inc.alpha == full.alpha);
        CHECK(inc.support == full.support);
        CHECK(cache.size() == solve_all_subsystems(grown).size());
        (void)small;
    }
}

TEST_CASE("incremental solve rejects mismatched caches") {
    std::mt19937_64 rng(9);
    const auto p3 = random_bundle_problem(rng, 3, 1.0);
    auto cache = solve_all_subsystems(p3);  // three-row cache, but N-1 = 2 expected
    CHECK_THROWS_AS(solve_dual_incremental(p3, cache, 1), InvalidInput);
    const auto p2 = random_bundle_problem(rng, 2, 1.0);
    auto c2 = solve_all_subsystems(p2);
    CHECK_THROWS_AS(solve_dual_incremental(p2, c2, 0), InvalidInput);
}

TEST_CASE("kkt_check detects non-optimal points") {
    const auto p = make({{1.0, 0.2}, {0.2, 0.5}, {0, 0}}, {0.8, 0.3, 0.0}, 1.0);
    DualSolution bad;
    bad.alpha = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    CHECK_FALSE(kkt_check(p, bad, 1e-7));
    CHECK(kkt_check(p, solve_dual(p), 1e-9));
}

TEST_CASE("simplex projection") {
    Eigen::VectorXd v(3);
    v << 0.2, 0.3, 0.5;
    CHECK(project_to_simplex(v).isApprox(v, 1e-15));
    v << 2, 0, 0;
    const auto p = project_to_simplex(v);
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[1] == 0.0);
    v << 1, 1, -5;
    const auto q = project_to_simplex(v);
    CHECK(q[0] == doctest::Approx(0.5));
    CHECK(q[1] == doctest::Approx(0.5));
    CHECK(q[2] == 0.0);
}

TEST_CASE("projected-gradient oracle agrees with the exact solver") {
    std::mt19937_64 rng(17);
    for (int k = 0; k < 20; ++k) {
        const auto p = random_bundle_problem(rng, 2 + static_cast<std::size_t>(k % 4), 1.0);
        const auto exact = solve_dual(p);
        const auto oracle = brute_force_dual(p, 100000, 1.0 / p.q_matrix().trace());
        CHECK(std::abs(exact.value - oracle.value) <= 1e-6);
        CHECK(exact.value >= oracle.value - 1e-12);
    }
}

TEST_CASE("dual optimum never decreases when a row is added") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        std::vector<ParamVector> rows;
        std::vector<double> b;
        const int n = 2 + k % 6;
        for (int i = 0; i + 1 < n; ++i) {
            ParamVector g(3);
            g << normal(rng), normal(rng), normal(rng);
            rows.push_back(g);
            b.push_back(i == 0 ? std::abs(normal(rng)) : normal(rng));
        }
        rows.push_back(ParamVector::Zero(3));
        b.push_back(0.0);
        const double before = solve_dual(build_dual_problem(rows, b, 0.7)).value;
        ParamVector extra(3);
        extra << normal(rng), normal(rng), normal(rng);
        rows.insert(rows.end() - 1, extra);
        b.insert(b.end() - 1, normal(rng));
        CHECK(solve_dual(build_dual_problem(rows, b, 0.7)).value >= before - 1e-9);
    }
}

TEST_CASE("format_subset and printing") {
    CHECK(format_subset(0b101u, 3) == "{1 3}");
    CHECK(format_subset(0b1u, 2) == "{1}");
    CHECK(subset_indices(0b110u, 3) == std::vector<std::size_t>{1, 2});
    const auto p = make({{1, 0}, {0, 0}}, {0.5, 0}, 1.0);
    std::ostringstream os;
    os << p;
    CHECK(os.str() == to_string(p));
    CHECK_FALSE(os.str().empty());
}

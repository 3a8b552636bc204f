#include "borat/mlp.hpp"
#include "borat/objectives.hpp"

#include <doctest.h>

#include <random>
#include <vector>

using namespace borat;

namespace {

ParamVector random_point(std::mt19937_64& rng, Eigen::Index d, double scale) {
    std::normal_distribution<double> normal(0.0, scale);
    ParamVector w(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        w[i] = normal(rng);
    }
    return w;
}

// Central differences along a random unit direction.
double directional_error(const StochasticObjective& obj, std::size_t z, const ParamVector& w, std::mt19937_64& rng) {
    ParamVector u = random_point(rng, w.size(), 1.0);
    u /= u.norm();
    const double h = 1e-6;
    const double fd = (obj.sample_loss(z, w + h * u) - obj.sample_loss(z, w - h * u)) / (2.0 * h);
    const double an = dot(obj.sample_loss_grad(z, w).grad, u);
    return std::abs(fd - an) / std::max(1.0, std::abs(an));
}

void check_gradients(const StochasticObjective& obj, double scale, double tol) {
    std::mt19937_64 rng(12);
    for (int k = 0; k < 20; ++k) {
        const ParamVector w = obj.initial_point(0) + random_point(rng, obj.dimension(), scale);
        const std::size_t z = static_cast<std::size_t>(k) % obj.num_samples();
        CHECK(directional_error(obj, z, w, rng) < tol);
    }
}

} // namespace

TEST_CASE("least squares interpolates at the stored minimiser") {
    const auto obj = make_interp_least_squares(20, 100, 0);
    REQUIRE(obj->metadata().minimizer.has_value());
    const ParamVector& w_star = *obj->metadata().minimizer;
    for (std::size_t z = 0; z < obj->num_samples(); ++z) {
        CHECK(obj->sample_loss(z, w_star) < 1e-20);
    }
    CHECK(obj->metadata().beta.has_value());
    CHECK(obj->metadata().convex);
    check_gradients(*obj, 1.0, 1e-6);
}

TEST_CASE("separable hinge has zero loss at the separator") {
    const auto obj = make_separable_hinge(20, 50, 0.1, 0);
    REQUIRE(obj->metadata().minimizer.has_value());
    CHECK(obj->full_objective(*obj->metadata().minimizer) == 0.0);
    REQUIRE(obj->accuracy(*obj->metadata().minimizer).has_value());
    CHECK(*obj->accuracy(*obj->metadata().minimizer) == 1.0);
    check_gradients(*obj, 0.1, 1e-5);
}

TEST_CASE("oscillation example is symmetric") {
    const auto obj = make_oscillation_1d();
    const ParamVector a = ParamVector::Constant(1, 0.6);
    const ParamVector b = ParamVector::Constant(1, -0.6);
    CHECK(obj->sample_loss(0, a) == obj->sample_loss(0, b));
    CHECK(obj->sample_loss(0, ParamVector::Zero(1)) == 0.0);
    CHECK(obj->initial_point(0)[0] == 0.6);
    // Continuous at the knot.
    const ParamVector lo = ParamVector::Constant(1, 0.3 - 1e-12);
    const ParamVector hi = ParamVector::Constant(1, 0.3 + 1e-12);
    CHECK(obj->sample_loss(0, lo) == doctest::Approx(obj->sample_loss(0, hi)).epsilon(1e-9));
    CHECK(obj->sample_loss_grad(0, lo).grad[0] == doctest::Approx(obj->sample_loss_grad(0, hi).grad[0]).epsilon(1e-9));
    check_gradients(*obj, 0.3, 1e-6);
}

TEST_CASE("rsi objective satisfies its certified inequality") {
    const auto obj = make_rsi_objective(10, 0, 16);
    const auto& meta = obj->metadata();
    REQUIRE(meta.rsi_mu.has_value());
    REQUIRE(meta.minimizer.has_value());
    REQUIRE(meta.rsi_region_halfwidth.has_value());
    CHECK(*meta.rsi_mu > 0.0);
    CHECK_FALSE(meta.convex);
    const ParamVector& w_star = *meta.minimizer;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> box(-*meta.rsi_region_halfwidth, *meta.rsi_region_halfwidth);
    std::size_t violations = 0;
    for (int k = 0; k < 10000; ++k) {
        ParamVector w = w_star;
        for (Eigen::Index j = 0; j < w.size(); ++j) {
            w[j] += box(rng);
        }
        const std::size_t z = static_cast<std::size_t>(k) % obj->num_samples();
        const ParamVector g = obj->sample_loss_grad(z, w).grad;
        if (dot(g, w - w_star) < *meta.rsi_mu * squared_norm(w - w_star) - 1e-12) {
            ++violations;
        }
    }
    CHECK(violations == 0);
    check_gradients(*obj, 0.5, 1e-6);
}

TEST_CASE("losses are nonnegative") {
    std::mt19937_64 rng(5);
    std::vector<ObjectivePtr> objs{make_interp_least_squares(5, 10, 1), make_separable_hinge(10, 5, 0.1, 1),
                                   make_oscillation_1d(), make_rsi_objective(4, 1, 8)};
    DatasetSpec ds;
    ds.n_train = 32;
    ds.n_test = 8;
    objs.push_back(make_mlp_objective(ds, MlpSpec{8}, MlpLoss::cross_entropy, 1));
    objs.push_back(make_mlp_objective(ds, MlpSpec{8}, MlpLoss::multiclass_hinge, 1));
    for (const auto& obj : objs) {
        for (int k = 0; k < 100; ++k) {
            const ParamVector w = obj->initial_point(0) + random_point(rng, obj->dimension(), 2.0);
            CHECK(obj->sample_loss(static_cast<std::size_t>(k) % obj->num_samples(), w) >= 0.0);
        }
    }
}

TEST_CASE("mlp gradients match finite differences") {
    DatasetSpec ds;
    ds.n_train = 16;
    ds.n_test = 4;
    ds.num_classes = 3;
    check_gradients(*make_mlp_objective(ds, MlpSpec{6}, MlpLoss::cross_entropy, 2), 0.1, 1e-5);
    check_gradients(*make_mlp_objective(ds, MlpSpec{6}, MlpLoss::multiclass_hinge, 2), 0.1, 1e-5);
}

TEST_CASE("mlp model layout") {
    const MlpModel m(2, 4, 3, MlpLoss::cross_entropy);
    CHECK(m.num_params() == 2 * 4 + 4 + 4 * 3 + 3);
    const ParamVector p = m.init_params(1);
    CHECK(p.size() == m.num_params());
    Eigen::VectorXd x(2);
    x << 0.5, -1.0;
    CHECK(m.forward(p, x).size() == 3);
    const int label = m.predict(p, x);
    CHECK(label >= 0);
    CHECK(label < 3);
}

TEST_CASE("label noise") {
    DatasetSpec ds;
    ds.n_train = 200;
    ds.n_test = 10;
    ds.num_classes = 3;
    const auto obj = make_mlp_objective(ds, MlpSpec{4}, MlpLoss::cross_entropy, 3);
    const auto clean = add_label_noise(*obj, 0.0, 1);
    CHECK(clean->dataset().labels == obj->dataset().labels);
    const auto flipped = add_label_noise(*obj, 1.0, 1);
    for (std::size_t i = 0; i < obj->dataset().size(); ++i) {
        CHECK(flipped->dataset().labels[i] != obj->dataset().labels[i]);
        CHECK(flipped->dataset().labels[i] >= 0);
        CHECK(flipped->dataset().labels[i] < 3);
    }
    CHECK_THROWS_AS(add_label_noise(*obj, 1.5, 1), InvalidInput);
}

TEST_CASE("datasets are deterministic") {
    const Dataset a = make_blobs(50, 2, 1.0, 7);
    const Dataset b = make_blobs(50, 2, 1.0, 7);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    const Dataset m = make_moons(40, 0.1, 7);
    CHECK(m.size() == 40);
    CHECK(m.features.cols() == 2);
}

TEST_CASE("batch sampler draws each sample once per epoch") {
    BatchSampler s(9, 3, 4);
    CHECK(s.batches_per_epoch() == 3);
    std::vector<int> seen(9, 0);
    for (int k = 0; k < 3; ++k) {
        for (std::size_t z : s.next()) {
            REQUIRE(z < 9);
            ++seen[z];
        }
    }
    for (int c : seen) {
        CHECK(c == 1);
    }
    CHECK(s.epoch() == 1);
    CHECK_THROWS_AS(BatchSampler(0, 1, 0), InvalidInput);
}

TEST_CASE("shifted objective adds a constant") {
    const auto base = make_oscillation_1d();
    const auto shifted = shift_objective(base, 0.01);
    const ParamVector w = ParamVector::Constant(1, 0.5);
    CHECK(shifted->sample_loss(0, w) == doctest::Approx(base->sample_loss(0, w) + 0.01));
    CHECK(shifted->lower_bound() == 0.01);
}

TEST_CASE("dimension mismatch is rejected") {
    const auto obj = make_interp_least_squares(3, 5, 0);
    const std::vector<std::size_t> batch{0};
    CHECK_THROWS_AS(obj->loss_and_grad(batch, ParamVector::Zero(4)), InvalidInput);
}

#include "borat/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace borat {

// ---------------------------------------------------------------------------
// StochasticObjective

double StochasticObjective::sample_loss(std::size_t z, const ParamVector& w) const {
    return sample_loss_grad(z, w).loss;
}

ParamVector StochasticObjective::initial_point(std::uint64_t /*seed*/) const {
    return ParamVector::Zero(dimension());
}

void StochasticObjective::check_dimension(const ParamVector& w) const {
    if (w.size() != dimension()) {
        throw InvalidInput(name() + ": parameter dimension " + std::to_string(w.size()) + " != " +
                           std::to_string(dimension()));
    }
}

LossGrad StochasticObjective::loss_and_grad(std::span<const std::size_t> batch, const ParamVector& w) const {
    check_dimension(w);
    if (batch.empty()) {
        throw InvalidInput("empty batch");
    }
    LossGrad out{0.0, ParamVector::Zero(dimension())};
    for (auto z : batch) {
        auto lg = sample_loss_grad(z, w);
        out.loss += lg.loss;
        out.grad += lg.grad;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    out.grad *= inv;
    return out;
}

double StochasticObjective::loss(std::span<const std::size_t> batch, const ParamVector& w) const {
    check_dimension(w);
    double acc = 0.0;
    for (auto z : batch) {
        acc += sample_loss(z, w);
    }
    return acc / static_cast<double>(batch.size());
}

double StochasticObjective::full_objective(const ParamVector& w) const {
    check_dimension(w);
    double acc = 0.0;
    for (std::size_t z = 0; z < num_samples(); ++z) {
        acc += sample_loss(z, w);
    }
    return acc / static_cast<double>(num_samples());
}

// ---------------------------------------------------------------------------
// BatchSampler

BatchSampler::BatchSampler(std::size_t num_samples, std::size_t batch_size, std::uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
    if (num_samples == 0 || batch_size == 0) {
        throw InvalidInput("sampler needs at least one sample and a positive batch size");
    }
    batch_size_ = std::min(batch_size, num_samples);
    batches_per_epoch_ = (num_samples + batch_size_ - 1) / batch_size_;
    order_.resize(num_samples);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    reshuffle();
}

void BatchSampler::reshuffle() {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
}

std::span<const std::size_t> BatchSampler::next() {
    if (cursor_ >= order_.size()) {
        reshuffle();
    }
    const std::size_t end = std::min(cursor_ + batch_size_, order_.size());
    current_.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                    order_.begin() + static_cast<std::ptrdiff_t>(end));
    cursor_ = end;
    ++drawn_;
    return current_;
}

// ---------------------------------------------------------------------------
// Datasets

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot open " + path.string() + " for writing");
    }
    const auto d = data.features.cols();
    for (Eigen::Index j = 0; j < d; ++j) {
        out << 'x' << (j + 1) << ',';
    }
    out << "label\n";
    out.precision(17);
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            out << data.features(static_cast<Eigen::Index>(i), j) << ',';
        }
        out << data.labels[i] << '\n';
    }
}

Dataset make_blobs(std::size_t n, int num_classes, double spread, std::uint64_t seed) {
    if (num_classes < 2) {
        throw InvalidInput("blobs need at least two classes");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spread);
    Dataset data;
    data.num_classes = num_classes;
    data.features.resize(static_cast<Eigen::Index>(n), 2);
    data.labels.resize(n);
    constexpr double radius = 4.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int k = static_cast<int>(i % static_cast<std::size_t>(num_classes));
        const double angle = 2.0 * std::numbers::pi * k / num_classes;
        data.features(static_cast<Eigen::Index>(i), 0) = radius * std::cos(angle) + noise(rng);
        data.features(static_cast<Eigen::Index>(i), 1) = radius * std::sin(angle) + noise(rng);
        data.labels[i] = k;
    }
    return data;
}

Dataset make_moons(std::size_t n, double noise_level, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_level);
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    Dataset data;
    data.num_classes = 2;
    data.features.resize(static_cast<Eigen::Index>(n), 2);
    data.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int k = static_cast<int>(i % 2);
        const double t = angle(rng);
        double x = std::cos(t);
        double y = std::sin(t);
        if (k == 1) {
            x = 1.0 - x;
            y = 0.5 - y;
        }
        data.features(static_cast<Eigen::Index>(i), 0) = x + noise(rng);
        data.features(static_cast<Eigen::Index>(i), 1) = y + noise(rng);
        data.labels[i] = k;
    }
    return data;
}

namespace {

// ---------------------------------------------------------------------------
// Least squares

class LeastSquaresObjective final : public StochasticObjective {
public:
    LeastSquaresObjective(Eigen::MatrixXd x, Eigen::VectorXd y, ObjectiveMetadata meta)
        : x_(std::move(x)), y_(std::move(y)) {
        metadata_ = std::move(meta);
    }

    std::string name() const override { return "lsq"; }
    Eigen::Index dimension() const override { return x_.cols(); }
    std::size_t num_samples() const override { return static_cast<std::size_t>(x_.rows()); }

    LossGrad sample_loss_grad(std::size_t z, const ParamVector& w) const override {
        const auto row = x_.row(static_cast<Eigen::Index>(z));
        const double r = row.dot(w) - y_[static_cast<Eigen::Index>(z)];
        return {0.5 * r * r, r * row.transpose()};
    }

    double sample_loss(std::size_t z, const ParamVector& w) const override {
        const double r = x_.row(static_cast<Eigen::Index>(z)).dot(w) - y_[static_cast<Eigen::Index>(z)];
        return 0.5 * r * r;
    }

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
};

// ---------------------------------------------------------------------------
// Separable hinge

class HingeObjective final : public ClassificationObjective {
public:
    HingeObjective(Dataset data, ObjectiveMetadata meta) {
        train_ = std::move(data);
        metadata_ = std::move(meta);
    }

    std::string name() const override { return "hinge"; }
    Eigen::Index dimension() const override { return train_.features.cols(); }
    std::size_t num_samples() const override { return train_.size(); }

    LossGrad sample_loss_grad(std::size_t z, const ParamVector& w) const override {
        const auto row = train_.features.row(static_cast<Eigen::Index>(z));
        const double y = sign(z);
        const double slack = 1.0 - y * row.dot(w);
        // Zero subgradient on the flat side, including the kink.
        if (slack <= 0.0) {
            return {0.0, ParamVector::Zero(dimension())};
        }
        return {slack, -y * row.transpose()};
    }

    std::optional<double> accuracy(const ParamVector& w) const override {
        std::size_t correct = 0;
        for (std::size_t z = 0; z < num_samples(); ++z) {
            if (sign(z) * train_.features.row(static_cast<Eigen::Index>(z)).dot(w) > 0.0) {
                ++correct;
            }
        }
        return static_cast<double>(correct) / static_cast<double>(num_samples());
    }

    std::shared_ptr<ClassificationObjective> with_labels(std::vector<int> labels) const override {
        Dataset d = train_;
        d.labels = std::move(labels);
        ObjectiveMetadata meta = metadata_;
        meta.minimizer.reset();
        return std::make_shared<HingeObjective>(std::move(d), std::move(meta));
    }

private:
    double sign(std::size_t z) const { return train_.labels[z] == 1 ? 1.0 : -1.0; }
};

// ---------------------------------------------------------------------------
// 1-D oscillation example

class OscillationObjective final : public StochasticObjective {
public:
    static constexpr double kKnot = 0.3;
    static constexpr double kQuad = 2.2;
    static constexpr double kQuart = 100.0 / 9.0;
    static constexpr double kIntercept = 0.072;
    static constexpr double kSlope = 0.12;

    OscillationObjective() {
        metadata_.beta = 7.6;  // |f''(0.3^-)| = |2 kQuad - 12 kQuart 0.09|
        const double w_peak = std::sqrt(kQuad / (6.0 * kQuart));
        metadata_.lipschitz_c = slope(w_peak);
        metadata_.minimizer = ParamVector::Zero(1);
        metadata_.convex = false;
        metadata_.smooth = true;
    }

    std::string name() const override { return "osc1d"; }
    Eigen::Index dimension() const override { return 1; }
    std::size_t num_samples() const override { return 1; }

    LossGrad sample_loss_grad(std::size_t /*z*/, const ParamVector& w) const override {
        const double x = w[0];
        ParamVector g(1);
        g[0] = slope(x);
        return {value(x), g};
    }

    ParamVector initial_point(std::uint64_t /*seed*/) const override {
        return ParamVector::Constant(1, 0.6);
    }

    static double value(double x) {
        const double a = std::abs(x);
        if (a <= kKnot) {
            const double a2 = a * a;
            return kQuad * a2 - kQuart * a2 * a2;
        }
        return kIntercept + kSlope * a;
    }

    static double slope(double x) {
        const double a = std::abs(x);
        const double s = x < 0.0 ? -1.0 : 1.0;
        if (a <= kKnot) {
            return s * (2.0 * kQuad * a - 4.0 * kQuart * a * a * a);
        }
        return s * kSlope;
    }
};

// ---------------------------------------------------------------------------
// RSI family

class RsiObjective final : public StochasticObjective {
public:
    static constexpr double kCurvature = 0.5;

    RsiObjective(Eigen::MatrixXd a, ParamVector w_star, ObjectiveMetadata meta)
        : a_(std::move(a)), w_star_(std::move(w_star)) {
        metadata_ = std::move(meta);
    }

    std::string name() const override { return "rsi"; }
    Eigen::Index dimension() const override { return a_.cols(); }
    std::size_t num_samples() const override { return static_cast<std::size_t>(a_.rows()); }

    LossGrad sample_loss_grad(std::size_t z, const ParamVector& w) const override {
        const auto zi = static_cast<Eigen::Index>(z);
        LossGrad out{0.0, ParamVector(dimension())};
        for (Eigen::Index j = 0; j < dimension(); ++j) {
            const double u = w[j] - w_star_[j];
            const double s = std::sin(u);
            out.loss += 0.5 * a_(zi, j) * u * u + kCurvature * s * s;
            out.grad[j] = a_(zi, j) * u + kCurvature * std::sin(2.0 * u);
        }
        return out;
    }

    ParamVector initial_point(std::uint64_t seed) const override {
        std::mt19937_64 rng(mix64(seed));
        std::uniform_real_distribution<double> off(-kStartHalfwidth, kStartHalfwidth);
        ParamVector w = w_star_;
        for (Eigen::Index j = 0; j < w.size(); ++j) {
            w[j] += off(rng);
        }
        return w;
    }

    static constexpr double kStartHalfwidth = 3.0;

private:
    Eigen::MatrixXd a_;
    ParamVector w_star_;
};

// ---------------------------------------------------------------------------
// Constant shift

class ShiftedObjective final : public StochasticObjective {
public:
    ShiftedObjective(ObjectivePtr base, double shift) : base_(std::move(base)), shift_(shift) {
        metadata_ = base_->metadata();
        lower_bound_ = base_->lower_bound() + shift;
    }

    std::string name() const override { return base_->name(); }
    Eigen::Index dimension() const override { return base_->dimension(); }
    std::size_t num_samples() const override { return base_->num_samples(); }

    LossGrad sample_loss_grad(std::size_t z, const ParamVector& w) const override {
        auto lg = base_->sample_loss_grad(z, w);
        lg.loss += shift_;
        return lg;
    }

    ParamVector initial_point(std::uint64_t seed) const override { return base_->initial_point(seed); }

private:
    ObjectivePtr base_;
    double shift_;
};

} // namespace

ObjectivePtr make_interp_least_squares(std::size_t n_samples, Eigen::Index d, std::uint64_t seed) {
    if (n_samples == 0 || d <= 0) {
        throw InvalidInput("least squares needs at least one sample and positive dimension");
    }
    if (static_cast<std::size_t>(d) < n_samples) {
        throw InvalidInput("least squares interpolation needs d >= n_samples");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(n_samples);
    Eigen::MatrixXd x(n, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            x(i, j) = scale * normal(rng);
        }
    }
    ParamVector w_star(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        w_star[j] = normal(rng);
    }
    Eigen::VectorXd y = x * w_star;

    ObjectiveMetadata meta;
    meta.convex = true;
    meta.smooth = true;
    meta.beta = x.rowwise().squaredNorm().maxCoeff();
    meta.minimizer = w_star;
    // Smallest non-zero eigenvalue of X^T X / n equals the smallest eigenvalue
    // of X X^T / n when the rows are independent.
    Eigen::MatrixXd gram = x * x.transpose() / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    meta.strong_convexity = eig.eigenvalues().minCoeff();
    return std::make_shared<LeastSquaresObjective>(std::move(x), std::move(y), std::move(meta));
}

std::shared_ptr<const ClassificationObjective> make_separable_hinge(std::size_t n_samples, Eigen::Index d,
                                                                   double margin, std::uint64_t seed) {
    if (!(margin > 0.0)) {
        throw InvalidInput("hinge margin must be positive");
    }
    if (n_samples == 0 || d <= 0) {
        throw InvalidInput("hinge needs at least one sample and positive dimension");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    ParamVector u(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        u[j] = normal(rng);
    }
    u.normalize();

    Dataset data;
    data.num_classes = 2;
    data.features.resize(static_cast<Eigen::Index>(n_samples), d);
    data.labels.resize(n_samples);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    double min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_samples; ++i) {
        ParamVector x(d);
        for (Eigen::Index j = 0; j < d; ++j) {
            x[j] = scale * normal(rng);
        }
        const int label = coin(rng) ? 1 : 0;
        const double y = label == 1 ? 1.0 : -1.0;
        x -= u.dot(x) * u;
        x += y * (margin + std::abs(scale * normal(rng))) * u;
        data.features.row(static_cast<Eigen::Index>(i)) = x.transpose();
        data.labels[i] = label;
        min_margin = std::min(min_margin, y * u.dot(x));
    }

    ObjectiveMetadata meta;
    meta.convex = true;
    meta.smooth = false;
    meta.lipschitz_c = data.features.rowwise().norm().maxCoeff();
    meta.minimizer = ParamVector(u / min_margin);
    return std::make_shared<HingeObjective>(std::move(data), std::move(meta));
}

ObjectivePtr make_oscillation_1d() { return std::make_shared<OscillationObjective>(); }

ObjectivePtr make_rsi_objective(Eigen::Index d, std::uint64_t seed, std::size_t n_samples) {
    if (d <= 0 || n_samples == 0) {
        throw InvalidInput("rsi objective needs positive dimension and samples");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(0.8, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const auto n = static_cast<Eigen::Index>(n_samples);
    Eigen::MatrixXd a(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            a(i, j) = coef(rng);
        }
    }
    ParamVector w_star(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        w_star[j] = normal(rng);
    }

    // <grad, u> = sum_j u_j^2 (a_zj + c sin(2 u_j) / u_j), so the RSI constant is
    // min a + c * min_{|u| <= h} sin(2u)/u over the certified box.
    constexpr double halfwidth = 3.5;
    constexpr std::size_t grid = 200001;
    double worst = 2.0;  // limit of sin(2u)/u at u = 0
    for (std::size_t k = 0; k < grid; ++k) {
        const double u = -halfwidth + 2.0 * halfwidth * static_cast<double>(k) / static_cast<double>(grid - 1);
        if (u != 0.0) {
            worst = std::min(worst, std::sin(2.0 * u) / u);
        }
    }

    ObjectiveMetadata meta;
    meta.convex = false;
    meta.smooth = true;
    meta.beta = a.maxCoeff() + 2.0 * RsiObjective::kCurvature;
    // Grid spacing is 3.5e-5 and |d/du sin(2u)/u| <= 2 on the box, so the grid
    // minimum is within 1e-4 of the true minimum.
    meta.rsi_mu = a.minCoeff() + RsiObjective::kCurvature * (worst - 1e-4);
    meta.minimizer = w_star;
    meta.rsi_region_halfwidth = halfwidth;
    meta.rsi_grid_points = grid;
    return std::make_shared<RsiObjective>(std::move(a), std::move(w_star), std::move(meta));
}

std::shared_ptr<const ClassificationObjective> add_label_noise(const ClassificationObjective& objective, double p,
                                                               std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidInput("label noise probability must lie in [0, 1]");
    }
    const Dataset& data = objective.dataset();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<int> labels = data.labels;
    for (auto& label : labels) {
        if (unit(rng) < p) {
            std::uniform_int_distribution<int> other(0, data.num_classes - 2);
            int k = other(rng);
            if (k >= label) {
                ++k;
            }
            label = k;
        }
    }
    return objective.with_labels(std::move(labels));
}

ObjectivePtr shift_objective(ObjectivePtr base, double shift) {
    return std::make_shared<ShiftedObjective>(std::move(base), shift);
}

} // namespace borat

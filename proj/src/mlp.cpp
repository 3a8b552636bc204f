#include "borat/mlp.hpp"

#include <cmath>
#include <random>

namespace borat {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMajor>;
using MatMap = Eigen::Map<RowMajor>;

} // namespace

MlpModel::MlpModel(Eigen::Index input, Eigen::Index hidden, Eigen::Index output, MlpLoss loss)
    : input_(input), hidden_(hidden), output_(output), loss_(loss) {
    if (input <= 0 || hidden <= 0 || output < 2) {
        throw InvalidInput("mlp needs positive layer sizes and at least two outputs");
    }
}

Eigen::Index MlpModel::num_params() const {
    return hidden_ * input_ + hidden_ + output_ * hidden_ + output_;
}

Eigen::VectorXd MlpModel::forward(const ParamVector& params, const Eigen::VectorXd& x) const {
    const double* p = params.data();
    ConstMatMap w1(p, hidden_, input_);
    Eigen::Map<const Eigen::VectorXd> b1(p + hidden_ * input_, hidden_);
    ConstMatMap w2(p + hidden_ * input_ + hidden_, output_, hidden_);
    Eigen::Map<const Eigen::VectorXd> b2(p + hidden_ * input_ + hidden_ + output_ * hidden_, output_);
    const Eigen::VectorXd h = (w1 * x + b1).cwiseMax(0.0);
    return w2 * h + b2;
}

double MlpModel::loss_from_scores(const Eigen::VectorXd& scores, int label, Eigen::VectorXd* dscores) const {
    if (loss_ == MlpLoss::cross_entropy) {
        const double m = scores.maxCoeff();
        const Eigen::VectorXd e = (scores.array() - m).exp().matrix();
        const double z = e.sum();
        const double value = std::log(z) + m - scores[label];
        if (dscores != nullptr) {
            *dscores = e / z;
            (*dscores)[label] -= 1.0;
        }
        // log-sum-exp >= max score >= the label's score, up to rounding.
        return std::max(0.0, value);
    }
    // Crammer-Singer multiclass hinge.
    double worst = 0.0;
    Eigen::Index arg = -1;
    for (Eigen::Index j = 0; j < output_; ++j) {
        if (j == label) {
            continue;
        }
        const double margin = 1.0 + scores[j] - scores[label];
        if (margin > worst) {
            worst = margin;
            arg = j;
        }
    }
    if (dscores != nullptr) {
        *dscores = Eigen::VectorXd::Zero(output_);
        if (arg >= 0) {
            (*dscores)[arg] = 1.0;
            (*dscores)[label] = -1.0;
        }
    }
    return worst;
}

double MlpModel::loss(const ParamVector& params, const Eigen::VectorXd& x, int label) const {
    const Eigen::VectorXd scores = forward(params, x);
    if (!scores.allFinite()) {
        throw NumericError("mlp forward pass produced non-finite scores");
    }
    return loss_from_scores(scores, label, nullptr);
}

LossGrad MlpModel::loss_grad(const ParamVector& params, const Eigen::VectorXd& x, int label) const {
    const double* p = params.data();
    ConstMatMap w1(p, hidden_, input_);
    Eigen::Map<const Eigen::VectorXd> b1(p + hidden_ * input_, hidden_);
    ConstMatMap w2(p + hidden_ * input_ + hidden_, output_, hidden_);
    Eigen::Map<const Eigen::VectorXd> b2(p + hidden_ * input_ + hidden_ + output_ * hidden_, output_);

    const Eigen::VectorXd pre = w1 * x + b1;
    const Eigen::VectorXd h = pre.cwiseMax(0.0);
    const Eigen::VectorXd scores = w2 * h + b2;
    if (!scores.allFinite()) {
        throw NumericError("mlp forward pass produced non-finite scores");
    }

    Eigen::VectorXd ds;
    LossGrad out;
    out.loss = loss_from_scores(scores, label, &ds);
    out.grad = ParamVector::Zero(num_params());
    double* g = out.grad.data();
    MatMap gw1(g, hidden_, input_);
    Eigen::Map<Eigen::VectorXd> gb1(g + hidden_ * input_, hidden_);
    MatMap gw2(g + hidden_ * input_ + hidden_, output_, hidden_);
    Eigen::Map<Eigen::VectorXd> gb2(g + hidden_ * input_ + hidden_ + output_ * hidden_, output_);

    gw2 = ds * h.transpose();
    gb2 = ds;
    Eigen::VectorXd dh = w2.transpose() * ds;
    for (Eigen::Index i = 0; i < hidden_; ++i) {
        if (pre[i] <= 0.0) {
            dh[i] = 0.0;
        }
    }
    gw1 = dh * x.transpose();
    gb1 = dh;
    return out;
}

int MlpModel::predict(const ParamVector& params, const Eigen::VectorXd& x) const {
    Eigen::Index arg = 0;
    forward(params, x).maxCoeff(&arg);
    return static_cast<int>(arg);
}

ParamVector MlpModel::init_params(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    ParamVector params = ParamVector::Zero(num_params());
    std::normal_distribution<double> n1(0.0, std::sqrt(2.0 / static_cast<double>(input_)));
    std::normal_distribution<double> n2(0.0, std::sqrt(2.0 / static_cast<double>(hidden_)));
    for (Eigen::Index i = 0; i < hidden_ * input_; ++i) {
        params[i] = n1(rng);
    }
    const Eigen::Index w2_start = hidden_ * input_ + hidden_;
    for (Eigen::Index i = 0; i < output_ * hidden_; ++i) {
        params[w2_start + i] = n2(rng);
    }
    return params;
}

namespace {

class MlpObjective final : public ClassificationObjective {
public:
    MlpObjective(Dataset train, Dataset test, MlpModel model)
        : test_(std::move(test)), model_(model) {
        train_ = std::move(train);
        metadata_.convex = false;
        metadata_.smooth = false;
    }

    std::string name() const override { return "mlp"; }
    Eigen::Index dimension() const override { return model_.num_params(); }
    std::size_t num_samples() const override { return train_.size(); }

    LossGrad sample_loss_grad(std::size_t z, const ParamVector& w) const override {
        const auto zi = static_cast<Eigen::Index>(z);
        try {
            return model_.loss_grad(w, train_.features.row(zi).transpose(), train_.labels[z]);
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " (sample " + std::to_string(z) + ")");
        }
    }

    double sample_loss(std::size_t z, const ParamVector& w) const override {
        const auto zi = static_cast<Eigen::Index>(z);
        try {
            return model_.loss(w, train_.features.row(zi).transpose(), train_.labels[z]);
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " (sample " + std::to_string(z) + ")");
        }
    }

    std::optional<double> accuracy(const ParamVector& w) const override { return accuracy_on(train_, w); }
    std::optional<double> test_accuracy(const ParamVector& w) const override { return accuracy_on(test_, w); }

    ParamVector initial_point(std::uint64_t seed) const override { return model_.init_params(seed); }

    std::shared_ptr<ClassificationObjective> with_labels(std::vector<int> labels) const override {
        Dataset d = train_;
        d.labels = std::move(labels);
        return std::make_shared<MlpObjective>(std::move(d), test_, model_);
    }

private:
    double accuracy_on(const Dataset& data, const ParamVector& w) const {
        check_dimension(w);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (model_.predict(w, data.features.row(static_cast<Eigen::Index>(i)).transpose()) == data.labels[i]) {
                ++correct;
            }
        }
        return static_cast<double>(correct) / static_cast<double>(data.size());
    }

    Dataset test_;
    MlpModel model_;
};

Dataset generate(const DatasetSpec& spec, std::size_t n, std::uint64_t seed) {
    switch (spec.kind) {
    case DatasetSpec::Kind::blobs:
        return make_blobs(n, spec.num_classes, spec.noise, seed);
    case DatasetSpec::Kind::moons:
        return make_moons(n, spec.noise, seed);
    }
    throw InvalidInput("unknown dataset kind");
}

} // namespace

std::shared_ptr<const ClassificationObjective> make_mlp_objective(const DatasetSpec& data, const MlpSpec& model,
                                                                  MlpLoss loss, std::uint64_t seed) {
    if (data.n_train == 0 || data.n_train > 512) {
        throw InvalidInput("mlp training set must have between 1 and 512 points");
    }
    if (data.kind == DatasetSpec::Kind::moons && data.num_classes != 2) {
        throw InvalidInput("moons dataset has exactly two classes");
    }
    Dataset train = generate(data, data.n_train, mix64(seed));
    Dataset test = generate(data, std::max<std::size_t>(data.n_test, 1), mix64(seed + 1));
    MlpModel mlp(train.features.cols(), model.hidden, train.num_classes, loss);
    return std::make_shared<MlpObjective>(std::move(train), std::move(test), mlp);
}

} // namespace borat

#pragma once

#include "borat/objectives.hpp"

namespace borat {

/// One-hidden-layer ReLU network with manually derived gradients.
///
/// Parameter layout in the flat vector: W1 (hidden x input, row-major),
/// b1 (hidden), W2 (output x hidden, row-major), b2 (output).
class MlpModel {
public:
    MlpModel(Eigen::Index input, Eigen::Index hidden, Eigen::Index output, MlpLoss loss);

    Eigen::Index input_size() const { return input_; }
    Eigen::Index hidden_size() const { return hidden_; }
    Eigen::Index output_size() const { return output_; }
    Eigen::Index num_params() const;
    MlpLoss loss_kind() const { return loss_; }

    /// Output scores for one input.
    Eigen::VectorXd forward(const ParamVector& params, const Eigen::VectorXd& x) const;

    /// Per-sample loss and gradient by backpropagation.
    LossGrad loss_grad(const ParamVector& params, const Eigen::VectorXd& x, int label) const;
    double loss(const ParamVector& params, const Eigen::VectorXd& x, int label) const;

    int predict(const ParamVector& params, const Eigen::VectorXd& x) const;

    /// He-normal weights, zero biases.
    ParamVector init_params(std::uint64_t seed) const;

private:
    double loss_from_scores(const Eigen::VectorXd& scores, int label, Eigen::VectorXd* dscores) const;

    Eigen::Index input_;
    Eigen::Index hidden_;
    Eigen::Index output_;
    MlpLoss loss_;
};

} // namespace borat

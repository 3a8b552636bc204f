/**
 * @file objectives.hpp
 * @brief Finite-sum stochastic objectives used to exercise the optimiser.
 *
 * Every objective is a finite average f(w) = mean_z l_z(w) of non-negative
 * per-sample losses. Objectives are immutable after construction; all
 * evaluation methods are const and safe to call concurrently.
 */
#pragma once

#include "borat/types.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace borat {

struct LossGrad {
    double loss = 0.0;
    ParamVector grad;
};

/// Analytic facts about an objective, when known.
struct ObjectiveMetadata {
    std::optional<double> beta;              ///< per-sample smoothness constant
    std::optional<double> lipschitz_c;       ///< per-sample Lipschitz constant
    std::optional<double> rsi_mu;            ///< restricted secant inequality constant
    std::optional<double> strong_convexity;  ///< of f, restricted to the span of the data
    std::optional<ParamVector> minimizer;    ///< w* with l_z(w*) = 0 for all z
    bool convex = false;
    bool smooth = false;
    /// RSI certification: box half-width around w* and number of grid points.
    std::optional<double> rsi_region_halfwidth;
    std::size_t rsi_grid_points = 0;
};

class StochasticObjective {
public:
    virtual ~StochasticObjective() = default;

    virtual std::string name() const = 0;
    virtual Eigen::Index dimension() const = 0;
    virtual std::size_t num_samples() const = 0;

    /// Loss and gradient of a single sample.
    virtual LossGrad sample_loss_grad(std::size_t z, const ParamVector& w) const = 0;
    virtual double sample_loss(std::size_t z, const ParamVector& w) const;

    /// Training accuracy for classifiers.
    virtual std::optional<double> accuracy(const ParamVector& /*w*/) const { return std::nullopt; }
    /// Held-out accuracy for classifiers that carry a test split.
    virtual std::optional<double> test_accuracy(const ParamVector& /*w*/) const { return std::nullopt; }

    /// Default starting point for runs on this objective.
    virtual ParamVector initial_point(std::uint64_t seed) const;

    const ObjectiveMetadata& metadata() const { return metadata_; }
    double lower_bound() const { return lower_bound_; }

    /// Mean loss and gradient over a batch of sample ids.
    LossGrad loss_and_grad(std::span<const std::size_t> batch, const ParamVector& w) const;
    double loss(std::span<const std::size_t> batch, const ParamVector& w) const;

    /// Exact mean over every sample.
    double full_objective(const ParamVector& w) const;

protected:
    void check_dimension(const ParamVector& w) const;

    ObjectiveMetadata metadata_;
    double lower_bound_ = 0.0;
};

using ObjectivePtr = std::shared_ptr<const StochasticObjective>;

/// Shuffled mini-batches without replacement; reshuffles at every epoch.
class BatchSampler {
public:
    BatchSampler(std::size_t num_samples, std::size_t batch_size, std::uint64_t seed);

    std::span<const std::size_t> next();

    std::size_t batch_size() const { return batch_size_; }
    std::size_t batches_per_epoch() const { return batches_per_epoch_; }
    std::size_t batches_drawn() const { return drawn_; }
    /// Completed passes over the data.
    std::size_t epoch() const { return drawn_ / batches_per_epoch_; }

private:
    void reshuffle();

    std::vector<std::size_t> order_;
    std::vector<std::size_t> current_;
    std::size_t batch_size_;
    std::size_t batches_per_epoch_;
    std::size_t cursor_ = 0;
    std::size_t drawn_ = 0;
    std::mt19937_64 rng_;
};

/// Labelled points for the classification problems.
struct Dataset {
    Eigen::MatrixXd features;  ///< one sample per row
    std::vector<int> labels;   ///< 0 .. num_classes-1
    int num_classes = 2;

    std::size_t size() const { return labels.size(); }
};

/// Header row "x1,...,xd,label", one sample per line.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

/// Isotropic Gaussian blobs with centres evenly spaced on a circle (2-D inputs).
Dataset make_blobs(std::size_t n, int num_classes, double spread, std::uint64_t seed);
/// Two interleaved half-circles (2-D inputs, 2 classes).
Dataset make_moons(std::size_t n, double noise, std::uint64_t seed);

/// Objectives backed by a labelled dataset.
class ClassificationObjective : public StochasticObjective {
public:
    const Dataset& dataset() const { return train_; }
    /// Copy of this objective with different training labels.
    virtual std::shared_ptr<ClassificationObjective> with_labels(std::vector<int> labels) const = 0;

protected:
    Dataset train_;
};

/// l_z(w) = 1/2 (x_z^T w - y_z)^2 with y generated by a planted w*. Needs d >= n.
ObjectivePtr make_interp_least_squares(std::size_t n_samples, Eigen::Index d, std::uint64_t seed);

/// l_z(w) = max{0, 1 - y_z x_z^T w} on data separable with the given margin.
std::shared_ptr<const ClassificationObjective> make_separable_hinge(std::size_t n_samples, Eigen::Index d,
                                                                   double margin, std::uint64_t seed);

/// Even, non-negative, non-convex 1-D function on which the capped Polyak step
/// cycles between +3/5 and -3/5 for eta >= 10.
///
///   f(w) = 2.2 w^2 - (100/9) w^4     for |w| <= 0.3
///   f(w) = 0.072 + 0.12 |w|          for |w| >  0.3
///
/// The pieces meet with matching value and slope at |w| = 0.3. On the linear
/// piece f / f' = 0.6 + |w|, so the uncapped step w - f/f' lands on -0.6 sign(w)
/// for every 0.3 < |w| <= 0.6, and f(0.6) / f'(0.6)^2 = 10 is the cap threshold.
ObjectivePtr make_oscillation_1d();

/// Separable non-convex losses satisfying the RSI around a planted w*:
///   l_z(w) = sum_j 1/2 a_zj u_j^2 + c sin^2(u_j),  u = w - w*,
/// with a_zj in [0.8, 1], c = 0.5. The RSI constant is certified on a grid.
ObjectivePtr make_rsi_objective(Eigen::Index d, std::uint64_t seed, std::size_t n_samples = 16);

enum class MlpLoss { cross_entropy, multiclass_hinge };

struct DatasetSpec {
    enum class Kind { blobs, moons };
    Kind kind = Kind::blobs;
    std::size_t n_train = 256;
    std::size_t n_test = 256;
    int num_classes = 2;
    double noise = 1.0;  ///< blob spread or moon jitter
};

struct MlpSpec {
    Eigen::Index hidden = 64;
};

std::shared_ptr<const ClassificationObjective> make_mlp_objective(const DatasetSpec& data, const MlpSpec& model,
                                                                  MlpLoss loss, std::uint64_t seed);

/// Resamples each training label, with probability p, uniformly among the
/// other classes. The noise is fixed at construction.
std::shared_ptr<const ClassificationObjective> add_label_noise(const ClassificationObjective& objective, double p,
                                                               std::uint64_t seed);

/// Adds a constant to every loss; the lower bound moves with it.
ObjectivePtr shift_objective(ObjectivePtr base, double shift);

} // namespace borat

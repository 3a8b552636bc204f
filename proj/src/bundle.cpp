#include "borat/bundle.hpp"

#include <cmath>
#include <limits>

namespace borat {

namespace {

void require_same_dim(const ParamVector& a, const ParamVector& b, const char* what) {
    if (a.size() != b.size()) {
        throw InvalidInput(std::string("dimension mismatch: ") + what);
    }
}

} // namespace

Bundle::Bundle(ParamVector anchor, double eta, std::size_t capacity, LowerBound bound)
    : anchor_(std::move(anchor)), eta_(eta), capacity_(capacity), bound_(bound) {
    if (!(eta_ > 0.0) || !std::isfinite(eta_)) {
        throw InvalidInput("eta must be positive and finite");
    }
    if (capacity_ < kMinBundleRows || capacity_ > kMaxBundleRows) {
        throw InvalidInput("bundle capacity must be in [2, 10]");
    }
}

std::vector<ParamVector> Bundle::gradients() const {
    std::vector<ParamVector> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) {
        out.push_back(r.gradient);
    }
    return out;
}

std::vector<double> Bundle::offsets() const {
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) {
        out.push_back(r.offset);
    }
    return out;
}

DualProblem Bundle::dual_problem() const {
    const auto g = gradients();
    const auto b = offsets();
    return build_dual_problem(g, b, eta_);
}

std::size_t Bundle::insert_row(Linearization row) {
    if (rows_.size() >= capacity_) {
        throw InvalidInput("bundle capacity exceeded");
    }
    require_same_dim(row.gradient, anchor_, "row gradient vs anchor");
    const std::size_t pos = rows_.empty() ? 0 : rows_.size() - 1;
    rows_.insert(rows_.begin() + static_cast<std::ptrdiff_t>(pos), std::move(row));
    return pos;
}

void Bundle::push_row(Linearization row) {
    if (rows_.size() >= capacity_) {
        throw InvalidInput("bundle capacity exceeded");
    }
    require_same_dim(row.gradient, anchor_, "row gradient vs anchor");
    rows_.push_back(std::move(row));
}

Bundle init_bundle(const ParamVector& anchor, double eta, double loss, const ParamVector& grad,
                   LowerBound bound, std::size_t capacity) {
    require_same_dim(anchor, grad, "gradient vs anchor");
    if (!std::isfinite(loss) || !grad.allFinite()) {
        throw NumericError("non-finite loss or gradient at the anchor");
    }
    if (loss < bound.value) {
        throw ContractViolation("loss " + std::to_string(loss) + " is below the lower bound " +
                                std::to_string(bound.value));
    }
    Bundle bundle(anchor, eta, capacity, bound);
    const double shifted = loss - bound.value;
    bundle.push_row(Linearization{grad, shifted, anchor, shifted, false});
    bundle.push_row(Linearization{ParamVector::Zero(anchor.size()), 0.0, anchor, 0.0, true});
    return bundle;
}

double offset_for(const ParamVector& site, double loss_at_site, const ParamVector& grad_at_site,
                  const ParamVector& anchor) {
    require_same_dim(site, anchor, "site vs anchor");
    require_same_dim(grad_at_site, anchor, "gradient vs anchor");
    const ParamVector disp = site - anchor;
    return loss_at_site - dot(grad_at_site, disp);
}

ParamVector bundle_direction(const Bundle& bundle, const Eigen::VectorXd& alpha) {
    if (static_cast<std::size_t>(alpha.size()) != bundle.size()) {
        throw InvalidInput("alpha length does not match the bundle");
    }
    ParamVector dir = ParamVector::Zero(bundle.anchor().size());
    const auto& rows = bundle.rows();
    for (std::size_t n = 0; n < rows.size(); ++n) {
        const double a = alpha[static_cast<Eigen::Index>(n)];
        if (a != 0.0 && !rows[n].is_bound) {
            dir += a * rows[n].gradient;
        }
    }
    return dir;
}

ParamVector bundle_minimizer(const Bundle& bundle, const DualSolution& alpha) {
    const ParamVector dir = bundle_direction(bundle, alpha.alpha);
    return bundle.anchor() - bundle.eta() * dir;
}

std::size_t add_linearization(Bundle& bundle, double loss_at_min, const ParamVector& grad_at_min,
                              const ParamVector& current_min) {
    if (bundle.size() >= bundle.capacity()) {
        throw InvalidInput("bundle capacity exceeded");
    }
    if (!std::isfinite(loss_at_min) || !grad_at_min.allFinite()) {
        throw NumericError("non-finite loss or gradient at the bundle minimiser");
    }
    if (loss_at_min < bundle.bound().value) {
        throw ContractViolation("loss " + std::to_string(loss_at_min) + " is below the lower bound " +
                                std::to_string(bundle.bound().value));
    }
    const double shifted = loss_at_min - bundle.bound().value;
    const double b = offset_for(current_min, shifted, grad_at_min, bundle.anchor());
    return bundle.insert_row(Linearization{grad_at_min, b, current_min, shifted, false});
}

double model_linear_part(const Bundle& bundle, const ParamVector& point) {
    require_same_dim(point, bundle.anchor(), "point vs anchor");
    const ParamVector disp = point - bundle.anchor();
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& r : bundle.rows()) {
        best = std::max(best, dot(r.gradient, disp) + r.offset);
    }
    return best;
}

double model_value(const Bundle& bundle, const ParamVector& point) {
    const double prox = squared_norm(point - bundle.anchor()) / (2.0 * bundle.eta());
    return prox + model_linear_part(bundle, point);
}

} // namespace borat

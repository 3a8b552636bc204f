#pragma once

#include "borat/simplex_qp.hpp"
#include "borat/types.hpp"

#include <vector>

namespace borat {

/// One linear piece of the bundle: g^T (w - anchor) + offset.
///
/// Losses are stored shifted by the lower bound, so the bound row always has
/// a zero gradient and a zero offset.
struct Linearization {
    ParamVector gradient;
    double offset = 0.0;
    ParamVector site;
    double loss_at_site = 0.0;  ///< shifted loss at `site`
    bool is_bound = false;
};

struct LowerBound {
    double value = 0.0;
};

/// Pointwise max of linear pieces around an anchor, plus the proximal term
/// (1 / 2 eta) ||w - anchor||^2. Row 0 is sited at the anchor and the last row
/// is always the lower bound.
class Bundle {
public:
    Bundle(ParamVector anchor, double eta, std::size_t capacity, LowerBound bound);

    const ParamVector& anchor() const { return anchor_; }
    double eta() const { return eta_; }
    std::size_t capacity() const { return capacity_; }
    const LowerBound& bound() const { return bound_; }
    const std::vector<Linearization>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }

    /// Gradient rows and offsets in row order, for the dual.
    std::vector<ParamVector> gradients() const;
    std::vector<double> offsets() const;
    DualProblem dual_problem() const;

    /// Inserts before the bound row; returns the index of the new row.
    std::size_t insert_row(Linearization row);
    void push_row(Linearization row);

private:
    ParamVector anchor_;
    double eta_;
    std::size_t capacity_;
    LowerBound bound_;
    std::vector<Linearization> rows_;
};

/// Two-row bundle: the linearisation at the anchor and the lower bound.
/// Throws ContractViolation when loss < bound.value.
Bundle init_bundle(const ParamVector& anchor, double eta, double loss, const ParamVector& grad,
                   LowerBound bound, std::size_t capacity);

/// loss_at_site - <grad_at_site, site - anchor>.
double offset_for(const ParamVector& site, double loss_at_site, const ParamVector& grad_at_site,
                  const ParamVector& anchor);

/// anchor - eta * sum_n alpha_n g_n.
ParamVector bundle_minimizer(const Bundle& bundle, const DualSolution& alpha);

/// sum_n alpha_n g_n (the update direction before scaling by eta).
ParamVector bundle_direction(const Bundle& bundle, const Eigen::VectorXd& alpha);

/// Adds the linearisation taken at the current bundle minimiser. The raw
/// (unshifted) loss is expected; the bundle applies its bound shift.
/// Returns the index the row was inserted at.
std::size_t add_linearization(Bundle& bundle, double loss_at_min, const ParamVector& grad_at_min,
                              const ParamVector& current_min);

/// (1 / 2 eta) ||point - anchor||^2 + max_n {g_n^T (point - anchor) + b_n}.
double model_value(const Bundle& bundle, const ParamVector& point);

/// max_n {g_n^T (point - anchor) + b_n}; the piecewise-linear part alone.
double model_linear_part(const Bundle& bundle, const ParamVector& point);

} // namespace borat

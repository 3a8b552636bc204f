/**
 * @file simplex_qp.hpp
 * @brief Exact solver for small concave quadratics over the probability simplex.
 *
 * Solves
 *
 *     max_{alpha in simplex}  -1/2 alpha^T Q alpha + alpha^T b
 *
 * for N <= 10 by enumerating every non-empty support set I, solving the
 * equal-partial-derivative system restricted to I, and keeping the best
 * feasible candidate. Q already carries the learning-rate factor
 * (Q = eta * A A^T for gradient rows A).
 */
#pragma once

#include "borat/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace borat {

inline constexpr std::size_t kMinBundleRows = 2;
inline constexpr std::size_t kMaxBundleRows = 10;

/// Bit i set <=> row i (0-based) belongs to the subset.
using SubsetMask = std::uint32_t;

/// Quadratic data of the bundle dual. Immutable once constructed.
class DualProblem {
public:
    /// Validates shape, symmetry (1e-12 relative) and positive semidefiniteness.
    DualProblem(Eigen::MatrixXd q_matrix, Eigen::VectorXd b_vector);

    const Eigen::MatrixXd& q_matrix() const { return q_; }
    const Eigen::VectorXd& b_vector() const { return b_; }
    std::size_t n() const { return static_cast<std::size_t>(b_.size()); }

    /// Index of an all-zero row with zero offset (the lower-bound row), if any.
    std::optional<std::size_t> zero_row() const;

private:
    Eigen::MatrixXd q_;
    Eigen::VectorXd b_;
};

struct DualSolution {
    Eigen::VectorXd alpha;
    double value = 0.0;
    SubsetMask support = 0;
    double multiplier_c = 0.0;  ///< shared partial derivative on the support
    bool fallback_used = false; ///< no feasible subset was found
    std::size_t singular_skipped = 0;
};

struct SubsetCandidate {
    SubsetMask subset = 0;
    Eigen::VectorXd psi;  ///< lifted solution, zero outside the subset
    bool feasible = false;
    double value = 0.0;
    double multiplier_c = 0.0;
};

/// Q[i][j] = eta * <rows[i], rows[j]>, b = offsets.
DualProblem build_dual_problem(std::span<const ParamVector> rows,
                               std::span<const double> offsets, double eta);

/// -1/2 alpha^T Q alpha + alpha^T b.
double dual_value(const DualProblem& problem, const Eigen::VectorXd& alpha);

/// Solves the KKT system of one support set. Returns nullopt when the
/// system is numerically singular; such subsets are skipped by the solver.
std::optional<SubsetCandidate> solve_subsystem(const DualProblem& problem, SubsetMask subset);

/// Solves every non-singular subsystem in canonical (increasing mask) order.
std::vector<SubsetCandidate> solve_all_subsystems(const DualProblem& problem);

/// Picks the optimum among candidates: largest value, then smallest support,
/// then lexicographically largest index list (so ties favour later rows such
/// as the lower bound). The result does not depend on
/// the order of `candidates`.
DualSolution select_optimum(const DualProblem& problem, std::span<const SubsetCandidate> candidates);

/// Exact dual solve by full enumeration of the 2^N - 1 supports.
DualSolution solve_dual(const DualProblem& problem);

/// Re-solves after one row was inserted at `new_index`. `cache` holds the
/// candidates of the (N-1)-row problem on entry and the lifted N-row candidates
/// on exit, so repeated growth can chain calls. Only the 2^(N-1) supports that
/// contain `new_index` are solved.
DualSolution solve_dual_incremental(const DualProblem& problem,
                                    std::vector<SubsetCandidate>& cache,
                                    std::size_t new_index);

/// min{loss / (eta * grad_norm_sq), 1}, with the degenerate-gradient rule.
double solve_dual_closed_form_n2(double loss, double grad_norm_sq, double eta);

/// First-order optimality over the simplex.
bool kkt_check(const DualProblem& problem, const DualSolution& solution, double tol);

/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

/// Projected gradient ascent from the barycenter; returns the best iterate.
/// Independent reference for testing the exact solver.
DualSolution brute_force_dual(const DualProblem& problem, std::size_t iterations, double step);

/// "{1 3}" style, 1-based indices.
std::string format_subset(SubsetMask subset, std::size_t n);
std::vector<std::size_t> subset_indices(SubsetMask subset, std::size_t n);

/// Plain-text matrix block for debugging.
std::ostream& operator<<(std::ostream& os, const DualProblem& problem);
std::string to_string(const DualProblem& problem);

} // namespace borat

#include "borat/simplex_qp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace borat {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdTol = 1e-9;
constexpr double kPivotTol = 1e-12;
constexpr double kFeasibilitySlack = 1e-9;
// Values closer than this (relative) are treated as tied.
std::size_t popcount(SubsetMask m) { return static_cast<std::size_t>(std::popcount(m)); }

// True if subset a precedes b in lexicographic order of sorted index lists.
bool lex_less(SubsetMask a, SubsetMask b) {
    while (a != 0 && b != 0) {
        const int ia = std::countr_zero(a);
        const int ib = std::countr_zero(b);
        if (ia != ib) {
            return ia < ib;
        }
        a &= a - 1;
        b &= b - 1;
    }
    // A proper prefix sorts first.
    return a == 0 && b != 0;
}

// Inserts a zero bit at position `pos`, shifting higher bits up.
SubsetMask insert_bit(SubsetMask m, std::size_t pos) {
    const SubsetMask low = m & ((SubsetMask{1} << pos) - 1);
    const SubsetMask high = m >> pos;
    return low | (high << (pos + 1));
}

} // namespace

DualProblem::DualProblem(Eigen::MatrixXd q_matrix, Eigen::VectorXd b_vector)
    : q_(std::move(q_matrix)), b_(std::move(b_vector)) {
    const auto n = static_cast<std::size_t>(b_.size());
    if (n < kMinBundleRows || n > kMaxBundleRows) {
        throw InvalidInput("dual problem needs between 2 and 10 rows, got " + std::to_string(n));
    }
    if (q_.rows() != b_.size() || q_.cols() != b_.size()) {
        throw InvalidInput("Q must be N x N with N = len(b)");
    }
    if (!q_.allFinite() || !b_.allFinite()) {
        throw InvalidInput("dual problem has non-finite entries");
    }
    const double scale = std::max(1.0, q_.cwiseAbs().maxCoeff());
    if ((q_ - q_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
        throw InvalidInput("Q is not symmetric");
    }
    const double trace = q_.trace();
    if (trace > 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q_, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -kPsdTol * trace) {
            throw InvalidInput("Q is not positive semidefinite");
        }
    } else if (q_.cwiseAbs().maxCoeff() > 0.0) {
        throw InvalidInput("Q is not positive semidefinite");
    }
}

std::optional<std::size_t> DualProblem::zero_row() const {
    for (Eigen::Index i = 0; i < b_.size(); ++i) {
        if (b_[i] == 0.0 && q_.row(i).cwiseAbs().maxCoeff() == 0.0) {
            return static_cast<std::size_t>(i);
        }
    }
    return std::nullopt;
}

DualProblem build_dual_problem(std::span<const ParamVector> rows, std::span<const double> offsets,
                               double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw InvalidInput("eta must be positive and finite");
    }
    if (rows.size() != offsets.size()) {
        throw InvalidInput("number of rows and offsets differ");
    }
    if (rows.size() < kMinBundleRows || rows.size() > kMaxBundleRows) {
        throw InvalidInput("bundle must have between 2 and 10 rows");
    }
    const Eigen::Index d = rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != d) {
            throw InvalidInput("gradient rows have mismatched dimensions");
        }
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd q(n, n);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        b[i] = offsets[static_cast<std::size_t>(i)];
        for (Eigen::Index j = i; j < n; ++j) {
            const double v = eta * dot(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
            q(i, j) = v;
            q(j, i) = v;
        }
    }
    return DualProblem(std::move(q), std::move(b));
}

double dual_value(const DualProblem& problem, const Eigen::VectorXd& alpha) {
    if (static_cast<std::size_t>(alpha.size()) != problem.n()) {
        throw InvalidInput("alpha length does not match the problem");
    }
    const auto& q = problem.q_matrix();
    const auto& b = problem.b_vector();
    double quad = 0.0;
    double lin = 0.0;
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        if (alpha[i] == 0.0) {
            continue;
        }
        double row = 0.0;
        for (Eigen::Index j = 0; j < alpha.size(); ++j) {
            if (alpha[j] != 0.0) {
                row += q(i, j) * alpha[j];
            }
        }
        quad += alpha[i] * row;
        lin += alpha[i] * b[i];
    }
    return -0.5 * quad + lin;
}

std::optional<SubsetCandidate> solve_subsystem(const DualProblem& problem, SubsetMask subset) {
    const std::size_t n = problem.n();
    if (subset == 0 || (n < 32 && (subset >> n) != 0)) {
        throw InvalidInput("subset must be a non-empty subset of the rows");
    }
    const auto idx = subset_indices(subset, n);
    const auto k = static_cast<Eigen::Index>(idx.size());
    const auto& q = problem.q_matrix();
    const auto& b = problem.b_vector();

    if (k == 1) {
        // Vertex of the simplex; elimination would only add rounding.
        const auto i = static_cast<Eigen::Index>(idx.front());
        SubsetCandidate cand;
        cand.subset = subset;
        cand.psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        cand.psi[i] = 1.0;
        cand.feasible = true;
        cand.multiplier_c = b[i] - q(i, i);
        cand.value = dual_value(problem, cand.psi);
        return cand;
    }

    // The ones row/column is scaled by s = max|Q_I| (when positive) to balance
    // the system; the unknown in the last slot becomes c / s.
    double s = 0.0;
    for (auto i : idx) {
        for (auto j : idx) {
            s = std::max(s, std::abs(q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
        }
    }
    if (!(s > 0.0)) {
        s = 1.0;
    }

    const Eigen::Index m = k + 1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index r = 0; r < k; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) {
            a(r, c) = q(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]),
                        static_cast<Eigen::Index>(idx[static_cast<std::size_t>(c)]));
        }
        a(r, k) = s;
        a(k, r) = s;
        rhs[r] = b[static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)])];
    }
    rhs[k] = s;

    const double threshold = kPivotTol * a.cwiseAbs().maxCoeff();

    // Gaussian elimination with partial pivoting; the first row attaining the
    // largest magnitude wins, which keeps the pivot sequence reproducible.
    for (Eigen::Index col = 0; col < m; ++col) {
        Eigen::Index piv = col;
        double best = std::abs(a(col, col));
        for (Eigen::Index r = col + 1; r < m; ++r) {
            if (std::abs(a(r, col)) > best) {
                best = std::abs(a(r, col));
                piv = r;
            }
        }
        if (best < threshold || best == 0.0) {
            return std::nullopt;
        }
        if (piv != col) {
            a.row(col).swap(a.row(piv));
            std::swap(rhs[col], rhs[piv]);
        }
        for (Eigen::Index r = col + 1; r < m; ++r) {
            if (a(r, col) == 0.0) {
                continue;
            }
            const double factor = a(r, col) / a(col, col);
            a(r, col) = 0.0;
            for (Eigen::Index c = col + 1; c < m; ++c) {
                a(r, c) -= factor * a(col, c);
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    Eigen::VectorXd x(m);
    for (Eigen::Index r = m - 1; r >= 0; --r) {
        double acc = rhs[r];
        for (Eigen::Index c = r + 1; c < m; ++c) {
            acc -= a(r, c) * x[c];
        }
        x[r] = acc / a(r, r);
    }
    if (!x.allFinite()) {
        return std::nullopt;
    }

    SubsetCandidate cand;
    cand.subset = subset;
    cand.multiplier_c = x[k] * s;
    cand.psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    bool feasible = true;
    bool clamped = false;
    for (Eigen::Index r = 0; r < k; ++r) {
        double v = x[r];
        if (v < -kFeasibilitySlack) {
            feasible = false;
        } else if (v < 0.0) {
            v = 0.0;
            clamped = true;
        }
        cand.psi[static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)])] = v;
    }
    if (!feasible) {
        // Keep the raw lifted solution for inspection.
        for (Eigen::Index r = 0; r < k; ++r) {
            cand.psi[static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)])] = x[r];
        }
    } else if (clamped) {
        const double total = cand.psi.sum();
        if (total > 0.0) {
            cand.psi /= total;
        }
    }
    cand.feasible = feasible;
    cand.value = dual_value(problem, cand.psi);
    return cand;
}

std::vector<SubsetCandidate> solve_all_subsystems(const DualProblem& problem) {
    const std::size_t n = problem.n();
    const SubsetMask full = (SubsetMask{1} << n) - 1;
    std::vector<SubsetCandidate> out;
    out.reserve(full);
    for (SubsetMask m = 1; m <= full; ++m) {
        if (auto c = solve_subsystem(problem, m)) {
            out.push_back(std::move(*c));
        }
    }
    return out;
}

DualSolution select_optimum(const DualProblem& problem, std::span<const SubsetCandidate> candidates) {
    const std::size_t n = problem.n();
    const SubsetMask full = (SubsetMask{1} << n) - 1;

    double best_value = -std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        if (c.feasible && c.value > best_value) {
            best_value = c.value;
        }
    }

    DualSolution sol;
    sol.singular_skipped = static_cast<std::size_t>(full) - candidates.size();

    const SubsetCandidate* chosen = nullptr;
    if (std::isfinite(best_value)) {
        for (const auto& c : candidates) {
            if (!c.feasible || c.value < best_value) {
                continue;
            }
            if (chosen == nullptr) {
                chosen = &c;
                continue;
            }
            const auto pc = popcount(c.subset);
            const auto pb = popcount(chosen->subset);
            if (pc < pb || (pc == pb && lex_less(chosen->subset, c.subset))) {
                chosen = &c;
            }
        }
    }

    if (chosen != nullptr) {
        sol.alpha = chosen->psi;
        sol.value = chosen->value;
        sol.support = chosen->subset;
        sol.multiplier_c = chosen->multiplier_c;
        return sol;
    }

    // Unreachable in exact arithmetic: singleton systems are never singular.
    sol.fallback_used = true;
    const std::size_t fallback = problem.zero_row().value_or(n - 1);
    sol.alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    sol.alpha[static_cast<Eigen::Index>(fallback)] = 1.0;
    sol.value = dual_value(problem, sol.alpha);
    sol.support = SubsetMask{1} << fallback;
    sol.multiplier_c = problem.b_vector()[static_cast<Eigen::Index>(fallback)];
    return sol;
}

DualSolution solve_dual(const DualProblem& problem) {
    const auto candidates = solve_all_subsystems(problem);
    return select_optimum(problem, candidates);
}

DualSolution solve_dual_incremental(const DualProblem& problem, std::vector<SubsetCandidate>& cache,
                                    std::size_t new_index) {
    const std::size_t n = problem.n();
    if (n < 3 || new_index >= n) {
        throw InvalidInput("incremental solve needs N >= 3 and new_index < N");
    }
    const std::size_t prev_n = n - 1;
    const SubsetMask prev_full = (SubsetMask{1} << prev_n) - 1;

    std::vector<SubsetCandidate> merged;
    merged.reserve((SubsetMask{1} << n) - 1);
    for (const auto& c : cache) {
        if (c.subset == 0 || (c.subset & ~prev_full) != 0 ||
            static_cast<std::size_t>(c.psi.size()) != prev_n) {
            throw InvalidInput("cached candidates do not match the previous problem shape");
        }
        SubsetCandidate lifted;
        lifted.subset = insert_bit(c.subset, new_index);
        lifted.psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0, j = 0; i < n; ++i) {
            if (i == new_index) {
                continue;
            }
            lifted.psi[static_cast<Eigen::Index>(i)] = c.psi[static_cast<Eigen::Index>(j++)];
        }
        lifted.feasible = c.feasible;
        lifted.value = c.value;
        lifted.multiplier_c = c.multiplier_c;
        merged.push_back(std::move(lifted));
    }

    const SubsetMask bit = SubsetMask{1} << new_index;
    const SubsetMask full = (SubsetMask{1} << n) - 1;
    for (SubsetMask m = 1; m <= full; ++m) {
        if ((m & bit) == 0) {
            continue;
        }
        if (auto c = solve_subsystem(problem, m)) {
            merged.push_back(std::move(*c));
        }
    }
    auto sol = select_optimum(problem, merged);
    cache = std::move(merged);
    return sol;
}

double solve_dual_closed_form_n2(double loss, double grad_norm_sq, double eta) {
    if (!(eta > 0.0)) {
        throw InvalidInput("eta must be positive");
    }
    const double q = eta * grad_norm_sq;
    if (q == 0.0) {
        return loss > 0.0 ? 1.0 : 0.0;
    }
    return std::min(loss / q, 1.0);
}

bool kkt_check(const DualProblem& problem, const DualSolution& solution, double tol) {
    const auto& alpha = solution.alpha;
    if (static_cast<std::size_t>(alpha.size()) != problem.n()) {
        return false;
    }
    const Eigen::VectorXd partial = problem.b_vector() - problem.q_matrix() * alpha;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        if (alpha[i] > tol) {
            lo = std::min(lo, partial[i]);
            hi = std::max(hi, partial[i]);
        }
    }
    if (!std::isfinite(lo) || hi - lo > tol) {
        return false;
    }
    const double shared = hi;
    return partial.maxCoeff() <= shared + tol;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
    const auto n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cumsum += u[static_cast<std::size_t>(j)];
        const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - t > 0.0) {
            theta = t;
        }
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

DualSolution brute_force_dual(const DualProblem& problem, std::size_t iterations, double step) {
    const auto n = static_cast<Eigen::Index>(problem.n());
    const auto& q = problem.q_matrix();
    const auto& b = problem.b_vector();
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::VectorXd best = x;
    double best_value = dual_value(problem, x);
    for (std::size_t it = 0; it < iterations; ++it) {
        x = project_to_simplex(x + step * (b - q * x));
        const double v = dual_value(problem, x);
        if (v > best_value) {
            best_value = v;
            best = x;
        }
    }
    DualSolution sol;
    sol.alpha = best;
    sol.value = best_value;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (best[i] > 0.0) {
            sol.support |= SubsetMask{1} << i;
        }
    }
    const Eigen::VectorXd partial = b - q * best;
    sol.multiplier_c = partial.dot(best);
    return sol;
}

std::vector<std::size_t> subset_indices(SubsetMask subset, std::size_t n) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
        if (subset & (SubsetMask{1} << i)) {
            idx.push_back(i);
        }
    }
    return idx;
}

std::string format_subset(SubsetMask subset, std::size_t n) {
    std::string out = "{";
    bool first = true;
    for (auto i : subset_indices(subset, n)) {
        if (!first) {
            out += ' ';
        }
        out += std::to_string(i + 1);
        first = false;
    }
    out += '}';
    return out;
}

std::ostream& operator<<(std::ostream& os, const DualProblem& problem) {
    const auto& q = problem.q_matrix();
    const auto& b = problem.b_vector();
    const auto flags = os.flags();
    os << "DualProblem N=" << problem.n() << '\n';
    os << std::scientific << std::setprecision(6);
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        os << "  [";
        for (Eigen::Index j = 0; j < q.cols(); ++j) {
            os << std::setw(14) << q(i, j);
        }
        os << " ] | " << std::setw(14) << b[i] << '\n';
    }
    os.flags(flags);
    return os;
}

std::string to_string(const DualProblem& problem) {
    std::ostringstream ss;
    ss << problem;
    return ss.str();
}

} // namespace borat

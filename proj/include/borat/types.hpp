#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace borat {

/// Dense model parameters (dimension d).
using ParamVector = Eigen::VectorXd;

/// Input failed a documented precondition (bad dimension, non-positive eta, ...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A modelling assumption was broken at run time, e.g. a loss below its bound.
class ContractViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values appeared during optimisation.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inner product used everywhere a squared norm feeds a step size, so that the
/// closed-form and enumerated dual paths see bit-identical Gram entries.
inline double dot(const ParamVector& a, const ParamVector& b) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

inline double squared_norm(const ParamVector& a) { return dot(a, a); }

/// splitmix64 finaliser, used to derive independent seeds from a base seed.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace borat

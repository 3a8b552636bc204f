#pragma once

#include "borat/types.hpp"

#include <string>
#include <string_view>

namespace borat {

/// Feasible set Omega. The ball is {w : ||w||^2 <= r}.
struct FeasibleRegion {
    enum class Kind { unconstrained, l2_ball };

    Kind kind = Kind::unconstrained;
    double r = 0.0;

    static FeasibleRegion none() { return {}; }
    static FeasibleRegion l2_ball(double r);
};

/// Euclidean projection; the ball case is a rescaling.
ParamVector project(const FeasibleRegion& region, const ParamVector& w);

bool contains(const FeasibleRegion& region, const ParamVector& w, double tol);

/// "none" or "l2:<r>".
FeasibleRegion parse_region(std::string_view text);
std::string to_string(const FeasibleRegion& region);

} // namespace borat

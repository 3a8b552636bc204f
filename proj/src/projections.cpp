#include "borat/projections.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace borat {

FeasibleRegion FeasibleRegion::l2_ball(double r) {
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw InvalidInput("l2 ball radius parameter must be positive");
    }
    return FeasibleRegion{Kind::l2_ball, r};
}

ParamVector project(const FeasibleRegion& region, const ParamVector& w) {
    if (!w.allFinite()) {
        throw InvalidInput("cannot project a non-finite vector");
    }
    if (region.kind == FeasibleRegion::Kind::unconstrained) {
        return w;
    }
    const double norm_sq = squared_norm(w);
    // The slack absorbs rounding in the rescaled norm, so projecting twice
    // returns the same vector.
    if (norm_sq <= region.r * (1.0 + 1e-12)) {
        return w;
    }
    return w * std::sqrt(region.r / norm_sq);
}

bool contains(const FeasibleRegion& region, const ParamVector& w, double tol) {
    if (region.kind == FeasibleRegion::Kind::unconstrained) {
        return true;
    }
    return squared_norm(w) <= region.r + tol;
}

FeasibleRegion parse_region(std::string_view text) {
    if (text == "none" || text.empty()) {
        return FeasibleRegion::none();
    }
    if (text.starts_with("l2:")) {
        const auto num = text.substr(3);
        double r = 0.0;
        const auto res = std::from_chars(num.data(), num.data() + num.size(), r);
        if (res.ec != std::errc{} || res.ptr != num.data() + num.size()) {
            throw InvalidInput("bad l2 radius in constraint '" + std::string(text) + "'");
        }
        return FeasibleRegion::l2_ball(r);
    }
    throw InvalidInput("unknown constraint '" + std::string(text) + "' (expected none | l2:<r>)");
}

std::string to_string(const FeasibleRegion& region) {
    if (region.kind == FeasibleRegion::Kind::unconstrained) {
        return "none";
    }
    std::ostringstream ss;
    ss << "l2:" << region.r;
    return ss.str();
}

} // namespace borat

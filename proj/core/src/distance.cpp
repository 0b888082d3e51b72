#include "setinf/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "setinf/errors.hpp"

namespace setinf {

double directed_hausdorff(std::span<const Vec> a, std::span<const Vec> b) {
    if (a.empty() || b.empty()) throw EmptySetError("Hausdorff distance of an empty set");
    double worst_sq = 0.0;
    for (const Vec& x : a) {
        double best_sq = std::numeric_limits<double>::infinity();
        for (const Vec& y : b) {
            best_sq = std::min(best_sq, (x - y).squaredNorm());
            if (best_sq <= worst_sq) break;  // cannot raise the sup
        }
        worst_sq = std::max(worst_sq, best_sq);
    }
    return std::sqrt(worst_sq);
}

double hausdorff(std::span<const Vec> a, std::span<const Vec> b) {
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

double directed_hausdorff(const DiscreteSet& a, const DiscreteSet& b) {
    if (a.empty() || b.empty()) throw EmptySetError("Hausdorff distance of an empty set");
    if (!a.grid().same_lattice(b.grid())) {
        const auto pa = a.points();
        const auto pb = b.points();
        return directed_hausdorff(std::span<const Vec>(pa), std::span<const Vec>(pb));
    }
    // The nearest member of b to any lattice point outside b is a member
    // with an in-grid neighbour outside b, so b's lattice boundary suffices.
    std::vector<Vec> outside;
    for (std::size_t m : a.members())
        if (!b.contains(m)) outside.push_back(a.grid().point(m));
    if (outside.empty()) return 0.0;
    const auto edge = b.lattice_boundary().points();
    return directed_hausdorff(std::span<const Vec>(outside), std::span<const Vec>(edge));
}

double hausdorff(const DiscreteSet& a, const DiscreteSet& b) {
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

}  // namespace setinf

#pragma once

#include <span>

#include "setinf/grid.hpp"

namespace setinf {

/// sup_{x∈a} inf_{y∈b} ‖x − y‖ over explicit point lists (brute force).
double directed_hausdorff(std::span<const Vec> a, std::span<const Vec> b);
/// max of the two directed distances.
double hausdorff(std::span<const Vec> a, std::span<const Vec> b);

/// Directed Hausdorff distance between lattice sets. When both sets live on
/// the same lattice only a's points outside b and b's lattice boundary are
/// scanned; the result equals the brute-force value exactly.
/// Throws EmptySetError on empty input.
double directed_hausdorff(const DiscreteSet& a, const DiscreteSet& b);
double hausdorff(const DiscreteSet& a, const DiscreteSet& b);

}  // namespace setinf

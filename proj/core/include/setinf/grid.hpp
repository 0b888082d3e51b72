#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "setinf/linalg.hpp"

namespace setinf {

/// Rectangular parameter space Θ together with the radius δ of its
/// Euclidean expansion Θ^δ.
class ParamBox {
public:
    ParamBox(Vec lower, Vec upper, double delta = 0.0);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(lower_.size()); }
    const Vec& lower() const noexcept { return lower_; }
    const Vec& upper() const noexcept { return upper_; }
    double delta() const noexcept { return delta_; }

    bool contains(const Vec& theta) const;
    /// Euclidean distance from θ to the (non-expanded) box.
    double distance(const Vec& theta) const;
    /// θ ∈ Θ^δ, with a relative slack of 1e-12 on δ.
    bool in_expansion(const Vec& theta) const;

    ParamBox with_delta(double delta) const { return ParamBox(lower_, upper_, delta); }

private:
    Vec lower_;
    Vec upper_;
    double delta_;
};

/// Regular lattice over a ParamBox; axis 0 varies fastest in the flat index.
class ParamGrid {
public:
    ParamGrid(ParamBox box, std::vector<std::size_t> points_per_axis);
    /// Same resolution on every axis.
    ParamGrid(ParamBox box, std::size_t points_per_axis);

    const ParamBox& box() const noexcept { return box_; }
    std::size_t dim() const noexcept { return box_.dim(); }
    const std::vector<std::size_t>& points_per_axis() const noexcept { return counts_; }
    std::size_t size() const noexcept { return size_; }

    double spacing(std::size_t axis) const;
    /// Length of the diagonal of one lattice cell.
    double cell_diagonal() const;

    Vec point(std::size_t index) const;
    double coordinate(std::size_t axis, std::size_t axis_index) const;
    std::vector<std::size_t> multi_index(std::size_t index) const;
    std::size_t flat_index(const std::vector<std::size_t>& multi) const;
    /// Index of the lattice point nearest to θ (θ is clamped into the box).
    std::size_t nearest(const Vec& theta) const;

    /// Calls f(j) for each in-grid axis neighbour j of index.
    void for_each_neighbor(std::size_t index, const std::function<void(std::size_t)>& f) const;

    bool same_lattice(const ParamGrid& other) const;

private:
    ParamBox box_;
    std::vector<std::size_t> counts_;
    std::vector<std::size_t> strides_;
    std::size_t size_;
};

using GridPtr = std::shared_ptr<const ParamGrid>;

/// Subset of a grid's lattice, stored both as a sorted index list and as
/// a membership mask.
class DiscreteSet {
public:
    explicit DiscreteSet(GridPtr grid);
    DiscreteSet(GridPtr grid, std::vector<std::size_t> members);
    static DiscreteSet from_mask(GridPtr grid, std::vector<std::uint8_t> mask);
    static DiscreteSet from_predicate(GridPtr grid, const std::function<bool(std::size_t)>& keep);

    const ParamGrid& grid() const noexcept { return *grid_; }
    const GridPtr& grid_ptr() const noexcept { return grid_; }
    const std::vector<std::size_t>& members() const noexcept { return members_; }
    const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }
    std::size_t size() const noexcept { return members_.size(); }
    bool empty() const noexcept { return members_.empty(); }
    bool contains(std::size_t index) const { return mask_[index] != 0; }
    Vec point(std::size_t k) const { return grid_->point(members_[k]); }
    std::vector<Vec> points() const;

    bool is_subset_of(const DiscreteSet& other) const;
    /// Lattice area: member count times the volume of one cell.
    double lattice_volume() const;
    /// Members with at least one in-grid axis neighbour outside the set.
    DiscreteSet lattice_boundary() const;

private:
    GridPtr grid_;
    std::vector<std::size_t> members_;
    std::vector<std::uint8_t> mask_;
};

enum class Method { LR, Wald, Projection };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

/// Discretized confidence region. For LR and Wald, `included[i]` is
/// statistic[i] <= critical_value. For Projection the statistic is the
/// minimum of m(θ,γ) over the γ-ellipsoid and the critical value is 0.
struct ConfidenceRegion {
    DiscreteSet set;
    std::vector<double> statistic;  ///< one value per grid point
    double critical_value = 0.0;
    double level = 0.95;
    Method method = Method::LR;
    std::vector<std::uint8_t> flagged;  ///< per grid point: numerical trouble, see flag_count
    std::size_t flag_count = 0;
};

}  // namespace setinf

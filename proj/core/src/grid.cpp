#include "setinf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "setinf/errors.hpp"

namespace setinf {

ParamBox::ParamBox(Vec lower, Vec upper, double delta)
    : lower_(std::move(lower)), upper_(std::move(upper)), delta_(delta) {
    if (lower_.size() == 0 || lower_.size() != upper_.size())
        throw InputError("ParamBox: lower and upper must be nonempty and of equal length");
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
        if (!(lower_[i] < upper_[i]))
            throw InputError("ParamBox: lower[" + std::to_string(i) + "] must be < upper[" +
                             std::to_string(i) + "]");
    }
    if (!(delta_ >= 0.0)) throw InputError("ParamBox: delta must be >= 0");
}

bool ParamBox::contains(const Vec& theta) const {
    for (Eigen::Index i = 0; i < lower_.size(); ++i)
        if (theta[i] < lower_[i] || theta[i] > upper_[i]) return false;
    return true;
}

double ParamBox::distance(const Vec& theta) const {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < lower_.size(); ++i) {
        double excess = 0.0;
        if (theta[i] < lower_[i]) excess = lower_[i] - theta[i];
        else if (theta[i] > upper_[i]) excess = theta[i] - upper_[i];
        sq += excess * excess;
    }
    return std::sqrt(sq);
}

bool ParamBox::in_expansion(const Vec& theta) const {
    return distance(theta) <= delta_ * (1.0 + 1e-12);
}

ParamGrid::ParamGrid(ParamBox box, std::vector<std::size_t> points_per_axis)
    : box_(std::move(box)), counts_(std::move(points_per_axis)) {
    if (counts_.size() != box_.dim())
        throw InputError("ParamGrid: need one resolution per axis");
    strides_.resize(counts_.size());
    size_ = 1;
    for (std::size_t a = 0; a < counts_.size(); ++a) {
        if (counts_[a] < 2) throw InputError("ParamGrid: at least 2 points per axis");
        strides_[a] = size_;
        size_ *= counts_[a];
    }
}

ParamGrid::ParamGrid(ParamBox box, std::size_t points_per_axis)
    : ParamGrid(box, std::vector<std::size_t>(box.dim(), points_per_axis)) {}

double ParamGrid::spacing(std::size_t axis) const {
    return (box_.upper()[axis] - box_.lower()[axis]) / static_cast<double>(counts_[axis] - 1);
}

double ParamGrid::cell_diagonal() const {
    double sq = 0.0;
    for (std::size_t a = 0; a < dim(); ++a) sq += spacing(a) * spacing(a);
    return std::sqrt(sq);
}

double ParamGrid::coordinate(std::size_t axis, std::size_t j) const {
    if (j + 1 == counts_[axis]) return box_.upper()[axis];
    return box_.lower()[axis] + static_cast<double>(j) * spacing(axis);
}

Vec ParamGrid::point(std::size_t index) const {
    Vec p(static_cast<Eigen::Index>(dim()));
    for (std::size_t a = 0; a < dim(); ++a) {
        const std::size_t j = (index / strides_[a]) % counts_[a];
        p[static_cast<Eigen::Index>(a)] = coordinate(a, j);
    }
    return p;
}

std::vector<std::size_t> ParamGrid::multi_index(std::size_t index) const {
    std::vector<std::size_t> m(dim());
    for (std::size_t a = 0; a < dim(); ++a) m[a] = (index / strides_[a]) % counts_[a];
    return m;
}

std::size_t ParamGrid::flat_index(const std::vector<std::size_t>& multi) const {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < dim(); ++a) idx += multi[a] * strides_[a];
    return idx;
}

std::size_t ParamGrid::nearest(const Vec& theta) const {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < dim(); ++a) {
        const auto ai = static_cast<Eigen::Index>(a);
        const double t = std::clamp(theta[ai], box_.lower()[ai], box_.upper()[ai]);
        const double pos = (t - box_.lower()[ai]) / spacing(a);
        auto j = static_cast<std::size_t>(std::llround(pos));
        j = std::min(j, counts_[a] - 1);
        idx += j * strides_[a];
    }
    return idx;
}

void ParamGrid::for_each_neighbor(std::size_t index,
                                  const std::function<void(std::size_t)>& f) const {
    for (std::size_t a = 0; a < dim(); ++a) {
        const std::size_t j = (index / strides_[a]) % counts_[a];
        if (j > 0) f(index - strides_[a]);
        if (j + 1 < counts_[a]) f(index + strides_[a]);
    }
}

bool ParamGrid::same_lattice(const ParamGrid& other) const {
    return counts_ == other.counts_ && box_.lower() == other.box_.lower() &&
           box_.upper() == other.box_.upper();
}

DiscreteSet::DiscreteSet(GridPtr grid) : grid_(std::move(grid)), mask_(grid_->size(), 0) {}

DiscreteSet::DiscreteSet(GridPtr grid, std::vector<std::size_t> members)
    : grid_(std::move(grid)), members_(std::move(members)), mask_(grid_->size(), 0) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    for (std::size_t m : members_) {
        if (m >= grid_->size()) throw InputError("DiscreteSet: member outside the grid");
        mask_[m] = 1;
    }
}

DiscreteSet DiscreteSet::from_mask(GridPtr grid, std::vector<std::uint8_t> mask) {
    if (mask.size() != grid->size()) throw InputError("DiscreteSet: mask size mismatch");
    DiscreteSet s(std::move(grid));
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            s.members_.push_back(i);
            s.mask_[i] = 1;
        }
    }
    return s;
}

DiscreteSet DiscreteSet::from_predicate(GridPtr grid,
                                        const std::function<bool(std::size_t)>& keep) {
    std::vector<std::uint8_t> mask(grid->size(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = keep(i) ? 1 : 0;
    return from_mask(std::move(grid), std::move(mask));
}

std::vector<Vec> DiscreteSet::points() const {
    std::vector<Vec> out;
    out.reserve(members_.size());
    for (std::size_t m : members_) out.push_back(grid_->point(m));
    return out;
}

bool DiscreteSet::is_subset_of(const DiscreteSet& other) const {
    if (!grid_->same_lattice(other.grid())) throw InputError("subset test across different grids");
    return std::all_of(members_.begin(), members_.end(),
                       [&](std::size_t m) { return other.contains(m); });
}

double DiscreteSet::lattice_volume() const {
    double cell = 1.0;
    for (std::size_t a = 0; a < grid_->dim(); ++a) cell *= grid_->spacing(a);
    return cell * static_cast<double>(members_.size());
}

DiscreteSet DiscreteSet::lattice_boundary() const {
    std::vector<std::size_t> edge;
    for (std::size_t m : members_) {
        bool on_edge = false;
        grid_->for_each_neighbor(m, [&](std::size_t j) {
            if (!mask_[j]) on_edge = true;
        });
        if (on_edge) edge.push_back(m);
    }
    return DiscreteSet(grid_, std::move(edge));
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::LR: return "LR";
        case Method::Wald: return "Wald";
        case Method::Projection: return "Projection";
    }
    return "?";
}

Method method_from_string(std::string_view s) {
    if (s == "LR" || s == "lr") return Method::LR;
    if (s == "Wald" || s == "wald" || s == "W") return Method::Wald;
    if (s == "Projection" || s == "projection" || s == "proj") return Method::Projection;
    throw InputError("unknown method '" + std::string(s) + "' (expected LR, Wald or Projection)");
}

}  // namespace setinf

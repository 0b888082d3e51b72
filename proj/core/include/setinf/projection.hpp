#pragma once

#include <span>
#include <string_view>

#include "setinf/estimation.hpp"
#include "setinf/grid.hpp"
#include "setinf/models.hpp"

namespace setinf::projection {

/// {γ : n(γ̂ − γ)'Ω̂⁻¹(γ̂ − γ) <= radius2}.
struct GammaEllipsoid {
    Vec center;
    Mat shape;       ///< Ω̂, ridged if it was singular
    Mat shape_sqrt;
    Mat shape_inv;
    double radius2 = 0.0;
    double n = 1.0;
    double level = 0.95;
    bool ridged = false;

    double quadratic_form(const Vec& gamma) const;
    bool contains(const Vec& gamma) const { return quadratic_form(gamma) <= radius2; }
    /// γ = center + shape_sqrt · u · sqrt(radius2/n) for ‖u‖ <= 1.
    Vec from_unit(const Vec& u) const;
};

enum class Calibration { ChiSquare, Bootstrap };

std::string_view to_string(Calibration c);
Calibration calibration_from_string(std::string_view s);

/// ChiSquare uses the χ²_d(1−α) quantile; Bootstrap the upper order
/// statistic ⌈(1−α)B⌉ of the quadratic form over `gamma_draws`.
/// A singular Ω̂ gets a ridge of 1e-10 · trace; a zero Ω̂ is an error.
GammaEllipsoid gamma_region(const estimation::SufficientStats& stats, double alpha,
                            Calibration calibration = Calibration::ChiSquare,
                            std::span<const Vec> gamma_draws = {});

struct MinimizeOptions {
    std::size_t max_iterations = 500;
    double tolerance = 1e-10;
};

struct EllipsoidMinimum {
    double value = 0.0;
    Vec gamma;
    bool converged = false;
};

/// min over the ellipsoid of m(θ, γ): projected gradient in the unit-ball
/// coordinates with Armijo backtracking, from the centre, the −Ω̂^{1/2}∇γm
/// boundary direction, and ±e_1..e_3 on the boundary. Non-admissible γ
/// count as +∞.
EllipsoidMinimum minimize_over_ellipsoid(const models::MomentModel& model,
                                         const GammaEllipsoid& ellipsoid, const Vec& theta,
                                         const MinimizeOptions& options = {});

/// θ is included iff the minimum is <= 0. Points whose minimum is positive
/// but not converged are flagged and included.
ConfidenceRegion projected_region(const models::MomentModel& model,
                                  const GammaEllipsoid& ellipsoid, const GridPtr& grid,
                                  const MinimizeOptions& options = {});

}  // namespace setinf::projection

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "setinf/consumption.hpp"
#include "setinf/estimation.hpp"
#include "setinf/projection.hpp"
#include "setinf/resampling.hpp"
#include "setinf/statistics.hpp"

namespace setinf::regions {

using estimation::ReturnsPanel;
using estimation::SufficientStats;
using models::ModelPtr;
using models::MomentModel;
using statistics::WeightSpec;

struct RegionConfig {
    resampling::ResampleConfig resample;
    WeightSpec weights;  ///< ŝ for LR; ŵ = ŝ/‖∇θm‖ for Wald (1 when Unweighted)
    bool two_sided = false;
    std::optional<double> boundary_tol;
    projection::Calibration calibration = projection::Calibration::ChiSquare;
    /// Needed by Scheme::NonparametricPanel and bootstrap calibration.
    const ReturnsPanel* panel = nullptr;
    estimation::StatMap stat_map;
    statistics::ProjectionOptions projection;
};

struct RegionResult {
    ConfidenceRegion region;
    DiscreteSet estimate;
    DiscreteSet boundary;  ///< empty for Projection
    double boundary_tolerance = 0.0;
    std::vector<double> draws;  ///< sorted S*_b (LR, Wald)
    std::size_t escaped = 0;    ///< Wald points whose projection left Θ^δ (excluded)
    double radius2 = 0.0;       ///< Projection only
    bool ridged = false;        ///< Projection only
};

/// Estimated boundary band → critical value → pointwise statistic → threshold.
RegionResult build_region(Method method, const MomentModel& model, const SufficientStats& stats,
                          const GridPtr& grid, const RegionConfig& cfg);

class Dgp {
public:
    struct Draw {
        SufficientStats stats;
        std::optional<ReturnsPanel> panel;
    };

    virtual ~Dgp() = default;
    virtual const Vec& true_gamma() const = 0;
    virtual Draw draw(std::size_t n, std::uint64_t seed, std::size_t rep) const = 0;
};

/// i.i.d. N(v, Σ) gross returns; γ̂ and Ω̂ estimated from each panel.
class GaussianReturnsDgp final : public Dgp {
public:
    GaussianReturnsDgp(Vec v, Mat sigma, estimation::OmegaOptions omega = {});

    const Vec& true_gamma() const override { return gamma0_; }
    Draw draw(std::size_t n, std::uint64_t seed, std::size_t rep) const override;

    static ReturnsPanel simulate(const Vec& v, const Mat& sigma, std::size_t periods,
                                 Engine& engine);
    /// (v'Σ⁻¹v, v'Σ⁻¹1, 1'Σ⁻¹1); throws InputError if Σ is not PD.
    static Vec hj_gamma(const Vec& v, const Mat& sigma);

private:
    Vec v_;
    Mat sigma_;
    Mat chol_;
    Vec gamma0_;
    estimation::OmegaOptions omega_;
};

/// γ̂ = γ₀ with Ω̂ = 0 in every replication.
class FixedStatsDgp final : public Dgp {
public:
    explicit FixedStatsDgp(Vec gamma) : gamma0_(std::move(gamma)) {}
    const Vec& true_gamma() const override { return gamma0_; }
    Draw draw(std::size_t n, std::uint64_t seed, std::size_t rep) const override;

private:
    Vec gamma0_;
};

struct CoverageReport {
    std::size_t reps = 0;
    std::size_t covered = 0;
    double coverage = 0.0;
    double std_error = 0.0;  ///< binomial
    double mean_hausdorff = 0.0;
    std::size_t hausdorff_reps = 0;
    std::vector<double> hausdorff;       ///< per rep; NaN when undefined
    std::vector<std::uint8_t> covered_flags;
};

/// Θ₀ covered means every lattice point of {m(θ, γ₀) <= 0} is in the region.
/// Replication r uses resampling seed mix64(seed, r) and draws its data from
/// the dgp with (seed, r).
CoverageReport coverage_study(const Dgp& dgp, const MomentModel& model, Method method,
                              std::size_t reps, std::size_t n, const GridPtr& grid,
                              const RegionConfig& cfg, std::uint64_t seed);

/// Axis-wise smooth monotone reparameterization u = η(θ).
class CoordinateTransform {
public:
    enum class Axis { Identity, Log };

    explicit CoordinateTransform(std::vector<Axis> axes);
    static CoordinateTransform identity(std::size_t dim);
    /// Log on one axis, identity elsewhere.
    static CoordinateTransform log_axis(std::size_t dim, std::size_t axis);

    std::size_t dim() const noexcept { return axes_.size(); }
    const std::vector<Axis>& axes() const noexcept { return axes_; }
    std::string name() const;

    Vec forward(const Vec& theta) const;
    Vec inverse(const Vec& u) const;
    /// ∂θ/∂u at u (diagonal).
    Vec inverse_jacobian(const Vec& u) const;
    /// Throws InputError if η is not a diffeomorphism on the δ-expanded box.
    void check_box(const ParamBox& box) const;
    /// Image box η(Θ) with the same δ.
    ParamBox image(const ParamBox& box) const;

private:
    std::vector<Axis> axes_;
};

/// m_η(u, γ) = m(η⁻¹(u), γ).
class ReparameterizedModel final : public MomentModel {
public:
    ReparameterizedModel(ModelPtr base, CoordinateTransform transform);

    std::string name() const override { return base_->name() + "@" + transform_.name(); }
    std::size_t theta_dim() const override { return base_->theta_dim(); }
    std::size_t gamma_dim() const override { return base_->gamma_dim(); }
    double eval(const Vec& u, const Vec& gamma) const override;
    Vec grad_theta(const Vec& u, const Vec& gamma) const override;
    Vec grad_gamma(const Vec& u, const Vec& gamma) const override;
    bool admissible(const Vec& gamma) const override { return base_->admissible(gamma); }
    ParamBox default_box() const override { return transform_.image(base_->default_box()); }

private:
    ModelPtr base_;
    CoordinateTransform transform_;
};

struct InvarianceReport {
    std::size_t points = 0;
    std::size_t lr_disagreements = 0;
    std::size_t wald_unweighted_disagreements = 0;
    std::size_t wald_weighted_disagreements = 0;
    double wald_unweighted_rate = 0.0;
    double wald_weighted_rate = 0.0;
    double lr_critical = 0.0;
    double lr_critical_eta = 0.0;
};

/// Recomputes the LR and Wald regions in η-coordinates at the points η(θ_i)
/// with the same ŝ(θ_i), the same boundary tolerance and the same draws, and
/// counts inclusion-flag disagreements with the θ-coordinate regions. The
/// weighted Wald variant uses ŵ(θ; η) = ŝ(θ)/‖∇_u m_η(η(θ))‖.
InvarianceReport invariance_check(const ModelPtr& model, const SufficientStats& stats,
                                  const GridPtr& grid, const CoordinateTransform& transform,
                                  const RegionConfig& cfg);

/// Two-sided LR band around the consumption SDF frontier. The weight is the
/// bootstrap SD of μ_C*(σ) − μ̂_C(σ) over resampled growth series, split by
/// tail (positive deviations above the curve, negative below) and rescaled
/// by negative_part_scale(); critical values come from the same draws.
struct SdfRegionConfig {
    models::ConsumptionSdfModel::Options model;
    std::size_t draws = 1000;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    std::optional<double> boundary_tol;
};

RegionResult build_sdf_region(std::span<const double> growth, const GridPtr& grid,
                              const SdfRegionConfig& cfg);

struct OverlapReport {
    std::vector<double> rho;
    std::vector<std::uint8_t> overlap;  ///< curve cell in both regions
    std::vector<std::pair<double, double>> overlap_intervals;
    std::vector<std::pair<double, double>> rejected_intervals;
    std::optional<double> threshold;  ///< smallest ρ with overlap
    double combined_level = 0.0;      ///< Bonferroni: 1 − (α_hj + α_sdf)
};

/// Walks ρ over [rho_min, rho_max] in `steps` equal increments and checks
/// whether the lattice cell of (μ_C(ρ), σ_C(ρ)) lies in both regions.
OverlapReport hj_consumption_overlap(const ConfidenceRegion& hj, const ConfidenceRegion& sdf,
                                     std::span<const double> growth, double beta,
                                     double rho_min, double rho_max, std::size_t steps);

}  // namespace setinf::regions

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "setinf/grid.hpp"
#include "setinf/linalg.hpp"
#include "setinf/models.hpp"
#include "setinf/rng.hpp"

namespace setinf::estimation {

/// T×N per-period returns with optional T×k factor columns.
struct ReturnsPanel {
    Mat returns;
    Mat factors;  ///< T×k, k may be 0
    std::vector<std::string> labels;
    std::vector<std::string> factor_labels;

    std::size_t periods() const { return static_cast<std::size_t>(returns.rows()); }
    std::size_t assets() const { return static_cast<std::size_t>(returns.cols()); }
    std::size_t factor_count() const { return static_cast<std::size_t>(factors.cols()); }

    /// Throws InputError unless T >= N + 2, all cells are finite, and the
    /// factor block (if any) has T rows.
    void validate() const;
};

/// Row-resampled copy (i.i.d. rows with replacement).
ReturnsPanel resample_rows(const ReturnsPanel& panel, Engine& engine);

/// γ̂ plus the estimated covariance Ω̂ of √n(γ̂ − γ).
struct SufficientStats {
    Vec gamma_hat;
    Mat omega_hat;
    Mat omega_sqrt;
    Mat omega_inv_sqrt;  ///< pseudo-inverse square root
    double n = 0.0;
    std::string model_tag;
    double clipped_mass = 0.0;  ///< eigenvalue mass removed by PSD clipping
    bool clip_warning = false;  ///< clipped_mass > 1e-8 · trace
};

/// Symmetrizes and PSD-clips Ω̂ and precomputes its square roots.
SufficientStats make_stats(Vec gamma_hat, const Mat& omega_hat, double n, std::string model_tag);

using StatMap = std::function<Vec(const ReturnsPanel&)>;

enum class OmegaMethod { Bootstrap, DeltaMethod };

struct OmegaOptions {
    OmegaMethod method = OmegaMethod::Bootstrap;
    std::size_t draws = 1000;
    std::uint64_t seed = 0;
};

/// Condition number above which Σ̂ is treated as singular.
inline constexpr double kMaxCondition = 1e12;

/// (v̂'Σ̂⁻¹v̂, v̂'Σ̂⁻¹1, 1'Σ̂⁻¹1) with divisor T−1 in Σ̂.
/// Throws SingularCovarianceError carrying the condition number.
Vec hj_gamma(const ReturnsPanel& panel);

/// vec(D̂'Σ̂D̂) with D̂ = [v̂, B̂'] and B̂ = Cov(Z, r). With `precision`
/// set, Σ̂⁻¹ replaces Σ̂ (the minimum-variance frontier form).
Vec mf_gamma(const ReturnsPanel& panel, bool precision = false);

/// Ω̂ = n · sample covariance of γ̂* over `draws` row-resampled panels.
/// Redraws whose statistic throws SingularCovarianceError or
/// ModelDomainError are rejected and redrawn up to 10·draws times in total.
Mat estimate_omega_bootstrap(const ReturnsPanel& panel, const StatMap& stat_map,
                             std::size_t draws, std::uint64_t seed);

/// The γ̂* draws themselves, with the same rejection rule. draw b uses
/// derive_engine(seed, stream, b).
std::vector<Vec> bootstrap_statistics(const ReturnsPanel& panel, const StatMap& stat_map,
                                      std::size_t draws, std::uint64_t seed,
                                      std::uint64_t stream);

/// Delta-method Ω̂ for the HJ triple: mean of outer products of the
/// influence functions of (v̂, Σ̂) pushed through the γ map.
Mat hj_omega_delta(const ReturnsPanel& panel);

SufficientStats estimate_hj_stats(const ReturnsPanel& panel, const OmegaOptions& options = {});

/// Throws ConfigError when `expected_factors` disagrees with the panel.
SufficientStats estimate_mf_stats(const ReturnsPanel& panel, const OmegaOptions& options = {},
                                  std::optional<std::size_t> expected_factors = std::nullopt,
                                  bool precision = false);

/// m(θ_i, γ) at every lattice point; NaN where the model cannot be
/// inverted (InversionError). Other errors propagate.
std::vector<double> evaluate_on_grid(const models::MomentModel& model, const Vec& gamma,
                                     const ParamGrid& grid);

/// Θ̂₀ = {θ : m(θ, γ̂) <= 0} on the lattice.
DiscreteSet estimate_set(const models::MomentModel& model, const SufficientStats& stats,
                         const GridPtr& grid);

/// Half the cell diagonal times the largest ‖∇θ m(θ, γ̂)‖ over the lattice.
double default_boundary_tolerance(const models::MomentModel& model, const SufficientStats& stats,
                                  const ParamGrid& grid);

/// {θ : |m(θ, γ̂)| <= tol}. Throws EmptyBoundaryError when the band is empty.
DiscreteSet estimate_boundary(const models::MomentModel& model, const SufficientStats& stats,
                              const GridPtr& grid, std::optional<double> tol = std::nullopt);

}  // namespace setinf::estimation

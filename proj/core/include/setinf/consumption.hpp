#pragma once

#include <span>
#include <vector>

#include "setinf/models.hpp"

namespace setinf::models {

/// Mean and standard deviation (divisor T−1) of M_t(ρ) = β · growth_t^{−ρ}.
struct SdfMoments {
    double mean = 0.0;
    double sd = 0.0;
    double dmean_drho = 0.0;
    double dsd_drho = 0.0;
};

/// Pre: growth strictly positive, β ∈ (0, 1], ρ >= 0, at least two periods.
SdfMoments consumption_sdf_curve(std::span<const double> growth, double beta, double rho);

/// Equality moment for the consumption-based SDF frontier in (μ, σ):
/// m(μ, σ) = μ_C(σ_C⁻¹(σ)) − μ. γ carries the consumption growth sample
/// itself, so a resampled sample is just another γ.
class ConsumptionSdfModel final : public MomentModel {
public:
    struct Options {
        double beta = 0.95;
        double rho_max = 500.0;
        double tolerance = 1e-10;
    };

    ConsumptionSdfModel(std::size_t periods, Options options);
    explicit ConsumptionSdfModel(std::size_t periods) : ConsumptionSdfModel(periods, Options{}) {}

    std::string name() const override { return "consumption_sdf"; }
    std::size_t theta_dim() const override { return 2; }
    std::size_t gamma_dim() const override { return periods_; }
    /// Throws InversionError if σ is outside σ_C([0, rho_max]).
    double eval(const Vec& theta, const Vec& gamma) const override;
    Vec grad_theta(const Vec& theta, const Vec& gamma) const override;
    Vec grad_gamma(const Vec& theta, const Vec& gamma) const override;
    bool admissible(const Vec& gamma) const override;
    ParamBox default_box() const override;

    /// ρ with σ_C(ρ) = σ by bisection on [0, rho_max], then Newton polish.
    double invert_sigma(double sigma, const Vec& growth) const;
    const Options& options() const noexcept { return options_; }

private:
    std::size_t periods_;
    Options options_;
};

}  // namespace setinf::models

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "setinf/grid.hpp"
#include "setinf/linalg.hpp"

namespace setinf::models {

/// An inequality-generating function m(θ, γ): the set of interest is
/// {θ ∈ Θ : m(θ, γ) <= 0}. Implementations are immutable and may be
/// evaluated concurrently.
class MomentModel {
public:
    virtual ~MomentModel() = default;

    virtual std::string name() const = 0;
    virtual std::size_t theta_dim() const = 0;
    virtual std::size_t gamma_dim() const = 0;

    virtual double eval(const Vec& theta, const Vec& gamma) const = 0;
    virtual Vec grad_theta(const Vec& theta, const Vec& gamma) const = 0;
    virtual Vec grad_gamma(const Vec& theta, const Vec& gamma) const = 0;

    /// Whether γ lies in Γ, the set where eval is defined for every θ.
    virtual bool admissible(const Vec& gamma) const { (void)gamma; return true; }
    virtual ParamBox default_box() const = 0;
};

using ModelPtr = std::shared_ptr<const MomentModel>;

/// Hansen-Jagannathan set: θ = (μ, σ), γ = (S_vv, S_v1, S_11),
/// m = sqrt(S_vv μ² − 2 S_v1 μ + S_11) − σ.
class HjModel final : public MomentModel {
public:
    std::string name() const override { return "hj"; }
    std::size_t theta_dim() const override { return 2; }
    std::size_t gamma_dim() const override { return 3; }
    double eval(const Vec& theta, const Vec& gamma) const override;
    Vec grad_theta(const Vec& theta, const Vec& gamma) const override;
    Vec grad_gamma(const Vec& theta, const Vec& gamma) const override;
    bool admissible(const Vec& gamma) const override;
    ParamBox default_box() const override;

    /// σ_HJ(μ); throws ModelDomainError for non-admissible γ.
    static double frontier(double mu, const Vec& gamma);
};

/// Markowitz set (or its complement): θ = (μ, σ), same γ layout as HjModel,
/// σ_M²(μ) = (S_11 μ² − 2 S_v1 μ + S_vv) / (S_vv S_11 − S_v1²).
class MarkowitzModel final : public MomentModel {
public:
    explicit MarkowitzModel(bool complement = false) : complement_(complement) {}

    std::string name() const override { return complement_ ? "markowitz_complement" : "markowitz"; }
    std::size_t theta_dim() const override { return 2; }
    std::size_t gamma_dim() const override { return 3; }
    double eval(const Vec& theta, const Vec& gamma) const override;
    Vec grad_theta(const Vec& theta, const Vec& gamma) const override;
    Vec grad_gamma(const Vec& theta, const Vec& gamma) const override;
    bool admissible(const Vec& gamma) const override;
    ParamBox default_box() const override;

    bool complement() const noexcept { return complement_; }
    static double frontier(double mu, const Vec& gamma);

private:
    bool complement_;
};

/// Multi-factor efficient cone with k factors: θ = (μ*, β*_1..β*_k, σ),
/// γ = vec(A) for the (k+1)×(k+1) matrix A (symmetrized on input),
/// m = sqrt(δ*' A⁻¹ δ*) − σ with δ* = (μ*, β*).
class MultiFactorModel final : public MomentModel {
public:
    explicit MultiFactorModel(std::size_t factors);

    std::string name() const override { return "mf"; }
    std::size_t theta_dim() const override { return factors_ + 2; }
    std::size_t gamma_dim() const override { return (factors_ + 1) * (factors_ + 1); }
    double eval(const Vec& theta, const Vec& gamma) const override;
    /// Throws SingularGradientError at the cone apex δ* = 0.
    Vec grad_theta(const Vec& theta, const Vec& gamma) const override;
    Vec grad_gamma(const Vec& theta, const Vec& gamma) const override;
    bool admissible(const Vec& gamma) const override;
    ParamBox default_box() const override;

    std::size_t factors() const noexcept { return factors_; }

private:
    struct Factored {
        Eigen::LDLT<Mat> ldlt;
    };
    Factored factor(const Vec& gamma) const;

    std::size_t factors_;
};

/// Optimization-friction bound for one study: θ = (ε, δ), γ = ε°,
/// m = (ε − ε°)² (Δlog p)² / (8ε) − δ. The design scalar Δlog p is fixed.
class FrictionModel final : public MomentModel {
public:
    explicit FrictionModel(double dlogp);

    std::string name() const override { return "chetty"; }
    std::size_t theta_dim() const override { return 2; }
    std::size_t gamma_dim() const override { return 1; }
    /// Throws ModelDomainError for ε <= 0 (pole at zero).
    double eval(const Vec& theta, const Vec& gamma) const override;
    Vec grad_theta(const Vec& theta, const Vec& gamma) const override;
    Vec grad_gamma(const Vec& theta, const Vec& gamma) const override;
    ParamBox default_box() const override;

    double dlogp() const noexcept { return dlogp_; }
    /// δ_OF(ε, ε°, Δlog p).
    double distortion(double epsilon, double observed) const;

private:
    double dlogp_;
};

/// Σ_j softmax(λg)_j g_j, computed with the exponent shifted by max_j g_j.
double smooth_max(std::span<const double> g, double lambda);

/// Upper bound on max_j g_j − smooth_max(g, λ): W((J−1)/e)/λ.
double smooth_max_error_bound(std::size_t components, double lambda);

/// Smooth-max aggregate of J component models sharing θ. γ is the
/// concatenation of the component γ vectors in order.
class SmoothMaxModel final : public MomentModel {
public:
    SmoothMaxModel(std::vector<ModelPtr> components, double lambda);

    std::string name() const override { return "smooth_max"; }
    std::size_t theta_dim() const override { return components_.front()->theta_dim(); }
    std::size_t gamma_dim() const override { return offsets_.back(); }
    double eval(const Vec& theta, const Vec& gamma) const override;
    Vec grad_theta(const Vec& theta, const Vec& gamma) const override;
    Vec grad_gamma(const Vec& theta, const Vec& gamma) const override;
    bool admissible(const Vec& gamma) const override;
    ParamBox default_box() const override;

    double lambda() const noexcept { return lambda_; }
    std::size_t size() const noexcept { return components_.size(); }
    const std::vector<ModelPtr>& components() const noexcept { return components_; }
    /// Component values g_j(θ).
    std::vector<double> component_values(const Vec& theta, const Vec& gamma) const;
    double error_bound() const { return smooth_max_error_bound(components_.size(), lambda_); }

private:
    Vec slice(const Vec& gamma, std::size_t j) const;
    /// ∂m/∂g_j = w_j (1 + λ (g_j − m)).
    std::vector<double> sensitivities(const std::vector<double>& g) const;

    std::vector<ModelPtr> components_;
    std::vector<std::size_t> offsets_;
    double lambda_;
};

}  // namespace setinf::models

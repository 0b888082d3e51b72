#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "setinf/estimation.hpp"
#include "setinf/statistics.hpp"

namespace setinf::resampling {

using estimation::ReturnsPanel;
using estimation::SufficientStats;
using models::MomentModel;
using statistics::WeightSpec;

enum class Scheme { SimulateZ, NonparametricPanel, ParametricGaussian };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

struct ResampleConfig {
    Scheme scheme = Scheme::SimulateZ;
    std::size_t draws = 1000;
    std::uint64_t seed = 0;
    double alpha = 0.05;

    /// Throws ConfigError unless draws >= 200 and 0 < alpha < 1/2.
    void validate() const;
};

enum class StatisticKind { LR, Wald };

/// t̂(θ) with V*(θ) = t̂(θ)'Z*: Ω̂^{1/2}∇γm/ŝ for LR and
/// Ω̂^{1/2}∇γm/(‖∇θm‖ŵ) for Wald.
Vec t_hat(const MomentModel& model, const SufficientStats& stats, const WeightSpec& weights,
          const Vec& theta, StatisticKind kind);

/// Rows t̂(θ)' for the members of `boundary`, in member order. Rows where
/// ∇θ m vanishes are zero.
Mat t_hat_matrix(const MomentModel& model, const SufficientStats& stats,
                 const WeightSpec& weights, const DiscreteSet& boundary, StatisticKind kind);

/// Sorted draws of the sup statistic S*.
class CriticalValue {
public:
    explicit CriticalValue(std::vector<double> draws);

    /// Order statistic ⌈(1−α)B⌉ (1-based).
    double quantile(double alpha) const;
    const std::vector<double>& draws() const noexcept { return draws_; }

private:
    std::vector<double> draws_;
};

/// S*_b = max_rows [row · Z_b]²₊ (plain square when two_sided).
CriticalValue sup_from_z(const Mat& t, std::span<const Vec> z, bool two_sided);

/// Draws Z*_b ~ N(0, I_d) from derive_engine(seed, critical_simulate, b).
std::vector<Vec> simulate_z(std::size_t d, std::size_t draws, std::uint64_t seed);

CriticalValue critical_value_simulate(const MomentModel& model, const SufficientStats& stats,
                                      const DiscreteSet& boundary, const WeightSpec& weights,
                                      StatisticKind kind, const ResampleConfig& cfg,
                                      bool two_sided = false);

/// Z*_b = Ω̂^{−1/2}√n(γ̂*_b − γ̂) for given γ̂* draws.
std::vector<Vec> standardize_draws(const SufficientStats& stats, std::span<const Vec> gamma_draws);

/// Row-resamples the panel, recomputes γ̂* through `stat_map`, and proceeds
/// as critical_value_simulate with the hatted quantities held fixed.
CriticalValue critical_value_bootstrap(const ReturnsPanel& panel,
                                       const estimation::StatMap& stat_map,
                                       const MomentModel& model, const SufficientStats& stats,
                                       const DiscreteSet& boundary, const WeightSpec& weights,
                                       StatisticKind kind, const ResampleConfig& cfg,
                                       bool two_sided = false);

/// γ* ~ N(γ̂, Ω̂/n) drawn from derive_engine(seed, gamma_bootstrap, b).
std::vector<Vec> parametric_gamma_draws(const SufficientStats& stats, std::size_t draws,
                                        std::uint64_t seed);

CriticalValue critical_value_parametric(const MomentModel& model, const SufficientStats& stats,
                                        const DiscreteSet& boundary, const WeightSpec& weights,
                                        StatisticKind kind, const ResampleConfig& cfg,
                                        bool two_sided = false);

/// Independent ε*_j ~ N(ε̂_j, se_j²); se_j = 0 gives constant draws.
std::vector<Vec> parametric_studies_bootstrap(std::span<const std::pair<double, double>> estimates,
                                              std::size_t draws, std::uint64_t seed);

}  // namespace setinf::resampling

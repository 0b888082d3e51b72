#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "setinf/estimation.hpp"
#include "setinf/grid.hpp"
#include "setinf/models.hpp"

namespace setinf::statistics {

using estimation::SufficientStats;
using models::MomentModel;

enum class WeightKind { AndersonDarling, Unweighted, NegativePartSD, Custom };

/// Which deviations of m(θ, γ*) − m̂(θ) enter a bootstrap SD weight.
enum class Tail { Negative, Positive, Both };

/// Pointwise weight ŝ(θ) for the LR statistic.
struct WeightSpec {
    WeightKind kind = WeightKind::AndersonDarling;
    /// Lower bound applied to ŝ. Values <= 0 mean unresolved; see calibrate_floor.
    double floor = 0.0;
    /// ŝ(θ) before flooring, for NegativePartSD and Custom.
    std::function<double(const Vec&)> provider;

    static WeightSpec anderson_darling() { return {}; }
    static WeightSpec unweighted() { return {WeightKind::Unweighted, 1.0, {}}; }
    static WeightSpec custom(std::function<double(const Vec&)> fn) {
        return {WeightKind::Custom, 0.0, std::move(fn)};
    }
};

/// 1/sd of the negative part of a standard normal, so that the scaled SD of
/// the negative part of a N(0, s²) deviation recovers s.
double negative_part_scale();

/// Bootstrap SD weight: ŝ(θ) = √n · c · sd_b(tail(m(θ, γ*_b) − m(θ, γ̂))),
/// with c = negative_part_scale() for one-tailed choices and 1 for Both.
WeightSpec bootstrap_sd_weight(std::shared_ptr<const MomentModel> model, Vec gamma_hat,
                               std::vector<Vec> gamma_draws, double n, Tail tail = Tail::Negative);

/// ŝ(θ) floored at spec.floor. AndersonDarling gives ‖Ω̂^{1/2} ∇γ m‖.
double weight_s(const MomentModel& model, const SufficientStats& stats, const Vec& theta,
                const WeightSpec& spec);

/// Wald weight ŵ(θ) = ŝ(θ)/‖∇θ m(θ, γ̂)‖ floored at spec.floor; 1 for Unweighted.
double weight_w(const MomentModel& model, const SufficientStats& stats, const Vec& theta,
                const WeightSpec& spec);

/// Resolves an unset floor to max(1e-8 · median ŝ over the lattice, DBL_MIN).
WeightSpec calibrate_floor(const MomentModel& model, const SufficientStats& stats,
                           const ParamGrid& grid, WeightSpec spec);

/// [√n m(θ, γ̂)/ŝ]²₊, or the plain square when two_sided.
double lr_stat(const MomentModel& model, const SufficientStats& stats, const Vec& theta,
               const WeightSpec& spec, bool two_sided = false);

struct ProjectionOptions {
    double tolerance = 1e-10;
    std::size_t max_iterations = 100;
    std::size_t polish_steps = 20;
};

struct Projection {
    Vec point;
    double distance = 0.0;
    std::size_t iterations = 0;
};

/// Nearest point of {m(·, γ) <= 0} to θ: minimum-norm Newton steps onto the
/// surface, then Newton on the KKT system of min ‖p − θ‖² s.t. m(p) = 0.
/// Throws BoundaryEscapeError if an iterate leaves Θ^δ and ProjectionError
/// (with the iterate trace) on non-convergence.
Projection project_to_set(const MomentModel& model, const Vec& gamma, const Vec& theta,
                          const ParamBox& box, const ProjectionOptions& options = {});

/// (√n · d(θ, Θ̂₀)/ŵ(θ))².
double wald_stat(const MomentModel& model, const SufficientStats& stats, const Vec& theta,
                 const WeightSpec& spec, const ParamBox& box,
                 const ProjectionOptions& options = {});

/// Largest value over the set's members; `values` is indexed by lattice point.
double sup_stat(std::span<const double> values, const DiscreteSet& set);

}  // namespace setinf::statistics

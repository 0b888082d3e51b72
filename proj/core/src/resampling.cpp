#include "setinf/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "setinf/errors.hpp"
#include "setinf/parallel.hpp"

namespace setinf::resampling {

std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::SimulateZ: return "simulate";
        case Scheme::NonparametricPanel: return "bootstrap";
        case Scheme::ParametricGaussian: return "parametric";
    }
    return "simulate";
}

Scheme scheme_from_string(std::string_view s) {
    if (s == "simulate") return Scheme::SimulateZ;
    if (s == "bootstrap") return Scheme::NonparametricPanel;
    if (s == "parametric") return Scheme::ParametricGaussian;
    throw ConfigError({"unknown resampling scheme '" + std::string(s) +
                       "' (expected simulate, bootstrap, parametric)"});
}

void ResampleConfig::validate() const {
    std::vector<std::string> issues;
    if (draws < 200) issues.push_back("resampling.draws must be >= 200");
    if (!(alpha > 0.0 && alpha < 0.5)) issues.push_back("alpha must lie in (0, 0.5)");
    if (!issues.empty()) throw ConfigError(std::move(issues));
}

Vec t_hat(const MomentModel& model, const SufficientStats& stats, const WeightSpec& weights,
          const Vec& theta, StatisticKind kind) {
    const Vec num = stats.omega_sqrt * model.grad_gamma(theta, stats.gamma_hat);
    if (kind == StatisticKind::LR) return num / statistics::weight_s(model, stats, theta, weights);
    const double gnorm = model.grad_theta(theta, stats.gamma_hat).norm();
    if (!(gnorm > 0.0)) throw SingularGradientError("zero θ-gradient in Wald t̂");
    return num / (gnorm * statistics::weight_w(model, stats, theta, weights));
}

Mat t_hat_matrix(const MomentModel& model, const SufficientStats& stats,
                 const WeightSpec& weights, const DiscreteSet& boundary, StatisticKind kind) {
    Mat t(static_cast<Eigen::Index>(boundary.size()), stats.gamma_hat.size());
    parallel::for_each_index(boundary.size(), [&](std::size_t k) {
        try {
            t.row(static_cast<Eigen::Index>(k)) =
                t_hat(model, stats, weights, boundary.point(k), kind).transpose();
        } catch (const SingularGradientError&) {
            t.row(static_cast<Eigen::Index>(k)).setZero();
        }
    });
    return t;
}

CriticalValue::CriticalValue(std::vector<double> draws) : draws_(std::move(draws)) {
    if (draws_.empty()) throw InputError("critical value needs at least one draw");
    std::sort(draws_.begin(), draws_.end());
}

double CriticalValue::quantile(double alpha) const {
    const double b = static_cast<double>(draws_.size());
    auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * b - 1e-9));
    k = std::clamp<std::size_t>(k, 1, draws_.size());
    return draws_[k - 1];
}

CriticalValue sup_from_z(const Mat& t, std::span<const Vec> z, bool two_sided) {
    std::vector<double> s(z.size(), 0.0);
    parallel::for_each_index(z.size(), [&](std::size_t b) {
        const Vec v = t * z[b];
        double best = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double x = two_sided ? v[i] : std::max(v[i], 0.0);
            best = std::max(best, x * x);
        }
        s[b] = best;
    });
    return CriticalValue(std::move(s));
}

std::vector<Vec> simulate_z(std::size_t d, std::size_t draws, std::uint64_t seed) {
    std::vector<Vec> z(draws);
    parallel::for_each_index(draws, [&](std::size_t b) {
        Engine engine = derive_engine(seed, streams::critical_simulate, b);
        std::normal_distribution<double> normal;
        Vec v(static_cast<Eigen::Index>(d));
        for (auto& x : v) x = normal(engine);
        z[b] = std::move(v);
    });
    return z;
}

CriticalValue critical_value_simulate(const MomentModel& model, const SufficientStats& stats,
                                      const DiscreteSet& boundary, const WeightSpec& weights,
                                      StatisticKind kind, const ResampleConfig& cfg,
                                      bool two_sided) {
    if (boundary.empty()) throw EmptyBoundaryError("critical value over an empty boundary");
    const Mat t = t_hat_matrix(model, stats, weights, boundary, kind);
    const auto z = simulate_z(static_cast<std::size_t>(stats.gamma_hat.size()), cfg.draws, cfg.seed);
    return sup_from_z(t, z, two_sided);
}

std::vector<Vec> standardize_draws(const SufficientStats& stats, std::span<const Vec> gamma_draws) {
    std::vector<Vec> z(gamma_draws.size());
    const double root_n = std::sqrt(stats.n);
    for (std::size_t b = 0; b < z.size(); ++b)
        z[b] = stats.omega_inv_sqrt * (root_n * (gamma_draws[b] - stats.gamma_hat));
    return z;
}

CriticalValue critical_value_bootstrap(const ReturnsPanel& panel,
                                       const estimation::StatMap& stat_map,
                                       const MomentModel& model, const SufficientStats& stats,
                                       const DiscreteSet& boundary, const WeightSpec& weights,
                                       StatisticKind kind, const ResampleConfig& cfg,
                                       bool two_sided) {
    if (boundary.empty()) throw EmptyBoundaryError("critical value over an empty boundary");
    const Mat t = t_hat_matrix(model, stats, weights, boundary, kind);
    const auto gammas = estimation::bootstrap_statistics(panel, stat_map, cfg.draws, cfg.seed,
                                                         streams::critical_bootstrap);
    return sup_from_z(t, standardize_draws(stats, gammas), two_sided);
}

std::vector<Vec> parametric_gamma_draws(const SufficientStats& stats, std::size_t draws,
                                        std::uint64_t seed) {
    const auto d = stats.gamma_hat.size();
    const Mat scale = stats.omega_sqrt / std::sqrt(stats.n);
    std::vector<Vec> out(draws);
    parallel::for_each_index(draws, [&](std::size_t b) {
        Engine engine = derive_engine(seed, streams::gamma_bootstrap, b);
        std::normal_distribution<double> normal;
        Vec z(d);
        for (auto& x : z) x = normal(engine);
        out[b] = stats.gamma_hat + scale * z;
    });
    return out;
}

CriticalValue critical_value_parametric(const MomentModel& model, const SufficientStats& stats,
                                        const DiscreteSet& boundary, const WeightSpec& weights,
                                        StatisticKind kind, const ResampleConfig& cfg,
                                        bool two_sided) {
    if (boundary.empty()) throw EmptyBoundaryError("critical value over an empty boundary");
    const Mat t = t_hat_matrix(model, stats, weights, boundary, kind);
    const auto gammas = parametric_gamma_draws(stats, cfg.draws, cfg.seed);
    return sup_from_z(t, standardize_draws(stats, gammas), two_sided);
}

std::vector<Vec> parametric_studies_bootstrap(std::span<const std::pair<double, double>> estimates,
                                              std::size_t draws, std::uint64_t seed) {
    for (const auto& [est, se] : estimates)
        if (!(se >= 0.0) || !std::isfinite(est))
            throw InputError("study estimates need finite values and se >= 0");
    const auto j = static_cast<Eigen::Index>(estimates.size());
    std::vector<Vec> out(draws);
    parallel::for_each_index(draws, [&](std::size_t b) {
        Engine engine = derive_engine(seed, streams::parametric_studies, b);
        std::normal_distribution<double> normal;
        Vec v(j);
        for (Eigen::Index k = 0; k < j; ++k)
            v[k] = estimates[static_cast<std::size_t>(k)].first +
                   estimates[static_cast<std::size_t>(k)].second * normal(engine);
        out[b] = std::move(v);
    });
    return out;
}

}  // namespace setinf::resampling

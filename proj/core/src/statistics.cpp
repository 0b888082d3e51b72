#include "setinf/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "setinf/errors.hpp"
#include "setinf/parallel.hpp"

namespace setinf::statistics {

double negative_part_scale() {
    return 1.0 / std::sqrt(0.5 - 0.5 / std::numbers::pi);
}

WeightSpec bootstrap_sd_weight(std::shared_ptr<const MomentModel> model, Vec gamma_hat,
                               std::vector<Vec> gamma_draws, double n, Tail tail) {
    if (gamma_draws.size() < 2) throw InputError("bootstrap SD weight needs at least 2 draws");
    const double scale = std::sqrt(n) * (tail == Tail::Both ? 1.0 : negative_part_scale());
    WeightSpec spec;
    spec.kind = WeightKind::NegativePartSD;
    spec.provider = [model = std::move(model), gamma = std::move(gamma_hat),
                     draws = std::move(gamma_draws), scale, tail](const Vec& theta) {
        const double centre = model->eval(theta, gamma);
        double sum = 0.0, sum2 = 0.0;
        for (const Vec& g : draws) {
            double d = model->eval(theta, g) - centre;
            if (tail == Tail::Negative) d = std::min(d, 0.0);
            if (tail == Tail::Positive) d = std::max(d, 0.0);
            sum += d;
            sum2 += d * d;
        }
        const double b = static_cast<double>(draws.size());
        const double var = std::max(0.0, (sum2 - sum * sum / b) / (b - 1.0));
        return scale * std::sqrt(var);
    };
    return spec;
}

namespace {

double raw_weight(const MomentModel& model, const SufficientStats& stats, const Vec& theta,
                  const WeightSpec& spec) {
    switch (spec.kind) {
        case WeightKind::Unweighted:
            return 1.0;
        case WeightKind::AndersonDarling:
            return (stats.omega_sqrt * model.grad_gamma(theta, stats.gamma_hat)).norm();
        case WeightKind::NegativePartSD:
        case WeightKind::Custom:
            if (!spec.provider) throw InputError("weight spec has no provider");
            return spec.provider(theta);
    }
    return 1.0;
}

}  // namespace

double weight_s(const MomentModel& model, const SufficientStats& stats, const Vec& theta,
                const WeightSpec& spec) {
    if (spec.kind == WeightKind::Unweighted) return 1.0;
    const double floor = spec.floor > 0.0 ? spec.floor : std::numeric_limits<double>::min();
    const double s = raw_weight(model, stats, theta, spec);
    return std::isfinite(s) ? std::max(s, floor) : s;
}

double weight_w(const MomentModel& model, const SufficientStats& stats, const Vec& theta,
                const WeightSpec& spec) {
    if (spec.kind == WeightKind::Unweighted) return 1.0;
    const double gnorm = model.grad_theta(theta, stats.gamma_hat).norm();
    if (!(gnorm > 0.0)) throw SingularGradientError("zero θ-gradient in Wald weight");
    const double floor = spec.floor > 0.0 ? spec.floor : std::numeric_limits<double>::min();
    return std::max(weight_s(model, stats, theta, spec) / gnorm, floor);
}

WeightSpec calibrate_floor(const MomentModel& model, const SufficientStats& stats,
                           const ParamGrid& grid, WeightSpec spec) {
    if (spec.kind == WeightKind::Unweighted || spec.floor > 0.0) return spec;
    std::vector<double> s(grid.size(), std::numeric_limits<double>::quiet_NaN());
    parallel::for_each_index(grid.size(), [&](std::size_t i) {
        try {
            s[i] = raw_weight(model, stats, grid.point(i), spec);
        } catch (const InversionError&) {
        }
    });
    std::erase_if(s, [](double v) { return !std::isfinite(v); });
    double median = 0.0;
    if (!s.empty()) {
        auto mid = s.begin() + static_cast<std::ptrdiff_t>(s.size() / 2);
        std::nth_element(s.begin(), mid, s.end());
        median = *mid;
    }
    spec.floor = std::max(1e-8 * median, std::numeric_limits<double>::min());
    return spec;
}

double lr_stat(const MomentModel& model, const SufficientStats& stats, const Vec& theta,
               const WeightSpec& spec, bool two_sided) {
    const double m = model.eval(theta, stats.gamma_hat);
    const double t = std::sqrt(stats.n) * m / weight_s(model, stats, theta, spec);
    if (two_sided) return t * t;
    return t > 0.0 ? t * t : 0.0;
}

namespace {

std::vector<double> to_row(const Vec& v) { return {v.data(), v.data() + v.size()}; }

/// Central differences of the analytic gradient, symmetrized.
Mat hessian(const MomentModel& model, const Vec& p, const Vec& gamma) {
    const auto d = p.size();
    Mat h(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double step = 1e-6 * (1.0 + std::abs(p[j]));
        Vec up = p, dn = p;
        up[j] += step;
        dn[j] -= step;
        h.col(j) = (model.grad_theta(up, gamma) - model.grad_theta(dn, gamma)) / (2.0 * step);
    }
    return 0.5 * (h + h.transpose());
}

}  // namespace

Projection project_to_set(const MomentModel& model, const Vec& gamma, const Vec& theta,
                          const ParamBox& box, const ProjectionOptions& options) {
    if (model.eval(theta, gamma) <= 0.0) return {theta, 0.0, 0};

    std::vector<std::vector<double>> trace{to_row(theta)};
    Vec p = theta;
    std::size_t it = 0;
    bool on_surface = false;
    for (; it < options.max_iterations; ++it) {
        const double mv = model.eval(p, gamma);
        if (std::abs(mv) <= options.tolerance) {
            on_surface = true;
            break;
        }
        const Vec g = model.grad_theta(p, gamma);
        const double gn2 = g.squaredNorm();
        if (!(gn2 > 0.0)) throw SingularGradientError("zero θ-gradient during projection");
        p -= (mv / gn2) * g;
        trace.push_back(to_row(p));
        if (!box.in_expansion(p)) throw BoundaryEscapeError("projection left the expanded box");
    }
    if (!on_surface)
        throw ProjectionError("projection did not reach the surface within " +
                                  std::to_string(options.max_iterations) + " iterations",
                              std::move(trace));

    // KKT: p − θ + λ∇m(p) = 0, m(p) = 0.
    const auto d = p.size();
    Vec g = model.grad_theta(p, gamma);
    double lambda = (theta - p).dot(g) / g.squaredNorm();
    auto residual = [&](const Vec& q, double lam, const Vec& gq) {
        Vec r(d + 1);
        r.head(d) = q - theta + lam * gq;
        r[d] = model.eval(q, gamma);
        return r;
    };
    Vec r = residual(p, lambda, g);
    for (std::size_t k = 0; k < options.polish_steps && r.norm() > 1e-14 * (1.0 + p.norm()); ++k) {
        Mat j = Mat::Zero(d + 1, d + 1);
        j.topLeftCorner(d, d) = Mat::Identity(d, d) + lambda * hessian(model, p, gamma);
        j.topRightCorner(d, 1) = g;
        j.bottomLeftCorner(1, d) = g.transpose();
        const Vec step = j.fullPivLu().solve(-r);
        if (!step.allFinite()) break;
        const Vec q = p + step.head(d);
        if (!box.in_expansion(q)) break;
        const Vec gq = model.grad_theta(q, gamma);
        const Vec rq = residual(q, lambda + step[d], gq);
        if (!(rq.norm() < r.norm())) break;
        p = q;
        g = gq;
        lambda += step[d];
        r = rq;
        ++it;
    }
    return {p, (p - theta).norm(), it};
}

double wald_stat(const MomentModel& model, const SufficientStats& stats, const Vec& theta,
                 const WeightSpec& spec, const ParamBox& box, const ProjectionOptions& options) {
    const Projection proj = project_to_set(model, stats.gamma_hat, theta, box, options);
    if (proj.distance == 0.0) return 0.0;
    const double t = std::sqrt(stats.n) * proj.distance / weight_w(model, stats, theta, spec);
    return t * t;
}

double sup_stat(std::span<const double> values, const DiscreteSet& set) {
    if (set.empty()) throw EmptySetError("sup over an empty set");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i : set.members()) best = std::max(best, values[i]);
    return best;
}

}  // namespace setinf::statistics

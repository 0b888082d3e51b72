#include "setinf/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "setinf/errors.hpp"
#include "setinf/parallel.hpp"
#include "setinf/special.hpp"

namespace setinf::projection {

double GammaEllipsoid::quadratic_form(const Vec& gamma) const {
    const Vec d = gamma - center;
    return n * d.dot(shape_inv * d);
}

Vec GammaEllipsoid::from_unit(const Vec& u) const {
    return center + shape_sqrt * u * std::sqrt(radius2 / n);
}

std::string_view to_string(Calibration c) {
    return c == Calibration::ChiSquare ? "chi_square" : "bootstrap";
}

Calibration calibration_from_string(std::string_view s) {
    if (s == "chi_square") return Calibration::ChiSquare;
    if (s == "bootstrap") return Calibration::Bootstrap;
    throw ConfigError({"unknown projection calibration '" + std::string(s) +
                       "' (expected chi_square, bootstrap)"});
}

GammaEllipsoid gamma_region(const estimation::SufficientStats& stats, double alpha,
                            Calibration calibration, std::span<const Vec> gamma_draws) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
    GammaEllipsoid e;
    e.center = stats.gamma_hat;
    e.n = stats.n;
    e.level = 1.0 - alpha;
    const auto d = stats.gamma_hat.size();
    Mat omega = 0.5 * (stats.omega_hat + stats.omega_hat.transpose());
    const double trace = omega.trace();
    if (!(trace > 0.0)) throw SingularCovarianceError("Ω̂ is zero; no γ-ellipsoid", INFINITY);
    Eigen::SelfAdjointEigenSolver<Mat> eig(omega);
    if (eig.eigenvalues().minCoeff() <= 1e-12 * eig.eigenvalues().maxCoeff()) {
        omega += 1e-10 * trace * Mat::Identity(d, d);
        e.ridged = true;
        eig.compute(omega);
        if (eig.eigenvalues().minCoeff() <= 0.0)
            throw SingularCovarianceError("Ω̂ is singular beyond the ridge", INFINITY);
    }
    const Vec ev = eig.eigenvalues();
    const Mat& q = eig.eigenvectors();
    e.shape = omega;
    e.shape_sqrt = q * ev.cwiseSqrt().asDiagonal() * q.transpose();
    e.shape_inv = q * ev.cwiseInverse().asDiagonal() * q.transpose();

    if (calibration == Calibration::ChiSquare) {
        e.radius2 = chi_square_quantile(static_cast<double>(d), 1.0 - alpha);
    } else {
        if (gamma_draws.empty()) throw InputError("bootstrap calibration needs γ̂* draws");
        std::vector<double> forms(gamma_draws.size());
        for (std::size_t b = 0; b < forms.size(); ++b) forms[b] = e.quadratic_form(gamma_draws[b]);
        std::sort(forms.begin(), forms.end());
        auto k = static_cast<std::size_t>(
            std::ceil((1.0 - alpha) * static_cast<double>(forms.size()) - 1e-9));
        k = std::clamp<std::size_t>(k, 1, forms.size());
        e.radius2 = forms[k - 1];
    }
    return e;
}

namespace {

Vec project_ball(Vec u) {
    const double norm = u.norm();
    if (norm > 1.0) u /= norm;
    return u;
}

struct Objective {
    const models::MomentModel& model;
    const GammaEllipsoid& e;
    const Vec& theta;
    double scale;  ///< sqrt(radius2/n)

    double value(const Vec& u) const {
        const Vec g = e.from_unit(u);
        if (!model.admissible(g)) return std::numeric_limits<double>::infinity();
        return model.eval(theta, g);
    }
    Vec grad(const Vec& u) const {
        return scale * (e.shape_sqrt * model.grad_gamma(theta, e.from_unit(u)));
    }
};

EllipsoidMinimum descend(const Objective& f, Vec u, const MinimizeOptions& options) {
    double fu = f.value(u);
    if (!std::isfinite(fu)) return {fu, f.e.from_unit(u), false};
    double step = 1.0;
    bool converged = false;
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        const Vec g = f.grad(u);
        const Vec gap = u - project_ball(u - g);
        if (gap.norm() <= options.tolerance * (1.0 + g.norm())) {
            converged = true;
            break;
        }
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            const Vec v = project_ball(u - step * g);
            const double fv = f.value(v);
            const double decrease = (u - v).squaredNorm() / step;
            if (fv <= fu - 1e-4 * decrease) {
                const double change = fu - fv;
                u = v;
                fu = fv;
                accepted = true;
                if (change <= options.tolerance * (1.0 + std::abs(fu)) &&
                    (u - project_ball(u - f.grad(u))).norm() <= 1e-6 * (1.0 + g.norm()))
                    converged = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No representable decrease: first-order stationary to machine precision.
            converged = true;
            break;
        }
        if (converged) break;
        step = std::min(step * 2.0, 1e12);
    }
    return {fu, f.e.from_unit(u), converged};
}

}  // namespace

EllipsoidMinimum minimize_over_ellipsoid(const models::MomentModel& model,
                                         const GammaEllipsoid& ellipsoid, const Vec& theta,
                                         const MinimizeOptions& options) {
    const auto d = ellipsoid.center.size();
    const Objective f{model, ellipsoid, theta, std::sqrt(ellipsoid.radius2 / ellipsoid.n)};
    if (ellipsoid.radius2 <= 0.0) return {f.value(Vec::Zero(d)), ellipsoid.center, true};

    std::vector<Vec> starts;
    starts.push_back(Vec::Zero(d));
    const Vec g0 = ellipsoid.shape_sqrt * model.grad_gamma(theta, ellipsoid.center);
    if (g0.norm() > 0.0) starts.push_back(-g0 / g0.norm());
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(d, 3); ++k) {
        Vec e = Vec::Zero(d);
        e[k] = 1.0;
        starts.push_back(e);
        starts.push_back(-e);
    }

    EllipsoidMinimum best{std::numeric_limits<double>::infinity(), ellipsoid.center, false};
    for (const Vec& s : starts) {
        const EllipsoidMinimum r = descend(f, s, options);
        if (r.value < best.value || (r.value == best.value && r.converged && !best.converged))
            best = r;
    }
    return best;
}

ConfidenceRegion projected_region(const models::MomentModel& model,
                                  const GammaEllipsoid& ellipsoid, const GridPtr& grid,
                                  const MinimizeOptions& options) {
    const std::size_t size = grid->size();
    std::vector<double> minima(size);
    std::vector<std::uint8_t> flagged(size, 0), mask(size, 0);
    parallel::for_each_index(size, [&](std::size_t i) {
        const Vec theta = grid->point(i);
        EllipsoidMinimum r;
        try {
            r = minimize_over_ellipsoid(model, ellipsoid, theta, options);
        } catch (const InversionError&) {
            r = {std::numeric_limits<double>::infinity(), ellipsoid.center, true};
        }
        minima[i] = r.value;
        if (r.value <= 0.0) {
            mask[i] = 1;
        } else if (!r.converged) {
            mask[i] = 1;
            flagged[i] = 1;
        }
    });
    ConfidenceRegion region{DiscreteSet::from_mask(grid, std::move(mask)), std::move(minima), 0.0,
                            ellipsoid.level, Method::Projection, std::move(flagged), 0};
    region.flag_count = static_cast<std::size_t>(
        std::count(region.flagged.begin(), region.flagged.end(), std::uint8_t{1}));
    return region;
}

}  // namespace setinf::projection

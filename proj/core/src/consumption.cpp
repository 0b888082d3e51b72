#include "setinf/consumption.hpp"

#include <cmath>
#include <string>

#include "setinf/errors.hpp"

namespace setinf::models {

SdfMoments consumption_sdf_curve(std::span<const double> growth, double beta, double rho) {
    if (growth.size() < 2) throw InputError("consumption_sdf: need at least two periods");
    if (!(beta > 0.0 && beta <= 1.0)) throw InputError("consumption_sdf: β must lie in (0, 1]");
    if (!(rho >= 0.0)) throw InputError("consumption_sdf: ρ must be >= 0");
    const double t = static_cast<double>(growth.size());
    std::vector<double> y(growth.size()), dy(growth.size());
    double mean_y = 0.0, mean_dy = 0.0;
    for (std::size_t i = 0; i < growth.size(); ++i) {
        if (!(growth[i] > 0.0)) throw InputError("consumption_sdf: growth must be > 0");
        const double lg = std::log(growth[i]);
        y[i] = std::exp(-rho * lg);
        dy[i] = -lg * y[i];
        mean_y += y[i];
        mean_dy += dy[i];
    }
    mean_y /= t;
    mean_dy /= t;
    double ss = 0.0, cross = 0.0, ss_dy = 0.0;
    for (std::size_t i = 0; i < growth.size(); ++i) {
        ss += (y[i] - mean_y) * (y[i] - mean_y);
        cross += (y[i] - mean_y) * (dy[i] - mean_dy);
        ss_dy += (dy[i] - mean_dy) * (dy[i] - mean_dy);
    }
    SdfMoments out;
    out.mean = beta * mean_y;
    out.sd = beta * std::sqrt(ss / (t - 1.0));
    out.dmean_drho = beta * mean_dy;
    // σ_C ≈ ρ β sd(log g) near ρ = 0, where the quotient form is 0/0
    out.dsd_drho = out.sd > 1e-300 ? beta * beta * cross / ((t - 1.0) * out.sd)
                                   : beta * std::sqrt(ss_dy / (t - 1.0));
    return out;
}

ConsumptionSdfModel::ConsumptionSdfModel(std::size_t periods, Options options)
    : periods_(periods), options_(options) {
    if (periods_ < 2) throw InputError("consumption_sdf: need at least two periods");
    if (!(options_.rho_max > 0.0)) throw InputError("consumption_sdf: rho_max must be > 0");
}

bool ConsumptionSdfModel::admissible(const Vec& gamma) const {
    if (static_cast<std::size_t>(gamma.size()) != periods_) return false;
    return (gamma.array() > 0.0).all();
}

double ConsumptionSdfModel::invert_sigma(double sigma, const Vec& growth) const {
    const std::span<const double> g(growth.data(), static_cast<std::size_t>(growth.size()));
    const double beta = options_.beta;
    if (sigma == 0.0) return 0.0;
    const double top = consumption_sdf_curve(g, beta, options_.rho_max).sd;
    if (!(sigma > 0.0) || sigma > top)
        throw InversionError("consumption_sdf: σ = " + std::to_string(sigma) +
                             " outside σ_C range [0, " + std::to_string(top) + "]");
    double lo = 0.0, hi = options_.rho_max;
    while (hi - lo > options_.tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (consumption_sdf_curve(g, beta, mid).sd < sigma) lo = mid;
        else hi = mid;
    }
    double rho = 0.5 * (lo + hi);
    for (int i = 0; i < 3; ++i) {
        const auto c = consumption_sdf_curve(g, beta, rho);
        if (!(c.dsd_drho > 0.0)) break;
        const double next = rho - (c.sd - sigma) / c.dsd_drho;
        if (!(next >= lo - options_.tolerance && next <= hi + options_.tolerance)) break;
        rho = next;
    }
    return rho;
}

double ConsumptionSdfModel::eval(const Vec& theta, const Vec& gamma) const {
    if (!admissible(gamma)) throw ModelDomainError("consumption_sdf: growth must be positive");
    const double rho = invert_sigma(theta[1], gamma);
    const std::span<const double> g(gamma.data(), periods_);
    return consumption_sdf_curve(g, options_.beta, rho).mean - theta[0];
}

Vec ConsumptionSdfModel::grad_theta(const Vec& theta, const Vec& gamma) const {
    if (!admissible(gamma)) throw ModelDomainError("consumption_sdf: growth must be positive");
    const double rho = invert_sigma(theta[1], gamma);
    const std::span<const double> g(gamma.data(), periods_);
    const auto c = consumption_sdf_curve(g, options_.beta, rho);
    Vec out(2);
    out << -1.0, c.dmean_drho / c.dsd_drho;
    return out;
}

Vec ConsumptionSdfModel::grad_gamma(const Vec& theta, const Vec& gamma) const {
    if (!admissible(gamma)) throw ModelDomainError("consumption_sdf: growth must be positive");
    const double rho = invert_sigma(theta[1], gamma);
    const std::span<const double> g(gamma.data(), periods_);
    const auto c = consumption_sdf_curve(g, options_.beta, rho);
    const double beta = options_.beta;
    const double t = static_cast<double>(periods_);
    Vec out = Vec::Zero(static_cast<Eigen::Index>(periods_));
    if (rho == 0.0 || !(c.sd > 0.0)) return out;
    double mean_y = 0.0;
    std::vector<double> y(periods_);
    for (std::size_t i = 0; i < periods_; ++i) {
        y[i] = std::exp(-rho * std::log(gamma[static_cast<Eigen::Index>(i)]));
        mean_y += y[i];
    }
    mean_y /= t;
    const double slope = c.dmean_drho / c.dsd_drho;
    for (std::size_t i = 0; i < periods_; ++i) {
        const double gi = gamma[static_cast<Eigen::Index>(i)];
        const double dy_dg = -rho * y[i] / gi;
        const double dmean = beta / t * dy_dg;
        const double dsd = beta * beta * (y[i] - mean_y) / ((t - 1.0) * c.sd) * dy_dg;
        // implicit ρ(σ; g): ∂ρ/∂g_i = −(∂σ_C/∂g_i) / σ_C'(ρ)
        out[static_cast<Eigen::Index>(i)] = dmean - slope * dsd;
    }
    return out;
}

ParamBox ConsumptionSdfModel::default_box() const {
    Vec lo(2), hi(2);
    lo << 0.8, 0.0;
    hi << 1.1, 3.0;
    return ParamBox(lo, hi, 0.05);
}

}  // namespace setinf::models

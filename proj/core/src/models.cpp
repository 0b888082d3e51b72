#include "setinf/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "setinf/errors.hpp"
#include "setinf/special.hpp"

namespace setinf::models {

namespace {

void check_sizes(const MomentModel& m, const Vec& theta, const Vec& gamma) {
    if (static_cast<std::size_t>(theta.size()) != m.theta_dim() ||
        static_cast<std::size_t>(gamma.size()) != m.gamma_dim())
        throw InputError(m.name() + ": θ/γ dimension mismatch");
}

Vec pair(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

// S_vv μ² − 2 S_v1 μ + S_11
double hj_quadratic(double mu, const Vec& g) { return g[0] * mu * mu - 2.0 * g[1] * mu + g[2]; }

}  // namespace

// ---------------------------------------------------------------- HJ

bool HjModel::admissible(const Vec& g) const {
    return g.size() == 3 && g[0] > 0.0 && g[0] * g[2] - g[1] * g[1] > 0.0;
}

double HjModel::frontier(double mu, const Vec& g) {
    if (!(g[0] > 0.0 && g[0] * g[2] - g[1] * g[1] > 0.0))
        throw ModelDomainError("hj: need S_vv > 0 and S_vv S_11 − S_v1² > 0");
    return std::sqrt(hj_quadratic(mu, g));
}

double HjModel::eval(const Vec& theta, const Vec& gamma) const {
    check_sizes(*this, theta, gamma);
    return frontier(theta[0], gamma) - theta[1];
}

Vec HjModel::grad_theta(const Vec& theta, const Vec& gamma) const {
    check_sizes(*this, theta, gamma);
    const double s = frontier(theta[0], gamma);
    Vec g(2);
    g << (gamma[0] * theta[0] - gamma[1]) / s, -1.0;
    return g;
}

Vec HjModel::grad_gamma(const Vec& theta, const Vec& gamma) const {
    check_sizes(*this, theta, gamma);
    const double mu = theta[0];
    const double s = frontier(mu, gamma);
    Vec g(3);
    g << mu * mu, -2.0 * mu, 1.0;
    return g / (2.0 * s);
}

ParamBox HjModel::default_box() const { return ParamBox(pair(0.8, 0.0), pair(1.1, 3.0), 0.05); }

// ---------------------------------------------------------- Markowitz

bool MarkowitzModel::admissible(const Vec& g) const {
    return g.size() == 3 && g[2] > 0.0 && g[0] * g[2] - g[1] * g[1] > 0.0;
}

double MarkowitzModel::frontier(double mu, const Vec& g) {
    const double det = g[0] * g[2] - g[1] * g[1];
    if (!(g[2] > 0.0 && det > 0.0))
        throw ModelDomainError("markowitz: need S_11 > 0 and S_vv S_11 − S_v1² > 0");
    return std::sqrt((g[2] * mu * mu - 2.0 * g[1] * mu + g[0]) / det);
}

double MarkowitzModel::eval(const Vec& theta, const Vec& gamma) const {
    check_sizes(*this, theta, gamma);
    const double v = frontier(theta[0], gamma) - theta[1];
    return complement_ ? -v : v;
}

Vec MarkowitzModel::grad_theta(const Vec& theta, const Vec& gamma) const {
    check_sizes(*this, theta, gamma);
    const double mu = theta[0];
    const double det = gamma[0] * gamma[2] - gamma[1] * gamma[1];
    const double s = frontier(mu, gamma);
    Vec g(2);
    g << (gamma[2] * mu - gamma[1]) / (det * s), -1.0;
    return complement_ ? Vec(-g) : g;
}

Vec MarkowitzModel::grad_gamma(const Vec& theta, const Vec& gamma) const {
    check_sizes(*this, theta, gamma);
    const double mu = theta[0];
    const double svv = gamma[0], sv1 = gamma[1], s11 = gamma[2];
    const double det = svv * s11 - sv1 * sv1;
    const double num = s11 * mu * mu - 2.0 * sv1 * mu + svv;
    const double s = frontier(mu, gamma);
    const double det2 = det * det;
    Vec df(3);
    df << (det - num * s11) / det2,
          (-2.0 * mu * det + 2.0 * sv1 * num) / det2,
          (mu * mu * det - num * svv) / det2;
    Vec g = df / (2.0 * s);
    return complement_ ? Vec(-g) : g;
}

ParamBox MarkowitzModel::default_box() const {
    return ParamBox(pair(0.0, 0.0), pair(0.2, 0.5), 0.01);
}

// -------------------------------------------------------- multi-factor

MultiFactorModel::MultiFactorModel(std::size_t factors) : factors_(factors) {}

MultiFactorModel::Factored MultiFactorModel::factor(const Vec& gamma) const {
    const auto m = static_cast<Eigen::Index>(factors_ + 1);
    const Mat raw = Eigen::Map<const Mat>(gamma.data(), m, m);
    const Mat a = 0.5 * (raw + raw.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(a, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(hi > 0.0) || !(lo > 1e-10 * hi))
        throw ModelDomainError("mf: D'ΣD is not positive definite (min/max eigenvalue " +
                               std::to_string(lo) + "/" + std::to_string(hi) + ")");
    return Factored{Eigen::LDLT<Mat>(a)};
}

bool MultiFactorModel::admissible(const Vec& gamma) const {
    if (static_cast<std::size_t>(gamma.size()) != gamma_dim()) return false;
    try {
        factor(gamma);
        return true;
    } catch (const ModelDomainError&) {
        return false;
    }
}

double MultiFactorModel::eval(const Vec& theta, const Vec& gamma) const {
    check_sizes(*this, theta, gamma);
    const auto m = static_cast<Eigen::Index>(factors_ + 1);
    const Vec target = theta.head(m);
    const auto f = factor(gamma);
    const double q = target.dot(f.ldlt.solve(target));
    return std::sqrt(std::max(q, 0.0)) - theta[m];
}

Vec MultiFactorModel::grad_theta(const Vec& theta, const Vec& gamma) const {
    check_sizes(*this, theta, gamma);
    const auto m = static_cast<Eigen::Index>(factors_ + 1);
    const Vec target = theta.head(m);
    const auto f = factor(gamma);
    const Vec u = f.ldlt.solve(target);
    const double root = std::sqrt(std::max(target.dot(u), 0.0));
    if (!(root > 0.0))
        throw SingularGradientError("mf: gradient undefined at the cone apex (μ*, β*) = 0");
    Vec g(m + 1);
    g.head(m) = u / root;
    g[m] = -1.0;
    return g;
}

Vec MultiFactorModel::grad_gamma(const Vec& theta, const Vec& gamma) const {
    check_sizes(*this, theta, gamma);
    const auto m = static_cast<Eigen::Index>(factors_ + 1);
    const Vec target = theta.head(m);
    const auto f = factor(gamma);
    const Vec u = f.ldlt.solve(target);
    const double root = std::sqrt(std::max(target.dot(u), 0.0));
    if (!(root > 0.0))
        throw SingularGradientError("mf: γ-gradient undefined at the cone apex");
    // ∂(δ'A⁻¹δ)/∂A = −A⁻¹δδ'A⁻¹, already symmetric
    const Mat dq = -(u * u.transpose());
    return Eigen::Map<const Vec>(dq.data(), m * m) / (2.0 * root);
}

ParamBox MultiFactorModel::default_box() const {
    const auto k = static_cast<Eigen::Index>(factors_);
    Vec lo(k + 2), hi(k + 2);
    lo[0] = 0.01;
    hi[0] = 0.2;
    for (Eigen::Index i = 1; i <= k; ++i) {
        lo[i] = -1.0;
        hi[i] = 1.0;
    }
    lo[k + 1] = 0.0;
    hi[k + 1] = 1.0;
    return ParamBox(lo, hi, 0.005);
}

// ------------------------------------------------------- friction (OF)

FrictionModel::FrictionModel(double dlogp) : dlogp_(dlogp) {
    if (!(dlogp != 0.0) || !std::isfinite(dlogp))
        throw InputError("chetty: Δlog p must be finite and nonzero");
}

double FrictionModel::distortion(double eps, double observed) const {
    if (!(eps > 0.0)) throw ModelDomainError("chetty: ε must be > 0 (pole at zero)");
    const double d = eps - observed;
    return d * d * dlogp_ * dlogp_ / (8.0 * eps);
}

double FrictionModel::eval(const Vec& theta, const Vec& gamma) const {
    check_sizes(*this, theta, gamma);
    return distortion(theta[0], gamma[0]) - theta[1];
}

Vec FrictionModel::grad_theta(const Vec& theta, const Vec& gamma) const {
    check_sizes(*this, theta, gamma);
    const double eps = theta[0], obs = gamma[0];
    if (!(eps > 0.0)) throw ModelDomainError("chetty: ε must be > 0 (pole at zero)");
    const double p2 = dlogp_ * dlogp_;
    Vec g(2);
    g << p2 * (eps * eps - obs * obs) / (8.0 * eps * eps), -1.0;
    return g;
}

Vec FrictionModel::grad_gamma(const Vec& theta, const Vec& gamma) const {
    check_sizes(*this, theta, gamma);
    const double eps = theta[0], obs = gamma[0];
    if (!(eps > 0.0)) throw ModelDomainError("chetty: ε must be > 0 (pole at zero)");
    Vec g(1);
    g << -(eps - obs) * dlogp_ * dlogp_ / (4.0 * eps);
    return g;
}

ParamBox FrictionModel::default_box() const {
    return ParamBox(pair(0.05, 0.0), pair(2.0, 0.05), 0.01);
}

// ---------------------------------------------------------- smooth max

double smooth_max(std::span<const double> g, double lambda) {
    if (g.empty()) throw InputError("smooth_max: need at least one component");
    if (!(lambda > 0.0)) throw InputError("smooth_max: λ must be > 0");
    const double top = *std::max_element(g.begin(), g.end());
    const double bottom = *std::min_element(g.begin(), g.end());
    double num = 0.0, den = 0.0;
    for (double gj : g) {
        const double w = std::exp(lambda * (gj - top));
        num += w * gj;
        den += w;
    }
    // The weighted mean lies in [min, max]; clamp away rounding.
    return std::clamp(num / den, bottom, top);
}

double smooth_max_error_bound(std::size_t components, double lambda) {
    if (components == 0) throw InputError("smooth_max: need at least one component");
    return lambert_w(static_cast<double>(components - 1) / std::numbers::e) / lambda;
}

SmoothMaxModel::SmoothMaxModel(std::vector<ModelPtr> components, double lambda)
    : components_(std::move(components)), lambda_(lambda) {
    if (components_.empty()) throw InputError("smooth_max: need at least one component");
    if (!(lambda_ > 0.0)) throw InputError("smooth_max: λ must be > 0");
    offsets_.push_back(0);
    for (const auto& c : components_) {
        if (c->theta_dim() != components_.front()->theta_dim())
            throw InputError("smooth_max: components must share θ");
        offsets_.push_back(offsets_.back() + c->gamma_dim());
    }
}

Vec SmoothMaxModel::slice(const Vec& gamma, std::size_t j) const {
    return gamma.segment(static_cast<Eigen::Index>(offsets_[j]),
                         static_cast<Eigen::Index>(offsets_[j + 1] - offsets_[j]));
}

std::vector<double> SmoothMaxModel::component_values(const Vec& theta, const Vec& gamma) const {
    check_sizes(*this, theta, gamma);
    std::vector<double> g(components_.size());
    for (std::size_t j = 0; j < components_.size(); ++j)
        g[j] = components_[j]->eval(theta, slice(gamma, j));
    return g;
}

std::vector<double> SmoothMaxModel::sensitivities(const std::vector<double>& g) const {
    const double top = *std::max_element(g.begin(), g.end());
    std::vector<double> w(g.size());
    double den = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        w[j] = std::exp(lambda_ * (g[j] - top));
        den += w[j];
    }
    double m = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        w[j] /= den;
        m += w[j] * g[j];
    }
    for (std::size_t j = 0; j < g.size(); ++j) w[j] *= 1.0 + lambda_ * (g[j] - m);
    return w;
}

double SmoothMaxModel::eval(const Vec& theta, const Vec& gamma) const {
    const auto g = component_values(theta, gamma);
    return smooth_max(g, lambda_);
}

Vec SmoothMaxModel::grad_theta(const Vec& theta, const Vec& gamma) const {
    const auto g = component_values(theta, gamma);
    const auto s = sensitivities(g);
    Vec out = Vec::Zero(static_cast<Eigen::Index>(theta_dim()));
    for (std::size_t j = 0; j < components_.size(); ++j)
        out += s[j] * components_[j]->grad_theta(theta, slice(gamma, j));
    return out;
}

Vec SmoothMaxModel::grad_gamma(const Vec& theta, const Vec& gamma) const {
    const auto g = component_values(theta, gamma);
    const auto s = sensitivities(g);
    Vec out(static_cast<Eigen::Index>(gamma_dim()));
    for (std::size_t j = 0; j < components_.size(); ++j)
        out.segment(static_cast<Eigen::Index>(offsets_[j]),
                    static_cast<Eigen::Index>(offsets_[j + 1] - offsets_[j])) =
            s[j] * components_[j]->grad_gamma(theta, slice(gamma, j));
    return out;
}

bool SmoothMaxModel::admissible(const Vec& gamma) const {
    if (static_cast<std::size_t>(gamma.size()) != gamma_dim()) return false;
    for (std::size_t j = 0; j < components_.size(); ++j)
        if (!components_[j]->admissible(slice(gamma, j))) return false;
    return true;
}

ParamBox SmoothMaxModel::default_box() const { return components_.front()->default_box(); }

}  // namespace setinf::models

#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "setinf/estimation.hpp"
#include "setinf/linalg.hpp"
#include "setinf/models.hpp"
#include "setinf/regions.hpp"

namespace setinf::testing {

/// Five-point central difference of f along each coordinate of x.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double rel_step = 1e-5) {
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = rel_step * std::max(1.0, std::abs(x[i]));
        auto at = [&](double t) {
            Vec y = x;
            y[i] += t;
            return f(y);
        };
        g[i] = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
    }
    return g;
}

inline Vec fd_grad_theta(const models::MomentModel& m, const Vec& theta, const Vec& gamma) {
    return fd_gradient([&](const Vec& t) { return m.eval(t, gamma); }, theta);
}

inline Vec fd_grad_gamma(const models::MomentModel& m, const Vec& theta, const Vec& gamma) {
    return fd_gradient([&](const Vec& g) { return m.eval(theta, g); }, gamma);
}

/// ‖a − b‖ / max(‖b‖, floor).
inline double rel_error(const Vec& a, const Vec& b, double floor = 1e-8) {
    return (a - b).norm() / std::max(b.norm(), floor);
}

inline Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double x : v) out[k++] = x;
    return out;
}

/// Canonical three-asset gross-return dgp used across tests.
inline Vec canonical_v() { return vec({1.08, 1.02, 1.05}); }

inline Mat canonical_sigma() {
    Mat s(3, 3);
    s << 0.04, 0.004, 0.01, 0.004, 0.0025, 0.002, 0.01, 0.002, 0.02;
    return s;
}

inline ParamBox canonical_box() { return ParamBox(vec({0.90, 0.1}), vec({1.06, 3.0}), 0.05); }

inline GridPtr canonical_grid(std::size_t points = 200) {
    return std::make_shared<const ParamGrid>(canonical_box(), points);
}

inline estimation::ReturnsPanel canonical_panel(std::size_t periods, std::uint64_t seed) {
    Engine engine = derive_engine(seed, streams::synth_panel, 0);
    return regions::GaussianReturnsDgp::simulate(canonical_v(), canonical_sigma(), periods, engine);
}

inline double uniform(Engine& e, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(e);
}

}  // namespace setinf::testing

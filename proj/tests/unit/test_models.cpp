#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "setinf/errors.hpp"
#include "setinf/models.hpp"
#include "setinf/special.hpp"
#include "test_support.hpp"

using namespace setinf;
using namespace setinf::models;
using setinf::testing::fd_grad_gamma;
using setinf::testing::fd_grad_theta;
using setinf::testing::rel_error;
using setinf::testing::uniform;
using setinf::testing::vec;

namespace {

Vec random_hj_gamma(Engine& e) {
    const double a = uniform(e, 0.5, 3.0), b = uniform(e, -1.0, 1.0), d = uniform(e, 0.1, 2.0);
    return vec({a, b, (b * b + d) / a});
}

Mat random_pd(Engine& e, Eigen::Index n) {
    Mat m(n, n);
    for (auto& x : m.reshaped()) x = uniform(e, -1, 1);
    return m * m.transpose() + 0.5 * Mat::Identity(n, n);
}

}  // namespace

TEST_CASE("HJ moment closed-form values") {
    const HjModel hj;
    CHECK(hj.eval(vec({0, 1}), vec({1, 0, 1})) == 0.0);
    CHECK(hj.eval(vec({0, 0}), vec({1, 0, 1})) == 1.0);
    CHECK(hj.grad_theta(vec({0, 0}), vec({1, 0, 1})) == vec({0, -1}));
    CHECK(hj.eval(vec({1, 0}), vec({2, 1, 1})) == doctest::Approx(1.0));
    CHECK_THROWS_AS(hj.eval(vec({0, 0}), vec({1, 1, 1})), ModelDomainError);
    CHECK_THROWS_AS(hj.eval(vec({0, 0}), vec({-1, 0, 1})), ModelDomainError);
}

TEST_CASE("HJ lower envelope") {
    Engine e(3);
    for (int k = 0; k < 1000; ++k) {
        const Vec g = random_hj_gamma(e);
        const double mu = uniform(e, -5, 5);
        CHECK(g[0] * mu * mu - 2 * g[1] * mu + g[2] >= (g[0] * g[2] - g[1] * g[1]) / g[0] - 1e-12);
    }
}

TEST_CASE("Markowitz moment and its complement") {
    const MarkowitzModel m, mc(true);
    CHECK(m.eval(vec({1, 1}), vec({2, 1, 1})) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(m.eval(vec({0, 2}), vec({1, 0, 1})) == doctest::Approx(-1.0));
    Engine e(4);
    for (int k = 0; k < 100; ++k) {
        const Vec g = random_hj_gamma(e);
        const Vec t = vec({uniform(e, -1, 1), uniform(e, 0, 3)});
        CHECK(m.eval(t, g) + mc.eval(t, g) == 0.0);
        CHECK(m.grad_theta(t, g) + mc.grad_theta(t, g) == Vec::Zero(2));
    }
    CHECK_THROWS_AS(m.eval(vec({0, 0}), vec({1, 1, 1})), ModelDomainError);
}

TEST_CASE("Multi-factor cone") {
    const MultiFactorModel mf(1);
    CHECK(mf.gamma_dim() == 4);
    CHECK(mf.eval(vec({1, 0, 1}), vec({1, 0, 0, 1})) == doctest::Approx(0.0));
    CHECK(mf.eval(vec({2, 0, 0}), vec({4, 0, 0, 1})) == doctest::Approx(1.0));
    CHECK(mf.eval(vec({0, 0, 0}), vec({1, 0, 0, 1})) == 0.0);
    CHECK_THROWS_AS(mf.grad_theta(vec({0, 0, 0}), vec({1, 0, 0, 1})), SingularGradientError);
    CHECK_THROWS_AS(mf.eval(vec({1, 0, 1}), vec({1, 1, 1, 1})), ModelDomainError);
    // asymmetric input is symmetrized
    CHECK(mf.eval(vec({1, 1, 0.5}), vec({2, 0.2, 0.6, 1})) == doctest::Approx(mf.eval(vec({1, 1, 0.5}), vec({2, 0.4, 0.4, 1}))));
}

TEST_CASE("Optimization-friction bound") {
    const FrictionModel of(1.0);
    CHECK(of.eval(vec({1, 0.3}), vec({1})) == doctest::Approx(-0.3));
    CHECK(of.eval(vec({2, 0}), vec({1})) == doctest::Approx(0.0625));
    CHECK(of.eval(vec({1e-9, 0}), vec({1})) > 1e7);
    CHECK_THROWS_AS(of.eval(vec({0, 0}), vec({1})), ModelDomainError);
    CHECK_THROWS_AS(FrictionModel(0.0), InputError);
}

TEST_CASE("smooth_max values and error bound") {
    CHECK(smooth_max(std::vector<double>{2.5, 2.5, 2.5}, 3.0) == doctest::Approx(2.5));
    CHECK(std::abs(smooth_max(std::vector<double>{0.0, -10.0}, 1.0) - (-4.5398e-4)) <= 1e-8);
    CHECK(smooth_max(std::vector<double>{-0.1, -2.0}, 50.0) <= 0.0);
    CHECK(smooth_max(std::vector<double>{1e300, 0.0}, 10.0) == doctest::Approx(1e300));
    CHECK(smooth_max_error_bound(1, 5.0) == 0.0);

    Engine e(9);
    for (int k = 0; k < 10000; ++k) {
        const std::size_t j = 1 + k % 10;
        const double lambda = uniform(e, 0.1, 100);
        std::vector<double> g(j);
        for (auto& x : g) x = uniform(e, -5, 5);
        const double mx = *std::max_element(g.begin(), g.end());
        const double mn = *std::min_element(g.begin(), g.end());
        const double s = smooth_max(g, lambda);
        CHECK(mx - s >= 0.0);
        CHECK(mx - s <= lambert_w((j - 1) / std::numbers::e) / lambda + 1e-12);
        CHECK(s >= mn - 1e-12);
        std::vector<double> shifted = g;
        for (auto& x : shifted) x += 3.7;
        CHECK(std::abs(smooth_max(shifted, lambda) - s - 3.7) <= 1e-12);
    }
}

TEST_CASE("smooth-max bound is attained at the extremal configuration") {
    // J−1 components at max − t, one at max, with t = (1 + W((J−1)/e))/λ.
    for (std::size_t j : {2u, 3u, 7u}) {
        const double lambda = 4.0;
        const double w = lambert_w((j - 1) / std::numbers::e);
        std::vector<double> g(j, -(1.0 + w) / lambda);
        g[0] = 0.0;
        CHECK(-smooth_max(g, lambda) == doctest::Approx(w / lambda).epsilon(1e-12));
    }
}

TEST_CASE("Analytic gradients match finite differences") {
    Engine e(21);
    const HjModel hj;
    const MarkowitzModel mk, mkc(true);
    for (int k = 0; k < 1000; ++k) {
        const Vec g = random_hj_gamma(e);
        const Vec t = vec({uniform(e, -1, 1), uniform(e, 0, 3)});
        for (const MomentModel* m : {static_cast<const MomentModel*>(&hj), static_cast<const MomentModel*>(&mk),
                                     static_cast<const MomentModel*>(&mkc)}) {
            CHECK(rel_error(m->grad_theta(t, g), fd_grad_theta(*m, t, g)) <= 1e-6);
            CHECK(rel_error(m->grad_gamma(t, g), fd_grad_gamma(*m, t, g)) <= 1e-6);
        }
    }
    for (int k = 0; k < 1000; ++k) {
        const std::size_t f = 1 + k % 2;
        const MultiFactorModel mf(f);
        const Mat a = random_pd(e, static_cast<Eigen::Index>(f + 1));
        const Vec g = Eigen::Map<const Vec>(a.data(), a.size());
        Vec t(static_cast<Eigen::Index>(f + 2));
        for (Eigen::Index i = 0; i + 1 < t.size(); ++i) t[i] = uniform(e, 0.1, 1.0) * (uniform(e, 0, 1) < 0.5 ? -1 : 1);
        t[t.size() - 1] = uniform(e, 0, 2);
        CHECK(rel_error(mf.grad_theta(t, g), fd_grad_theta(mf, t, g)) <= 1e-6);
        CHECK(rel_error(mf.grad_gamma(t, g), fd_grad_gamma(mf, t, g)) <= 1e-6);
    }
    for (int k = 0; k < 1000; ++k) {
        const FrictionModel of(uniform(e, 0.2, 2.0));
        const Vec t = vec({uniform(e, 0.1, 2.0), uniform(e, 0.0, 0.1)});
        const Vec g = vec({uniform(e, 0.1, 2.0)});
        CHECK(rel_error(of.grad_theta(t, g), fd_grad_theta(of, t, g)) <= 1e-6);
        CHECK(rel_error(of.grad_gamma(t, g), fd_grad_gamma(of, t, g), 1e-6) <= 1e-6);
    }
    for (int k = 0; k < 1000; ++k) {
        const std::size_t j = 1 + k % 4;
        std::vector<ModelPtr> parts;
        Vec g(static_cast<Eigen::Index>(j));
        for (std::size_t i = 0; i < j; ++i) {
            parts.push_back(std::make_shared<FrictionModel>(uniform(e, 0.2, 2.0)));
            g[static_cast<Eigen::Index>(i)] = uniform(e, 0.1, 2.0);
        }
        const SmoothMaxModel sm(parts, uniform(e, 1.0, 100.0));
        const Vec t = vec({uniform(e, 0.1, 2.0), uniform(e, 0.0, 0.1)});
        CHECK(rel_error(sm.grad_theta(t, g), fd_grad_theta(sm, t, g)) <= 1e-6);
        CHECK(rel_error(sm.grad_gamma(t, g), fd_grad_gamma(sm, t, g), 1e-6) <= 1e-6);
    }
}

TEST_CASE("SmoothMaxModel stacks component γ and bounds the max") {
    std::vector<ModelPtr> parts{std::make_shared<FrictionModel>(0.5), std::make_shared<FrictionModel>(0.5),
                                std::make_shared<FrictionModel>(0.5)};
    const SmoothMaxModel sm(parts, 200.0);
    CHECK(sm.gamma_dim() == 3);
    CHECK(sm.error_bound() == doctest::Approx(lambert_w(2.0 / std::numbers::e) / 200.0));
    const Vec g = vec({0.2, 0.5, 0.8});
    Engine e(5);
    for (int k = 0; k < 200; ++k) {
        const Vec t = vec({uniform(e, 0.05, 2.0), uniform(e, 0.0, 0.05)});
        const auto parts_v = sm.component_values(t, g);
        const double mx = *std::max_element(parts_v.begin(), parts_v.end());
        CHECK(sm.eval(t, g) <= mx + 1e-15);
        CHECK(mx - sm.eval(t, g) <= sm.error_bound() + 1e-12);
    }
    CHECK_THROWS_AS(SmoothMaxModel({}, 1.0), InputError);
    CHECK_THROWS_AS(SmoothMaxModel(parts, 0.0), InputError);
}

TEST_CASE("θ-gradients are nonzero on default boxes") {
    Engine e(8);
    const HjModel hj;
    const MultiFactorModel mf(1);
    const FrictionModel of(0.5);
    for (int k = 0; k < 200; ++k) {
        const Vec g = random_hj_gamma(e);
        const ParamBox b = hj.default_box();
        const Vec t = vec({uniform(e, b.lower()[0], b.upper()[0]), uniform(e, b.lower()[1], b.upper()[1])});
        CHECK(hj.grad_theta(t, g).norm() > 0.0);
        const ParamBox bm = mf.default_box();
        Vec tm(3);
        for (Eigen::Index i = 0; i < 3; ++i) tm[i] = uniform(e, bm.lower()[i], bm.upper()[i]);
        CHECK(mf.grad_theta(tm, vec({1, 0.1, 0.1, 1})).norm() > 0.0);
        const ParamBox bo = of.default_box();
        CHECK(of.grad_theta(vec({uniform(e, bo.lower()[0], bo.upper()[0]), 0.01}), vec({0.5})).norm() > 0.0);
    }
}

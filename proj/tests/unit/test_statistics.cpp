#include <doctest.h>

#include <cmath>
#include <random>

#include "setinf/errors.hpp"
#include "setinf/regions.hpp"
#include "setinf/statistics.hpp"
#include "test_support.hpp"

using namespace setinf;
using namespace setinf::statistics;
using setinf::testing::uniform;
using setinf::testing::vec;

namespace {

const models::HjModel hj;

SufficientStats unit_stats(double n = 100.0) {
    return estimation::make_stats(vec({1, 0, 1}), Mat::Identity(3, 3), n, "hj");
}

/// Distance from (μ0, σ0) to the curve σ = sqrt(μ² + 1): dense scan, then ternary refinement.
double curve_distance(double mu0, double s0) {
    auto d2 = [&](double mu) {
        const double s = std::sqrt(mu * mu + 1.0) - s0;
        return (mu - mu0) * (mu - mu0) + s * s;
    };
    double best = mu0;
    for (int k = -100000; k <= 100000; ++k) {
        const double mu = mu0 + 3e-5 * k;
        if (d2(mu) < d2(best)) best = mu;
    }
    double lo = best - 3e-5, hi = best + 3e-5;
    for (int k = 0; k < 200; ++k) {
        const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
        if (d2(a) < d2(b)) hi = b;
        else lo = a;
    }
    return std::sqrt(d2(0.5 * (lo + hi)));
}

}  // namespace

TEST_CASE("Anderson-Darling weight") {
    const auto stats = unit_stats();
    const WeightSpec ad = WeightSpec::anderson_darling();
    CHECK(weight_s(hj, stats, vec({0, 1}), ad) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(weight_w(hj, stats, vec({0, 1}), ad) == doctest::Approx(0.5).epsilon(1e-14));
    Engine e(1);
    for (int k = 0; k < 50; ++k) {
        const Vec t = vec({uniform(e, -1, 1), uniform(e, 0, 2)});
        CHECK(weight_s(hj, stats, t, ad) == doctest::Approx(hj.grad_gamma(t, stats.gamma_hat).norm()));
    }
    const auto zero = estimation::make_stats(vec({1, 0, 1}), Mat::Zero(3, 3), 100, "hj");
    WeightSpec floored = ad;
    floored.floor = 1e-3;
    CHECK(weight_s(hj, zero, vec({0, 1}), floored) == 1e-3);
    CHECK(weight_w(hj, zero, vec({0, 1}), floored) == 1e-3);
}

TEST_CASE("Unweighted and custom weights") {
    const auto stats = unit_stats();
    CHECK(weight_s(hj, stats, vec({0.3, 1}), WeightSpec::unweighted()) == 1.0);
    CHECK(weight_w(hj, stats, vec({0.3, 1}), WeightSpec::unweighted()) == 1.0);
    const auto custom = WeightSpec::custom([](const Vec& t) { return 2.0 + t[0]; });
    CHECK(weight_s(hj, stats, vec({0.5, 1}), custom) == 2.5);
    WeightSpec none;
    none.kind = WeightKind::Custom;
    CHECK_THROWS_AS(weight_s(hj, stats, vec({0.5, 1}), none), InputError);
}

TEST_CASE("floor calibration") {
    const auto stats = unit_stats();
    const auto grid = std::make_shared<const ParamGrid>(ParamBox(vec({-1, 0}), vec({1, 2})), 11);
    const auto spec = calibrate_floor(hj, stats, *grid, WeightSpec::anderson_darling());
    std::vector<double> s;
    for (std::size_t i = 0; i < grid->size(); ++i) s.push_back(hj.grad_gamma(grid->point(i), stats.gamma_hat).norm());
    std::nth_element(s.begin(), s.begin() + static_cast<long>(s.size() / 2), s.end());
    CHECK(spec.floor == doctest::Approx(1e-8 * s[s.size() / 2]));
    const auto zero = estimation::make_stats(vec({1, 0, 1}), Mat::Zero(3, 3), 100, "hj");
    CHECK(calibrate_floor(hj, zero, *grid, WeightSpec::anderson_darling()).floor > 0.0);
}

TEST_CASE("negative-part scale recovers a unit standard deviation") {
    Engine e(4);
    std::normal_distribution<double> z;
    double s = 0, s2 = 0;
    const int b = 1000000;
    for (int k = 0; k < b; ++k) {
        const double x = std::min(z(e), 0.0);
        s += x;
        s2 += x * x;
    }
    const double sd = std::sqrt((s2 - s * s / b) / (b - 1));
    CHECK(sd * negative_part_scale() == doctest::Approx(1.0).epsilon(0.005));
}

TEST_CASE("bootstrap SD weight approximates the Anderson-Darling weight") {
    const auto p = setinf::testing::canonical_panel(5000, 3);
    const auto stats = estimation::estimate_hj_stats(p, {estimation::OmegaMethod::DeltaMethod, 1000, 0});
    Engine e(5);
    std::normal_distribution<double> z;
    std::vector<Vec> draws(20000);
    for (auto& d : draws) {
        Vec u(3);
        for (auto& x : u) x = z(e);
        d = stats.gamma_hat + stats.omega_sqrt * u / std::sqrt(stats.n);
    }
    auto model = std::make_shared<const models::HjModel>();
    for (Tail tail : {Tail::Negative, Tail::Positive, Tail::Both}) {
        const auto sd = bootstrap_sd_weight(model, stats.gamma_hat, draws, stats.n, tail);
        for (const Vec t : {vec({0.95, 0.5}), vec({1.0, 1.0}), vec({1.04, 2.0})}) {
            const double ad = weight_s(hj, stats, t, WeightSpec::anderson_darling());
            CHECK(weight_s(hj, stats, t, sd) == doctest::Approx(ad).epsilon(0.05));
        }
    }
}

TEST_CASE("LR statistic") {
    const auto stats = unit_stats();
    const auto ad = WeightSpec::anderson_darling();
    CHECK(lr_stat(hj, stats, vec({0, 1.2}), ad) == 0.0);
    CHECK(lr_stat(hj, stats, vec({0, 0.9}), ad) == doctest::Approx(4.0).epsilon(1e-12));
    // m̂ = ŝ/√n gives exactly one
    CHECK(lr_stat(hj, stats, vec({0, 1.0 - 0.05}), ad) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lr_stat(hj, stats, vec({0, 1.1}), ad, true) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("projection onto the HJ set") {
    const ParamBox box(vec({-3, 0}), vec({3, 4}), 0.5);
    const Vec g = vec({1, 0, 1});
    CHECK(project_to_set(hj, g, vec({0, 2}), box).distance == 0.0);
    const auto pr = project_to_set(hj, g, vec({0, 0.9}), box);
    CHECK(pr.distance == doctest::Approx(0.1).epsilon(1e-10));

    Engine e(6);
    for (int k = 0; k < 200; ++k) {
        const double mu = uniform(e, -2, 2);
        const double s = uniform(e, 0.0, std::sqrt(mu * mu + 1.0));
        const auto q = project_to_set(hj, g, vec({mu, s}), box);
        CHECK(std::abs(q.distance - curve_distance(mu, s)) <= 1e-8);
        CHECK(std::abs(hj.eval(q.point, g)) <= 1e-9);
    }
}

TEST_CASE("projection leaving the expanded box") {
    const ParamBox box(vec({-0.1, 0}), vec({0.1, 0.3}), 0.01);
    CHECK_THROWS_AS(project_to_set(hj, vec({1, 0, 1}), vec({0, 0.1}), box), BoundaryEscapeError);
}

TEST_CASE("Wald statistic") {
    const auto stats = unit_stats();
    const ParamBox box(vec({-1, 0}), vec({1, 3}), 0.5);
    const auto ad = WeightSpec::anderson_darling();
    CHECK(wald_stat(hj, stats, vec({0, 1.5}), ad, box) == 0.0);
    CHECK(wald_stat(hj, stats, vec({0, 0.5}), ad, box) == doctest::Approx(100.0).epsilon(1e-8));
}

TEST_CASE("LR and Wald statistics agree near the boundary") {
    const auto stats = unit_stats(5000);
    const ParamBox box(vec({-1, 0}), vec({1, 3}), 0.5);
    const auto ad = WeightSpec::anderson_darling();
    double previous = 1.0;
    for (double gap : {0.1, 0.03, 0.01, 0.003}) {
        double worst = 0;
        for (double mu : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
            const Vec t = vec({mu, std::sqrt(mu * mu + 1) - gap});
            const double l = lr_stat(hj, stats, t, ad), w = wald_stat(hj, stats, t, ad, box);
            worst = std::max(worst, std::abs(std::sqrt(l) - std::sqrt(w)) / std::sqrt(l));
        }
        CHECK(worst < previous);
        previous = worst;
    }
    CHECK(previous < 0.01);
}

TEST_CASE("LR and Wald agree over the boundary band of a mildly curved frontier") {
    Engine e(31);
    const auto panel = regions::GaussianReturnsDgp::simulate(vec({0.5, 1.0, 1.5}), Mat::Identity(3, 3), 5000, e);
    const auto stats = estimation::estimate_hj_stats(panel, {estimation::OmegaMethod::DeltaMethod, 0, 0});
    const auto grid = std::make_shared<const ParamGrid>(ParamBox(vec({0.0, 0.1}), vec({2.0, 3.0}), 0.05), 200);
    const auto band = estimation::estimate_boundary(hj, stats, grid);
    const auto ad = calibrate_floor(hj, stats, *grid, WeightSpec::anderson_darling());
    double worst = 0.0;
    for (std::size_t k = 0; k < band.size(); ++k) {
        const double l = lr_stat(hj, stats, band.point(k), ad);
        const double w = wald_stat(hj, stats, band.point(k), ad, grid->box());
        worst = std::max(worst, std::abs(l - w) / std::max(1.0, l));
    }
    CHECK(worst <= 0.05);
}

TEST_CASE("sup over a set") {
    const auto grid = std::make_shared<const ParamGrid>(ParamBox(vec({0, 0}), vec({1, 1})), 2);
    const std::vector<double> v{1, 5, 3, 2};
    CHECK(sup_stat(v, DiscreteSet(grid, {2})) == 3.0);
    CHECK(sup_stat(v, DiscreteSet(grid, {0, 2, 3})) == 3.0);
    CHECK_THROWS_AS(sup_stat(v, DiscreteSet(grid)), EmptySetError);
}

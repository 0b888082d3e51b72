#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "setinf/errors.hpp"
#include "setinf/parallel.hpp"
#include "setinf/resampling.hpp"
#include "test_support.hpp"

using namespace setinf;
using namespace setinf::resampling;
using setinf::testing::vec;

namespace {

const models::HjModel hj;

SufficientStats unit_stats() { return estimation::make_stats(vec({1, 0, 1}), Mat::Identity(3, 3), 100, "hj"); }

GridPtr small_grid() { return std::make_shared<const ParamGrid>(ParamBox(vec({-1, 0}), vec({1, 3}), 0.1), 41); }

ResampleConfig cfg(std::size_t draws, std::uint64_t seed = 1, double alpha = 0.05) {
    ResampleConfig c;
    c.draws = draws;
    c.seed = seed;
    c.alpha = alpha;
    return c;
}

}  // namespace

TEST_CASE("configuration validation and scheme names") {
    CHECK_NOTHROW(cfg(200).validate());
    CHECK_THROWS_AS(cfg(199).validate(), ConfigError);
    CHECK_THROWS_AS(cfg(500, 1, 0.5).validate(), ConfigError);
    CHECK_THROWS_AS(cfg(500, 1, 0.0).validate(), ConfigError);
    for (Scheme s : {Scheme::SimulateZ, Scheme::NonparametricPanel, Scheme::ParametricGaussian})
        CHECK(scheme_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(scheme_from_string("subsample"), ConfigError);
}

TEST_CASE("t̂ normalization") {
    const auto stats = unit_stats();
    const auto ad = WeightSpec::anderson_darling();
    for (const Vec t : {vec({0, 1}), vec({0.5, 0.7}), vec({-0.9, 2.0})}) {
        const Vec lr = t_hat(hj, stats, ad, t, StatisticKind::LR);
        CHECK(lr.norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK((t_hat(hj, stats, ad, t, StatisticKind::Wald) - lr).norm() <= 1e-14);
    }
    const auto zero = estimation::make_stats(vec({1, 0, 1}), Mat::Zero(3, 3), 100, "hj");
    CHECK(t_hat(hj, zero, ad, vec({0, 1}), StatisticKind::LR).norm() == 0.0);
    const auto band = DiscreteSet(small_grid(), {5, 100, 200});
    CHECK(critical_value_simulate(hj, zero, band, ad, StatisticKind::LR, cfg(500)).quantile(0.05) == 0.0);
}

TEST_CASE("order-statistic quantile") {
    const CriticalValue c({3, 1, 2, 10, 9, 8, 7, 6, 5, 4});
    CHECK(c.quantile(0.05) == 10.0);
    CHECK(c.quantile(0.25) == 8.0);
    CHECK(c.quantile(0.1) == 9.0);
    CHECK(std::is_sorted(c.draws().begin(), c.draws().end()));
}

TEST_CASE("singleton boundary with unit t̂ gives the half-normal quantile") {
    const auto stats = unit_stats();
    const auto grid = small_grid();
    const DiscreteSet one(grid, {grid->nearest(vec({0, 1}))});
    const auto c = critical_value_simulate(hj, stats, one, WeightSpec::anderson_darling(), StatisticKind::LR,
                                           cfg(10000, 7));
    const double z = 1.6448536269514722;
    CHECK(std::abs(c.quantile(0.05) - z * z) <= 0.15);

    // Kolmogorov-Smirnov against F(x) = 1/2 + 1/2 P(χ²₁ <= x), 1% critical value 1.628/√B
    const auto& d = c.draws();
    const double b = static_cast<double>(d.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (i + 1 < d.size() && d[i + 1] == d[i]) continue;
        const double f = 0.5 + 0.5 * std::erf(std::sqrt(d[i] / 2.0));
        ks = std::max(ks, std::abs((i + 1) / b - f));
        const double before = static_cast<double>(std::lower_bound(d.begin(), d.end(), d[i]) - d.begin()) / b;
        ks = std::max(ks, std::abs(before - (d[i] == 0.0 ? 0.0 : f)));
    }
    CHECK(ks <= 1.628 / std::sqrt(b));
}

TEST_CASE("critical value grows with the boundary and falls with α") {
    const auto stats = unit_stats();
    const auto grid = small_grid();
    const auto ad = WeightSpec::anderson_darling();
    const auto band = estimation::estimate_boundary(hj, stats, grid);
    std::vector<std::size_t> half(band.members().begin(), band.members().begin() + band.size() / 2);
    const DiscreteSet sub(grid, half);
    const auto big = critical_value_simulate(hj, stats, band, ad, StatisticKind::LR, cfg(2000, 3));
    const auto small = critical_value_simulate(hj, stats, sub, ad, StatisticKind::LR, cfg(2000, 3));
    for (std::size_t b = 0; b < 2000; ++b) CHECK(big.draws()[b] >= small.draws()[b]);
    CHECK(big.quantile(0.05) >= small.quantile(0.05));
    CHECK(big.quantile(0.25) <= big.quantile(0.05));
    CHECK(big.quantile(0.01) >= big.quantile(0.05));
}

TEST_CASE("two-sided draws dominate one-sided draws") {
    const auto stats = unit_stats();
    const auto grid = small_grid();
    const auto band = estimation::estimate_boundary(hj, stats, grid);
    const auto ad = WeightSpec::anderson_darling();
    const auto one = critical_value_simulate(hj, stats, band, ad, StatisticKind::LR, cfg(1000, 5));
    const auto two = critical_value_simulate(hj, stats, band, ad, StatisticKind::LR, cfg(1000, 5), true);
    CHECK(two.quantile(0.05) >= one.quantile(0.05));
}

TEST_CASE("bootstrap and simulated critical values agree on a large Gaussian panel") {
    const auto panel = setinf::testing::canonical_panel(200000, 12);
    const auto stats = estimation::estimate_hj_stats(panel, {estimation::OmegaMethod::Bootstrap, 1000, 4});
    const auto grid = setinf::testing::canonical_grid(60);
    const auto band = estimation::estimate_boundary(hj, stats, grid);
    const auto ad = WeightSpec::anderson_darling();
    auto c = cfg(2000, 9);
    const double sim = critical_value_simulate(hj, stats, band, ad, StatisticKind::LR, c).quantile(0.05);
    c.scheme = Scheme::NonparametricPanel;
    const double boot = critical_value_bootstrap(panel, estimation::hj_gamma, hj, stats, band, ad,
                                                 StatisticKind::LR, c)
                            .quantile(0.05);
    c.scheme = Scheme::ParametricGaussian;
    const double par = critical_value_parametric(hj, stats, band, ad, StatisticKind::LR, c).quantile(0.05);
    CHECK(std::abs(boot - sim) <= 0.1 * sim);
    CHECK(std::abs(par - sim) <= 0.1 * sim);
}

TEST_CASE("critical values do not depend on the worker count") {
    const auto panel = setinf::testing::canonical_panel(300, 2);
    const auto stats = estimation::estimate_hj_stats(panel, {estimation::OmegaMethod::Bootstrap, 300, 4});
    const auto grid = setinf::testing::canonical_grid(40);
    const auto band = estimation::estimate_boundary(hj, stats, grid);
    const auto ad = WeightSpec::anderson_darling();
    auto run = [&](unsigned workers) {
        parallel::set_workers(workers);
        auto c = cfg(400, 77);
        auto a = critical_value_simulate(hj, stats, band, ad, StatisticKind::LR, c).draws();
        const auto b = critical_value_bootstrap(panel, estimation::hj_gamma, hj, stats, band, ad,
                                                StatisticKind::Wald, c)
                           .draws();
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    const auto one = run(1);
    const auto three = run(3);
    const auto again = run(3);
    parallel::set_workers(0);
    CHECK(one == three);
    CHECK(three == again);
}

TEST_CASE("parametric study draws") {
    const std::vector<std::pair<double, double>> fixed{{0.4, 0.0}, {0.7, 0.0}};
    for (const Vec& d : parametric_studies_bootstrap(fixed, 50, 1)) CHECK(d == vec({0.4, 0.7}));

    const std::vector<std::pair<double, double>> est{{0.2, 0.03}, {0.5, 0.1}, {0.8, 0.05}};
    const auto big = parametric_studies_bootstrap(est, 100000, 2);
    Vec mean = Vec::Zero(3);
    for (const Vec& d : big) mean += d;
    mean /= 100000.0;
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(std::abs(mean[static_cast<Eigen::Index>(j)] - est[j].first) <= 4 * est[j].second / std::sqrt(1e5));

    const auto small = parametric_studies_bootstrap(est, 10000, 3);
    Mat x(10000, 3);
    for (std::size_t b = 0; b < small.size(); ++b) x.row(static_cast<Eigen::Index>(b)) = small[b].transpose();
    const Mat c = sample_covariance(x);
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = i + 1; j < 3; ++j) CHECK(std::abs(c(i, j) / std::sqrt(c(i, i) * c(j, j))) < 0.05);

    const std::vector<std::pair<double, double>> bad{{0.2, -0.1}};
    CHECK_THROWS_AS(parametric_studies_bootstrap(bad, 10, 1), InputError);
}

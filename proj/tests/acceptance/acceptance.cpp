// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "setinf/app.hpp"
#include "setinf/consumption.hpp"
#include "setinf/distance.hpp"
#include "setinf/io.hpp"
#include "setinf/parallel.hpp"
#include "setinf/regions.hpp"
#include "setinf/special.hpp"
#include "test_support.hpp"

using namespace setinf;
namespace fs = std::filesystem;
using setinf::testing::uniform;
using setinf::testing::vec;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

regions::RegionConfig region_config(std::size_t draws, std::uint64_t seed, double alpha = 0.05) {
    regions::RegionConfig c;
    c.resample.draws = draws;
    c.resample.seed = seed;
    c.resample.alpha = alpha;
    c.stat_map = estimation::hj_gamma;
    return c;
}

/// HJ dgp whose frontier vertex has curvature near 5 instead of ~1e3; diagnostic only.
regions::GaussianReturnsDgp moderate_dgp() { return {vec({0.5, 1.0, 1.5}), Mat::Identity(3, 3)}; }

GridPtr moderate_grid(std::size_t points) {
    return std::make_shared<const ParamGrid>(ParamBox(vec({0.0, 0.1}), vec({2.0, 3.0}), 0.05), points);
}

// ---------------------------------------------------------------- 1
Outcome smooth_max_bound() {
    const auto t0 = Clock::now();
    Engine e(101);
    double worst_over = -INFINITY, worst_under = INFINITY;
    for (int k = 0; k < 10000; ++k) {
        const std::size_t j = 1 + static_cast<std::size_t>(uniform(e, 0, 10));
        const double lambda = uniform(e, 0.1, 100.0);
        std::vector<double> g(std::min<std::size_t>(j, 10));
        for (auto& x : g) x = uniform(e, -10, 10);
        const double gap = *std::max_element(g.begin(), g.end()) - models::smooth_max(g, lambda);
        const double bound = lambert_w((static_cast<double>(g.size()) - 1.0) / std::numbers::e) / lambda;
        worst_under = std::min(worst_under, gap);
        worst_over = std::max(worst_over, gap - bound);
    }
    const double secs = seconds_since(t0);
    return {worst_under >= 0.0 && worst_over <= 1e-12 && secs < 1.0,
            fmt("min gap %.3g, max(gap - bound) %.3g, %.3f s", worst_under, worst_over, secs)};
}

// ---------------------------------------------------------------- 2
Outcome gradients() {
    using setinf::testing::fd_grad_gamma;
    using setinf::testing::fd_grad_theta;
    using setinf::testing::rel_error;
    Engine e(202);
    std::map<std::string, double> worst;
    auto record = [&](const models::MomentModel& m, const Vec& t, const Vec& g) {
        const double r = std::max(rel_error(m.grad_theta(t, g), fd_grad_theta(m, t, g), 1e-6),
                                  rel_error(m.grad_gamma(t, g), fd_grad_gamma(m, t, g), 1e-6));
        worst[m.name()] = std::max(worst[m.name()], r);
    };
    auto hj_gamma = [&] {
        const double a = uniform(e, 0.5, 3.0), b = uniform(e, -1, 1), d = uniform(e, 0.1, 2.0);
        return vec({a, b, (b * b + d) / a});
    };
    const models::HjModel hj;
    const models::MarkowitzModel mk;
    for (int k = 0; k < 1000; ++k) {
        const Vec t = vec({uniform(e, -1, 1), uniform(e, 0, 3)});
        record(hj, t, hj_gamma());
        record(mk, t, hj_gamma());
    }
    for (int k = 0; k < 1000; ++k) {
        const std::size_t f = 1 + k % 2;
        const auto m = static_cast<Eigen::Index>(f + 1);
        Mat r(m, m);
        for (auto& x : r.reshaped()) x = uniform(e, -1, 1);
        const Mat a = r * r.transpose() + 0.5 * Mat::Identity(m, m);
        Vec t(m + 1);
        for (Eigen::Index i = 0; i < m; ++i) t[i] = uniform(e, 0.1, 1.0) * (uniform(e, 0, 1) < 0.5 ? -1 : 1);
        t[m] = uniform(e, 0, 2);
        record(models::MultiFactorModel(f), t, Eigen::Map<const Vec>(a.data(), a.size()));
    }
    for (int k = 0; k < 1000; ++k)
        record(models::FrictionModel(uniform(e, 0.2, 2.0)), vec({uniform(e, 0.1, 2.0), uniform(e, 0, 0.1)}),
               vec({uniform(e, 0.1, 2.0)}));
    for (int k = 0; k < 1000; ++k) {
        const std::size_t j = 1 + k % 4;
        std::vector<models::ModelPtr> parts;
        Vec g(static_cast<Eigen::Index>(j));
        for (std::size_t i = 0; i < j; ++i) {
            parts.push_back(std::make_shared<models::FrictionModel>(uniform(e, 0.2, 2.0)));
            g[static_cast<Eigen::Index>(i)] = uniform(e, 0.1, 2.0);
        }
        record(models::SmoothMaxModel(parts, uniform(e, 1.0, 100.0)), vec({uniform(e, 0.1, 2.0), uniform(e, 0, 0.1)}), g);
    }
    double w = 0.0;
    std::string detail;
    for (const auto& [name, v] : worst) {
        w = std::max(w, v);
        detail += fmt("%s %.2g; ", name.c_str(), v);
    }
    return {w <= 1e-6 && worst.size() == 5, "max rel. error: " + detail};
}

// ---------------------------------------------------------------- 3
Outcome coverage_lr_wald() {
    const auto t0 = Clock::now();
    const models::HjModel hj;
    const regions::GaussianReturnsDgp dgp(setinf::testing::canonical_v(), setinf::testing::canonical_sigma());
    const auto grid = setinf::testing::canonical_grid(100);
    bool ok = true;
    std::string detail;
    for (Method m : {Method::LR, Method::Wald}) {
        const auto rep = regions::coverage_study(dgp, hj, m, 200, 250, grid, region_config(300, 0), 303);
        ok = ok && rep.coverage >= 0.91 && rep.coverage <= 0.99;
        detail += fmt("%s %.3f (se %.3f); ", std::string(to_string(m)).c_str(), rep.coverage, rep.std_error);
    }
    detail += fmt("%.0f s", seconds_since(t0));
    // Not part of the verdict: same study on a frontier with mild vertex curvature.
    const auto mild = regions::coverage_study(moderate_dgp(), hj, Method::Wald, 200, 250, moderate_grid(100),
                                              region_config(300, 0), 303);
    return {ok, detail + fmt(" [diagnostic, mild-curvature dgp: Wald %.3f]", mild.coverage)};
}

// ---------------------------------------------------------------- 4
double worst_equivalence_gap(const estimation::SufficientStats& stats, const GridPtr& grid) {
    const models::HjModel hj;
    const auto band = estimation::estimate_boundary(hj, stats, grid);
    const auto ad = statistics::calibrate_floor(hj, stats, *grid, statistics::WeightSpec::anderson_darling());
    std::vector<double> ratio(band.size(), 0.0);
    parallel::for_each_index(band.size(), [&](std::size_t k) {
        const Vec t = band.point(k);
        const double l = statistics::lr_stat(hj, stats, t, ad);
        const double w = statistics::wald_stat(hj, stats, t, ad, grid->box());
        ratio[k] = std::abs(l - w) / std::max(1.0, l);
    });
    return *std::max_element(ratio.begin(), ratio.end());
}

Outcome equivalence() {
    const auto omega = estimation::OmegaOptions{estimation::OmegaMethod::Bootstrap, 1000, 4};
    const auto stats = estimation::estimate_hj_stats(setinf::testing::canonical_panel(5000, 1), omega);
    const double worst = worst_equivalence_gap(stats, setinf::testing::canonical_grid(200));
    // Not part of the verdict: finer lattices narrow the band; a mildly curved frontier.
    const double fine = worst_equivalence_gap(stats, setinf::testing::canonical_grid(800));
    Engine e = derive_engine(1, streams::synth_panel, 0);
    const auto mild_panel = regions::GaussianReturnsDgp::simulate(vec({0.5, 1.0, 1.5}), Mat::Identity(3, 3), 5000, e);
    const double mild = worst_equivalence_gap(estimation::estimate_hj_stats(mild_panel, omega), moderate_grid(200));
    return {worst <= 0.05, fmt("max |L - W|/max(1, L) = %.4g on the 200-point lattice "
                               "[diagnostic: 800-point lattice %.4g; mild-curvature dgp %.4g]",
                               worst, fine, mild)};
}

// ---------------------------------------------------------------- 5
Outcome lr_invariance() {
    auto hj = std::make_shared<const models::HjModel>();
    const auto stats = estimation::estimate_hj_stats(setinf::testing::canonical_panel(500, 1),
                                                     {estimation::OmegaMethod::Bootstrap, 1000, 5});
    const auto grid = setinf::testing::canonical_grid(200);
    const auto rep = regions::invariance_check(hj, stats, grid, regions::CoordinateTransform::log_axis(2, 1),
                                               region_config(1000, 5));
    return {rep.lr_disagreements == 0,
            fmt("LR disagreements %zu of %zu; unweighted Wald disagreement rate %.4f", rep.lr_disagreements,
                rep.points, rep.wald_unweighted_rate)};
}

// ---------------------------------------------------------------- 6
/// Members of a with no member of b within one lattice step on every axis.
std::size_t beyond_one_cell(const DiscreteSet& a, const DiscreteSet& b) {
    const ParamGrid& g = a.grid();
    std::size_t count = 0;
    for (std::size_t i : a.members()) {
        if (b.contains(i)) continue;
        const auto mi = g.multi_index(i);
        bool near = false;
        for (int di = -1; di <= 1 && !near; ++di)
            for (int dj = -1; dj <= 1 && !near; ++dj) {
                const long x = static_cast<long>(mi[0]) + di, y = static_cast<long>(mi[1]) + dj;
                if (x < 0 || y < 0 || x >= static_cast<long>(g.points_per_axis()[0]) ||
                    y >= static_cast<long>(g.points_per_axis()[1]))
                    continue;
                near = b.contains(g.flat_index({static_cast<std::size_t>(x), static_cast<std::size_t>(y)}));
            }
        count += near ? 0 : 1;
    }
    return count;
}

Outcome projection_nesting() {
    const models::HjModel hj;
    const auto panel = setinf::testing::canonical_panel(500, 1);
    const auto stats = estimation::estimate_hj_stats(panel, {estimation::OmegaMethod::Bootstrap, 1000, 6});
    const auto grid = setinf::testing::canonical_grid(200);
    auto cfg = region_config(1000, 6);
    const auto lr = regions::build_region(Method::LR, hj, stats, grid, cfg);
    const auto proj = regions::build_region(Method::Projection, hj, stats, grid, cfg);
    const bool est_in_lr = lr.estimate.is_subset_of(lr.region.set);
    const std::size_t beyond = beyond_one_cell(lr.region.set, proj.region.set);
    const double a_lr = lr.region.set.lattice_volume(), a_proj = proj.region.set.lattice_volume();
    return {est_in_lr && beyond == 0 && a_lr < a_proj,
            fmt("estimate in LR: %s; LR points beyond one cell of Projection: %zu; area LR %.4g < Projection %.4g",
                est_in_lr ? "yes" : "no", beyond, a_lr, a_proj)};
}

// ---------------------------------------------------------------- 7
Outcome root_n() {
    const models::HjModel hj;
    const regions::GaussianReturnsDgp dgp(setinf::testing::canonical_v(), setinf::testing::canonical_sigma());
    const auto grid = setinf::testing::canonical_grid(200);
    std::vector<double> h;
    for (std::size_t n : {250u, 1000u, 4000u})
        h.push_back(regions::coverage_study(dgp, hj, Method::LR, 50, n, grid, region_config(300, 0), 707 + n)
                        .mean_hausdorff);
    const double ratio = h[2] / h[1];
    return {h[0] > h[1] && h[1] > h[2] && ratio >= 0.25 && ratio <= 1.0,
            fmt("mean d_H: n=250 %.4g, n=1000 %.4g, n=4000 %.4g; ratio(4000/1000) %.3f", h[0], h[1], h[2], ratio)};
}

// ---------------------------------------------------------------- 8
Outcome half_normal() {
    const models::HjModel hj;
    const auto stats = estimation::make_stats(vec({1, 0, 1}), Mat::Identity(3, 3), 100, "hj");
    const auto grid = std::make_shared<const ParamGrid>(ParamBox(vec({-1, 0}), vec({1, 3})), 21);
    const DiscreteSet one(grid, {grid->nearest(vec({0, 1}))});
    resampling::ResampleConfig c;
    c.draws = 10000;
    c.seed = 808;
    const double k = resampling::critical_value_simulate(hj, stats, one, statistics::WeightSpec::anderson_darling(),
                                                         resampling::StatisticKind::LR, c)
                         .quantile(0.05);
    return {std::abs(k - 2.706) <= 0.15, fmt("k = %.4f (target 2.706 +/- 0.15)", k)};
}

// ---------------------------------------------------------------- 9
Outcome chetty() {
    const std::vector<std::pair<double, double>> studies{{0.2, 0.03}, {0.5, 0.03}, {0.8, 0.03}};
    const double lambda = 1000.0;
    std::vector<models::ModelPtr> parts;
    Vec g(3), var(3);
    for (std::size_t j = 0; j < 3; ++j) {
        parts.push_back(std::make_shared<models::FrictionModel>(1.0));
        g[static_cast<Eigen::Index>(j)] = studies[j].first;
        var[static_cast<Eigen::Index>(j)] = studies[j].second * studies[j].second;
    }
    auto model = std::make_shared<const models::SmoothMaxModel>(parts, lambda);
    const auto stats = estimation::make_stats(g, var.asDiagonal(), 1.0, "chetty");
    const auto grid = std::make_shared<const ParamGrid>(ParamBox(vec({0.05, 0.0}), vec({1.5, 0.1})), 200);

    const double bound = lambert_w(2.0 / std::numbers::e) / lambda;
    double worst = -INFINITY, under = INFINITY;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const Vec t = grid->point(i);
        const auto v = model->component_values(t, g);
        const double gap = *std::max_element(v.begin(), v.end()) - model->eval(t, g);
        worst = std::max(worst, gap - bound);
        under = std::min(under, gap);
    }

    regions::RegionConfig cfg;
    cfg.resample.scheme = resampling::Scheme::ParametricGaussian;
    cfg.resample.draws = 1000;
    cfg.resample.seed = 909;
    cfg.weights = statistics::bootstrap_sd_weight(model, g, resampling::parametric_studies_bootstrap(studies, 1000, 909),
                                                  1.0);
    const auto r = regions::build_region(Method::LR, *model, stats, grid, cfg);
    std::size_t zero_included = 0;
    for (std::size_t i = 0; i < grid->size(); ++i)
        if (grid->multi_index(i)[1] == 0 && r.region.set.contains(i)) ++zero_included;
    return {under >= 0.0 && worst <= 1e-12 && zero_included == 0 && !r.region.set.empty(),
            fmt("max(gap - W(2/e)/lambda) %.3g, min gap %.3g; delta = 0 points in LR region: %zu; region size %zu",
                worst, under, zero_included, r.region.set.size())};
}

// ---------------------------------------------------------------- 10
std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = io::read_text(e.path());
    return files;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / ("setinf_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string hj_cfg = R"({
  "model": "hj",
  "synthetic": {"v": [1.08, 1.02, 1.05],
                "sigma": [[0.04, 0.004, 0.01], [0.004, 0.0025, 0.002], [0.01, 0.002, 0.02]], "T": 400},
  "grid": {"lower": [0.9, 0.1], "upper": [1.06, 3.0], "points": 50, "delta": 0.05},
  "methods": ["LR", "Wald", "Projection"],
  "resampling": {"draws": 300}, "omega": {"draws": 300}, "seed": 10,
  "coverage": {"reps": 4, "n": 250}
})";
    const std::string chetty_cfg = R"({
  "model": "chetty", "lambda": 100, "weights": "negative_part_sd",
  "studies": [{"estimate": 0.2, "se": 0.03, "dlogp": 1}, {"estimate": 0.5, "se": 0.03, "dlogp": 1}],
  "grid": {"lower": [0.05, 0.0], "upper": [1.5, 0.1], "points": 40},
  "resampling": {"draws": 300}, "seed": 11
})";
    const std::string sdf_cfg = R"({
  "model": "consumption_sdf",
  "consumption": {"growth": [1.02, 1.01, 0.99, 1.03, 1.0, 1.04, 1.02, 0.98, 1.01, 1.03, 1.02, 1.0],
                  "rho_max": 100, "rho_steps": 100},
  "synthetic": {"v": [1.08, 1.02, 1.05],
                "sigma": [[0.04, 0.004, 0.01], [0.004, 0.0025, 0.002], [0.01, 0.002, 0.02]], "T": 300},
  "grid": {"lower": [0.5, 0.01], "upper": [1.2, 1.0], "points": 40},
  "resampling": {"draws": 300}, "omega": {"draws": 300}, "seed": 12
})";
    const std::vector<std::tuple<std::string, std::string, std::string>> runs{
        {"estimate", "hj", hj_cfg},   {"region", "hj", hj_cfg},         {"coverage", "hj", hj_cfg},
        {"synth", "hj", hj_cfg},      {"invariance", "hj", hj_cfg},     {"estimate", "chetty", chetty_cfg},
        {"region", "chetty", chetty_cfg}, {"region", "sdf", sdf_cfg}};
    std::size_t mismatches = 0, files = 0;
    std::string failed;
    for (const auto& [cmd, tag, text] : runs) {
        const fs::path cfg = root / (tag + ".json");
        io::write_text(cfg, text);
        std::map<std::string, std::string> first;
        int k = 0;
        for (unsigned workers : {1u, 1u, 3u}) {
            app::Overrides ov;
            ov.config = cfg.string();
            ov.workers = workers;
            const fs::path out = root / (cmd + "_" + tag);
            fs::remove_all(out);
            ++k;
            ov.out = out.string();
            std::ostringstream err;
            if (app::run(cmd, ov, err) != 0) {
                ++mismatches;
                failed += cmd + "/" + tag + " failed: " + err.str();
                break;
            }
            const auto snap = snapshot(out);
            if (k == 1) {
                first = snap;
                files += snap.size();
            } else if (snap != first) {
                ++mismatches;
                failed += cmd + "/" + tag + " differs (workers " + std::to_string(workers) + "); ";
            }
        }
    }
    parallel::set_workers(0);
    fs::remove_all(root);
    return {mismatches == 0, fmt("%zu subcommand runs x 3, %zu files compared, %zu mismatches %s", runs.size(), files,
                                 mismatches, failed.c_str())};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"smooth-max error bound", smooth_max_bound},
        {"gradient correctness", gradients},
        {"coverage of LR and Wald regions", coverage_lr_wald},
        {"LR/Wald equivalence", equivalence},
        {"exact LR invariance", lr_invariance},
        {"projection conservativeness", projection_nesting},
        {"root-n Hausdorff rate", root_n},
        {"half-normal critical value", half_normal},
        {"smoothed study aggregation", chetty},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}

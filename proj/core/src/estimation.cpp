#include "setinf/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>

#include "setinf/errors.hpp"
#include "setinf/parallel.hpp"

namespace setinf::estimation {

void ReturnsPanel::validate() const {
    const std::size_t t = periods();
    const std::size_t n = assets();
    if (n == 0) throw InputError("returns panel has no asset columns");
    if (t < n + 2)
        throw InputError("returns panel needs T >= N + 2 (T = " + std::to_string(t) +
                         ", N = " + std::to_string(n) + ")");
    if (!returns.allFinite()) throw InputError("returns panel contains non-finite values");
    if (factors.cols() > 0) {
        if (static_cast<std::size_t>(factors.rows()) != t)
            throw InputError("factor block must have one row per period");
        if (!factors.allFinite()) throw InputError("factor columns contain non-finite values");
    }
}

ReturnsPanel resample_rows(const ReturnsPanel& panel, Engine& engine) {
    const auto t = static_cast<Eigen::Index>(panel.periods());
    std::uniform_int_distribution<Eigen::Index> pick(0, t - 1);
    ReturnsPanel out;
    out.returns.resize(t, panel.returns.cols());
    out.factors.resize(panel.factors.cols() > 0 ? t : 0, panel.factors.cols());
    for (Eigen::Index r = 0; r < t; ++r) {
        const Eigen::Index src = pick(engine);
        out.returns.row(r) = panel.returns.row(src);
        if (panel.factors.cols() > 0) out.factors.row(r) = panel.factors.row(src);
    }
    out.labels = panel.labels;
    out.factor_labels = panel.factor_labels;
    return out;
}

SufficientStats make_stats(Vec gamma_hat, const Mat& omega_hat, double n, std::string model_tag) {
    if (omega_hat.rows() != gamma_hat.size() || omega_hat.cols() != gamma_hat.size())
        throw InputError("Ω̂ must be d×d with d = dim γ̂");
    SufficientStats s;
    const PsdClip clip = clip_psd(omega_hat);
    s.gamma_hat = std::move(gamma_hat);
    s.omega_hat = clip.matrix;
    s.omega_sqrt = clip.sqrt;
    s.omega_inv_sqrt = clip.inv_sqrt;
    s.n = n;
    s.model_tag = std::move(model_tag);
    s.clipped_mass = clip.clipped_mass;
    const double trace = omega_hat.trace();
    s.clip_warning = clip.clipped_mass > 1e-8 * std::abs(trace);
    return s;
}

namespace {

struct Moments {
    Vec mean;
    Mat cov;
    Eigen::LDLT<Mat> ldlt;
};

Moments return_moments(const ReturnsPanel& panel) {
    Moments m;
    m.mean = column_means(panel.returns);
    m.cov = sample_covariance(panel.returns);
    const double cond = condition_number(m.cov);
    if (!(cond <= kMaxCondition))
        throw SingularCovarianceError(
            "sample covariance of returns is singular (condition number " +
                std::to_string(cond) + ")",
            cond);
    m.ldlt.compute(m.cov);
    return m;
}

}  // namespace

Vec hj_gamma(const ReturnsPanel& panel) {
    const Moments m = return_moments(panel);
    const Vec ones = Vec::Ones(m.mean.size());
    const Vec pv = m.ldlt.solve(m.mean);
    const Vec p1 = m.ldlt.solve(ones);
    Vec g(3);
    g << m.mean.dot(pv), m.mean.dot(p1), ones.dot(p1);
    return g;
}

Vec mf_gamma(const ReturnsPanel& panel, bool precision) {
    const Moments m = return_moments(panel);
    const auto t = static_cast<double>(panel.periods());
    const auto k = panel.factors.cols();
    Mat d(m.mean.size(), k + 1);
    d.col(0) = m.mean;
    if (k > 0) {
        const Mat rc = panel.returns.rowwise() - panel.returns.colwise().mean();
        const Mat zc = panel.factors.rowwise() - panel.factors.colwise().mean();
        d.rightCols(k) = rc.transpose() * zc / (t - 1.0);  // B̂' = Cov(r, Z)
    }
    const Mat a = precision ? Mat(d.transpose() * m.ldlt.solve(d)) : Mat(d.transpose() * m.cov * d);
    const Mat sym = 0.5 * (a + a.transpose());
    return Eigen::Map<const Vec>(sym.data(), sym.size());
}

std::vector<Vec> bootstrap_statistics(const ReturnsPanel& panel, const StatMap& stat_map,
                                      std::size_t draws, std::uint64_t seed,
                                      std::uint64_t stream) {
    std::vector<Vec> out(draws);
    const std::size_t budget = 10 * std::max<std::size_t>(draws, 1);
    std::atomic<std::size_t> rejected{0};
    parallel::for_each_index(draws, [&](std::size_t b) {
        Engine engine = derive_engine(seed, stream, b);
        for (;;) {
            try {
                out[b] = stat_map(resample_rows(panel, engine));
                return;
            } catch (const SingularCovarianceError&) {
            } catch (const ModelDomainError&) {
            }
            if (rejected.fetch_add(1) + 1 > budget)
                throw NumericError("bootstrap: more than " + std::to_string(budget) +
                                   " singular redraws");
        }
    });
    return out;
}

Mat estimate_omega_bootstrap(const ReturnsPanel& panel, const StatMap& stat_map,
                             std::size_t draws, std::uint64_t seed) {
    if (draws < 100) throw InputError("bootstrap Ω̂ needs at least 100 draws");
    const auto stats = bootstrap_statistics(panel, stat_map, draws, seed, streams::omega_bootstrap);
    const auto d = stats.front().size();
    Mat x(static_cast<Eigen::Index>(draws), d);
    for (std::size_t b = 0; b < draws; ++b) x.row(static_cast<Eigen::Index>(b)) = stats[b].transpose();
    return static_cast<double>(panel.periods()) * sample_covariance(x);
}

Mat hj_omega_delta(const ReturnsPanel& panel) {
    const Moments m = return_moments(panel);
    const Vec ones = Vec::Ones(m.mean.size());
    const Vec a = m.ldlt.solve(m.mean);
    const Vec b = m.ldlt.solve(ones);
    const double svv = m.mean.dot(a), sv1 = m.mean.dot(b), s11 = ones.dot(b);
    const auto t = panel.returns.rows();
    Mat influence(t, 3);
    for (Eigen::Index r = 0; r < t; ++r) {
        const Vec e = panel.returns.row(r).transpose() - m.mean;
        const double ae = a.dot(e), be = b.dot(e);
        influence(r, 0) = 2.0 * ae - ae * ae + svv;
        influence(r, 1) = be - ae * be + sv1;
        influence(r, 2) = -be * be + s11;
    }
    return influence.transpose() * influence / static_cast<double>(t);
}

SufficientStats estimate_hj_stats(const ReturnsPanel& panel, const OmegaOptions& options) {
    panel.validate();
    Vec gamma = hj_gamma(panel);
    Mat omega = options.method == OmegaMethod::DeltaMethod
                    ? hj_omega_delta(panel)
                    : estimate_omega_bootstrap(panel, hj_gamma, options.draws, options.seed);
    return make_stats(std::move(gamma), omega, static_cast<double>(panel.periods()), "hj");
}

SufficientStats estimate_mf_stats(const ReturnsPanel& panel, const OmegaOptions& options,
                                  std::optional<std::size_t> expected_factors, bool precision) {
    panel.validate();
    if (expected_factors && *expected_factors != panel.factor_count())
        throw ConfigError({"mf model expects " + std::to_string(*expected_factors) +
                           " factor column(s), panel has " +
                           std::to_string(panel.factor_count())});
    if (options.method == OmegaMethod::DeltaMethod)
        throw ConfigError({"delta-method Ω̂ is only available for the hj/markowitz layout"});
    auto stat = [precision](const ReturnsPanel& p) { return mf_gamma(p, precision); };
    Vec gamma = stat(panel);
    Mat omega = estimate_omega_bootstrap(panel, stat, options.draws, options.seed);
    return make_stats(std::move(gamma), omega, static_cast<double>(panel.periods()), "mf");
}

std::vector<double> evaluate_on_grid(const models::MomentModel& model, const Vec& gamma,
                                     const ParamGrid& grid) {
    if (!model.admissible(gamma))
        throw ModelDomainError(model.name() + ": estimated γ is not admissible");
    std::vector<double> values(grid.size());
    parallel::for_each_index(grid.size(), [&](std::size_t i) {
        try {
            values[i] = model.eval(grid.point(i), gamma);
        } catch (const InversionError&) {
            values[i] = std::numeric_limits<double>::quiet_NaN();
        }
    });
    return values;
}

DiscreteSet estimate_set(const models::MomentModel& model, const SufficientStats& stats,
                         const GridPtr& grid) {
    const auto values = evaluate_on_grid(model, stats.gamma_hat, *grid);
    return DiscreteSet::from_predicate(grid, [&](std::size_t i) { return values[i] <= 0.0; });
}

double default_boundary_tolerance(const models::MomentModel& model, const SufficientStats& stats,
                                  const ParamGrid& grid) {
    std::vector<double> norms(grid.size(), 0.0);
    parallel::for_each_index(grid.size(), [&](std::size_t i) {
        try {
            norms[i] = model.grad_theta(grid.point(i), stats.gamma_hat).norm();
        } catch (const SingularGradientError&) {
        } catch (const InversionError&) {
        }
    });
    const double sup = *std::max_element(norms.begin(), norms.end());
    return 0.5 * grid.cell_diagonal() * sup;
}

DiscreteSet estimate_boundary(const models::MomentModel& model, const SufficientStats& stats,
                              const GridPtr& grid, std::optional<double> tol) {
    const double band = tol ? *tol : default_boundary_tolerance(model, stats, *grid);
    if (!(band > 0.0)) throw InputError("boundary band tolerance must be > 0");
    const auto values = evaluate_on_grid(model, stats.gamma_hat, *grid);
    auto set = DiscreteSet::from_predicate(
        grid, [&](std::size_t i) { return std::abs(values[i]) <= band; });
    if (set.empty())
        throw EmptyBoundaryError(
            "estimated boundary band is empty; use a finer grid or a wider box");
    return set;
}

}  // namespace setinf::estimation

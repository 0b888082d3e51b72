#include "setinf/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "setinf/distance.hpp"
#include "setinf/errors.hpp"
#include "setinf/parallel.hpp"

namespace setinf::regions {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using resampling::StatisticKind;

/// Pointwise pieces shared by the grid pipeline and the invariance check:
/// evaluation points, moment values, and weights.
struct PointStats {
    std::vector<Vec> points;
    std::vector<double> m;
    std::vector<double> s;  ///< LR weight ŝ
    std::vector<double> w;  ///< Wald weight ŵ
};

std::vector<std::size_t> band_members(const std::vector<double>& m, double tol) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (std::abs(m[i]) <= tol) out.push_back(i);
    return out;
}

Mat t_rows(const MomentModel& model, const SufficientStats& stats, const PointStats& ps,
           const std::vector<std::size_t>& band, StatisticKind kind) {
    Mat t(static_cast<Eigen::Index>(band.size()), stats.gamma_hat.size());
    parallel::for_each_index(band.size(), [&](std::size_t k) {
        const std::size_t i = band[k];
        const auto row = static_cast<Eigen::Index>(k);
        const Vec num = stats.omega_sqrt * model.grad_gamma(ps.points[i], stats.gamma_hat);
        if (kind == StatisticKind::LR) {
            t.row(row) = (num / ps.s[i]).transpose();
            return;
        }
        double gnorm = 0.0;
        try {
            gnorm = model.grad_theta(ps.points[i], stats.gamma_hat).norm();
        } catch (const SingularGradientError&) {
        }
        if (!(gnorm > 0.0) || !std::isfinite(ps.w[i])) {
            t.row(row).setZero();
            return;
        }
        t.row(row) = (num / (gnorm * ps.w[i])).transpose();
    });
    return t;
}

std::vector<double> critical_draws(const MomentModel& model, const SufficientStats& stats,
                                   const Mat& t, const RegionConfig& cfg) {
    const auto& r = cfg.resample;
    std::vector<Vec> z;
    switch (r.scheme) {
        case resampling::Scheme::SimulateZ:
            z = resampling::simulate_z(static_cast<std::size_t>(stats.gamma_hat.size()), r.draws, r.seed);
            break;
        case resampling::Scheme::NonparametricPanel: {
            if (!cfg.panel || !cfg.stat_map)
                throw ConfigError({"bootstrap resampling needs a returns panel"});
            const auto g = estimation::bootstrap_statistics(*cfg.panel, cfg.stat_map, r.draws, r.seed,
                                                            streams::critical_bootstrap);
            z = resampling::standardize_draws(stats, g);
            break;
        }
        case resampling::Scheme::ParametricGaussian: {
            const auto g = resampling::parametric_gamma_draws(stats, r.draws, r.seed);
            z = resampling::standardize_draws(stats, g);
            break;
        }
    }
    (void)model;
    return resampling::sup_from_z(t, z, cfg.two_sided).draws();
}

double upper_quantile(const std::vector<double>& sorted, double alpha) {
    return resampling::CriticalValue(sorted).quantile(alpha);
}

PointStats grid_point_stats(const MomentModel& model, const SufficientStats& stats,
                            const ParamGrid& grid, const WeightSpec& weights) {
    PointStats ps;
    const std::size_t size = grid.size();
    ps.points.resize(size);
    ps.m.assign(size, std::numeric_limits<double>::quiet_NaN());
    ps.s.assign(size, kInf);
    ps.w.assign(size, kInf);
    parallel::for_each_index(size, [&](std::size_t i) {
        ps.points[i] = grid.point(i);
        try {
            ps.m[i] = model.eval(ps.points[i], stats.gamma_hat);
            ps.s[i] = statistics::weight_s(model, stats, ps.points[i], weights);
            ps.w[i] = statistics::weight_w(model, stats, ps.points[i], weights);
        } catch (const InversionError&) {
        } catch (const SingularGradientError&) {
        }
    });
    return ps;
}

struct ThresholdInput {
    std::vector<double> statistic;
    std::vector<std::uint8_t> flagged;
    std::size_t escaped = 0;
};

ThresholdInput lr_values(const SufficientStats& stats, const PointStats& ps, bool two_sided) {
    ThresholdInput out;
    const std::size_t size = ps.m.size();
    out.statistic.resize(size);
    out.flagged.assign(size, 0);
    const double root_n = std::sqrt(stats.n);
    for (std::size_t i = 0; i < size; ++i) {
        if (std::isnan(ps.m[i])) {
            out.statistic[i] = kInf;
            out.flagged[i] = 1;
            continue;
        }
        if (!two_sided && ps.m[i] <= 0.0) {
            out.statistic[i] = 0.0;
            continue;
        }
        const double t = root_n * ps.m[i] / ps.s[i];
        out.statistic[i] = two_sided ? t * t : (t > 0.0 ? t * t : 0.0);
    }
    return out;
}

ThresholdInput wald_values(const MomentModel& model, const SufficientStats& stats,
                           const PointStats& ps, const ParamBox& box,
                           const statistics::ProjectionOptions& options) {
    ThresholdInput out;
    const std::size_t size = ps.m.size();
    out.statistic.assign(size, 0.0);
    out.flagged.assign(size, 0);
    std::vector<std::uint8_t> escaped(size, 0);
    const double root_n = std::sqrt(stats.n);
    parallel::for_each_index(size, [&](std::size_t i) {
        if (ps.m[i] <= 0.0) return;
        try {
            if (std::isnan(ps.m[i])) throw InversionError("not evaluable");
            const auto proj = statistics::project_to_set(model, stats.gamma_hat, ps.points[i], box, options);
            const double t = root_n * proj.distance / ps.w[i];
            out.statistic[i] = t * t;
        } catch (const BoundaryEscapeError&) {
            out.statistic[i] = kInf;
            out.flagged[i] = 1;
            escaped[i] = 1;
        } catch (const NumericError&) {
            out.statistic[i] = kInf;
            out.flagged[i] = 1;
        }
    });
    out.escaped = static_cast<std::size_t>(std::count(escaped.begin(), escaped.end(), std::uint8_t{1}));
    return out;
}

ConfidenceRegion threshold(const GridPtr& grid, ThresholdInput in, double critical, double level,
                           Method method) {
    std::vector<std::uint8_t> mask(in.statistic.size(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = in.statistic[i] <= critical ? 1 : 0;
    const auto flags = static_cast<std::size_t>(std::count(in.flagged.begin(), in.flagged.end(), std::uint8_t{1}));
    return ConfidenceRegion{DiscreteSet::from_mask(grid, std::move(mask)), std::move(in.statistic),
                            critical, level, method, std::move(in.flagged), flags};
}

double band_tolerance(const MomentModel& model, const SufficientStats& stats, const ParamGrid& grid,
                      const RegionConfig& cfg) {
    const double tol = cfg.boundary_tol ? *cfg.boundary_tol
                                        : estimation::default_boundary_tolerance(model, stats, grid);
    if (!(tol > 0.0)) throw InputError("boundary band tolerance must be > 0");
    return tol;
}

}  // namespace

RegionResult build_region(Method method, const MomentModel& model, const SufficientStats& stats,
                          const GridPtr& grid, const RegionConfig& cfg) {
    if (model.theta_dim() != grid->dim())
        throw InputError("grid dimension does not match the model's θ dimension");
    if (static_cast<std::size_t>(stats.gamma_hat.size()) != model.gamma_dim())
        throw InputError("γ̂ dimension does not match the model");
    cfg.resample.validate();
    const double level = 1.0 - cfg.resample.alpha;

    if (method == Method::Projection) {
        std::vector<Vec> draws;
        if (cfg.calibration == projection::Calibration::Bootstrap) {
            draws = cfg.panel && cfg.stat_map
                        ? estimation::bootstrap_statistics(*cfg.panel, cfg.stat_map, cfg.resample.draws,
                                                           cfg.resample.seed, streams::gamma_bootstrap)
                        : resampling::parametric_gamma_draws(stats, cfg.resample.draws, cfg.resample.seed);
        }
        const auto ellipsoid = projection::gamma_region(stats, cfg.resample.alpha, cfg.calibration, draws);
        RegionResult out{projection::projected_region(model, ellipsoid, grid),
                         estimation::estimate_set(model, stats, grid), DiscreteSet(grid), 0.0, {}};
        out.radius2 = ellipsoid.radius2;
        out.ridged = ellipsoid.ridged;
        return out;
    }

    const WeightSpec weights = statistics::calibrate_floor(model, stats, *grid, cfg.weights);
    const PointStats ps = grid_point_stats(model, stats, *grid, weights);
    const double tol = band_tolerance(model, stats, *grid, cfg);
    const auto band = band_members(ps.m, tol);
    if (band.empty())
        throw EmptyBoundaryError("estimated boundary band is empty; use a finer grid or a wider box");

    const StatisticKind kind = method == Method::LR ? StatisticKind::LR : StatisticKind::Wald;
    auto draws = critical_draws(model, stats, t_rows(model, stats, ps, band, kind), cfg);
    const double critical = upper_quantile(draws, cfg.resample.alpha);

    ThresholdInput values = method == Method::LR
                                ? lr_values(stats, ps, cfg.two_sided)
                                : wald_values(model, stats, ps, grid->box(), cfg.projection);
    const std::size_t escaped = values.escaped;
    RegionResult out{threshold(grid, std::move(values), critical, level, method),
                     DiscreteSet::from_predicate(grid, [&](std::size_t i) { return ps.m[i] <= 0.0; }),
                     DiscreteSet(grid, band), 0.0, {}};
    out.boundary_tolerance = tol;
    out.draws = std::move(draws);
    out.escaped = escaped;
    return out;
}

// ---------------------------------------------------------------------------
// Coverage

GaussianReturnsDgp::GaussianReturnsDgp(Vec v, Mat sigma, estimation::OmegaOptions omega)
    : v_(std::move(v)), sigma_(std::move(sigma)), omega_(omega) {
    gamma0_ = hj_gamma(v_, sigma_);
    chol_ = Eigen::LLT<Mat>(sigma_).matrixL();
}

Vec GaussianReturnsDgp::hj_gamma(const Vec& v, const Mat& sigma) {
    if (sigma.rows() != v.size() || sigma.cols() != v.size())
        throw InputError("Σ must be N×N with N = dim v");
    Eigen::LLT<Mat> llt(sigma);
    if (llt.info() != Eigen::Success || !((sigma - sigma.transpose()).norm() <= 1e-12 * sigma.norm()))
        throw InputError("Σ must be symmetric positive definite");
    const Vec ones = Vec::Ones(v.size());
    const Vec pv = llt.solve(v), p1 = llt.solve(ones);
    Vec g(3);
    g << v.dot(pv), v.dot(p1), ones.dot(p1);
    return g;
}

ReturnsPanel GaussianReturnsDgp::simulate(const Vec& v, const Mat& sigma, std::size_t periods,
                                          Engine& engine) {
    Eigen::LLT<Mat> llt(sigma);
    if (llt.info() != Eigen::Success) throw InputError("Σ must be positive definite");
    const Mat l = llt.matrixL();
    std::normal_distribution<double> normal;
    ReturnsPanel panel;
    panel.returns.resize(static_cast<Eigen::Index>(periods), v.size());
    Vec z(v.size());
    for (Eigen::Index t = 0; t < panel.returns.rows(); ++t) {
        for (auto& x : z) x = normal(engine);
        panel.returns.row(t) = (v + l * z).transpose();
    }
    for (Eigen::Index j = 0; j < v.size(); ++j) panel.labels.push_back("asset" + std::to_string(j + 1));
    return panel;
}

Dgp::Draw GaussianReturnsDgp::draw(std::size_t n, std::uint64_t seed, std::size_t rep) const {
    Engine engine = derive_engine(seed, streams::coverage_rep, rep);
    ReturnsPanel panel = simulate(v_, sigma_, n, engine);
    estimation::OmegaOptions omega = omega_;
    omega.seed = mix64(seed ^ mix64(rep + 1));
    auto stats = estimation::estimate_hj_stats(panel, omega);
    return {std::move(stats), std::move(panel)};
}

Dgp::Draw FixedStatsDgp::draw(std::size_t n, std::uint64_t, std::size_t) const {
    const auto d = gamma0_.size();
    return {estimation::make_stats(gamma0_, Mat::Zero(d, d), static_cast<double>(n), "fixed"),
            std::nullopt};
}

CoverageReport coverage_study(const Dgp& dgp, const MomentModel& model, Method method,
                              std::size_t reps, std::size_t n, const GridPtr& grid,
                              const RegionConfig& cfg, std::uint64_t seed) {
    if (reps == 0) throw InputError("coverage study needs at least one replication");
    const auto truth_values = estimation::evaluate_on_grid(model, dgp.true_gamma(), *grid);
    const DiscreteSet truth =
        DiscreteSet::from_predicate(grid, [&](std::size_t i) { return truth_values[i] <= 0.0; });

    CoverageReport report;
    report.reps = reps;
    report.hausdorff.assign(reps, std::numeric_limits<double>::quiet_NaN());
    report.covered_flags.assign(reps, 0);
    for (std::size_t r = 0; r < reps; ++r) {
        Dgp::Draw d = dgp.draw(n, seed, r);
        RegionConfig rep_cfg = cfg;
        rep_cfg.resample.seed = mix64(seed ^ mix64(0xc0fe + r));
        rep_cfg.panel = d.panel ? &*d.panel : nullptr;
        const RegionResult result = build_region(method, model, d.stats, grid, rep_cfg);
        const DiscreteSet& region = result.region.set;
        report.covered_flags[r] = truth.is_subset_of(region) ? 1 : 0;
        if (!truth.empty() && !region.empty()) report.hausdorff[r] = hausdorff(region, truth);
    }
    double sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        report.covered += report.covered_flags[r];
        if (!std::isnan(report.hausdorff[r])) {
            sum += report.hausdorff[r];
            ++report.hausdorff_reps;
        }
    }
    report.coverage = static_cast<double>(report.covered) / static_cast<double>(reps);
    report.std_error = std::sqrt(report.coverage * (1.0 - report.coverage) / static_cast<double>(reps));
    report.mean_hausdorff = report.hausdorff_reps > 0
                                ? sum / static_cast<double>(report.hausdorff_reps)
                                : std::numeric_limits<double>::quiet_NaN();
    return report;
}

// ---------------------------------------------------------------------------
// Invariance

CoordinateTransform::CoordinateTransform(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw InputError("transform needs at least one axis");
}

CoordinateTransform CoordinateTransform::identity(std::size_t dim) {
    return CoordinateTransform(std::vector<Axis>(dim, Axis::Identity));
}

CoordinateTransform CoordinateTransform::log_axis(std::size_t dim, std::size_t axis) {
    if (axis >= dim) throw InputError("log axis out of range");
    std::vector<Axis> axes(dim, Axis::Identity);
    axes[axis] = Axis::Log;
    return CoordinateTransform(std::move(axes));
}

std::string CoordinateTransform::name() const {
    std::string out;
    for (std::size_t k = 0; k < axes_.size(); ++k) {
        if (k) out += ",";
        out += axes_[k] == Axis::Log ? "log" : "id";
    }
    return out;
}

Vec CoordinateTransform::forward(const Vec& theta) const {
    Vec u = theta;
    for (std::size_t k = 0; k < axes_.size(); ++k)
        if (axes_[k] == Axis::Log) u[static_cast<Eigen::Index>(k)] = std::log(theta[static_cast<Eigen::Index>(k)]);
    return u;
}

Vec CoordinateTransform::inverse(const Vec& u) const {
    Vec theta = u;
    for (std::size_t k = 0; k < axes_.size(); ++k)
        if (axes_[k] == Axis::Log) theta[static_cast<Eigen::Index>(k)] = std::exp(u[static_cast<Eigen::Index>(k)]);
    return theta;
}

Vec CoordinateTransform::inverse_jacobian(const Vec& u) const {
    Vec j = Vec::Ones(u.size());
    for (std::size_t k = 0; k < axes_.size(); ++k)
        if (axes_[k] == Axis::Log) j[static_cast<Eigen::Index>(k)] = std::exp(u[static_cast<Eigen::Index>(k)]);
    return j;
}

void CoordinateTransform::check_box(const ParamBox& box) const {
    if (box.dim() != axes_.size()) throw InputError("transform dimension does not match the box");
    for (std::size_t k = 0; k < axes_.size(); ++k) {
        const auto a = static_cast<Eigen::Index>(k);
        if (axes_[k] == Axis::Log && !(box.lower()[a] - box.delta() > 0.0))
            throw InputError("log transform is not invertible on axis " + std::to_string(k) +
                             ": expanded box lower bound must be > 0");
    }
}

ParamBox CoordinateTransform::image(const ParamBox& box) const {
    check_box(box);
    return ParamBox(forward(box.lower()), forward(box.upper()), box.delta());
}

ReparameterizedModel::ReparameterizedModel(ModelPtr base, CoordinateTransform transform)
    : base_(std::move(base)), transform_(std::move(transform)) {
    if (!base_) throw InputError("reparameterized model needs a base model");
    if (transform_.dim() != base_->theta_dim()) throw InputError("transform dimension mismatch");
}

double ReparameterizedModel::eval(const Vec& u, const Vec& gamma) const {
    return base_->eval(transform_.inverse(u), gamma);
}

Vec ReparameterizedModel::grad_theta(const Vec& u, const Vec& gamma) const {
    return base_->grad_theta(transform_.inverse(u), gamma).cwiseProduct(transform_.inverse_jacobian(u));
}

Vec ReparameterizedModel::grad_gamma(const Vec& u, const Vec& gamma) const {
    return base_->grad_gamma(transform_.inverse(u), gamma);
}

InvarianceReport invariance_check(const ModelPtr& model, const SufficientStats& stats,
                                  const GridPtr& grid, const CoordinateTransform& transform,
                                  const RegionConfig& cfg) {
    transform.check_box(grid->box());
    cfg.resample.validate();
    const ReparameterizedModel eta(model, transform);
    const ParamBox eta_box = transform.image(grid->box());
    const double alpha = cfg.resample.alpha;

    const WeightSpec weights = statistics::calibrate_floor(*model, stats, *grid, cfg.weights);
    const WeightSpec unweighted = WeightSpec::unweighted();
    const double tol = band_tolerance(*model, stats, *grid, cfg);

    // θ-coordinate pieces.
    const PointStats base = grid_point_stats(*model, stats, *grid, weights);
    PointStats base_unw = base;
    std::fill(base_unw.w.begin(), base_unw.w.end(), 1.0);

    // η-coordinate pieces at u_i = η(θ_i), carrying ŝ(θ_i) over.
    PointStats moved;
    const std::size_t size = grid->size();
    moved.points.resize(size);
    moved.m.assign(size, std::numeric_limits<double>::quiet_NaN());
    moved.s = base.s;
    moved.w.assign(size, kInf);
    parallel::for_each_index(size, [&](std::size_t i) {
        moved.points[i] = transform.forward(base.points[i]);
        try {
            moved.m[i] = eta.eval(moved.points[i], stats.gamma_hat);
            const double g = eta.grad_theta(moved.points[i], stats.gamma_hat).norm();
            moved.w[i] = g > 0.0 ? moved.s[i] / g : kInf;
        } catch (const InversionError&) {
        } catch (const SingularGradientError&) {
        }
    });
    PointStats moved_unw = moved;
    std::fill(moved_unw.w.begin(), moved_unw.w.end(), 1.0);

    const auto band = band_members(base.m, tol);
    const auto band_eta = band_members(moved.m, tol);
    if (band.empty() || band_eta.empty())
        throw EmptyBoundaryError("estimated boundary band is empty; use a finer grid or a wider box");

    auto critical = [&](const MomentModel& m, const PointStats& ps, const std::vector<std::size_t>& b,
                        StatisticKind kind) {
        return upper_quantile(critical_draws(m, stats, t_rows(m, stats, ps, b, kind), cfg), alpha);
    };
    auto flags = [&](const ThresholdInput& in, double k) {
        std::vector<std::uint8_t> f(in.statistic.size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = in.statistic[i] <= k ? 1 : 0;
        return f;
    };
    auto disagreements = [](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
        std::size_t c = 0;
        for (std::size_t i = 0; i < a.size(); ++i) c += a[i] != b[i];
        return c;
    };

    InvarianceReport report;
    report.points = size;

    report.lr_critical = critical(*model, base, band, StatisticKind::LR);
    report.lr_critical_eta = critical(eta, moved, band_eta, StatisticKind::LR);
    report.lr_disagreements =
        disagreements(flags(lr_values(stats, base, cfg.two_sided), report.lr_critical),
                      flags(lr_values(stats, moved, cfg.two_sided), report.lr_critical_eta));

    auto wald_flags = [&](const MomentModel& m, const PointStats& ps, const std::vector<std::size_t>& b,
                          const ParamBox& box) {
        const double k = critical(m, ps, b, StatisticKind::Wald);
        return flags(wald_values(m, stats, ps, box, cfg.projection), k);
    };
    report.wald_unweighted_disagreements =
        disagreements(wald_flags(*model, base_unw, band, grid->box()),
                      wald_flags(eta, moved_unw, band_eta, eta_box));
    report.wald_weighted_disagreements =
        disagreements(wald_flags(*model, base, band, grid->box()),
                      wald_flags(eta, moved, band_eta, eta_box));
    report.wald_unweighted_rate =
        static_cast<double>(report.wald_unweighted_disagreements) / static_cast<double>(size);
    report.wald_weighted_rate =
        static_cast<double>(report.wald_weighted_disagreements) / static_cast<double>(size);
    return report;
}

// ---------------------------------------------------------------------------
// Consumption SDF band and overlap

RegionResult build_sdf_region(std::span<const double> growth, const GridPtr& grid,
                              const SdfRegionConfig& cfg) {
    if (grid->dim() != 2) throw InputError("consumption SDF region needs a (μ, σ) grid");
    if (cfg.draws < 200) throw ConfigError({"consumption.draws must be >= 200"});
    if (!(cfg.alpha > 0.0 && cfg.alpha < 0.5)) throw ConfigError({"alpha must lie in (0, 0.5)"});
    const std::size_t periods = growth.size();
    const models::ConsumptionSdfModel model(periods, cfg.model);
    const Vec g_hat = Eigen::Map<const Vec>(growth.data(), static_cast<Eigen::Index>(periods));
    if (!model.admissible(g_hat)) throw ModelDomainError("consumption growth must be positive");

    const std::size_t n_sigma = grid->points_per_axis()[1];
    const double nan = std::numeric_limits<double>::quiet_NaN();

    auto curve_means = [&](const Vec& g) {
        std::vector<double> mu(n_sigma, nan);
        for (std::size_t j = 0; j < n_sigma; ++j) {
            const double sigma = grid->coordinate(1, j);
            try {
                const double rho = model.invert_sigma(sigma, g);
                mu[j] = models::consumption_sdf_curve({g.data(), periods}, cfg.model.beta, rho).mean;
            } catch (const InversionError&) {
            }
        }
        return mu;
    };

    const std::vector<double> mu_hat = curve_means(g_hat);
    std::vector<std::vector<double>> mu_star(cfg.draws);
    parallel::for_each_index(cfg.draws, [&](std::size_t b) {
        Engine engine = derive_engine(cfg.seed, streams::growth_bootstrap, b);
        std::uniform_int_distribution<std::size_t> pick(0, periods - 1);
        Vec g(static_cast<Eigen::Index>(periods));
        for (auto& x : g) x = growth[pick(engine)];
        mu_star[b] = curve_means(g);
    });

    // Split-tail SD of the deviations, on the √n scale.
    const double root_n = std::sqrt(static_cast<double>(periods));
    const double scale = root_n * statistics::negative_part_scale();
    std::vector<double> s_pos(n_sigma, nan), s_neg(n_sigma, nan);
    for (std::size_t j = 0; j < n_sigma; ++j) {
        if (std::isnan(mu_hat[j])) continue;
        double sp = 0, sp2 = 0, sn = 0, sn2 = 0, cnt = 0;
        for (const auto& draw : mu_star) {
            if (std::isnan(draw[j])) continue;
            const double d = draw[j] - mu_hat[j];
            const double p = std::max(d, 0.0), q = std::min(d, 0.0);
            sp += p; sp2 += p * p; sn += q; sn2 += q * q; cnt += 1;
        }
        if (cnt < 2) continue;
        s_pos[j] = scale * std::sqrt(std::max(0.0, (sp2 - sp * sp / cnt) / (cnt - 1)));
        s_neg[j] = scale * std::sqrt(std::max(0.0, (sn2 - sn * sn / cnt) / (cnt - 1)));
    }
    std::vector<double> positive;
    for (std::size_t j = 0; j < n_sigma; ++j) {
        if (std::isfinite(s_pos[j]) && s_pos[j] > 0) positive.push_back(s_pos[j]);
        if (std::isfinite(s_neg[j]) && s_neg[j] > 0) positive.push_back(s_neg[j]);
    }
    double floor = std::numeric_limits<double>::min();
    if (!positive.empty()) {
        auto mid = positive.begin() + static_cast<std::ptrdiff_t>(positive.size() / 2);
        std::nth_element(positive.begin(), mid, positive.end());
        floor = std::max(floor, 1e-8 * *mid);
    }
    for (std::size_t j = 0; j < n_sigma; ++j) {
        if (!std::isnan(s_pos[j])) s_pos[j] = std::max(s_pos[j], floor);
        if (!std::isnan(s_neg[j])) s_neg[j] = std::max(s_neg[j], floor);
    }

    // m̂(μ, σ) = μ̂_C(σ) − μ; m̂ > 0 means the point lies below the curve mean.
    const std::size_t size = grid->size();
    std::vector<double> m(size, nan);
    for (std::size_t i = 0; i < size; ++i) {
        const auto idx = grid->multi_index(i);
        m[i] = mu_hat[idx[1]] - grid->coordinate(0, idx[0]);
    }
    const double tol = cfg.boundary_tol ? *cfg.boundary_tol : 0.5 * grid->cell_diagonal();
    std::vector<std::size_t> band;
    std::vector<std::uint8_t> band_sigma(n_sigma, 0);
    for (std::size_t i = 0; i < size; ++i) {
        if (std::abs(m[i]) <= tol) {
            band.push_back(i);
            band_sigma[grid->multi_index(i)[1]] = 1;
        }
    }
    if (band.empty())
        throw EmptyBoundaryError("estimated SDF curve does not cross the grid; widen the box");

    std::vector<double> draws(cfg.draws, 0.0);
    for (std::size_t b = 0; b < cfg.draws; ++b) {
        double best = 0.0;
        for (std::size_t j = 0; j < n_sigma; ++j) {
            if (!band_sigma[j] || std::isnan(mu_star[b][j])) continue;
            const double d = mu_star[b][j] - mu_hat[j];
            const double v = root_n * d / (d >= 0.0 ? s_pos[j] : s_neg[j]);
            best = std::max(best, v * v);
        }
        draws[b] = best;
    }
    std::sort(draws.begin(), draws.end());
    const double critical = upper_quantile(draws, cfg.alpha);

    ThresholdInput in;
    in.statistic.assign(size, kInf);
    in.flagged.assign(size, 0);
    for (std::size_t i = 0; i < size; ++i) {
        const std::size_t j = grid->multi_index(i)[1];
        if (std::isnan(m[i])) {
            in.flagged[i] = 1;
            continue;
        }
        const double s = m[i] >= 0.0 ? s_pos[j] : s_neg[j];
        const double t = root_n * m[i] / s;
        in.statistic[i] = t * t;
    }
    RegionResult out{threshold(grid, std::move(in), critical, 1.0 - cfg.alpha, Method::LR),
                     DiscreteSet::from_predicate(grid, [&](std::size_t i) { return std::abs(m[i]) <= tol; }),
                     DiscreteSet(grid, band), 0.0, {}};
    out.boundary_tolerance = tol;
    out.draws = std::move(draws);
    return out;
}

OverlapReport hj_consumption_overlap(const ConfidenceRegion& hj, const ConfidenceRegion& sdf,
                                     std::span<const double> growth, double beta,
                                     double rho_min, double rho_max, std::size_t steps) {
    if (!hj.set.grid().same_lattice(sdf.set.grid()))
        throw InputError("overlap check needs both regions on the same lattice");
    if (!(rho_max >= rho_min) || rho_min < 0.0 || steps == 0)
        throw InputError("need 0 <= rho_min <= rho_max and steps >= 1");
    const ParamGrid& grid = hj.set.grid();

    OverlapReport report;
    report.combined_level = 1.0 - ((1.0 - hj.level) + (1.0 - sdf.level));
    for (std::size_t k = 0; k <= steps; ++k) {
        const double rho = rho_min + (rho_max - rho_min) * static_cast<double>(k) / static_cast<double>(steps);
        const auto c = models::consumption_sdf_curve(growth, beta, rho);
        Vec p(2);
        p << c.mean, c.sd;
        bool hit = false;
        if (std::isfinite(c.mean) && std::isfinite(c.sd) && grid.box().contains(p)) {
            const std::size_t i = grid.nearest(p);
            hit = hj.set.contains(i) && sdf.set.contains(i);
        }
        report.rho.push_back(rho);
        report.overlap.push_back(hit ? 1 : 0);
        if (hit && !report.threshold) report.threshold = rho;
    }
    auto runs = [&](std::uint8_t want) {
        std::vector<std::pair<double, double>> out;
        std::size_t k = 0;
        while (k < report.rho.size()) {
            if (report.overlap[k] != want) { ++k; continue; }
            std::size_t e = k;
            while (e + 1 < report.rho.size() && report.overlap[e + 1] == want) ++e;
            out.emplace_back(report.rho[k], report.rho[e]);
            k = e + 1;
        }
        return out;
    };
    report.overlap_intervals = runs(1);
    report.rejected_intervals = runs(0);
    return report;
}

}  // namespace setinf::regions

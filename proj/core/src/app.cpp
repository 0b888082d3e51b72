#include "setinf/app.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <ostream>
#include <set>

#include <json.hpp>

#include "setinf/consumption.hpp"
#include "setinf/distance.hpp"
#include "setinf/errors.hpp"
#include "setinf/estimation.hpp"
#include "setinf/io.hpp"
#include "setinf/models.hpp"
#include "setinf/parallel.hpp"
#include "setinf/projection.hpp"
#include "setinf/regions.hpp"
#include "setinf/resampling.hpp"
#include "setinf/special.hpp"
#include "setinf/statistics.hpp"

namespace setinf::app {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// JSON output with 17 significant digits.

void dump(const json& j, std::string& out, int indent) {
    const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
    const std::string close(static_cast<std::size_t>(indent), ' ');
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) { out += "{}"; return; }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad + json(it.key()).dump() + ": ";
                dump(it.value(), out, indent + 2);
            }
            out += "\n" + close + "}";
            return;
        }
        case json::value_t::array: {
            if (j.empty()) { out += "[]"; return; }
            const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
            if (flat) {
                out += "[";
                for (std::size_t k = 0; k < j.size(); ++k) {
                    if (k) out += ", ";
                    dump(j[k], out, indent + 2);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (std::size_t k = 0; k < j.size(); ++k) {
                if (k) out += ",\n";
                out += pad;
                dump(j[k], out, indent + 2);
            }
            out += "\n" + close + "]";
            return;
        }
        case json::value_t::number_float: {
            const double x = j.get<double>();
            out += std::isfinite(x) ? io::format_double(x) : "null";
            return;
        }
        default:
            out += j.dump();
    }
}

std::string to_text(const json& j) {
    std::string out;
    dump(j, out, 0);
    out += "\n";
    return out;
}

json to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
    return a;
}

json to_json(const Mat& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Vec(m.row(r).transpose())));
    return a;
}

// ---------------------------------------------------------------------------
// Config reading: every problem is collected, then reported together.

class Reader {
public:
    Reader(const json& j, std::string path, std::vector<std::string>& issues)
        : j_(j), path_(std::move(path)), issues_(issues) {
        if (!j_.is_object()) issues_.push_back(where() + "must be an object");
    }

    ~Reader() = default;

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.is_object() && j_.contains(key) && !j_.at(key).is_null();
    }

    std::optional<double> number(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const json& v = j_.at(key);
        if (!v.is_number()) return bad(key, "a number"), std::nullopt;
        return v.get<double>();
    }

    std::optional<std::uint64_t> integer(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const json& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            return bad(key, "a non-negative integer"), std::nullopt;
        return v.get<std::uint64_t>();
    }

    std::optional<std::string> string(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const json& v = j_.at(key);
        if (!v.is_string()) return bad(key, "a string"), std::nullopt;
        return v.get<std::string>();
    }

    std::optional<bool> boolean(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const json& v = j_.at(key);
        if (!v.is_boolean()) return bad(key, "true or false"), std::nullopt;
        return v.get<bool>();
    }

    std::optional<Vec> vector(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const json& v = j_.at(key);
        if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); }))
            return bad(key, "an array of numbers"), std::nullopt;
        Vec out(static_cast<Eigen::Index>(v.size()));
        for (std::size_t k = 0; k < v.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[k].get<double>();
        return out;
    }

    std::optional<Mat> matrix(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const json& v = j_.at(key);
        bool ok = v.is_array() && !v.empty();
        std::size_t cols = 0;
        if (ok) {
            cols = v[0].is_array() ? v[0].size() : 0;
            for (const json& row : v)
                ok = ok && row.is_array() && row.size() == cols && cols > 0 &&
                     std::all_of(row.begin(), row.end(), [](const json& e) { return e.is_number(); });
        }
        if (!ok) return bad(key, "a non-empty rectangular array of number arrays"), std::nullopt;
        Mat out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
        for (std::size_t r = 0; r < v.size(); ++r)
            for (std::size_t c = 0; c < cols; ++c)
                out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r][c].get<double>();
        return out;
    }

    std::optional<std::vector<std::string>> strings(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const json& v = j_.at(key);
        if (v.is_string()) return std::vector<std::string>{v.get<std::string>()};
        if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); }))
            return bad(key, "a string or an array of strings"), std::nullopt;
        return v.get<std::vector<std::string>>();
    }

    const json* object(const std::string& key) {
        if (!has(key)) return nullptr;
        const json& v = j_.at(key);
        if (!v.is_object()) return bad(key, "an object"), nullptr;
        return &v;
    }

    const json* array(const std::string& key) {
        if (!has(key)) return nullptr;
        const json& v = j_.at(key);
        if (!v.is_array()) return bad(key, "an array"), nullptr;
        return &v;
    }

    void issue(const std::string& key, const std::string& what) {
        issues_.push_back(where() + key + ": " + what);
    }

    /// Keys present in the object but never asked for.
    void finish() {
        if (!j_.is_object()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) issues_.push_back(where() + it.key() + ": unknown key");
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string where() const { return path_.empty() ? "" : path_ + "."; }
    void bad(const std::string& key, const std::string& expected) {
        issues_.push_back(where() + key + ": expected " + expected);
    }

    const json& j_;
    std::string path_;
    std::vector<std::string>& issues_;
    std::set<std::string> seen_;
};

struct Study {
    double estimate = 0.0;
    double se = 0.0;
    double dlogp = 0.0;
};

struct Config {
    std::string model = "hj";
    std::optional<std::string> data;

    bool synthetic = false;
    Vec synth_v;
    Mat synth_sigma;
    Mat synth_loadings;  ///< k×N
    std::size_t synth_periods = 500;

    std::optional<std::size_t> factors;
    bool precision_form = false;

    std::optional<Vec> grid_lower, grid_upper;
    std::vector<std::size_t> grid_points;
    std::optional<double> grid_delta;

    std::vector<Method> methods{Method::LR};
    std::string weights = "anderson_darling";
    bool two_sided = false;
    double alpha = 0.05;
    resampling::Scheme scheme = resampling::Scheme::SimulateZ;
    bool scheme_set = false;
    std::size_t draws = 1000;
    estimation::OmegaMethod omega_method = estimation::OmegaMethod::Bootstrap;
    std::size_t omega_draws = 1000;
    projection::Calibration calibration = projection::Calibration::ChiSquare;
    std::optional<double> boundary_tol;

    double lambda = 10.0;
    std::vector<Study> studies;

    std::vector<double> growth;
    std::optional<std::string> growth_file;
    double beta = 0.95;
    double rho_max = 500.0;
    double rho_min = 0.0;
    std::size_t rho_steps = 1000;

    std::size_t coverage_reps = 200;
    std::size_t coverage_n = 250;

    std::optional<std::size_t> log_axis;

    std::uint64_t seed = 1;
    std::uint64_t resample_seed = 1;
    std::uint64_t omega_seed = 1;
    std::uint64_t synth_seed = 1;
    std::uint64_t coverage_seed = 1;

    std::string output = "out";
    unsigned workers = 0;
    fs::path base_dir;  ///< relative data paths resolve against the config file
};

const std::set<std::string> kModels{"hj", "markowitz", "markowitz_complement", "mf", "chetty",
                                    "consumption_sdf"};

bool hj_family(const std::string& m) {
    return m == "hj" || m == "markowitz" || m == "markowitz_complement";
}

Config parse_config(const json& root, const Overrides& ov, fs::path base_dir) {
    std::vector<std::string> issues;
    Config c;
    c.base_dir = std::move(base_dir);
    Reader r(root, "", issues);

    if (auto v = r.string("model")) c.model = *v;
    c.data = r.string("data");
    if (auto v = r.integer("seed")) c.seed = *v;
    std::optional<std::uint64_t> resample_seed, omega_seed, synth_seed, coverage_seed;

    if (const json* s = r.object("synthetic")) {
        Reader sr(*s, "synthetic", issues);
        c.synthetic = true;
        if (auto v = sr.vector("v")) c.synth_v = *v; else sr.issue("v", "required");
        if (auto m = sr.matrix("sigma")) c.synth_sigma = *m; else sr.issue("sigma", "required");
        if (auto m = sr.matrix("factor_loadings")) c.synth_loadings = *m;
        if (auto v = sr.integer("T")) c.synth_periods = static_cast<std::size_t>(*v);
        synth_seed = sr.integer("seed");
        sr.finish();
        if (c.synth_v.size() > 0 && c.synth_sigma.size() > 0 &&
            (c.synth_sigma.rows() != c.synth_v.size() || c.synth_sigma.cols() != c.synth_v.size()))
            issues.push_back("synthetic.sigma: must be N×N with N = length of synthetic.v");
        if (c.synth_loadings.size() > 0 && c.synth_loadings.cols() != c.synth_v.size())
            issues.push_back("synthetic.factor_loadings: must be k×N");
    }

    if (auto v = r.integer("factors")) c.factors = static_cast<std::size_t>(*v);
    if (auto v = r.boolean("precision_form")) c.precision_form = *v;

    if (const json* g = r.object("grid")) {
        Reader gr(*g, "grid", issues);
        c.grid_lower = gr.vector("lower");
        c.grid_upper = gr.vector("upper");
        c.grid_delta = gr.number("delta");
        if (gr.has("points")) {
            const json& p = g->at("points");
            if (p.is_number_unsigned() || p.is_number_integer())
                c.grid_points = {p.get<std::size_t>()};
            else if (p.is_array() && std::all_of(p.begin(), p.end(), [](const json& e) { return e.is_number_integer(); }))
                c.grid_points = p.get<std::vector<std::size_t>>();
            else
                gr.issue("points", "expected an integer or an array of integers");
        }
        gr.finish();
    }

    if (auto v = r.strings("methods")) {
        c.methods.clear();
        for (const auto& m : *v) {
            try {
                c.methods.push_back(method_from_string(m));
            } catch (const Error& e) {
                issues.push_back(std::string("methods: ") + e.what());
            }
        }
    }
    if (auto v = r.string("weights")) c.weights = *v;
    if (auto v = r.boolean("two_sided")) c.two_sided = *v;
    if (auto v = r.number("alpha")) c.alpha = *v;
    c.boundary_tol = r.number("boundary_tol");

    if (const json* s = r.object("resampling")) {
        Reader rr(*s, "resampling", issues);
        if (auto v = rr.string("scheme")) {
            try {
                c.scheme = resampling::scheme_from_string(*v);
                c.scheme_set = true;
            } catch (const ConfigError& e) {
                for (const auto& i : e.issues()) issues.push_back("resampling.scheme: " + i);
            }
        }
        if (auto v = rr.integer("draws")) c.draws = static_cast<std::size_t>(*v);
        resample_seed = rr.integer("seed");
        rr.finish();
    }
    if (const json* s = r.object("omega")) {
        Reader orr(*s, "omega", issues);
        if (auto v = orr.string("method")) {
            if (*v == "bootstrap") c.omega_method = estimation::OmegaMethod::Bootstrap;
            else if (*v == "delta") c.omega_method = estimation::OmegaMethod::DeltaMethod;
            else orr.issue("method", "expected bootstrap or delta");
        }
        if (auto v = orr.integer("draws")) c.omega_draws = static_cast<std::size_t>(*v);
        omega_seed = orr.integer("seed");
        orr.finish();
    }
    if (const json* s = r.object("projection")) {
        Reader pr(*s, "projection", issues);
        if (auto v = pr.string("calibration")) {
            try {
                c.calibration = projection::calibration_from_string(*v);
            } catch (const ConfigError& e) {
                for (const auto& i : e.issues()) issues.push_back("projection.calibration: " + i);
            }
        }
        pr.finish();
    }

    if (auto v = r.number("lambda")) c.lambda = *v;
    if (const json* s = r.array("studies")) {
        for (std::size_t k = 0; k < s->size(); ++k) {
            Reader sr((*s)[k], "studies[" + std::to_string(k) + "]", issues);
            Study st;
            if (auto v = sr.number("estimate")) st.estimate = *v; else sr.issue("estimate", "required");
            if (auto v = sr.number("se")) st.se = *v; else sr.issue("se", "required");
            if (auto v = sr.number("dlogp")) st.dlogp = *v; else sr.issue("dlogp", "required");
            sr.finish();
            if (st.se < 0.0) sr.issue("se", "must be >= 0");
            c.studies.push_back(st);
        }
    }

    if (const json* s = r.object("consumption")) {
        Reader cr(*s, "consumption", issues);
        if (auto v = cr.vector("growth")) c.growth.assign(v->data(), v->data() + v->size());
        c.growth_file = cr.string("growth_file");
        if (auto v = cr.number("beta")) c.beta = *v;
        if (auto v = cr.number("rho_max")) c.rho_max = *v;
        if (auto v = cr.number("rho_min")) c.rho_min = *v;
        if (auto v = cr.integer("rho_steps")) c.rho_steps = static_cast<std::size_t>(*v);
        cr.finish();
    }
    if (const json* s = r.object("coverage")) {
        Reader cr(*s, "coverage", issues);
        if (auto v = cr.integer("reps")) c.coverage_reps = static_cast<std::size_t>(*v);
        if (auto v = cr.integer("n")) c.coverage_n = static_cast<std::size_t>(*v);
        coverage_seed = cr.integer("seed");
        cr.finish();
    }
    if (const json* s = r.object("invariance")) {
        Reader ir(*s, "invariance", issues);
        if (auto v = ir.integer("log_axis")) c.log_axis = static_cast<std::size_t>(*v);
        ir.finish();
    }
    if (auto v = r.string("output")) c.output = *v;
    if (auto v = r.integer("workers")) c.workers = static_cast<unsigned>(*v);
    r.finish();

    // Command-line overrides.
    if (ov.model) c.model = *ov.model;
    if (ov.data) c.data = *ov.data;
    if (ov.weights) c.weights = *ov.weights;
    if (ov.alpha) c.alpha = *ov.alpha;
    if (ov.draws) c.draws = *ov.draws;
    if (ov.resolution) c.grid_points = {*ov.resolution};
    if (ov.workers) c.workers = *ov.workers;
    if (ov.out) c.output = *ov.out;
    if (!ov.methods.empty()) {
        c.methods.clear();
        for (const auto& m : ov.methods) {
            try {
                c.methods.push_back(method_from_string(m));
            } catch (const Error& e) {
                issues.push_back(std::string("--method: ") + e.what());
            }
        }
    }
    if (ov.seed) {
        c.seed = *ov.seed;
        resample_seed = omega_seed = synth_seed = coverage_seed = std::nullopt;
    }
    c.resample_seed = resample_seed.value_or(c.seed);
    c.omega_seed = omega_seed.value_or(mix64(c.seed ^ 0x01));
    c.synth_seed = synth_seed.value_or(c.seed);
    c.coverage_seed = coverage_seed.value_or(c.seed);

    // Semantic checks.
    if (!kModels.count(c.model)) issues.push_back("model: unknown model '" + c.model + "'");
    static const std::set<std::string> kWeights{"anderson_darling", "unweighted", "negative_part_sd"};
    if (!kWeights.count(c.weights)) issues.push_back("weights: expected anderson_darling, unweighted or negative_part_sd");
    if (!(c.alpha > 0.0 && c.alpha < 0.5)) issues.push_back("alpha: must lie in (0, 0.5)");
    if (c.draws < 200) issues.push_back("resampling.draws: must be >= 200");
    if (c.omega_draws < 100) issues.push_back("omega.draws: must be >= 100");
    if (!(c.lambda > 0.0)) issues.push_back("lambda: must be > 0");
    if (c.methods.empty()) issues.push_back("methods: at least one method required");
    for (std::size_t p : c.grid_points)
        if (p < 2) issues.push_back("grid.points: need at least 2 points per axis");
    if (c.model == "chetty" && c.studies.empty()) issues.push_back("studies: chetty needs at least one study");
    if (c.model == "mf" && !c.factors && c.synth_loadings.size() == 0)
        issues.push_back("factors: mf needs the number of factor columns");
    if (c.model == "consumption_sdf" && c.growth.empty() && !c.growth_file)
        issues.push_back("consumption.growth: consumption_sdf needs a growth series");
    if (c.data && c.synthetic) issues.push_back("data: give either data or synthetic, not both");
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return c;
}

json echo(const Config& c) {
    json j;
    j["model"] = c.model;
    if (c.data) j["data"] = *c.data;
    if (c.synthetic) {
        j["synthetic"] = {{"v", to_json(c.synth_v)}, {"sigma", to_json(c.synth_sigma)},
                          {"T", c.synth_periods}, {"seed", c.synth_seed}};
        if (c.synth_loadings.size() > 0) j["synthetic"]["factor_loadings"] = to_json(c.synth_loadings);
    }
    if (c.factors) j["factors"] = *c.factors;
    j["precision_form"] = c.precision_form;
    json grid = json::object();
    if (c.grid_lower) grid["lower"] = to_json(*c.grid_lower);
    if (c.grid_upper) grid["upper"] = to_json(*c.grid_upper);
    if (c.grid_delta) grid["delta"] = *c.grid_delta;
    if (c.grid_points.size() == 1) grid["points"] = c.grid_points.front();
    else if (!c.grid_points.empty()) grid["points"] = c.grid_points;
    if (!grid.empty()) j["grid"] = grid;
    json methods = json::array();
    for (Method m : c.methods) methods.push_back(std::string(to_string(m)));
    j["methods"] = methods;
    j["weights"] = c.weights;
    j["two_sided"] = c.two_sided;
    j["alpha"] = c.alpha;
    j["seed"] = c.seed;
    j["resampling"] = {{"scheme", std::string(resampling::to_string(c.scheme))},
                       {"draws", c.draws},
                       {"seed", c.resample_seed}};
    j["omega"] = {{"method", c.omega_method == estimation::OmegaMethod::Bootstrap ? "bootstrap" : "delta"},
                  {"draws", c.omega_draws},
                  {"seed", c.omega_seed}};
    j["projection"] = {{"calibration", std::string(projection::to_string(c.calibration))}};
    if (c.boundary_tol) j["boundary_tol"] = *c.boundary_tol;
    if (c.model == "chetty") {
        j["lambda"] = c.lambda;
        json studies = json::array();
        for (const auto& s : c.studies) studies.push_back({{"estimate", s.estimate}, {"se", s.se}, {"dlogp", s.dlogp}});
        j["studies"] = studies;
    }
    if (c.model == "consumption_sdf") {
        j["consumption"] = {{"beta", c.beta}, {"rho_max", c.rho_max}, {"rho_min", c.rho_min},
                            {"rho_steps", c.rho_steps}};
        if (c.growth_file) j["consumption"]["growth_file"] = *c.growth_file;
        else j["consumption"]["growth"] = c.growth;
    }
    j["coverage"] = {{"reps", c.coverage_reps}, {"n", c.coverage_n}, {"seed", c.coverage_seed}};
    if (c.log_axis) j["invariance"] = {{"log_axis", *c.log_axis}};
    j["output"] = c.output;
    return j;
}

// ---------------------------------------------------------------------------
// Pipeline pieces

struct Problem {
    models::ModelPtr model;
    std::vector<std::string> axes;
    std::optional<estimation::ReturnsPanel> panel;
    estimation::StatMap stat_map;
    std::optional<estimation::SufficientStats> stats;
    GridPtr grid;
};

fs::path resolve(const Config& c, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || c.base_dir.empty() ? path : c.base_dir / path;
}

estimation::ReturnsPanel synth_panel(const Config& c) {
    Engine engine = derive_engine(c.synth_seed, streams::synth_panel, 0);
    if (c.synth_loadings.size() == 0)
        return regions::GaussianReturnsDgp::simulate(c.synth_v, c.synth_sigma, c.synth_periods, engine);
    // r_t = v + B'z_t + e_t with z_t ~ N(0, I_k), e_t ~ N(0, Σ).
    const Mat& b = c.synth_loadings;
    Eigen::LLT<Mat> llt(c.synth_sigma);
    if (llt.info() != Eigen::Success) throw InputError("synthetic.sigma must be positive definite");
    const Mat l = llt.matrixL();
    std::normal_distribution<double> normal;
    estimation::ReturnsPanel panel;
    const auto t = static_cast<Eigen::Index>(c.synth_periods);
    panel.returns.resize(t, c.synth_v.size());
    panel.factors.resize(t, b.rows());
    Vec z(b.rows()), e(c.synth_v.size());
    for (Eigen::Index row = 0; row < t; ++row) {
        for (auto& x : z) x = normal(engine);
        for (auto& x : e) x = normal(engine);
        panel.returns.row(row) = (c.synth_v + b.transpose() * z + l * e).transpose();
        panel.factors.row(row) = z.transpose();
    }
    for (Eigen::Index j = 0; j < c.synth_v.size(); ++j) panel.labels.push_back("asset" + std::to_string(j + 1));
    for (Eigen::Index j = 0; j < b.rows(); ++j) panel.factor_labels.push_back("z" + std::to_string(j + 1));
    return panel;
}

std::optional<estimation::ReturnsPanel> load_panel(const Config& c) {
    if (c.data) return io::read_returns_csv(resolve(c, *c.data));
    if (c.synthetic) return synth_panel(c);
    return std::nullopt;
}

std::vector<double> load_growth(const Config& c) {
    if (c.growth_file) return io::read_series_csv(resolve(c, *c.growth_file));
    return c.growth;
}

models::ModelPtr make_model(const Config& c, std::size_t periods) {
    if (c.model == "hj") return std::make_shared<models::HjModel>();
    if (c.model == "markowitz") return std::make_shared<models::MarkowitzModel>(false);
    if (c.model == "markowitz_complement") return std::make_shared<models::MarkowitzModel>(true);
    if (c.model == "mf") {
        const std::size_t k = c.factors ? *c.factors : static_cast<std::size_t>(c.synth_loadings.rows());
        return std::make_shared<models::MultiFactorModel>(k);
    }
    if (c.model == "chetty") {
        std::vector<models::ModelPtr> parts;
        for (const auto& s : c.studies) parts.push_back(std::make_shared<models::FrictionModel>(s.dlogp));
        return std::make_shared<models::SmoothMaxModel>(std::move(parts), c.lambda);
    }
    return std::make_shared<models::ConsumptionSdfModel>(
        periods, models::ConsumptionSdfModel::Options{c.beta, c.rho_max, 1e-10});
}

std::vector<std::string> axis_names(const Config& c, std::size_t dim) {
    if (c.model == "chetty") return {"epsilon", "delta"};
    if (c.model == "mf") {
        std::vector<std::string> a{"mu"};
        for (std::size_t k = 1; k + 1 < dim; ++k) a.push_back("beta" + std::to_string(k));
        a.push_back("sigma");
        return a;
    }
    return {"mu", "sigma"};
}

GridPtr make_grid(const Config& c, const models::MomentModel& model) {
    const ParamBox def = model.default_box();
    const Vec lower = c.grid_lower.value_or(def.lower());
    const Vec upper = c.grid_upper.value_or(def.upper());
    const double delta = c.grid_delta.value_or(def.delta());
    const auto d = model.theta_dim();
    std::vector<std::string> issues;
    if (static_cast<std::size_t>(lower.size()) != d) issues.push_back("grid.lower: expected " + std::to_string(d) + " entries");
    if (static_cast<std::size_t>(upper.size()) != d) issues.push_back("grid.upper: expected " + std::to_string(d) + " entries");
    std::vector<std::size_t> points = c.grid_points;
    if (points.empty()) points = {d <= 2 ? std::size_t{200} : std::size_t{25}};
    if (points.size() == 1) points.assign(d, points.front());
    if (points.size() != d) issues.push_back("grid.points: expected 1 or " + std::to_string(d) + " entries");
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return std::make_shared<const ParamGrid>(ParamBox(lower, upper, delta), points);
}

Problem prepare(const Config& c) {
    Problem p;
    if (c.model == "consumption_sdf") {
        const auto growth = load_growth(c);
        p.model = make_model(c, growth.size());
        p.panel = load_panel(c);
    } else if (c.model == "chetty") {
        p.model = make_model(c, 0);
        const auto j = static_cast<Eigen::Index>(c.studies.size());
        Vec g(j), var(j);
        for (Eigen::Index k = 0; k < j; ++k) {
            g[k] = c.studies[static_cast<std::size_t>(k)].estimate;
            var[k] = std::pow(c.studies[static_cast<std::size_t>(k)].se, 2);
        }
        p.stats = estimation::make_stats(g, var.asDiagonal(), 1.0, "chetty");
    } else {
        p.panel = load_panel(c);
        if (!p.panel) throw ConfigError({"data: a returns CSV or a synthetic section is required"});
        p.model = make_model(c, 0);
        estimation::OmegaOptions omega{c.omega_method, c.omega_draws, c.omega_seed};
        if (c.model == "mf") {
            const bool precision = c.precision_form;
            p.stat_map = [precision](const estimation::ReturnsPanel& x) { return estimation::mf_gamma(x, precision); };
            p.stats = estimation::estimate_mf_stats(*p.panel, omega, c.factors, precision);
        } else {
            p.stat_map = estimation::hj_gamma;
            p.stats = estimation::estimate_hj_stats(*p.panel, omega);
        }
    }
    p.axes = axis_names(c, p.model->theta_dim());
    p.grid = make_grid(c, *p.model);
    return p;
}

statistics::WeightSpec make_weights(const Config& c, const Problem& p) {
    if (c.weights == "unweighted") return statistics::WeightSpec::unweighted();
    if (c.weights == "anderson_darling") return statistics::WeightSpec::anderson_darling();
    std::vector<Vec> draws;
    if (c.model == "chetty") {
        std::vector<std::pair<double, double>> est;
        for (const auto& s : c.studies) est.emplace_back(s.estimate, s.se);
        draws = resampling::parametric_studies_bootstrap(est, c.draws, c.resample_seed);
    } else if (p.panel && p.stat_map) {
        draws = estimation::bootstrap_statistics(*p.panel, p.stat_map, c.draws, c.resample_seed,
                                                 streams::weight_bootstrap);
    } else {
        draws = resampling::parametric_gamma_draws(*p.stats, c.draws, mix64(c.resample_seed ^ 0x77));
    }
    return statistics::bootstrap_sd_weight(p.model, p.stats->gamma_hat, std::move(draws), p.stats->n);
}

regions::RegionConfig region_config(const Config& c, const Problem& p) {
    regions::RegionConfig rc;
    rc.resample.scheme = c.scheme_set ? c.scheme
                         : c.model == "chetty" ? resampling::Scheme::ParametricGaussian
                                               : resampling::Scheme::SimulateZ;
    rc.resample.draws = c.draws;
    rc.resample.seed = c.resample_seed;
    rc.resample.alpha = c.alpha;
    rc.weights = make_weights(c, p);
    rc.two_sided = c.two_sided;
    rc.boundary_tol = c.boundary_tol;
    rc.calibration = c.calibration;
    rc.panel = p.panel ? &*p.panel : nullptr;
    rc.stat_map = p.stat_map;
    return rc;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return out;
}

json stats_json(const estimation::SufficientStats& s) {
    return {{"gamma_hat", to_json(s.gamma_hat)},
            {"omega_hat", to_json(s.omega_hat)},
            {"n", s.n},
            {"clipped_mass", s.clipped_mass},
            {"clip_warning", s.clip_warning}};
}

/// Lattice points of `a` farther than one cell diagonal from every point of `b`.
std::size_t outside_by_more_than_a_cell(const DiscreteSet& a, const DiscreteSet& b) {
    if (b.empty()) return a.size();
    const double cell = a.grid().cell_diagonal() * (1.0 + 1e-9);
    std::size_t count = 0;
    const auto bp = b.points();
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (b.contains(a.members()[k])) continue;
        const Vec p = a.point(k);
        bool near = false;
        for (const Vec& q : bp)
            if ((p - q).norm() <= cell) { near = true; break; }
        if (!near) ++count;
    }
    return count;
}

json chetty_diagnostics(const Config& c, const Problem& p) {
    const auto& sm = static_cast<const models::SmoothMaxModel&>(*p.model);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.grid->size(); ++i) {
        const auto g = sm.component_values(p.grid->point(i), p.stats->gamma_hat);
        worst = std::max(worst, *std::max_element(g.begin(), g.end()) - sm.eval(p.grid->point(i), p.stats->gamma_hat));
    }
    return {{"lambda", c.lambda},
            {"components", sm.size()},
            {"smooth_max_error_bound", sm.error_bound()},
            {"max_observed_gap", worst}};
}

fs::path out_dir(const Config& c) {
    const fs::path dir(c.output);
    fs::create_directories(dir);
    return dir;
}

void write_frontier(const fs::path& dir, const Problem& p, const DiscreteSet& band) {
    const auto values = estimation::evaluate_on_grid(*p.model, p.stats->gamma_hat, *p.grid);
    io::write_points_csv(dir / "frontier.csv", band, values, p.axes, "m");
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_estimate(const Config& c) {
    if (c.model == "consumption_sdf") throw ConfigError({"model: estimate does not apply to consumption_sdf; use region"});
    const Problem p = prepare(c);
    const fs::path dir = out_dir(c);
    const auto est = estimation::estimate_set(*p.model, *p.stats, p.grid);
    const double tol = c.boundary_tol ? *c.boundary_tol
                                      : estimation::default_boundary_tolerance(*p.model, *p.stats, *p.grid);
    const auto band = estimation::estimate_boundary(*p.model, *p.stats, p.grid, tol);
    write_frontier(dir, p, band);
    const auto values = estimation::evaluate_on_grid(*p.model, p.stats->gamma_hat, *p.grid);
    io::write_points_csv(dir / "estimate.csv", est, values, p.axes, "m");

    json s;
    s["command"] = "estimate";
    s["config"] = echo(c);
    s["model"] = p.model->name();
    s["stats"] = stats_json(*p.stats);
    s["estimate"] = {{"points", est.size()}, {"area", est.lattice_volume()}};
    s["boundary"] = {{"points", band.size()}, {"tolerance", tol}};
    if (c.model == "chetty") s["smooth_max"] = chetty_diagnostics(c, p);
    io::write_text(dir / "summary.json", to_text(s));
}

void cmd_region_sdf(const Config& c) {
    const auto growth = load_growth(c);
    Problem p;
    p.model = make_model(c, growth.size());
    p.axes = {"mu", "sigma"};
    p.grid = make_grid(c, *p.model);
    const fs::path dir = out_dir(c);

    regions::SdfRegionConfig sc;
    sc.model = {c.beta, c.rho_max, 1e-10};
    sc.draws = c.draws;
    sc.seed = c.resample_seed;
    sc.alpha = c.alpha;
    sc.boundary_tol = c.boundary_tol;
    const auto sdf = regions::build_sdf_region(growth, p.grid, sc);
    io::write_region_csv(dir / "region_lr.csv", sdf.region, p.axes);
    {
        std::vector<double> zeros(p.grid->size(), 0.0);
        io::write_points_csv(dir / "frontier.csv", sdf.boundary, zeros, p.axes, "m");
    }

    json s;
    s["command"] = "region";
    s["config"] = echo(c);
    s["model"] = p.model->name();
    s["periods"] = growth.size();
    s["regions"]["LR"] = {{"critical_value", sdf.region.critical_value},
                          {"level", sdf.region.level},
                          {"points", sdf.region.set.size()},
                          {"area", sdf.region.set.lattice_volume()},
                          {"flagged", sdf.region.flag_count}};

    const auto panel = load_panel(c);
    if (panel) {
        // HJ region on the same lattice, then the curve-overlap check.
        const auto hj = std::make_shared<models::HjModel>();
        const auto stats = estimation::estimate_hj_stats(*panel, {c.omega_method, c.omega_draws, c.omega_seed});
        regions::RegionConfig rc;
        rc.resample = {c.scheme_set ? c.scheme : resampling::Scheme::SimulateZ, c.draws, c.resample_seed, c.alpha};
        rc.boundary_tol = std::nullopt;
        rc.panel = &*panel;
        rc.stat_map = estimation::hj_gamma;
        const auto hj_region = regions::build_region(Method::LR, *hj, stats, p.grid, rc);
        io::write_region_csv(dir / "region_hj_lr.csv", hj_region.region, p.axes);
        const auto ov = regions::hj_consumption_overlap(hj_region.region, sdf.region, growth, c.beta,
                                                        c.rho_min, c.rho_max, c.rho_steps);
        json intervals = json::array(), rejected = json::array();
        for (const auto& [a, b] : ov.overlap_intervals) intervals.push_back({a, b});
        for (const auto& [a, b] : ov.rejected_intervals) rejected.push_back({a, b});
        s["hj_stats"] = stats_json(stats);
        s["regions"]["HJ_LR"] = {{"critical_value", hj_region.region.critical_value},
                                 {"points", hj_region.region.set.size()},
                                 {"area", hj_region.region.set.lattice_volume()}};
        s["overlap"] = {{"overlap_intervals", intervals},
                        {"rejected_intervals", rejected},
                        {"threshold", ov.threshold ? json(*ov.threshold) : json(nullptr)},
                        {"combined_level", ov.combined_level}};
    }
    io::write_text(dir / "summary.json", to_text(s));
}

void cmd_region(const Config& c) {
    if (c.model == "consumption_sdf") return cmd_region_sdf(c);
    const Problem p = prepare(c);
    const fs::path dir = out_dir(c);
    const auto rc = region_config(c, p);

    json s;
    s["command"] = "region";
    s["config"] = echo(c);
    s["model"] = p.model->name();
    s["stats"] = stats_json(*p.stats);

    std::map<Method, regions::RegionResult> built;
    for (Method m : c.methods) {
        if (built.count(m)) continue;
        auto r = regions::build_region(m, *p.model, *p.stats, p.grid, rc);
        io::write_region_csv(dir / ("region_" + lower(to_string(m)) + ".csv"), r.region, p.axes);
        json rj{{"critical_value", r.region.critical_value},
                {"level", r.region.level},
                {"points", r.region.set.size()},
                {"area", r.region.set.lattice_volume()},
                {"flagged", r.region.flag_count},
                {"contains_estimate", r.estimate.is_subset_of(r.region.set)}};
        if (m == Method::Projection) {
            rj["radius2"] = r.radius2;
            rj["ridged"] = r.ridged;
        } else {
            rj["boundary_points"] = r.boundary.size();
            rj["boundary_tolerance"] = r.boundary_tolerance;
            rj["escaped"] = r.escaped;
        }
        s["regions"][std::string(to_string(m))] = rj;
        built.emplace(m, std::move(r));
    }
    const auto& first = built.begin()->second;
    s["estimate"] = {{"points", first.estimate.size()}, {"area", first.estimate.lattice_volume()}};
    if (!first.boundary.empty()) write_frontier(dir, p, first.boundary);
    else write_frontier(dir, p, estimation::estimate_boundary(*p.model, *p.stats, p.grid, c.boundary_tol));

    if (built.count(Method::Projection)) {
        const auto& proj = built.at(Method::Projection).region.set;
        for (Method m : {Method::LR, Method::Wald}) {
            if (!built.count(m)) continue;
            const auto& reg = built.at(m).region.set;
            s["containment"][std::string(to_string(m)) + "_in_Projection"] = {
                {"subset", reg.is_subset_of(proj)},
                {"points_beyond_one_cell", outside_by_more_than_a_cell(reg, proj)},
                {"area_ratio", proj.lattice_volume() > 0 ? reg.lattice_volume() / proj.lattice_volume() : 0.0}};
        }
    }
    if (c.model == "chetty") s["smooth_max"] = chetty_diagnostics(c, p);
    io::write_text(dir / "summary.json", to_text(s));
}

void cmd_coverage(const Config& c) {
    if (!hj_family(c.model)) throw ConfigError({"model: coverage supports hj, markowitz and markowitz_complement"});
    if (!c.synthetic) throw ConfigError({"synthetic: coverage needs a synthetic Gaussian dgp (v, sigma)"});
    const auto model = make_model(c, 0);
    const GridPtr grid = make_grid(c, *model);
    const fs::path dir = out_dir(c);
    const regions::GaussianReturnsDgp dgp(c.synth_v, c.synth_sigma, {c.omega_method, c.omega_draws, 0});

    regions::RegionConfig rc;
    rc.resample = {c.scheme_set ? c.scheme : resampling::Scheme::SimulateZ, c.draws, 0, c.alpha};
    if (c.weights == "unweighted") rc.weights = statistics::WeightSpec::unweighted();
    else if (c.weights == "negative_part_sd") throw ConfigError({"weights: coverage supports anderson_darling or unweighted"});
    rc.two_sided = c.two_sided;
    rc.boundary_tol = c.boundary_tol;
    rc.calibration = c.calibration;
    rc.stat_map = estimation::hj_gamma;

    json s;
    s["command"] = "coverage";
    s["config"] = echo(c);
    s["model"] = model->name();
    s["true_gamma"] = to_json(dgp.true_gamma());
    for (Method m : c.methods) {
        const auto rep = regions::coverage_study(dgp, *model, m, c.coverage_reps, c.coverage_n, grid, rc, c.coverage_seed);
        json h = json::array();
        for (double d : rep.hausdorff) h.push_back(d);
        s["coverage"][std::string(to_string(m))] = {{"reps", rep.reps},
                                                    {"covered", rep.covered},
                                                    {"coverage", rep.coverage},
                                                    {"std_error", rep.std_error},
                                                    {"nominal", 1.0 - c.alpha},
                                                    {"mean_hausdorff", rep.mean_hausdorff},
                                                    {"hausdorff", h}};
    }
    io::write_text(dir / "summary.json", to_text(s));
}

void cmd_synth(const Config& c) {
    if (!c.synthetic) throw ConfigError({"synthetic: synth needs a synthetic section (v, sigma, T)"});
    const fs::path dir = out_dir(c);
    const auto panel = synth_panel(c);
    io::write_returns_csv(dir / "returns.csv", panel);

    Mat cov = c.synth_sigma;
    if (c.synth_loadings.size() > 0) cov += c.synth_loadings.transpose() * c.synth_loadings;
    const Vec gamma0 = regions::GaussianReturnsDgp::hj_gamma(c.synth_v, cov);
    json t;
    t["config"] = echo(c);
    t["gamma0"] = to_json(gamma0);
    t["sigma_hj_at_zero"] = std::sqrt(gamma0[2]);
    t["frontier_minimum"] = {{"mu", gamma0[1] / gamma0[0]},
                             {"sigma", models::HjModel::frontier(gamma0[1] / gamma0[0], gamma0)}};
    const models::HjModel hj;
    const ParamBox def = hj.default_box();
    const double lo = c.grid_lower && c.grid_lower->size() >= 1 ? (*c.grid_lower)[0] : def.lower()[0];
    const double hi = c.grid_upper && c.grid_upper->size() >= 1 ? (*c.grid_upper)[0] : def.upper()[0];
    const std::size_t steps = c.grid_points.empty() ? 200 : c.grid_points.front();
    json mu = json::array(), sigma = json::array();
    for (std::size_t k = 0; k < steps; ++k) {
        const double m = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps - 1);
        mu.push_back(m);
        sigma.push_back(models::HjModel::frontier(m, gamma0));
    }
    t["frontier"] = {{"mu", mu}, {"sigma_hj", sigma}};
    if (c.synth_loadings.size() > 0) {
        Mat d(c.synth_v.size(), c.synth_loadings.rows() + 1);
        d.col(0) = c.synth_v;
        d.rightCols(c.synth_loadings.rows()) = c.synth_loadings.transpose();
        const Mat a = c.precision_form ? Mat(d.transpose() * cov.llt().solve(d)) : Mat(d.transpose() * cov * d);
        t["mf_gamma0"] = to_json(Vec(Eigen::Map<const Vec>(a.data(), a.size())));
    }
    io::write_text(dir / "truth.json", to_text(t));
}

void cmd_invariance(const Config& c) {
    if (c.model == "consumption_sdf" || c.model == "chetty")
        throw ConfigError({"model: invariance supports the return-panel models"});
    const Problem p = prepare(c);
    const fs::path dir = out_dir(c);
    const auto rc = region_config(c, p);
    const std::size_t axis = c.log_axis.value_or(p.model->theta_dim() - 1);
    if (axis >= p.model->theta_dim()) throw ConfigError({"invariance.log_axis: out of range"});
    const auto transform = regions::CoordinateTransform::log_axis(p.model->theta_dim(), axis);
    const auto rep = regions::invariance_check(p.model, *p.stats, p.grid, transform, rc);

    json s;
    s["command"] = "invariance";
    s["config"] = echo(c);
    s["model"] = p.model->name();
    s["transform"] = transform.name();
    s["stats"] = stats_json(*p.stats);
    s["report"] = {{"points", rep.points},
                   {"lr_disagreements", rep.lr_disagreements},
                   {"lr_critical", rep.lr_critical},
                   {"lr_critical_eta", rep.lr_critical_eta},
                   {"wald_unweighted_disagreements", rep.wald_unweighted_disagreements},
                   {"wald_unweighted_rate", rep.wald_unweighted_rate},
                   {"wald_weighted_disagreements", rep.wald_weighted_disagreements},
                   {"wald_weighted_rate", rep.wald_weighted_rate}};
    io::write_text(dir / "summary.json", to_text(s));
}

}  // namespace

void execute(const std::string& subcommand, const Overrides& overrides) {
    const auto& names = subcommands();
    if (std::find(names.begin(), names.end(), subcommand) == names.end())
        throw ConfigError({"unknown subcommand '" + subcommand + "'"});
    json root = json::object();
    fs::path base;
    if (overrides.config) {
        const fs::path path(*overrides.config);
        try {
            root = json::parse(io::read_text(path));
        } catch (const json::parse_error& e) {
            throw ConfigError({path.string() + ": " + e.what()});
        }
        base = path.parent_path();
    }
    const Config c = parse_config(root, overrides, base);
    parallel::set_workers(c.workers);
    if (subcommand == "estimate") cmd_estimate(c);
    else if (subcommand == "region") cmd_region(c);
    else if (subcommand == "coverage") cmd_coverage(c);
    else if (subcommand == "synth") cmd_synth(c);
    else cmd_invariance(c);
}

int run(const std::string& subcommand, const Overrides& overrides, std::ostream& err) {
    try {
        execute(subcommand, overrides);
        return 0;
    } catch (const ConfigError& e) {
        err << "configuration error:\n";
        for (const auto& issue : e.issues()) err << "  - " << issue << "\n";
        return 1;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "input error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace setinf::app

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "setinf/app.hpp"

int main(int argc, char** argv) {
    CLI::App cli{"Estimation and confidence regions for sets defined by one smooth inequality"};
    cli.require_subcommand(1, 1);

    setinf::app::Overrides ov;
    std::string config, out, model, data, weights;
    std::uint64_t seed = 0;
    double alpha = 0.0;
    std::size_t draws = 0, resolution = 0;
    unsigned workers = 0;
    std::vector<std::string> methods;

    const std::map<std::string, std::string> about{
        {"estimate", "estimate γ̂, Ω̂ and the plug-in set"},
        {"region", "confidence regions (LR, Wald, Projection)"},
        {"coverage", "Monte Carlo coverage on a synthetic dgp"},
        {"synth", "simulate a returns panel and its true γ"},
        {"invariance", "LR/Wald inclusion under a log reparameterization"}};
    for (const auto& name : setinf::app::subcommands()) {
        const auto it = about.find(name);
        auto* sub = cli.add_subcommand(name, it == about.end() ? std::string{} : it->second);
        sub->add_option("-c,--config", config, "JSON configuration file");
        sub->add_option("-o,--out", out, "output directory");
        sub->add_option("--model", model, "hj, markowitz, markowitz_complement, mf, chetty, consumption_sdf");
        sub->add_option("--data", data, "returns CSV");
        sub->add_option("--weights", weights, "anderson_darling, unweighted, negative_part_sd");
        sub->add_option("--seed", seed, "seed for every random stream");
        sub->add_option("--alpha", alpha, "1 - confidence level");
        sub->add_option("--draws", draws, "resampling draws B");
        sub->add_option("--resolution", resolution, "grid points per axis");
        sub->add_option("--workers", workers, "worker threads (0 = all cores)");
        sub->add_option("--method", methods, "LR, Wald, Projection (repeatable)");
    }

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : 1;
    }

    const CLI::App* sub = cli.get_subcommands().front();
    auto given = [&](const char* flag) { return sub->count(flag) > 0; };
    if (given("--config")) ov.config = config;
    if (given("--out")) ov.out = out;
    if (given("--model")) ov.model = model;
    if (given("--data")) ov.data = data;
    if (given("--weights")) ov.weights = weights;
    if (given("--seed")) ov.seed = seed;
    if (given("--alpha")) ov.alpha = alpha;
    if (given("--draws")) ov.draws = draws;
    if (given("--resolution")) ov.resolution = resolution;
    if (given("--workers")) ov.workers = workers;
    ov.methods = methods;

    return setinf::app::run(sub->get_name(), ov, std::cerr);
}

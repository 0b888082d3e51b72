#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace setinf::app {

/// Command-line values; each one, when set, replaces the config-file entry.
struct Overrides {
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::optional<std::string> model;
    std::optional<std::string> data;
    std::optional<std::string> weights;
    std::optional<std::uint64_t> seed;  ///< replaces every seed in the config
    std::optional<double> alpha;
    std::optional<std::size_t> draws;
    std::optional<std::size_t> resolution;  ///< points per grid axis
    std::optional<unsigned> workers;
    std::vector<std::string> methods;
};

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"estimate", "region", "coverage", "synth", "invariance"};
    return names;
}

/// Runs one subcommand and writes its artifacts. Throws setinf errors.
void execute(const std::string& subcommand, const Overrides& overrides);

/// execute() with errors reported on `err`: returns 0, 1 (input or
/// configuration error) or 2 (numeric or model error).
int run(const std::string& subcommand, const Overrides& overrides, std::ostream& err);

}  // namespace setinf::app

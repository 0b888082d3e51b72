#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "setinf/estimation.hpp"
#include "setinf/grid.hpp"

namespace setinf::io {

/// All floating-point output uses 17 significant digits ("%.17g").
std::string format_double(double x);

/// Header row required. A first column named "date" is ignored; columns
/// prefixed "factor:" are factors, everything else is a return series.
/// Non-numeric cells (including "NA") and ragged rows throw ParseError
/// naming the row and column. The panel is validated.
estimation::ReturnsPanel read_returns_csv(const std::filesystem::path& path);
estimation::ReturnsPanel parse_returns_csv(std::string_view text, const std::string& source = "<input>");

/// First numeric column of a headed CSV (used for consumption growth).
std::vector<double> read_series_csv(const std::filesystem::path& path);

void write_returns_csv(const std::filesystem::path& path, const estimation::ReturnsPanel& panel);

/// One row per lattice point: coordinates, statistic, included, flagged.
void write_region_csv(const std::filesystem::path& path, const ConfidenceRegion& region,
                      const std::vector<std::string>& axis_names);

/// Members of `set` with m(θ, γ̂) at each.
void write_points_csv(const std::filesystem::path& path, const DiscreteSet& set,
                      const std::vector<double>& values, const std::vector<std::string>& axis_names,
                      const std::string& value_name);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace setinf::io

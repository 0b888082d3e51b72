#include "setinf/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "setinf/errors.hpp"

namespace setinf::io {

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_number(std::string_view cell, double& out) {
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;  ///< by data row, then column
    std::vector<std::size_t> keep;          ///< indices of parsed columns
};

Table parse_table(std::string_view text, const std::string& source, bool skip_date) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = nl + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw ParseError(source + ": empty file", 0, 0);

    Table t;
    const auto head = split(lines.front());
    for (auto h : head) t.header.emplace_back(h);
    for (std::size_t c = 0; c < head.size(); ++c)
        if (!(skip_date && c == 0 && lower(head[0]) == "date")) t.keep.push_back(c);
    if (t.keep.empty()) throw ParseError(source + ": no data columns", 1, 0);

    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (trim(lines[r]).empty()) continue;
        const auto cells = split(lines[r]);
        if (cells.size() != head.size())
            throw ParseError(source + ": row " + std::to_string(r + 1) + " has " +
                                 std::to_string(cells.size()) + " cells, header has " +
                                 std::to_string(head.size()),
                             r + 1, 0);
        std::vector<double> row;
        row.reserve(t.keep.size());
        for (std::size_t c : t.keep) {
            double v = 0.0;
            if (!parse_number(cells[c], v))
                throw ParseError(source + ": row " + std::to_string(r + 1) + ", column '" +
                                     t.header[c] + "': '" + std::string(cells[c]) +
                                     "' is not a finite number",
                                 r + 1, c + 1);
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace

estimation::ReturnsPanel parse_returns_csv(std::string_view text, const std::string& source) {
    const Table t = parse_table(text, source, true);
    std::vector<std::size_t> ret_cols, fac_cols;
    estimation::ReturnsPanel panel;
    for (std::size_t k = 0; k < t.keep.size(); ++k) {
        const std::string& name = t.header[t.keep[k]];
        if (name.rfind("factor:", 0) == 0) {
            fac_cols.push_back(k);
            panel.factor_labels.push_back(name.substr(7));
        } else {
            ret_cols.push_back(k);
            panel.labels.push_back(name);
        }
    }
    const auto rows = static_cast<Eigen::Index>(t.rows.size());
    panel.returns.resize(rows, static_cast<Eigen::Index>(ret_cols.size()));
    panel.factors.resize(fac_cols.empty() ? 0 : rows, static_cast<Eigen::Index>(fac_cols.size()));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = t.rows[static_cast<std::size_t>(r)];
        for (std::size_t j = 0; j < ret_cols.size(); ++j)
            panel.returns(r, static_cast<Eigen::Index>(j)) = row[ret_cols[j]];
        for (std::size_t j = 0; j < fac_cols.size(); ++j)
            panel.factors(r, static_cast<Eigen::Index>(j)) = row[fac_cols[j]];
    }
    panel.validate();
    return panel;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw InputError("write failed for '" + path.string() + "'");
}

estimation::ReturnsPanel read_returns_csv(const std::filesystem::path& path) {
    return parse_returns_csv(read_text(path), path.string());
}

std::vector<double> read_series_csv(const std::filesystem::path& path) {
    const Table t = parse_table(read_text(path), path.string(), true);
    std::vector<double> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) out.push_back(row.front());
    return out;
}

void write_returns_csv(const std::filesystem::path& path, const estimation::ReturnsPanel& panel) {
    std::string s;
    for (std::size_t j = 0; j < panel.assets(); ++j) {
        if (j) s += ',';
        s += j < panel.labels.size() ? panel.labels[j] : "asset" + std::to_string(j + 1);
    }
    for (std::size_t j = 0; j < panel.factor_count(); ++j) {
        s += ",factor:";
        s += j < panel.factor_labels.size() ? panel.factor_labels[j] : "z" + std::to_string(j + 1);
    }
    s += '\n';
    for (Eigen::Index r = 0; r < panel.returns.rows(); ++r) {
        for (Eigen::Index j = 0; j < panel.returns.cols(); ++j) {
            if (j) s += ',';
            s += format_double(panel.returns(r, j));
        }
        for (Eigen::Index j = 0; j < panel.factors.cols(); ++j) {
            s += ',';
            s += format_double(panel.factors(r, j));
        }
        s += '\n';
    }
    write_text(path, s);
}

void write_region_csv(const std::filesystem::path& path, const ConfidenceRegion& region,
                      const std::vector<std::string>& axis_names) {
    const ParamGrid& grid = region.set.grid();
    std::string s;
    for (const auto& a : axis_names) s += a + ',';
    s += "statistic,included,flagged\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vec p = grid.point(i);
        for (Eigen::Index k = 0; k < p.size(); ++k) s += format_double(p[k]) + ',';
        s += format_double(region.statistic[i]);
        s += region.set.contains(i) ? ",1," : ",0,";
        s += region.flagged.empty() || !region.flagged[i] ? "0\n" : "1\n";
    }
    write_text(path, s);
}

void write_points_csv(const std::filesystem::path& path, const DiscreteSet& set,
                      const std::vector<double>& values, const std::vector<std::string>& axis_names,
                      const std::string& value_name) {
    std::string s;
    for (const auto& a : axis_names) s += a + ',';
    s += value_name + '\n';
    for (std::size_t i : set.members()) {
        const Vec p = set.grid().point(i);
        for (Eigen::Index k = 0; k < p.size(); ++k) s += format_double(p[k]) + ',';
        s += format_double(values[i]) + '\n';
    }
    write_text(path, s);
}

}  // namespace setinf::io

#include "setinf/errors.hpp"

#include <sstream>

namespace setinf {

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
    std::ostringstream out;
    out << "invalid configuration (" << issues.size() << " issue"
        << (issues.size() == 1 ? "" : "s") << ")";
    for (const auto& issue : issues) out << "\n  - " << issue;
    return out.str();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : InputError(join_issues(issues)), issues_(std::move(issues)) {}

ParseError::ParseError(const std::string& what, std::size_t row, std::size_t column)
    : InputError(what), row_(row), column_(column) {}

SingularCovarianceError::SingularCovarianceError(const std::string& what,
                                                 double condition_number)
    : NumericError(what), condition_number_(condition_number) {}

ProjectionError::ProjectionError(const std::string& what,
                                 std::vector<std::vector<double>> trace)
    : NumericError(what), trace_(std::move(trace)) {}

}  // namespace setinf

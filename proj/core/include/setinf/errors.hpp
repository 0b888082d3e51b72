#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace setinf {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed user input: configuration, command line, data files.
/// The command-line tool maps these to exit code 1.
class InputError : public Error {
public:
    using Error::Error;
};

class ConfigError : public InputError {
public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    std::vector<std::string> issues_;
};

class ParseError : public InputError {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column);
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

/// Numerical or model failures. Exit code 2 from the command-line tool.
class NumericError : public Error {
public:
    using Error::Error;
};

/// γ (or θ) outside the region where the moment function is defined.
class ModelDomainError : public NumericError {
public:
    using NumericError::NumericError;
};

/// ∇θ m vanishes (e.g. the apex of the multi-factor cone).
class SingularGradientError : public NumericError {
public:
    using NumericError::NumericError;
};

class EmptySetError : public NumericError {
public:
    using NumericError::NumericError;
};

class EmptyBoundaryError : public NumericError {
public:
    using NumericError::NumericError;
};

class SingularCovarianceError : public NumericError {
public:
    SingularCovarianceError(const std::string& what, double condition_number);
    double condition_number() const noexcept { return condition_number_; }

private:
    double condition_number_;
};

class ProjectionError : public NumericError {
public:
    ProjectionError(const std::string& what, std::vector<std::vector<double>> trace);
    const std::vector<std::vector<double>>& trace() const noexcept { return trace_; }

private:
    std::vector<std::vector<double>> trace_;
};

/// The projected point left the δ-expanded parameter box.
class BoundaryEscapeError : public NumericError {
public:
    using NumericError::NumericError;
};

/// σ outside the range of σ_C(ρ) on the search bracket.
class InversionError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace setinf
